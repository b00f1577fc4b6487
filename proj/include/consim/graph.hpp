#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "consim/error.hpp"

namespace consim {

/// Node identifiers are 1-based: a graph on n nodes uses ids 1..n.
using NodeId = std::uint32_t;

/// Undirected edge in canonical form (u < v).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  static Edge make(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// GHS edge weight: (value, (min uid, max uid)) compared lexicographically, so
/// two distinct edges never compare equal.
struct EdgeWeight {
  double value = 1.0;
  NodeId lo = 0;
  NodeId hi = 0;

  static EdgeWeight of(Edge e, double value = 1.0) { return {value, e.u, e.v}; }
  static EdgeWeight infinity() {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<NodeId>::max(),
            std::numeric_limits<NodeId>::max()};
  }

  bool is_infinite() const { return std::isinf(value) && value > 0; }

  friend bool operator==(const EdgeWeight& a, const EdgeWeight& b) {
    return a.value == b.value && a.lo == b.lo && a.hi == b.hi;
  }
  friend bool operator<(const EdgeWeight& a, const EdgeWeight& b) {
    return std::tie(a.value, a.lo, a.hi) < std::tie(b.value, b.lo, b.hi);
  }
  friend bool operator>(const EdgeWeight& a, const EdgeWeight& b) { return b < a; }
};

struct Neighbor {
  NodeId id = 0;
  EdgeWeight weight;
};

enum class DensityClass { sparse, dense };

inline const char* to_string(DensityClass c) { return c == DensityClass::sparse ? "sparse" : "dense"; }

/// Sparse/dense boundary n*log2(n).
inline double density_threshold(std::size_t n) {
  return n <= 1 ? 0.0 : static_cast<double>(n) * std::log2(static_cast<double>(n));
}

namespace detail {

inline std::vector<std::vector<NodeId>> adjacency(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::vector<NodeId>> adj(n + 1);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

inline void check_edges(std::size_t n, std::span<const Edge> edges) {
  for (const auto& e : edges) {
    if (e.u == e.v) throw Error(ErrorKind::invalid_graph, "self-loop at node " + std::to_string(e.u));
    if (e.u < 1 || e.v < 1 || e.u > n || e.v > n)
      throw Error(ErrorKind::invalid_graph, "edge endpoint outside 1.." + std::to_string(n));
  }
}

}  // namespace detail

/// True iff the edge set spans a connected graph on nodes 1..n.
inline bool is_connected(std::size_t n, std::span<const Edge> edges) {
  if (n <= 1) return true;
  auto adj = detail::adjacency(n, edges);
  std::vector<char> seen(n + 1, 0);
  std::vector<NodeId> stack{1};
  seen[1] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

/// Connected, undirected, simple graph on nodes 1..n with optional per-edge
/// weight values (default 1.0).
class StaticGraph {
 public:
  StaticGraph(std::size_t n, std::vector<Edge> edges, std::vector<double> weight_values = {})
      : n_(n) {
    if (n == 0) throw Error(ErrorKind::invalid_size, "graph needs at least one node");
    if (!weight_values.empty() && weight_values.size() != edges.size())
      throw Error(ErrorKind::invalid_graph, "weight vector length differs from edge count");
    if (weight_values.empty()) weight_values.assign(edges.size(), 1.0);
    for (double w : weight_values)
      if (!std::isfinite(w)) throw Error(ErrorKind::precondition, "edge weights must be finite");

    std::vector<std::pair<Edge, double>> tagged;
    tagged.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i)
      tagged.emplace_back(Edge::make(edges[i].u, edges[i].v), weight_values[i]);
    std::sort(tagged.begin(), tagged.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < tagged.size(); ++i)
      if (tagged[i].first == tagged[i - 1].first)
        throw Error(ErrorKind::invalid_graph, "duplicate edge (" + std::to_string(tagged[i].first.u) + "," +
                                                  std::to_string(tagged[i].first.v) + ")");
    edges_.reserve(tagged.size());
    weights_.reserve(tagged.size());
    for (auto& [e, w] : tagged) {
      edges_.push_back(e);
      weights_.push_back(w);
    }
    detail::check_edges(n_, edges_);
    if (!is_connected(n_, edges_)) throw Error(ErrorKind::invalid_graph, "graph is not connected");

    adj_.resize(n_ + 1);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const auto w = EdgeWeight::of(edges_[i], weights_[i]);
      adj_[edges_[i].u].push_back({edges_[i].v, w});
      adj_[edges_[i].v].push_back({edges_[i].u, w});
    }
    for (auto& list : adj_)
      std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  }

  std::size_t n() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const double> weight_values() const { return weights_; }
  EdgeWeight weight(std::size_t edge_index) const { return EdgeWeight::of(edges_[edge_index], weights_[edge_index]); }

  /// Neighbors of `v`, sorted by id.
  std::span<const Neighbor> neighbors(NodeId v) const { return adj_.at(v); }
  std::size_t degree(NodeId v) const { return adj_.at(v).size(); }

  bool has_edge(NodeId a, NodeId b) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge::make(a, b));
  }

  bool unit_weights() const {
    return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 1.0; });
  }

  friend bool operator==(const StaticGraph& a, const StaticGraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.weights_ == b.weights_;
  }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  std::vector<std::vector<Neighbor>> adj_;
};

inline DensityClass classify_density(const StaticGraph& g) {
  return static_cast<double>(g.num_edges()) < density_threshold(g.n()) ? DensityClass::sparse
                                                                       : DensityClass::dense;
}

/// Hop distances from `source`; index 0 unused.
inline std::vector<std::size_t> bfs_distances(const StaticGraph& g, NodeId source) {
  constexpr auto unreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.n() + 1, unreached);
  std::queue<NodeId> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop();
    for (const auto& nb : g.neighbors(u)) {
      if (dist[nb.id] == unreached) {
        dist[nb.id] = dist[u] + 1;
        q.push(nb.id);
      }
    }
  }
  dist[0] = 0;
  return dist;
}

inline std::size_t eccentricity(const StaticGraph& g, NodeId v) {
  auto d = bfs_distances(g, v);
  return *std::max_element(d.begin(), d.end());
}

inline std::size_t diameter(const StaticGraph& g) {
  std::size_t best = 0;
  for (NodeId v = 1; v <= g.n(); ++v) best = std::max(best, eccentricity(g, v));
  return best;
}

// Generators ---------------------------------------------------------------

inline StaticGraph make_line(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::invalid_size, "line needs n >= 2");
  std::vector<Edge> edges;
  for (NodeId i = 1; i < n; ++i) edges.push_back({i, i + 1});
  return StaticGraph(n, std::move(edges));
}

inline StaticGraph make_ring(std::size_t n) {
  if (n < 3) throw Error(ErrorKind::invalid_size, "ring needs n >= 3");
  std::vector<Edge> edges;
  for (NodeId i = 1; i < n; ++i) edges.push_back({i, i + 1});
  edges.push_back({1, static_cast<NodeId>(n)});
  return StaticGraph(n, std::move(edges));
}

inline StaticGraph make_complete(std::size_t n) {
  if (n < 3) throw Error(ErrorKind::invalid_size, "complete graph needs n >= 3");
  std::vector<Edge> edges;
  for (NodeId i = 1; i <= n; ++i)
    for (NodeId j = i + 1; j <= n; ++j) edges.push_back({i, j});
  return StaticGraph(n, std::move(edges));
}

/// Random spanning tree first, then extra edges sampled uniformly from the
/// remaining pairs until `target_edges` is reached.
inline StaticGraph make_random_connected(std::size_t n, std::size_t target_edges, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::invalid_size, "n must be positive");
  const std::size_t max_edges = n * (n - 1) / 2;
  if (target_edges + 1 < n || target_edges > max_edges)
    throw Error(ErrorKind::invalid_size, "target_edges " + std::to_string(target_edges) + " infeasible for n=" +
                                             std::to_string(n));
  std::mt19937_64 rng(seed);
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{1});
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Edge> edges;
  edges.reserve(target_edges);
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    edges.push_back(Edge::make(perm[i], perm[pick(rng)]));
  }
  std::size_t extra = target_edges - edges.size();
  if (extra > 0) {
    std::vector<Edge> tree = edges;
    std::sort(tree.begin(), tree.end());
    std::vector<Edge> pool;
    pool.reserve(max_edges - tree.size());
    for (NodeId i = 1; i <= n; ++i)
      for (NodeId j = i + 1; j <= n; ++j)
        if (!std::binary_search(tree.begin(), tree.end(), Edge{i, j})) pool.push_back({i, j});
    for (std::size_t k = 0; k < extra; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
      edges.push_back(pool[k]);
    }
  }
  return StaticGraph(n, std::move(edges));
}

/// Same topology with weight values drawn uniformly from [0, 1).
inline StaticGraph with_random_weights(const StaticGraph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> w(g.num_edges());
  for (auto& x : w) x = unit(rng);
  return StaticGraph(g.n(), {g.edges().begin(), g.edges().end()}, std::move(w));
}

// Time-varying schedules -----------------------------------------------------

/// Periodic edge schedule: slot t uses slots[t mod period]. Every window of D
/// consecutive slots must union to a connected graph.
class EdgeSchedule {
 public:
  EdgeSchedule(std::size_t n, std::size_t window, std::vector<std::vector<Edge>> slots)
      : n_(n), window_(window), slots_(std::move(slots)) {
    if (n == 0) throw Error(ErrorKind::invalid_size, "schedule needs at least one node");
    if (window == 0) throw Error(ErrorKind::invalid_parameter, "window D must be positive");
    if (slots_.empty()) throw Error(ErrorKind::invalid_parameter, "schedule needs at least one slot");
    adj_.resize(slots_.size());
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      auto& slot = slots_[s];
      for (auto& e : slot) e = Edge::make(e.u, e.v);
      std::sort(slot.begin(), slot.end());
      if (std::adjacent_find(slot.begin(), slot.end()) != slot.end())
        throw Error(ErrorKind::invalid_graph, "duplicate edge in slot " + std::to_string(s));
      detail::check_edges(n_, slot);
      adj_[s].resize(n_ + 1);
      for (const auto& e : slot) {
        adj_[s][e.u].push_back({e.v, EdgeWeight::of(e)});
        adj_[s][e.v].push_back({e.u, EdgeWeight::of(e)});
      }
      for (auto& list : adj_[s])
        std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    }
    if (auto bad = first_disconnected_window())
      throw Error(ErrorKind::invalid_graph, "window starting at slot " + std::to_string(*bad) + " is not connected");
  }

  std::size_t n() const { return n_; }
  std::size_t window() const { return window_; }
  std::size_t period() const { return slots_.size(); }
  std::span<const Edge> slot(std::size_t t) const { return slots_[t % slots_.size()]; }
  std::span<const Neighbor> neighbors(std::size_t t, NodeId v) const { return adj_[t % slots_.size()].at(v); }

  /// Union of the edge sets of slots [t, t+D).
  std::vector<Edge> window_union(std::size_t t) const {
    std::vector<Edge> all;
    for (std::size_t k = 0; k < window_; ++k) {
      auto s = slot(t + k);
      all.insert(all.end(), s.begin(), s.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }

  /// Union over one full period.
  std::vector<Edge> union_edges() const {
    std::vector<Edge> all;
    for (const auto& s : slots_) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }

  friend bool operator==(const EdgeSchedule& a, const EdgeSchedule& b) {
    return a.n_ == b.n_ && a.window_ == b.window_ && a.slots_ == b.slots_;
  }

 private:
  std::optional<std::size_t> first_disconnected_window() const {
    for (std::size_t t = 0; t < slots_.size(); ++t)
      if (!is_connected(n_, window_union(t))) return t;
    return std::nullopt;
  }

  std::size_t n_;
  std::size_t window_;
  std::vector<std::vector<Edge>> slots_;
  std::vector<std::vector<std::vector<Neighbor>>> adj_;
};

/// Single-slot schedule equivalent to a static graph.
inline EdgeSchedule make_static_schedule(const StaticGraph& g) {
  return EdgeSchedule(g.n(), 1, {std::vector<Edge>(g.edges().begin(), g.edges().end())});
}

/// Edges of a random connected base graph dealt round-robin across D slots
/// (period D), so every D-window sees the whole base graph.
inline EdgeSchedule make_d_connected_schedule(std::size_t n, std::size_t window, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::invalid_size, "schedule needs n >= 2");
  if (window < 1) throw Error(ErrorKind::invalid_parameter, "window D must be >= 1");
  const std::size_t max_edges = n * (n - 1) / 2;
  const std::size_t target = std::min(max_edges, (n - 1) + n / 4);
  auto base = make_random_connected(n, target, seed);
  std::vector<Edge> edges(base.edges().begin(), base.edges().end());
  std::mt19937_64 rng(seed + 1);
  std::shuffle(edges.begin(), edges.end(), rng);
  std::vector<std::vector<Edge>> slots(window);
  for (std::size_t i = 0; i < edges.size(); ++i) slots[i % window].push_back(edges[i]);
  return EdgeSchedule(n, window, std::move(slots));
}

/// Ring whose edges appear one at a time: slot k carries edge (k+1, k+2 mod n).
inline EdgeSchedule make_round_robin_ring_schedule(std::size_t n) {
  if (n < 3) throw Error(ErrorKind::invalid_size, "ring schedule needs n >= 3");
  std::vector<std::vector<Edge>> slots(n);
  for (std::size_t k = 0; k < n; ++k)
    slots[k].push_back(Edge::make(static_cast<NodeId>(k + 1), static_cast<NodeId>((k + 1) % n + 1)));
  return EdgeSchedule(n, n, std::move(slots));
}

// Plain-text exchange formats -------------------------------------------------

/// `n m` then one `u v` line per edge (a third column carries a non-unit weight).
inline void write_edge_list(std::ostream& os, const StaticGraph& g) {
  os << g.n() << ' ' << g.num_edges() << '\n';
  const bool unit = g.unit_weights();
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    os << g.edges()[i].u << ' ' << g.edges()[i].v;
    if (!unit) {
      std::ostringstream w;
      w.precision(17);
      w << g.weight_values()[i];
      os << ' ' << w.str();
    }
    os << '\n';
  }
}

inline StaticGraph read_edge_list(std::istream& is) {
  std::string line;
  std::size_t n = 0, m = 0;
  if (!std::getline(is, line)) throw Error(ErrorKind::io, "empty edge list");
  {
    std::istringstream head(line);
    if (!(head >> n >> m)) throw Error(ErrorKind::io, "bad edge list header: " + line);
  }
  std::vector<Edge> edges;
  std::vector<double> weights;
  bool weighted = false;
  while (edges.size() < m && std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long u = 0, v = 0;
    if (!(row >> u >> v) || u < 1 || v < 1) throw Error(ErrorKind::io, "bad edge line: " + line);
    double w = 1.0;
    if (row >> w) weighted = true;
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    weights.push_back(w);
  }
  if (edges.size() != m) throw Error(ErrorKind::io, "edge list truncated");
  return StaticGraph(n, std::move(edges), weighted ? std::move(weights) : std::vector<double>{});
}

/// `n D P` then one `slot u v` line per scheduled edge.
inline void write_schedule(std::ostream& os, const EdgeSchedule& s) {
  os << s.n() << ' ' << s.window() << ' ' << s.period() << '\n';
  for (std::size_t t = 0; t < s.period(); ++t)
    for (const auto& e : s.slot(t)) os << t << ' ' << e.u << ' ' << e.v << '\n';
}

inline EdgeSchedule read_schedule(std::istream& is) {
  std::string line;
  std::size_t n = 0, window = 0, period = 0;
  if (!std::getline(is, line)) throw Error(ErrorKind::io, "empty schedule");
  {
    std::istringstream head(line);
    if (!(head >> n >> window >> period) || period == 0) throw Error(ErrorKind::io, "bad schedule header: " + line);
  }
  std::vector<std::vector<Edge>> slots(period);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long t = 0, u = 0, v = 0;
    if (!(row >> t >> u >> v) || t < 0 || u < 1 || v < 1 || static_cast<std::size_t>(t) >= period)
      throw Error(ErrorKind::io, "bad schedule line: " + line);
    slots[t].push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  return EdgeSchedule(n, window, std::move(slots));
}

}  // namespace consim
