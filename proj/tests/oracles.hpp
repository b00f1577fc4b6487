#pragma once

// Reference computations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using Pair = std::pair<unsigned, unsigned>;  // (u, v), u < v, 1-based

inline std::vector<std::vector<unsigned>> adjacency(std::size_t n, const std::vector<Pair>& edges) {
  std::vector<std::vector<unsigned>> adj(n + 1);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

inline std::vector<long> bfs(std::size_t n, const std::vector<Pair>& edges, unsigned src) {
  auto adj = adjacency(n, edges);
  std::vector<long> d(n + 1, -1);
  std::queue<unsigned> q;
  d[src] = 0;
  q.push(src);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        q.push(v);
      }
  }
  return d;
}

inline bool connected(std::size_t n, const std::vector<Pair>& edges) {
  auto d = bfs(n, edges, 1);
  return std::all_of(d.begin() + 1, d.end(), [](long x) { return x >= 0; });
}

struct UnionFind {
  std::vector<unsigned> parent;
  explicit UnionFind(std::size_t n) : parent(n + 1) { std::iota(parent.begin(), parent.end(), 0u); }
  unsigned find(unsigned x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(unsigned a, unsigned b) {
    a = find(a), b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// Ties on weight break on (u, v).
inline std::set<Pair> kruskal(std::size_t n, const std::vector<Pair>& edges, const std::vector<double>& w) {
  std::vector<std::size_t> idx(edges.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return std::tie(w[a], edges[a].first, edges[a].second) < std::tie(w[b], edges[b].first, edges[b].second);
  });
  UnionFind uf(n);
  std::set<Pair> out;
  for (auto i : idx)
    if (uf.unite(edges[i].first, edges[i].second)) out.insert(edges[i]);
  return out;
}

// x_{k+1} = W x_k on plain doubles.
inline std::vector<double> power_iterate(const std::vector<std::vector<double>>& W, std::vector<double> x,
                                         std::size_t rounds) {
  const std::size_t n = x.size();
  std::vector<double> y(n);
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += W[i][j] * x[j];
      y[i] = s;
    }
    std::swap(x, y);
  }
  return x;
}

inline std::vector<std::vector<double>> metropolis(std::size_t n, const std::vector<Pair>& edges) {
  std::vector<std::size_t> deg(n + 1, 0);
  for (auto [u, v] : edges) ++deg[u], ++deg[v];
  std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
  for (auto [u, v] : edges) {
    const double w = 1.0 / (1.0 + static_cast<double>(std::max(deg[u], deg[v])));
    W[u - 1][v - 1] = W[v - 1][u - 1] = w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += W[i][j];
    W[i][i] = 1.0 - s;
  }
  return W;
}

// Earliest slot by which information from `src` can reach every node when one
// hop may be taken per slot over the edges present in that slot.
inline std::vector<long> time_expanded_reach(std::size_t n, const std::vector<std::vector<Pair>>& slots,
                                             unsigned src, std::size_t horizon) {
  std::vector<long> when(n + 1, -1);
  when[src] = 0;
  for (std::size_t t = 0; t < horizon; ++t) {
    auto next = when;
    for (auto [u, v] : slots[t % slots.size()]) {
      if (when[u] >= 0 && next[v] < 0) next[v] = static_cast<long>(t + 1);
      if (when[v] >= 0 && next[u] < 0) next[u] = static_cast<long>(t + 1);
    }
    when = next;
  }
  return when;
}

// Rank vector by counting, O(l^2).
template <class T>
std::vector<unsigned> rank_vector(const std::vector<T>& v) {
  std::vector<unsigned> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::set<T> smaller;
    for (auto x : v)
      if (x < v[i]) smaller.insert(x);
    r[i] = static_cast<unsigned>(smaller.size());
  }
  return r;
}

template <class T>
bool same_order(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] < a[j]) != (b[i] < b[j]) || (a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

// Multiplicity of every length-l segment by comparing all pairs of segments.
template <class T>
std::vector<std::size_t> all_pairs_multiplicity(const std::vector<T>& ring, std::size_t l) {
  const std::size_t n = ring.size();
  auto seg = [&](std::size_t s) {
    std::vector<T> out(l);
    for (std::size_t k = 0; k < l; ++k) out[k] = ring[(s + k) % n];
    return out;
  };
  std::vector<std::size_t> m(n, 0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (same_order(seg(a), seg(b))) ++m[a];
  return m;
}

}  // namespace oracle
