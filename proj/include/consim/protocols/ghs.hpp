#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/protocols/flooding.hpp"
#include "consim/runtime.hpp"

namespace consim {

enum class GhsKind : std::uint8_t {
  connect,
  initiate,
  test,
  accept,
  reject,
  report,
  change_root,
  announce,
  request,
  collect,
  result,
};

inline const char* to_string(GhsKind k) {
  switch (k) {
    case GhsKind::connect: return "connect";
    case GhsKind::initiate: return "initiate";
    case GhsKind::test: return "test";
    case GhsKind::accept: return "accept";
    case GhsKind::reject: return "reject";
    case GhsKind::report: return "report";
    case GhsKind::change_root: return "change-root";
    case GhsKind::announce: return "announce";
    case GhsKind::request: return "request";
    case GhsKind::collect: return "collect";
    case GhsKind::result: return "result";
  }
  return "?";
}

struct GhsMessage {
  GhsKind kind = GhsKind::connect;
  NodeId target = broadcast_receiver;  // intended receiver of a broadcast
  int level = 0;
  EdgeWeight weight;  // fragment name, or best outgoing weight in a report
  bool find = false;
  Aggregate aggregate;
  std::vector<std::pair<NodeId, Value>> raw;  // convergecast without a hierarchy
  Value value = 0;
};

/// Minimum spanning tree construction followed by request, convergecast and
/// result waves over the tree.
///
/// With Channel::broadcast every message becomes a local broadcast. Test,
/// Accept and Reject disappear: nodes announce (level, fragment) whenever it
/// changes and answer their own tests from the cached announcements, waiting
/// while the neighbor's cached level is below their own.
class Ghs {
 public:
  using Payload = std::shared_ptr<const GhsMessage>;

  enum class EdgeState : std::uint8_t { basic, branch, rejected };
  enum class NodeState : std::uint8_t { sleeping, find, found };
  enum class Phase : std::uint8_t { mst, request, convergecast, result, done };

  struct Link {
    NodeId peer = 0;
    EdgeWeight weight;
    EdgeState state = EdgeState::basic;
    int cached_level = -1;
    EdgeWeight cached_fragment;
  };

  struct State {
    NodeId id = 0;
    std::size_t n = 0;
    Value input = 0;
    std::vector<Link> links;
    NodeState sn = NodeState::sleeping;
    int level = 0;
    EdgeWeight fragment;
    int best = -1;
    EdgeWeight best_weight = EdgeWeight::infinity();
    int test = -1;
    int in_branch = -1;
    int find_count = 0;
    int max_level = 0;
    int announced_level = -1;
    EdgeWeight announced_fragment;
    Phase phase = Phase::mst;
    bool root = false;
    int parent = -1;
    int pending = 0;
    Aggregate aggregate;
    std::vector<std::pair<NodeId, Value>> raw;
    bool decided = false;
    Value decision = 0;
    std::vector<std::pair<int, Payload>> deferred;
  };

  explicit Ghs(ConsensusSpec spec, Channel channel = Channel::directional)
      : spec_(std::move(spec)), channel_(channel), hierarchical_(spec_.hierarchy && spec_.flags.hierarchical) {}

  std::string_view name() const { return channel_ == Channel::broadcast ? "ghs-bcast" : "ghs"; }
  const ConsensusSpec& spec() const { return spec_; }
  Channel channel() const { return channel_; }
  FieldKind decision_kind() const { return field_kind_for(spec_.codomain); }

  SizingModel sizing(std::size_t n) const {
    SizingModel model = SizingModel::for_spec(n, spec_);
    for (auto k : {GhsKind::connect, GhsKind::initiate, GhsKind::test, GhsKind::accept, GhsKind::reject,
                   GhsKind::report, GhsKind::change_root, GhsKind::announce, GhsKind::request, GhsKind::collect})
      model.register_kind(to_string(k));
    const std::uint64_t result_bits = spec_.result_bits(n);
    model.register_kind("result", [result_bits](const PayloadCounts& c, const SizingModel& m) {
      return m.linear_payload(c) + result_bits;
    });
    return model;
  }

  State make_state(const NodeSetup& setup) const {
    State s;
    s.id = setup.id;
    s.n = setup.n;
    s.input = setup.input;
    s.links.reserve(setup.neighbors.size());
    for (const auto& nb : setup.neighbors)
      s.links.push_back(Link{nb.id, nb.weight});
    s.fragment = singleton(setup.id);
    s.announced_fragment = s.fragment;
    return s;
  }

  void on_init(State& s, NodeContext<Payload>& ctx) const {
    if (s.sn == NodeState::sleeping) wakeup(s, ctx);
    drain(s, ctx);
  }

  void on_timer(State&, NodeContext<Payload>&) const {}
  bool wants_timer(const State&) const { return false; }

  void on_message(State& s, const Delivery<Payload>& m, NodeContext<Payload>& ctx) const {
    const GhsMessage& msg = *m.payload;
    const int j = link_of(s, m.sender);
    if (j < 0) return;
    if (msg.target != broadcast_receiver && msg.target != s.id) return;
    if (s.sn == NodeState::sleeping) wakeup(s, ctx);
    if (msg.kind == GhsKind::announce) {
      s.links[j].cached_level = msg.level;
      s.links[j].cached_fragment = msg.weight;
      if (s.test == j) resolve_test(s, ctx);
    } else if (!handle(s, j, m.payload, ctx)) {
      s.deferred.emplace_back(j, m.payload);
      return;
    }
    drain(s, ctx);
  }

  MessageShape shape(const Payload& p) const {
    PayloadCounts c;
    const GhsMessage& m = *p;
    std::string_view phase = "mst";
    switch (m.kind) {
      case GhsKind::connect: c.levels = 1; break;
      case GhsKind::initiate:
        c.levels = 1;
        c.weights = 1;
        c.flags = 1;
        break;
      case GhsKind::test:
      case GhsKind::announce:
        c.levels = 1;
        c.weights = 1;
        break;
      case GhsKind::report: c.weights = 1; break;
      case GhsKind::request: phase = "request"; break;
      case GhsKind::collect:
        phase = "convergecast";
        if (hierarchical_) {
          c.aggregates = 1;
        } else {
          c.uids = m.raw.size();
          c.values = m.raw.size();
        }
        break;
      case GhsKind::result: phase = "result"; break;
      default: break;
    }
    if (m.target != broadcast_receiver) c.uids += 1;
    return {to_string(m.kind), phase, c};
  }

  std::uint64_t state_bits(const State& s, const SizingModel& model) const {
    const std::uint64_t uid = model.uid_bits(), lvl = model.level_bits(), w = model.weight_bits();
    std::uint64_t bits = 2 * s.links.size();
    if (channel_ == Channel::broadcast) bits += s.links.size() * (lvl + w);
    bits += lvl + w + 2 + w;           // level, fragment, node state, best weight
    bits += 4 * uid;                   // best, test, in-branch, find count
    bits += 3 + 2 * uid;               // phase, parent, pending
    bits += model.value_bits() + (hierarchical_ ? model.aggregate_bits() : s.raw.size() * (uid + model.value_bits()));
    for (const auto& [link, msg] : s.deferred) bits += size_of(shape(msg), false, model);
    return bits;
  }

  Record record(const State& s) const {
    Record r;
    r.push_back(Field::level("level", s.level));
    r.push_back(Field::real("fragment", s.fragment.value));
    r.push_back(Field::uid("fragment_lo", s.fragment.lo));
    r.push_back(Field::uid("fragment_hi", s.fragment.hi));
    r.push_back(Field::integer("sn", static_cast<int>(s.sn)));
    r.push_back(Field::integer("phase", static_cast<int>(s.phase)));
    r.push_back(Field::flag("root", s.root));
    r.push_back(Field::integer("deferred", static_cast<std::int64_t>(s.deferred.size())));
    r.push_back(aggregate_field(s.aggregate));
    r.push_back(Field::integer("count", s.aggregate.b));
    for (const auto& l : s.links)
      if (l.state == EdgeState::branch) r.push_back(Field::uid("branch", l.peer));
    if (s.decided) r.push_back(decision_field(s.decision));
    return r;
  }

  Record payload_record(const Payload& p) const {
    Record r;
    r.push_back(Field::integer("kind", static_cast<int>(p->kind)));
    r.push_back(Field::uid("target", p->target));
    r.push_back(Field::level("level", p->level));
    r.push_back(Field::real("weight", p->weight.value));
    r.push_back(Field::uid("weight_lo", p->weight.lo));
    r.push_back(Field::uid("weight_hi", p->weight.hi));
    r.push_back(Field::flag("find", p->find));
    r.push_back(aggregate_field(p->aggregate));
    r.push_back(Field::integer("count", p->aggregate.b));
    for (const auto& [id, v] : p->raw) {
      r.push_back(Field::uid("id", id));
      r.push_back(Field::value("x", v));
    }
    if (p->kind == GhsKind::result) r.push_back(decision_field(p->value));
    return r;
  }

 private:
  static EdgeWeight singleton(NodeId id) {
    return EdgeWeight{-std::numeric_limits<double>::infinity(), id, id};
  }

  static int link_of(const State& s, NodeId peer) {
    auto it = std::lower_bound(s.links.begin(), s.links.end(), peer,
                               [](const Link& l, NodeId p) { return l.peer < p; });
    if (it == s.links.end() || it->peer != peer) return -1;
    return static_cast<int>(it - s.links.begin());
  }

  Field aggregate_field(const Aggregate& a) const {
    return spec_.flags.extractive ? Field::value("aggregate", a.a) : Field::integer("aggregate", a.a);
  }
  Field decision_field(Value v) const {
    Field f = Field::integer("decision", v);
    f.kind = decision_kind();
    return f;
  }

  bool bcast() const { return channel_ == Channel::broadcast; }

  void send(State& s, NodeContext<Payload>& ctx, int j, GhsMessage m) const {
    if (bcast()) {
      m.target = s.links[j].peer;
      ctx.broadcast(std::make_shared<const GhsMessage>(std::move(m)));
    } else {
      ctx.send(s.links[j].peer, std::make_shared<const GhsMessage>(std::move(m)));
    }
  }

  void announce(State& s, NodeContext<Payload>& ctx) const {
    if (!bcast() || s.links.empty()) return;
    if (s.announced_level == s.level && s.announced_fragment == s.fragment) return;
    s.announced_level = s.level;
    s.announced_fragment = s.fragment;
    GhsMessage m;
    m.kind = GhsKind::announce;
    m.level = s.level;
    m.weight = s.fragment;
    ctx.broadcast(std::make_shared<const GhsMessage>(std::move(m)));
  }

  void wakeup(State& s, NodeContext<Payload>& ctx) const {
    s.level = 0;
    s.sn = NodeState::found;
    s.find_count = 0;
    if (s.links.empty()) {
      finish_alone(s, ctx);
      return;
    }
    int m = 0;
    for (int k = 1; k < static_cast<int>(s.links.size()); ++k)
      if (s.links[k].weight < s.links[m].weight) m = k;
    s.links[m].state = EdgeState::branch;
    announce(s, ctx);
    GhsMessage msg;
    msg.kind = GhsKind::connect;
    msg.level = 0;
    send(s, ctx, m, std::move(msg));
  }

  void finish_alone(State& s, NodeContext<Payload>& ctx) const {
    s.root = true;
    s.phase = Phase::done;
    std::vector<Value> x{s.input};
    decide(s, ctx, spec_.evaluate(x));
  }

  void decide(State& s, NodeContext<Payload>& ctx, Value v) const {
    s.decided = true;
    s.decision = v;
    ctx.decide(v);
  }

  void drain(State& s, NodeContext<Payload>& ctx) const {
    bool progress = true;
    while (progress && !s.deferred.empty()) {
      progress = false;
      for (std::size_t k = 0; k < s.deferred.size(); ++k) {
        auto [j, msg] = s.deferred[k];
        s.deferred.erase(s.deferred.begin() + static_cast<std::ptrdiff_t>(k));
        if (handle(s, j, msg, ctx)) {
          progress = true;
          break;
        }
        s.deferred.insert(s.deferred.begin() + static_cast<std::ptrdiff_t>(k), {j, std::move(msg)});
      }
    }
  }

  /// Returns false when the message must wait.
  bool handle(State& s, int j, const Payload& p, NodeContext<Payload>& ctx) const {
    const GhsMessage& m = *p;
    switch (m.kind) {
      case GhsKind::connect: return on_connect(s, j, m, ctx);
      case GhsKind::initiate: on_initiate(s, j, m, ctx); return true;
      case GhsKind::test: return on_test(s, j, m, ctx);
      case GhsKind::accept: on_accept(s, j, ctx); return true;
      case GhsKind::reject: on_reject(s, j, ctx); return true;
      case GhsKind::report: return on_report(s, j, m, ctx);
      case GhsKind::change_root: change_root(s, ctx); return true;
      case GhsKind::request: on_request(s, j, ctx); return true;
      case GhsKind::collect: on_collect(s, j, m, ctx); return true;
      case GhsKind::result: on_result(s, j, m, ctx); return true;
      case GhsKind::announce: return true;
    }
    return true;
  }

  bool on_connect(State& s, int j, const GhsMessage& m, NodeContext<Payload>& ctx) const {
    if (m.level < s.level) {
      s.links[j].state = EdgeState::branch;
      GhsMessage init;
      init.kind = GhsKind::initiate;
      init.level = s.level;
      init.weight = s.fragment;
      init.find = s.sn == NodeState::find;
      send(s, ctx, j, std::move(init));
      if (s.sn == NodeState::find) ++s.find_count;
      return true;
    }
    if (s.links[j].state == EdgeState::basic) return false;
    GhsMessage init;
    init.kind = GhsKind::initiate;
    init.level = s.level + 1;
    init.weight = s.links[j].weight;
    init.find = true;
    send(s, ctx, j, std::move(init));
    return true;
  }

  void on_initiate(State& s, int j, const GhsMessage& m, NodeContext<Payload>& ctx) const {
    s.level = m.level;
    s.max_level = std::max(s.max_level, s.level);
    s.fragment = m.weight;
    s.sn = m.find ? NodeState::find : NodeState::found;
    s.in_branch = j;
    s.best = -1;
    s.best_weight = EdgeWeight::infinity();
    announce(s, ctx);
    for (int i = 0; i < static_cast<int>(s.links.size()); ++i) {
      if (i == j || s.links[i].state != EdgeState::branch) continue;
      GhsMessage fwd;
      fwd.kind = GhsKind::initiate;
      fwd.level = m.level;
      fwd.weight = m.weight;
      fwd.find = m.find;
      send(s, ctx, i, std::move(fwd));
      if (m.find) ++s.find_count;
    }
    if (m.find) test(s, ctx);
  }

  void test(State& s, NodeContext<Payload>& ctx) const {
    int k = -1;
    for (int i = 0; i < static_cast<int>(s.links.size()); ++i)
      if (s.links[i].state == EdgeState::basic && (k < 0 || s.links[i].weight < s.links[k].weight)) k = i;
    if (k < 0) {
      s.test = -1;
      report(s, ctx);
      return;
    }
    s.test = k;
    if (bcast()) {
      resolve_test(s, ctx);
      return;
    }
    GhsMessage m;
    m.kind = GhsKind::test;
    m.level = s.level;
    m.weight = s.fragment;
    send(s, ctx, k, std::move(m));
  }

  // Broadcast mode: answer the pending test from the neighbor's cached
  // announcement, or keep waiting for a fresher one.
  void resolve_test(State& s, NodeContext<Payload>& ctx) const {
    if (s.test < 0 || s.sn != NodeState::find) return;
    const Link& l = s.links[s.test];
    if (l.cached_level < s.level) return;
    if (!(l.cached_fragment == s.fragment)) {
      on_accept(s, s.test, ctx);
    } else {
      if (s.links[s.test].state == EdgeState::basic) s.links[s.test].state = EdgeState::rejected;
      test(s, ctx);
    }
  }

  bool on_test(State& s, int j, const GhsMessage& m, NodeContext<Payload>& ctx) const {
    if (m.level > s.level) return false;
    if (!(m.weight == s.fragment)) {
      GhsMessage a;
      a.kind = GhsKind::accept;
      send(s, ctx, j, std::move(a));
      return true;
    }
    if (s.links[j].state == EdgeState::basic) s.links[j].state = EdgeState::rejected;
    if (s.test != j) {
      GhsMessage r;
      r.kind = GhsKind::reject;
      send(s, ctx, j, std::move(r));
    } else {
      test(s, ctx);
    }
    return true;
  }

  void on_accept(State& s, int j, NodeContext<Payload>& ctx) const {
    s.test = -1;
    if (s.links[j].weight < s.best_weight) {
      s.best = j;
      s.best_weight = s.links[j].weight;
    }
    report(s, ctx);
  }

  void on_reject(State& s, int j, NodeContext<Payload>& ctx) const {
    if (s.links[j].state == EdgeState::basic) s.links[j].state = EdgeState::rejected;
    test(s, ctx);
  }

  void report(State& s, NodeContext<Payload>& ctx) const {
    if (s.find_count != 0 || s.test >= 0) return;
    s.sn = NodeState::found;
    GhsMessage m;
    m.kind = GhsKind::report;
    m.weight = s.best_weight;
    send(s, ctx, s.in_branch, std::move(m));
  }

  bool on_report(State& s, int j, const GhsMessage& m, NodeContext<Payload>& ctx) const {
    if (j != s.in_branch) {
      --s.find_count;
      if (m.weight < s.best_weight) {
        s.best_weight = m.weight;
        s.best = j;
      }
      report(s, ctx);
      return true;
    }
    if (s.sn == NodeState::find) return false;
    if (s.best_weight < m.weight) {
      change_root(s, ctx);
    } else if (m.weight.is_infinite() && s.best_weight.is_infinite()) {
      tree_complete(s, ctx);
    }
    return true;
  }

  void change_root(State& s, NodeContext<Payload>& ctx) const {
    Link& l = s.links[s.best];
    if (l.state == EdgeState::branch) {
      GhsMessage m;
      m.kind = GhsKind::change_root;
      send(s, ctx, s.best, std::move(m));
    } else {
      GhsMessage m;
      m.kind = GhsKind::connect;
      m.level = s.level;
      send(s, ctx, s.best, std::move(m));
      l.state = EdgeState::branch;
    }
  }

  // Both core endpoints get here; the one with the larger UID becomes root.
  void tree_complete(State& s, NodeContext<Payload>& ctx) const {
    if (s.phase != Phase::mst) return;
    s.phase = Phase::request;
    if (s.id < s.links[s.in_branch].peer) return;
    s.root = true;
    s.parent = -1;
    start_collect(s, ctx);
  }

  std::vector<int> children(const State& s) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(s.links.size()); ++i)
      if (i != s.parent && s.links[i].state == EdgeState::branch) out.push_back(i);
    return out;
  }

  void start_collect(State& s, NodeContext<Payload>& ctx) const {
    const auto kids = children(s);
    s.phase = Phase::convergecast;
    s.pending = static_cast<int>(kids.size());
    if (hierarchical_) {
      s.aggregate = spec_.hierarchy->lift(s.id, s.input);
    } else {
      s.raw.assign(1, {s.id, s.input});
    }
    if (!kids.empty()) {
      if (bcast()) {
        GhsMessage m;
        m.kind = GhsKind::request;
        ctx.broadcast(std::make_shared<const GhsMessage>(std::move(m)));
      } else {
        for (int k : kids) {
          GhsMessage m;
          m.kind = GhsKind::request;
          send(s, ctx, k, std::move(m));
        }
      }
    }
    if (s.pending == 0) subtree_done(s, ctx);
  }

  void on_request(State& s, int j, NodeContext<Payload>& ctx) const {
    if (s.root || (s.phase != Phase::mst && s.phase != Phase::request)) return;
    if (s.links[j].state != EdgeState::branch) return;
    s.parent = j;
    start_collect(s, ctx);
  }

  void on_collect(State& s, int j, const GhsMessage& m, NodeContext<Payload>& ctx) const {
    if (j == s.parent) return;
    if (hierarchical_) {
      s.aggregate = spec_.hierarchy->combine(s.aggregate, m.aggregate);
    } else {
      s.raw.insert(s.raw.end(), m.raw.begin(), m.raw.end());
    }
    if (--s.pending == 0) subtree_done(s, ctx);
  }

  void subtree_done(State& s, NodeContext<Payload>& ctx) const {
    if (!s.root) {
      GhsMessage m;
      m.kind = GhsKind::collect;
      if (hierarchical_) {
        m.aggregate = s.aggregate;
      } else {
        m.raw = s.raw;
      }
      s.phase = Phase::result;
      send(s, ctx, s.parent, std::move(m));
      return;
    }
    Value v = 0;
    if (hierarchical_) {
      v = spec_.hierarchy->finalize(s.aggregate);
    } else {
      std::vector<Value> x(s.n, 0);
      for (const auto& [id, val] : s.raw) x[id - 1] = val;
      v = spec_.evaluate(x);
    }
    publish(s, ctx, v);
  }

  void on_result(State& s, int j, const GhsMessage& m, NodeContext<Payload>& ctx) const {
    if (s.root || j != s.parent || s.phase == Phase::done) return;
    publish(s, ctx, m.value);
  }

  void publish(State& s, NodeContext<Payload>& ctx, Value v) const {
    s.phase = Phase::done;
    decide(s, ctx, v);
    const auto kids = children(s);
    if (kids.empty()) return;
    if (bcast()) {
      GhsMessage m;
      m.kind = GhsKind::result;
      m.value = v;
      ctx.broadcast(std::make_shared<const GhsMessage>(std::move(m)));
      return;
    }
    for (int k : kids) {
      GhsMessage m;
      m.kind = GhsKind::result;
      m.value = v;
      send(s, ctx, k, std::move(m));
    }
  }

  ConsensusSpec spec_;
  Channel channel_;
  bool hierarchical_;
};

/// Branch edges recorded in the final node states of a GHS run.
inline std::vector<Edge> branch_edges(const ExecutionTrace& trace) {
  std::set<Edge> edges;
  for (std::size_t i = 0; i < trace.final_states.size(); ++i)
    for (const auto& f : trace.final_states[i])
      if (f.name == "branch") edges.insert(Edge::make(static_cast<NodeId>(i + 1), static_cast<NodeId>(f.i)));
  return {edges.begin(), edges.end()};
}

/// Highest fragment level any node reached, from final states.
inline int max_level(const ExecutionTrace& trace) {
  int best = 0;
  for (const auto& rec : trace.final_states)
    for (const auto& f : rec)
      if (f.name == "level") best = std::max(best, static_cast<int>(f.i));
  return best;
}

}  // namespace consim
