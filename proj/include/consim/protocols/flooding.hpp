#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/runtime.hpp"

namespace consim {

enum class Channel { directional, broadcast };

/// Every tick a node sends everything it knows to its current neighbors and
/// decides once it holds all n values.
///
/// A message carrying n entries doubles as the sender's decided flag. A node
/// stops once it has decided and, over `quiet_slots` consecutive slots, every
/// neighbor it met has both sent it and received from it a full message.
/// Static graphs use one slot; schedules use one period plus one.
class Flooding {
 public:
  using Entry = std::pair<NodeId, Value>;
  using Payload = std::shared_ptr<const std::vector<Entry>>;

  struct State {
    NodeId id = 0;
    std::size_t n = 0;
    std::vector<Value> values;
    std::vector<char> have;
    std::size_t count = 0;
    Payload snapshot;
    bool dirty = true;
    std::vector<char> heard_decided;
    std::vector<char> told_decided;
    std::size_t degree_seen = 0;
    std::optional<std::size_t> quiet_since;
    bool decided = false;
    bool halted = false;
  };

  explicit Flooding(ConsensusSpec spec, Channel channel = Channel::directional, std::size_t quiet_slots = 1)
      : spec_(std::move(spec)), channel_(channel), quiet_slots_(std::max<std::size_t>(quiet_slots, 1)) {}

  std::string_view name() const { return quiet_slots_ > 1 ? "flood-dyn" : "flood"; }
  const ConsensusSpec& spec() const { return spec_; }
  Channel channel() const { return channel_; }

  FieldKind decision_kind() const { return field_kind_for(spec_.codomain); }

  SizingModel sizing(std::size_t n) const {
    SizingModel model = SizingModel::for_spec(n, spec_);
    model.register_kind("flood");
    return model;
  }

  State make_state(const NodeSetup& setup) const {
    State s;
    s.id = setup.id;
    s.n = setup.n;
    s.values.assign(setup.n + 1, 0);
    s.have.assign(setup.n + 1, 0);
    s.heard_decided.assign(setup.n + 1, 0);
    s.told_decided.assign(setup.n + 1, 0);
    learn(s, setup.id, setup.input);
    return s;
  }

  void on_init(State& s, NodeContext<Payload>& ctx) const {
    maybe_decide(s, ctx);
    tick(s, ctx);
  }

  void on_timer(State& s, NodeContext<Payload>& ctx) const { tick(s, ctx); }

  void on_message(State& s, const Delivery<Payload>& m, NodeContext<Payload>& ctx) const {
    for (const auto& [id, v] : *m.payload) learn(s, id, v);
    if (m.payload->size() == s.n) s.heard_decided[m.sender] = 1;
    maybe_decide(s, ctx);
  }

  bool wants_timer(const State& s) const { return !s.halted; }

  MessageShape shape(const Payload& p) const {
    PayloadCounts c;
    c.uids = p->size();
    c.values = p->size();
    return {"flood", "flood", c};
  }

  std::uint64_t state_bits(const State& s, const SizingModel& model) const {
    return s.count * (model.uid_bits() + model.value_bits()) + 2 * s.degree_seen + 2;
  }

  Record record(const State& s) const {
    Record r;
    r.reserve(2 * s.count + 3);
    r.push_back(Field::integer("count", static_cast<std::int64_t>(s.count)));
    r.push_back(Field::flag("decided", s.decided));
    r.push_back(Field::flag("halted", s.halted));
    for (NodeId id = 1; id <= s.n; ++id) {
      if (!s.have[id]) continue;
      r.push_back(Field::uid("id", id));
      r.push_back(Field::value("x", s.values[id]));
    }
    return r;
  }

  Record payload_record(const Payload& p) const {
    Record r;
    r.reserve(2 * p->size());
    for (const auto& [id, v] : *p) {
      r.push_back(Field::uid("id", id));
      r.push_back(Field::value("x", v));
    }
    return r;
  }

 private:
  static void learn(State& s, NodeId id, Value v) {
    if (s.have[id]) return;
    s.have[id] = 1;
    s.values[id] = v;
    ++s.count;
    s.dirty = true;
  }

  void maybe_decide(State& s, NodeContext<Payload>& ctx) const {
    if (s.decided || s.count < s.n) return;
    s.decided = true;
    std::vector<Value> x(s.values.begin() + 1, s.values.end());
    ctx.decide(spec_.evaluate(x));
  }

  void tick(State& s, NodeContext<Payload>& ctx) const {
    if (s.halted) return;
    const auto nbrs = ctx.neighbors();
    bool settled = s.decided;
    for (const auto& nb : nbrs)
      if (!s.heard_decided[nb.id] || !s.told_decided[nb.id]) settled = false;
    if (settled) {
      if (!s.quiet_since) s.quiet_since = ctx.slot();
      if (ctx.slot() >= *s.quiet_since + quiet_slots_ - 1) {
        s.halted = true;
        return;
      }
    } else {
      s.quiet_since.reset();
    }
    if (nbrs.empty()) return;
    if (s.dirty) {
      auto snap = std::make_shared<std::vector<Entry>>();
      snap->reserve(s.count);
      for (NodeId id = 1; id <= s.n; ++id)
        if (s.have[id]) snap->emplace_back(id, s.values[id]);
      s.snapshot = std::move(snap);
      s.dirty = false;
    }
    if (channel_ == Channel::broadcast) {
      ctx.broadcast(s.snapshot);
    } else {
      for (const auto& nb : nbrs) ctx.send(nb.id, s.snapshot);
    }
    if (s.decided)
      for (const auto& nb : nbrs) s.told_decided[nb.id] = 1;
    s.degree_seen = std::max(s.degree_seen, nbrs.size());
  }

  ConsensusSpec spec_;
  Channel channel_;
  std::size_t quiet_slots_;
};

}  // namespace consim
