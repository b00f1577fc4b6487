#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/error.hpp"
#include "consim/graph.hpp"
#include "consim/report.hpp"
#include "consim/sizing.hpp"
#include "consim/trace.hpp"

namespace consim {

/// Asynchrony contract: transitions fire within l of being enabled, messages
/// arrive within d of being sent. (l + d) is one time unit.
struct TimingParams {
  double l = 1.0;
  double d = 1.0;

  double unit() const { return l + d; }
  void validate() const {
    if (!(l > 0.0) || !(d > 0.0)) throw Error(ErrorKind::invalid_parameter, "timing parameters l and d must be positive");
  }
};

enum class SchedulerMode { synchronous, random_async, adversarial_async };
enum class Adversary { uniform, last_sent_first, edge_biased };

inline const char* to_string(SchedulerMode m) {
  switch (m) {
    case SchedulerMode::synchronous: return "synchronous";
    case SchedulerMode::random_async: return "random-async";
    case SchedulerMode::adversarial_async: return "adversarial-async";
  }
  return "?";
}

inline const char* to_string(Adversary a) {
  switch (a) {
    case Adversary::uniform: return "uniform";
    case Adversary::last_sent_first: return "last-sent-first";
    case Adversary::edge_biased: return "edge-biased";
  }
  return "?";
}

struct SchedulerPolicy {
  SchedulerMode mode = SchedulerMode::synchronous;
  Adversary adversary = Adversary::uniform;
  std::uint64_t seed = 0;

  static SchedulerPolicy synchronous() { return {}; }
  static SchedulerPolicy random(std::uint64_t seed) { return {SchedulerMode::random_async, Adversary::uniform, seed}; }
  static SchedulerPolicy adversarial(Adversary a, std::uint64_t seed) {
    return {SchedulerMode::adversarial_async, a, seed};
  }

  std::string label() const {
    if (mode == SchedulerMode::adversarial_async) return std::string(to_string(mode)) + "/" + to_string(adversary);
    return to_string(mode);
  }
};

struct DelayDraw {
  double transition = 0.0;
  double delivery = 0.0;
  double timer = 0.0;
};

/// Seeded source of transition latencies, delivery delays and timer periods
/// for one scheduler policy. All draws respect (0, l] and (0, d].
class DelayModel {
 public:
  DelayModel(SchedulerPolicy policy, TimingParams timing, std::span<const Edge> edges = {})
      : policy_(policy), timing_(timing), rng_(policy.seed) {
    timing_.validate();
    if (policy_.mode == SchedulerMode::adversarial_async && policy_.adversary == Adversary::edge_biased &&
        !edges.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
      slow_edge_ = edges[pick(rng_)];
    }
  }

  bool synchronous() const { return policy_.mode == SchedulerMode::synchronous; }
  bool lifo() const {
    return policy_.mode == SchedulerMode::adversarial_async && policy_.adversary == Adversary::last_sent_first;
  }
  std::optional<Edge> slow_edge() const { return slow_edge_; }

  double transition_latency() {
    if (synchronous() || lifo()) return timing_.l;
    return up_to(timing_.l);
  }

  double delivery_delay(NodeId from, NodeId to) {
    if (synchronous() || lifo()) return timing_.d;
    if (policy_.mode == SchedulerMode::adversarial_async && policy_.adversary == Adversary::edge_biased) {
      if (slow_edge_ && Edge::make(from, to) == *slow_edge_) return timing_.d;
      return timing_.d / 100.0;
    }
    return up_to(timing_.d);
  }

  /// Period of the next timer tick (asynchronous modes only).
  double timer_interval() {
    if (synchronous()) return timing_.unit();
    if (lifo()) return timing_.l;
    return up_to(timing_.l);
  }

 private:
  double up_to(double bound) { return bound * (1.0 - unit_(rng_)); }

  SchedulerPolicy policy_;
  TimingParams timing_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::optional<Edge> slow_edge_;
};

/// Sample of delay assignments produced by a policy, cycling deliveries over
/// the given edges.
inline std::vector<DelayDraw> adversary_schedules(SchedulerPolicy policy, TimingParams timing, std::size_t count,
                                                  std::span<const Edge> edges) {
  DelayModel model(policy, timing, edges);
  std::vector<DelayDraw> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    DelayDraw draw;
    draw.transition = model.transition_latency();
    if (!edges.empty()) {
      const auto& e = edges[k % edges.size()];
      draw.delivery = k % 2 ? model.delivery_delay(e.u, e.v) : model.delivery_delay(e.v, e.u);
    } else {
      draw.delivery = model.delivery_delay(1, 2);
    }
    draw.timer = model.timer_interval();
    out.push_back(draw);
  }
  return out;
}

/// Static graph or D-connected schedule; slots last one time unit.
class Network {
 public:
  Network(StaticGraph g) : topology_(std::move(g)) {}  // NOLINT(google-explicit-constructor)
  Network(EdgeSchedule s) : topology_(std::move(s)) {}  // NOLINT(google-explicit-constructor)

  std::size_t n() const {
    return std::visit([](const auto& t) { return t.n(); }, topology_);
  }
  bool dynamic() const { return std::holds_alternative<EdgeSchedule>(topology_); }

  const StaticGraph* static_graph() const { return std::get_if<StaticGraph>(&topology_); }
  const EdgeSchedule* schedule() const { return std::get_if<EdgeSchedule>(&topology_); }

  std::span<const Neighbor> neighbors(NodeId v, std::size_t slot) const {
    if (auto g = static_graph()) return g->neighbors(v);
    return schedule()->neighbors(slot, v);
  }

  /// Every edge that ever appears.
  std::vector<Edge> edges() const {
    if (auto g = static_graph()) return {g->edges().begin(), g->edges().end()};
    return schedule()->union_edges();
  }

  static std::size_t slot_at(double time, double unit) {
    return static_cast<std::size_t>(std::floor(time / unit + 1e-9));
  }

 private:
  std::variant<StaticGraph, EdgeSchedule> topology_;
};

struct NodeSetup {
  NodeId id = 0;
  std::size_t n = 0;
  Value input = 0;
  std::span<const Neighbor> neighbors;  // neighbors in slot 0
};

template <class Payload>
struct Delivery {
  NodeId sender = 0;
  NodeId receiver = broadcast_receiver;
  const Payload& payload;
};

/// Handle given to a transition: read-only view of the node's surroundings
/// plus an outbox and a decision slot.
template <class Payload>
class NodeContext {
 public:
  NodeContext(NodeId id, std::size_t n, std::span<const Neighbor> neighbors, std::size_t slot)
      : id_(id), n_(n), neighbors_(neighbors), slot_(slot) {}

  NodeId id() const { return id_; }
  std::size_t n() const { return n_; }
  std::size_t slot() const { return slot_; }
  /// Neighbors reachable in the current slot.
  std::span<const Neighbor> neighbors() const { return neighbors_; }

  void send(NodeId to, Payload payload) { outbox_.push_back({to, std::move(payload)}); }
  void broadcast(Payload payload) { outbox_.push_back({broadcast_receiver, std::move(payload)}); }
  void decide(Value v) {
    if (decision_ && *decision_ != v) throw std::logic_error("node changed its decision within one transition");
    decision_ = v;
  }

  struct Outgoing {
    NodeId to;
    Payload payload;
  };
  std::vector<Outgoing>& outbox() { return outbox_; }
  const std::optional<Value>& decision() const { return decision_; }

 private:
  NodeId id_;
  std::size_t n_;
  std::span<const Neighbor> neighbors_;
  std::size_t slot_;
  std::vector<Outgoing> outbox_;
  std::optional<Value> decision_;
};

/// A protocol is a family of identical per-node automata. Handlers mutate only
/// the node's own state and may depend only on their arguments.
template <class P>
concept Protocol = requires(const P& p, typename P::State& s, const typename P::State& cs,
                            NodeContext<typename P::Payload>& ctx, const Delivery<typename P::Payload>& m,
                            const typename P::Payload& pl, const SizingModel& model, const NodeSetup& setup,
                            std::size_t n) {
  { p.name() } -> std::convertible_to<std::string_view>;
  { p.make_state(setup) } -> std::same_as<typename P::State>;
  p.on_init(s, ctx);
  p.on_message(s, m, ctx);
  p.on_timer(s, ctx);
  { p.wants_timer(cs) } -> std::convertible_to<bool>;
  { p.shape(pl) } -> std::same_as<MessageShape>;
  { p.state_bits(cs, model) } -> std::convertible_to<std::uint64_t>;
  { p.record(cs) } -> std::same_as<Record>;
  { p.payload_record(pl) } -> std::same_as<Record>;
  { p.decision_kind() } -> std::same_as<FieldKind>;
  { p.sizing(n) } -> std::same_as<SizingModel>;
};

struct RunOptions {
  SchedulerPolicy policy;
  TimingParams timing;
  std::size_t round_cap = 10000;
  TraceDetail detail = TraceDetail::summary;
};

/// Thrown when the horizon round_cap * (l + d) passes before every node has
/// decided; carries the partial trace.
class NonTerminationError : public Error {
 public:
  explicit NonTerminationError(ExecutionTrace partial)
      : Error(ErrorKind::non_termination, "not every node decided within the round cap"),
        partial_(std::make_shared<ExecutionTrace>(std::move(partial))) {}

  const ExecutionTrace& partial() const { return *partial_; }

 private:
  std::shared_ptr<const ExecutionTrace> partial_;
};

namespace detail {

template <Protocol P>
class Simulator {
  using State = typename P::State;
  using Payload = typename P::Payload;

  struct InFlight {
    std::uint64_t id;
    NodeId sender;
    Payload payload;
  };

  struct Pending {
    double time;
    int cls;  // receives before timers at equal times
    std::int64_t order;
    std::uint64_t seq;
    EventKind kind;
    NodeId node;
    double enabled_at;
    double delivered_at;
    std::shared_ptr<const InFlight> msg;
  };

  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.cls != b.cls) return a.cls > b.cls;
      if (a.order != b.order) return a.order > b.order;
      return a.seq > b.seq;
    }
  };

 public:
  Simulator(const Network& net, const P& protocol, std::span<const Value> inputs, const RunOptions& options)
      : net_(net),
        protocol_(protocol),
        options_(options),
        delays_(options.policy, options.timing, net.edges()),
        model_(protocol.sizing(net.n())),
        unit_(options.timing.unit()) {
    options_.timing.validate();
    if (options_.round_cap < 1) throw Error(ErrorKind::invalid_parameter, "round_cap must be >= 1");
    if constexpr (requires { P::lock_step; }) {
      if (P::lock_step && !delays_.synchronous())
        throw Error(ErrorKind::invalid_parameter, std::string(protocol.name()) + " runs in synchronous mode only");
    }
    if (inputs.size() != net.n())
      throw Error(ErrorKind::length_mismatch, "need one initial value per node (" + std::to_string(net.n()) + ")");

    const std::size_t n = net.n();
    trace_.protocol = std::string(protocol.name());
    trace_.n = n;
    trace_.time_unit = unit_;
    trace_.detail = options.detail;
    trace_.decision_kind = protocol.decision_kind();
    trace_.inputs.assign(inputs.begin(), inputs.end());
    trace_.decisions.assign(n, std::nullopt);
    trace_.peak_state_bits.assign(n, 0);

    states_.reserve(n);
    for (NodeId v = 1; v <= n; ++v)
      states_.push_back(protocol.make_state(NodeSetup{v, n, inputs[v - 1], net.neighbors(v, 0)}));
    timer_pending_.assign(n + 1, false);
    last_timer_round_.assign(n + 1, 0);
  }

  ExecutionTrace run() {
    const std::size_t n = net_.n();
    for (NodeId v = 1; v <= n; ++v) {
      const double t = delays_.synchronous() ? 0.0 : delays_.transition_latency();
      push({t, 1, static_cast<std::int64_t>(v), 0, EventKind::init, v, 0.0, 0.0, nullptr});
    }
    const double horizon = static_cast<double>(options_.round_cap) * unit_;
    while (!queue_.empty()) {
      if (queue_.top().time > horizon) break;
      Pending ev = queue_.top();
      queue_.pop();
      step(ev);
    }
    trace_.quiesced = queue_.empty();
    trace_.completed = decided_count_ == n;
    if (!trace_.completed) trace_.completion_time = last_time_;
    trace_.quiescence_time = last_time_;
    if (detailed()) {
      trace_.final_states.reserve(n);
      for (const auto& st : states_) trace_.final_states.push_back(protocol_.record(st));
    }
    trace_.report = meter_.finish(trace_.completion_time, unit_, trace_.completed);
    if (!trace_.completed) throw NonTerminationError(std::move(trace_));
    return std::move(trace_);
  }

 private:
  void push(Pending p) {
    p.seq = seq_++;
    queue_.push(std::move(p));
  }

  bool detailed() const { return options_.detail != TraceDetail::none; }
  bool full() const { return options_.detail == TraceDetail::full; }

  void step(const Pending& ev) {
    const NodeId v = ev.node;
    State& state = states_[v - 1];
    const double now = ev.time;
    last_time_ = now;
    const std::size_t slot = Network::slot_at(now, unit_);
    NodeContext<Payload> ctx(v, net_.n(), net_.neighbors(v, slot), slot);

    std::uint64_t pre = 0;
    if (full()) pre = digest(protocol_.record(state));

    switch (ev.kind) {
      case EventKind::init: protocol_.on_init(state, ctx); break;
      case EventKind::timer:
        timer_pending_[v] = false;
        protocol_.on_timer(state, ctx);
        break;
      case EventKind::receive: {
        Delivery<Payload> d{ev.msg->sender, v, ev.msg->payload};
        protocol_.on_message(state, d, ctx);
        break;
      }
      default: break;
    }

    const std::uint64_t bits = protocol_.state_bits(state, model_);
    meter_.on_state(bits);
    trace_.peak_state_bits[v - 1] = std::max(trace_.peak_state_bits[v - 1], bits);

    if (detailed()) {
      TraceEvent te;
      te.time = now;
      te.node = v;
      te.kind = ev.kind;
      te.enabled_at = ev.enabled_at;
      te.delivered_at = ev.delivered_at;
      te.state_bits = bits;
      if (ev.msg) te.message = static_cast<std::int64_t>(ev.msg->id);
      if (full()) {
        te.pre_digest = pre;
        te.state = protocol_.record(state);
        te.post_digest = digest(te.state);
      }
      trace_.events.push_back(std::move(te));
    }

    dispatch(v, ctx, now);
    record_decision(v, ctx, now);
    schedule_timer(v, state, now, ev.kind);
  }

  void dispatch(NodeId v, NodeContext<Payload>& ctx, double now) {
    const bool counting = decided_count_ < net_.n() || now <= trace_.completion_time;
    for (auto& out : ctx.outbox()) {
      const bool is_broadcast = out.to == broadcast_receiver;
      std::vector<NodeId> receivers;
      if (is_broadcast) {
        for (const auto& nb : ctx.neighbors()) receivers.push_back(nb.id);
      } else {
        bool present = false;
        for (const auto& nb : ctx.neighbors())
          if (nb.id == out.to) present = true;
        if (!present) continue;  // edge absent in this slot: the send is a no-op
        receivers.push_back(out.to);
      }
      const MessageShape shape = protocol_.shape(out.payload);
      const std::uint64_t bits = size_of(shape, is_broadcast, model_);
      if (counting) meter_.on_send(shape, bits, is_broadcast);

      auto msg = std::make_shared<InFlight>(InFlight{next_message_id_++, v, std::move(out.payload)});
      if (detailed()) {
        MessageRecord rec;
        rec.id = msg->id;
        rec.sender = v;
        rec.receiver = out.to;
        rec.shape = shape;
        rec.size_bits = bits;
        rec.sent_at = now;
        rec.recipients = static_cast<std::uint32_t>(receivers.size());
        if (full()) rec.payload = protocol_.payload_record(msg->payload);
        trace_.messages.push_back(std::move(rec));
        TraceEvent te;
        te.time = now;
        te.node = v;
        te.kind = EventKind::send;
        te.message = static_cast<std::int64_t>(msg->id);
        trace_.events.push_back(std::move(te));
      }
      for (NodeId r : receivers) {
        const std::uint64_t channel = (std::uint64_t{v} << 32) | r;
        double& last_delivery = last_delivery_[channel];
        double& last_process = last_process_[channel];
        const double delivered = std::max(now + delays_.delivery_delay(v, r), last_delivery);
        double processed = std::max(delivered + delays_.transition_latency(), last_process);
        // the LIFO tie-break must not reorder one channel
        if (delays_.lifo() && processed == last_process) processed = std::nextafter(processed, INFINITY);
        last_delivery = delivered;
        last_process = processed;
        const auto id = static_cast<std::int64_t>(msg->id);
        push({processed, 0, delays_.lifo() ? -id : id, 0, EventKind::receive, r, delivered, delivered, msg});
      }
    }
  }

  void record_decision(NodeId v, const NodeContext<Payload>& ctx, double now) {
    if (!ctx.decision()) return;
    auto& slot = trace_.decisions[v - 1];
    if (slot) {
      if (slot->value != *ctx.decision())
        throw std::logic_error("node " + std::to_string(v) + " changed its decision");
      return;
    }
    slot = DecisionRecord{v, *ctx.decision(), now};
    if (detailed()) {
      TraceEvent te;
      te.time = now;
      te.node = v;
      te.kind = EventKind::decide;
      te.decision = *ctx.decision();
      trace_.events.push_back(std::move(te));
    }
    if (++decided_count_ == net_.n()) trace_.completion_time = now;
  }

  void schedule_timer(NodeId v, const State& state, double now, EventKind fired) {
    if (fired == EventKind::timer || fired == EventKind::init) {
      if (delays_.synchronous()) last_timer_round_[v] = static_cast<std::size_t>(std::llround(now / unit_));
    }
    if (timer_pending_[v] || !protocol_.wants_timer(state)) return;
    double at = 0.0, enabled = now;
    if (delays_.synchronous()) {
      std::size_t k = std::max<std::size_t>(last_timer_round_[v] + 1,
                                            static_cast<std::size_t>(std::ceil(now / unit_ - 1e-9)));
      at = static_cast<double>(k) * unit_;
      enabled = std::max(now, at - options_.timing.l);
    } else {
      at = now + delays_.timer_interval();
    }
    timer_pending_[v] = true;
    push({at, 1, static_cast<std::int64_t>(v), 0, EventKind::timer, v, enabled, 0.0, nullptr});
  }

  const Network& net_;
  const P& protocol_;
  RunOptions options_;
  DelayModel delays_;
  SizingModel model_;
  double unit_;
  std::vector<State> states_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  std::unordered_map<std::uint64_t, double> last_delivery_;
  std::unordered_map<std::uint64_t, double> last_process_;
  std::vector<bool> timer_pending_;
  std::vector<std::size_t> last_timer_round_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_message_id_ = 0;
  std::size_t decided_count_ = 0;
  double last_time_ = 0.0;
  Meter meter_;
  ExecutionTrace trace_;
};

}  // namespace detail

/// Runs one automaton per node until every node has decided and no event is
/// pending, or until round_cap * (l + d) has elapsed.
template <Protocol P>
ExecutionTrace run(const Network& net, const P& protocol, std::span<const Value> inputs, const RunOptions& options) {
  return detail::Simulator<P>(net, protocol, inputs, options).run();
}

/// Lock-step execution: transitions of round k happen at time k(l + d) and see
/// every message sent in round k - 1.
template <Protocol P>
ExecutionTrace run_synchronous(const Network& net, const P& protocol, std::span<const Value> inputs,
                               std::size_t rounds, TraceDetail detail = TraceDetail::summary) {
  RunOptions options;
  options.policy = SchedulerPolicy::synchronous();
  options.round_cap = rounds;
  options.detail = detail;
  return run(net, protocol, inputs, options);
}

/// Round index of a synchronous-mode event time.
inline std::size_t round_of(double time, const TimingParams& timing) {
  return static_cast<std::size_t>(std::llround(time / timing.unit()));
}

}  // namespace consim
