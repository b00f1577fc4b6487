#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/runtime.hpp"

namespace consim {

enum class AveragingWeights { metropolis, uniform };

/// Rounding of a / q to the nearest integer, halves away from zero. Odd in a,
/// which keeps pairwise transfers exactly antisymmetric.
inline std::int64_t round_div(std::int64_t a, std::int64_t q) {
  const std::int64_t mag = (2 * (a < 0 ? -a : a) + q) / (2 * q);
  return a < 0 ? -mag : mag;
}

namespace detail {

inline Eigen::MatrixXd weight_matrix(std::size_t n, std::span<const Edge> edges, AveragingWeights scheme) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (scheme == AveragingWeights::uniform) {
    w.setConstant(1.0 / static_cast<double>(n));
    return w;
  }
  std::vector<std::size_t> deg(n + 1, 0);
  for (const auto& e : edges) ++deg[e.u], ++deg[e.v];
  for (const auto& e : edges) {
    const double x = 1.0 / (1.0 + static_cast<double>(std::max(deg[e.u], deg[e.v])));
    w(e.u - 1, e.v - 1) = x;
    w(e.v - 1, e.u - 1) = x;
  }
  for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, i) = 1.0 - w.row(i).sum();
  return w;
}

/// Largest |eigenvalue| of a symmetric doubly stochastic matrix on the
/// complement of the all-ones vector.
inline double slem(const Eigen::MatrixXd& w) {
  if (w.rows() <= 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending; the largest is 1
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 2)));
}

inline double noise_norm(std::span<const std::size_t> degrees) {
  double acc = 0.0;
  for (auto dg : degrees) acc += (static_cast<double>(dg) / 2.0) * (static_cast<double>(dg) / 2.0);
  return std::sqrt(acc);
}

}  // namespace detail

/// Round budget after which every node is within epsilon of the mean, for any
/// input in [0, 2^b), including fixed-point rounding.
struct RoundBudget {
  std::size_t rounds = 0;
  double contraction = 0.0;  // per round (static) or per period (schedule)
  std::size_t period = 1;
  double rounding_bound = 0.0;
};

namespace detail {

inline RoundBudget budget_from(double rho, std::size_t period, double noise_per_period, std::size_t n, unsigned b,
                               unsigned p, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_parameter, "epsilon must be positive");
  RoundBudget out;
  out.contraction = rho;
  out.period = period;
  if (n <= 1) return out;
  const double dev0 = std::sqrt(static_cast<double>(n)) / 2.0 * (std::ldexp(1.0, static_cast<int>(b)) - 1.0);
  if (rho >= 1.0 - 1e-12) throw Error(ErrorKind::invalid_graph, "weight matrix does not contract disagreement");
  out.rounding_bound = noise_per_period * std::ldexp(1.0, -static_cast<int>(p)) / (1.0 - rho);
  if (out.rounding_bound > epsilon / 2.0)
    throw Error(ErrorKind::invalid_parameter,
                "precision p=" + std::to_string(p) + " cannot reach epsilon; rounding bound is " +
                    std::to_string(out.rounding_bound));
  std::size_t periods = 1;
  if (rho > 1e-12 && dev0 > epsilon - out.rounding_bound)
    periods = static_cast<std::size_t>(std::ceil(std::log((epsilon - out.rounding_bound) / dev0) / std::log(rho)));
  out.rounds = std::max<std::size_t>(periods, 1) * period;
  return out;
}

}  // namespace detail

inline RoundBudget averaging_rounds(const StaticGraph& g, double epsilon, unsigned b, unsigned p,
                                    AveragingWeights scheme = AveragingWeights::metropolis) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_parameter, "epsilon must be positive");
  const auto w = detail::weight_matrix(g.n(), g.edges(), scheme);
  std::vector<std::size_t> deg(g.n());
  for (NodeId v = 1; v <= g.n(); ++v) deg[v - 1] = g.degree(v);
  return detail::budget_from(detail::slem(w), 1, detail::noise_norm(deg), g.n(), b, p, epsilon);
}

/// Schedules: contraction per period is the second singular value of the
/// product of the per-slot Metropolis matrices.
inline RoundBudget averaging_rounds(const EdgeSchedule& s, double epsilon, unsigned b, unsigned p) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_parameter, "epsilon must be positive");
  const auto n = static_cast<Eigen::Index>(s.n());
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(n, n);
  double noise = 0.0;
  for (std::size_t t = 0; t < s.period(); ++t) {
    std::vector<Edge> edges;
    std::vector<std::size_t> deg(s.n());
    for (NodeId v = 1; v <= s.n(); ++v) {
      deg[v - 1] = s.neighbors(t, v).size();
      for (const auto& nb : s.neighbors(t, v))
        if (v < nb.id) edges.push_back(Edge::make(v, nb.id));
    }
    prod = detail::weight_matrix(s.n(), edges, AveragingWeights::metropolis) * prod;
    noise += detail::noise_norm(deg);
  }
  double sigma2 = 0.0;
  if (n > 1) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(prod);
    sigma2 = svd.singularValues()(1);
  }
  return detail::budget_from(sigma2, s.period(), noise, s.n(), b, p, epsilon);
}

/// Synchronous averaging: every round each node sends (value, degree) to its
/// neighbors, then moves by the rounded weighted differences. Decides after a
/// fixed round budget. Values are fixed-point with the spec's precision.
class Averaging {
 public:
  static constexpr bool lock_step = true;

  struct Payload {
    Value value = 0;
    std::uint32_t degree = 0;
  };

  struct State {
    NodeId id = 0;
    std::size_t n = 0;
    Value value = 0;
    std::int64_t pending = 0;
    std::uint32_t degree = 0;
    std::size_t round = 0;
    bool decided = false;
  };

  Averaging(ConsensusSpec spec, std::size_t rounds, AveragingWeights scheme = AveragingWeights::metropolis,
            bool dynamic = false)
      : spec_(std::move(spec)), rounds_(rounds), scheme_(scheme), dynamic_(dynamic) {
    if (spec_.codomain != Codomain::fixed_point)
      throw Error(ErrorKind::unsupported, "averaging computes the plain average only");
  }

  std::string_view name() const { return dynamic_ ? "avg-dyn" : "avg"; }
  const ConsensusSpec& spec() const { return spec_; }
  std::size_t rounds() const { return rounds_; }
  FieldKind decision_kind() const { return FieldKind::fixed; }

  SizingModel sizing(std::size_t n) const {
    SizingModel model = SizingModel::for_spec(n, spec_);
    model.register_kind("avg");
    return model;
  }

  State make_state(const NodeSetup& setup) const {
    State s;
    s.id = setup.id;
    s.n = setup.n;
    s.value = setup.input << spec_.precision;
    return s;
  }

  void on_init(State& s, NodeContext<Payload>& ctx) const {
    if (rounds_ == 0 || s.n <= 1) {
      s.decided = true;
      ctx.decide(s.value);
      return;
    }
    if (scheme_ == AveragingWeights::uniform && ctx.neighbors().size() + 1 != s.n)
      throw Error(ErrorKind::invalid_graph, "uniform weights need a complete graph");
    emit(s, ctx);
  }

  void on_message(State& s, const Delivery<Payload>& m, NodeContext<Payload>&) const {
    if (s.decided) return;
    const std::int64_t q = scheme_ == AveragingWeights::uniform
                               ? static_cast<std::int64_t>(s.n)
                               : 1 + static_cast<std::int64_t>(std::max(s.degree, m.payload.degree));
    s.pending += round_div(m.payload.value - s.value, q);
  }

  void on_timer(State& s, NodeContext<Payload>& ctx) const {
    if (s.decided) return;
    s.value += s.pending;
    s.pending = 0;
    if (++s.round >= rounds_) {
      s.decided = true;
      ctx.decide(s.value);
      return;
    }
    emit(s, ctx);
  }

  bool wants_timer(const State& s) const { return !s.decided; }

  MessageShape shape(const Payload&) const {
    PayloadCounts c;
    c.fixed_values = 1;
    c.uids = 1;
    return {"avg", "avg", c};
  }

  std::uint64_t state_bits(const State&, const SizingModel& model) const {
    const std::uint64_t fixed = model.value_bits() + model.precision_bits();
    return 2 * fixed + ceil_log2(rounds_ + 1) + model.uid_bits() + 1;
  }

  Record record(const State& s) const {
    return {Field::fixed("x", s.value), Field::fixed("pending", s.pending),
            Field::integer("round", static_cast<std::int64_t>(s.round)), Field::integer("degree", s.degree),
            Field::flag("decided", s.decided)};
  }

  Record payload_record(const Payload& p) const {
    return {Field::fixed("x", p.value), Field::integer("degree", p.degree)};
  }

 private:
  void emit(State& s, NodeContext<Payload>& ctx) const {
    s.degree = static_cast<std::uint32_t>(ctx.neighbors().size());
    for (const auto& nb : ctx.neighbors()) ctx.send(nb.id, Payload{s.value, s.degree});
  }

  ConsensusSpec spec_;
  std::size_t rounds_;
  AveragingWeights scheme_;
  bool dynamic_;
};

}  // namespace consim
