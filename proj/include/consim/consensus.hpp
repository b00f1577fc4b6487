#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "consim/error.hpp"
#include "consim/graph.hpp"

namespace consim {

/// Initial values and decisions. Fixed-point quantities carry `precision`
/// fractional bits.
using Value = std::int64_t;

/// Smallest k with 2^k >= x (0 for x <= 1).
constexpr unsigned ceil_log2(std::uint64_t x) {
  unsigned k = 0;
  while (k < 64 && (std::uint64_t{1} << k) < x) ++k;
  return k;
}

enum class Codomain {
  value,        // one of the initial values (b bits)
  fixed_point,  // b + p bits, p fractional
  uid,          // a node id
  boolean,
};

/// Partial aggregate passed along a convergecast tree.
struct Aggregate {
  std::int64_t a = 0;
  std::int64_t b = 0;
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct ConsensusFlags {
  bool locally_sensitive = false;
  bool extractive = false;
  bool hierarchical = false;
};

/// lift/combine/finalize decomposition of a hierarchically computable function.
struct Hierarchy {
  std::function<Aggregate(NodeId, Value)> lift;
  std::function<Aggregate(const Aggregate&, const Aggregate&)> combine;
  std::function<Value(const Aggregate&)> finalize;
  std::function<std::uint64_t(std::size_t)> aggregate_bits;
};

struct ConsensusSpec {
  std::string name;
  Codomain codomain = Codomain::value;
  ConsensusFlags flags;
  unsigned value_bits = 32;
  unsigned precision = 0;
  std::function<Value(std::span<const Value>)> evaluate;
  std::optional<Hierarchy> hierarchy;

  /// Bits needed to carry one decision value in a network of n nodes.
  std::uint64_t result_bits(std::size_t n) const {
    switch (codomain) {
      case Codomain::value: return value_bits;
      case Codomain::fixed_point: return value_bits + precision;
      case Codomain::uid: return ceil_log2(n);
      case Codomain::boolean: return 1;
    }
    return value_bits;
  }

  std::uint64_t aggregate_bits(std::size_t n) const {
    return hierarchy ? hierarchy->aggregate_bits(n) : 0;
  }
};

struct BuiltinParams {
  unsigned value_bits = 32;
  unsigned precision = 16;
  /// Weight vector c for weighted-average; empty means c = (1/n) * 1.
  std::vector<double> weights;
};

inline void check_inputs(const ConsensusSpec& spec, std::span<const Value> x) {
  if (x.empty()) throw Error(ErrorKind::invalid_size, "need at least one initial value");
  const Value limit = spec.value_bits >= 63 ? std::numeric_limits<Value>::max()
                                            : (Value{1} << spec.value_bits);
  for (Value v : x)
    if (v < 0 || v >= limit)
      throw Error(ErrorKind::invalid_parameter,
                  "initial value " + std::to_string(v) + " not representable in " +
                      std::to_string(spec.value_bits) + " bits");
}

namespace detail {

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

/// floor((sum << p) / count) without overflow for sum < 2^62, p <= 62.
inline Value fixed_mean(std::int64_t sum, std::int64_t count, unsigned p) {
  __int128 num = static_cast<__int128>(sum) << p;
  __int128 q = num / count;
  if ((num % count != 0) && ((num < 0) != (count < 0))) --q;
  return static_cast<Value>(q);
}

inline std::vector<std::int64_t> quantize_weights(const std::vector<double>& c, unsigned p) {
  std::vector<std::int64_t> q(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) q[i] = std::llround(std::ldexp(c[i], static_cast<int>(p)));
  return q;
}

inline Aggregate add(const Aggregate& x, const Aggregate& y) { return {x.a + y.a, x.b + y.b}; }

}  // namespace detail

/// Built-in consensus functions: max, min, leader, weighted-average,
/// quadratic-argmin, majority. Names are case-insensitive.
inline ConsensusSpec builtin(const std::string& raw_name, const BuiltinParams& params = {}) {
  const std::string name = detail::lowercase(raw_name);
  const unsigned b = params.value_bits;
  const unsigned p = params.precision;
  if (b == 0 || b > 62) throw Error(ErrorKind::invalid_parameter, "value_bits must be in 1..62");

  ConsensusSpec spec;
  spec.name = name;
  spec.value_bits = b;

  if (name == "max" || name == "min") {
    const bool is_max = name == "max";
    spec.codomain = Codomain::value;
    spec.flags = {false, true, true};
    spec.evaluate = [is_max](std::span<const Value> x) {
      return is_max ? *std::max_element(x.begin(), x.end()) : *std::min_element(x.begin(), x.end());
    };
    spec.hierarchy = Hierarchy{
        [](NodeId, Value v) { return Aggregate{v, 0}; },
        [is_max](const Aggregate& l, const Aggregate& r) {
          return Aggregate{is_max ? std::max(l.a, r.a) : std::min(l.a, r.a), 0};
        },
        [](const Aggregate& g) { return g.a; },
        [b](std::size_t) { return std::uint64_t{b}; }};
    return spec;
  }

  if (name == "leader") {
    // Elects the node holding the largest value; ties go to the larger UID.
    spec.codomain = Codomain::uid;
    spec.flags = {false, true, true};
    spec.evaluate = [](std::span<const Value> x) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] >= x[best]) best = i;
      return static_cast<Value>(best + 1);
    };
    spec.hierarchy = Hierarchy{
        [](NodeId id, Value v) { return Aggregate{v, static_cast<std::int64_t>(id)}; },
        [](const Aggregate& l, const Aggregate& r) {
          return std::tie(l.a, l.b) >= std::tie(r.a, r.b) ? l : r;
        },
        [](const Aggregate& g) { return g.b; },
        [b](std::size_t n) { return std::uint64_t{b} + ceil_log2(n); }};
    return spec;
  }

  if (name == "weighted-average" || name == "average" || name == "quadratic-argmin") {
    if (b + p > 62) throw Error(ErrorKind::invalid_parameter, "value_bits + precision must be <= 62");
    spec.codomain = Codomain::fixed_point;
    spec.precision = p;
    spec.flags = {true, false, true};
    const bool explicit_weights = name != "quadratic-argmin" && !params.weights.empty();
    if (name == "average") spec.name = "weighted-average";
    if (!explicit_weights) {
      // argmin_z sum (z - x_i)^2 is the mean, so both share the (sum, count) form.
      spec.evaluate = [p](std::span<const Value> x) {
        std::int64_t sum = 0;
        for (Value v : x) sum += v;
        return detail::fixed_mean(sum, static_cast<std::int64_t>(x.size()), p);
      };
      spec.hierarchy = Hierarchy{[](NodeId, Value v) { return Aggregate{v, 1}; }, detail::add,
                                 [p](const Aggregate& g) { return detail::fixed_mean(g.a, g.b, p); },
                                 [b](std::size_t n) { return 2 * (std::uint64_t{b} + ceil_log2(n)); }};
    } else {
      auto q = detail::quantize_weights(params.weights, p);
      spec.evaluate = [q](std::span<const Value> x) {
        if (x.size() != q.size())
          throw Error(ErrorKind::length_mismatch, "weight vector has " + std::to_string(q.size()) +
                                                      " entries, input has " + std::to_string(x.size()));
        __int128 acc = 0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<__int128>(q[i]) * x[i];
        return static_cast<Value>(acc);
      };
      spec.hierarchy = Hierarchy{
          [q](NodeId id, Value v) {
            if (id < 1 || id > q.size()) throw Error(ErrorKind::length_mismatch, "node id outside weight vector");
            return Aggregate{q[id - 1] * v, 1};
          },
          detail::add, [](const Aggregate& g) { return g.a; },
          [b, p](std::size_t n) { return 2 * (std::uint64_t{b} + ceil_log2(n)) + p; }};
    }
    return spec;
  }

  if (name == "majority") {
    spec.codomain = Codomain::boolean;
    spec.value_bits = 1;
    spec.flags = {false, false, true};
    spec.evaluate = [](std::span<const Value> x) {
      std::int64_t ones = 0;
      for (Value v : x) ones += v;
      return static_cast<Value>(2 * ones > static_cast<std::int64_t>(x.size()) ? 1 : 0);
    };
    spec.hierarchy = Hierarchy{[](NodeId, Value v) { return Aggregate{v, 1}; }, detail::add,
                               [](const Aggregate& g) { return static_cast<Value>(2 * g.a > g.b ? 1 : 0); },
                               [](std::size_t n) { return 2 * std::uint64_t{ceil_log2(n + 1)}; }};
    return spec;
  }

  throw Error(ErrorKind::unknown_name, "unknown consensus function '" + raw_name + "'");
}

inline Value evaluate(const ConsensusSpec& spec, std::span<const Value> x) {
  check_inputs(spec, x);
  return spec.evaluate(x);
}

/// Folds lifted values in the given visiting order (a permutation of 0..n-1).
inline Value fold(const ConsensusSpec& spec, std::span<const Value> x, std::span<const std::size_t> order) {
  if (!spec.hierarchy || !spec.flags.hierarchical)
    throw Error(ErrorKind::unsupported, "'" + spec.name + "' is not hierarchically computable");
  check_inputs(spec, x);
  if (order.size() != x.size()) throw Error(ErrorKind::length_mismatch, "order is not a permutation of the inputs");
  std::vector<char> seen(x.size(), 0);
  for (auto i : order) {
    if (i >= x.size() || seen[i]) throw Error(ErrorKind::precondition, "order is not a permutation");
    seen[i] = 1;
  }
  const auto& h = *spec.hierarchy;
  Aggregate acc = h.lift(static_cast<NodeId>(order[0] + 1), x[order[0]]);
  for (std::size_t k = 1; k < order.size(); ++k)
    acc = h.combine(acc, h.lift(static_cast<NodeId>(order[k] + 1), x[order[k]]));
  return h.finalize(acc);
}

inline Value fold(const ConsensusSpec& spec, std::span<const Value> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return fold(spec, x, order);
}

/// Index j (0-based) whose single-value projection equals `y`, if any.
inline std::optional<std::size_t> extractive_witness(const ConsensusSpec& spec, std::span<const Value> x, Value y) {
  if (!spec.hierarchy) {
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] == y) return j;
    return std::nullopt;
  }
  const auto& h = *spec.hierarchy;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (h.finalize(h.lift(static_cast<NodeId>(j + 1), x[j])) == y) return j;
  return std::nullopt;
}

/// Probe: for every coordinate i there is some base point on `grid` and two
/// grid values at i giving different outputs.
inline bool depends_on_all_arguments(const ConsensusSpec& spec, std::size_t n, std::span<const Value> grid) {
  std::vector<Value> x(n);
  const std::size_t g = grid.size();
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) total *= g;
  for (std::size_t i = 0; i < n; ++i) {
    bool witnessed = false;
    for (std::size_t code = 0; code < total && !witnessed; ++code) {
      std::size_t c = code;
      for (std::size_t k = 0; k < n; ++k, c /= g) x[k] = grid[c % g];
      const Value base = spec.evaluate(x);
      for (Value alt : grid) {
        auto y = x;
        y[i] = alt;
        if (spec.evaluate(y) != base) {
          witnessed = true;
          break;
        }
      }
    }
    if (!witnessed) return false;
  }
  return true;
}

}  // namespace consim
