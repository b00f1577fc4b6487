#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/error.hpp"
#include "consim/trace.hpp"

namespace consim {

/// a_i < a_j exactly when b_i < b_j, for all i, j.
inline bool order_equivalent(std::span<const Value> a, std::span<const Value> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::length_mismatch, "vectors differ in length");
  std::vector<std::size_t> idx(a.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a[i] < a[j] || (a[i] == a[j] && i < j); });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const std::size_t p = idx[k - 1], q = idx[k];
    if ((a[p] < a[q]) != (b[p] < b[q]) || (a[p] == a[q]) != (b[p] == b[q])) return false;
  }
  return true;
}

/// Dense ranks (0 = smallest), equal values sharing a rank.
inline std::vector<std::uint32_t> rank_pattern(std::span<const Value> v) {
  std::vector<Value> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::uint32_t> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    r[i] = static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), v[i]) - sorted.begin());
  return r;
}

/// Position i holds the k-bit reversal of i.
inline std::vector<Value> bit_reversal_ring(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) throw Error(ErrorKind::invalid_size, "ring size must be a power of two");
  const unsigned k = ceil_log2(n);
  std::vector<Value> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (unsigned b = 0; b < k; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (k - 1 - b);
    out[i] = static_cast<Value>(r);
  }
  return out;
}

/// Clockwise segment of `length` values starting at `start`, wrapping.
inline std::vector<Value> segment(std::span<const Value> ring, std::size_t start, std::size_t length) {
  std::vector<Value> out(length);
  for (std::size_t k = 0; k < length; ++k) out[k] = ring[(start + k) % ring.size()];
  return out;
}

/// Smallest l with l * l >= n.
inline std::size_t ceil_sqrt(std::size_t n) {
  std::size_t l = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (l * l < n) ++l;
  while (l > 0 && (l - 1) * (l - 1) >= n) --l;
  return l;
}

struct LengthStats {
  std::size_t length = 0;
  std::size_t classes = 0;
  std::size_t min_multiplicity = 0;
  std::size_t required = 0;
  std::vector<std::size_t> multiplicity;  // per segment start
};

struct SymmetryRefutation {
  std::size_t length = 0;
  std::size_t start = 0;
  std::vector<Value> values;
  std::size_t multiplicity = 0;
  std::size_t required = 0;
};

struct SymmetryCheck {
  double c = 0.0;
  bool certified = false;
  std::vector<LengthStats> lengths;  // certificate, complete when certified
  std::optional<SymmetryRefutation> refutation;
};

/// floor(c * n / l), tolerant of c given as a rounded decimal.
inline std::size_t required_multiplicity(double c, std::size_t n, std::size_t l) {
  return static_cast<std::size_t>(std::floor(c * static_cast<double>(n) / static_cast<double>(l) + 1e-9));
}

/// Exhaustive check: for every l in [ceil(sqrt n), n], every length-l segment
/// has at least floor(c n / l) order-equivalent segments, itself included.
inline SymmetryCheck is_c_symmetric(std::span<const Value> ring, double c) {
  const std::size_t n = ring.size();
  if (n < 4) throw Error(ErrorKind::invalid_size, "ring needs at least 4 nodes");
  if (!(c > 0.0)) throw Error(ErrorKind::invalid_parameter, "c must be positive");
  SymmetryCheck out;
  out.c = c;
  for (std::size_t l = ceil_sqrt(n); l <= n; ++l) {
    std::map<std::vector<std::uint32_t>, std::size_t> classes;
    std::vector<std::vector<std::uint32_t>> patterns(n);
    for (std::size_t s = 0; s < n; ++s) {
      patterns[s] = rank_pattern(segment(ring, s, l));
      ++classes[patterns[s]];
    }
    LengthStats st;
    st.length = l;
    st.classes = classes.size();
    st.required = required_multiplicity(c, n, l);
    st.min_multiplicity = n;
    st.multiplicity.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      st.multiplicity[s] = classes[patterns[s]];
      st.min_multiplicity = std::min(st.min_multiplicity, st.multiplicity[s]);
      if (!out.refutation && st.multiplicity[s] < st.required)
        out.refutation = SymmetryRefutation{l, s, segment(ring, s, l), st.multiplicity[s], st.required};
    }
    out.lengths.push_back(std::move(st));
    if (out.refutation) return out;
  }
  out.certified = true;
  return out;
}

struct TraceComparison {
  bool equivalent = false;
  std::string divergence;  // first point of disagreement, empty when equivalent
  std::int64_t event = -1;
};

namespace detail {

struct Substitution {
  std::map<Value, Value> map;

  Value apply(Value v) const {
    auto it = map.find(v);
    return it == map.end() ? v : it->second;
  }

  bool field_matches(const Field& a, const Field& b) const {
    if (a.name != b.name || a.kind != b.kind) return false;
    if (a.kind == FieldKind::value) return apply(a.i) == b.i;
    return a == b;
  }

  std::optional<std::string> records_match(const Record& a, const Record& b) const {
    if (a.size() != b.size())
      return "record length " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!field_matches(a[k], b[k])) {
        std::ostringstream os;
        os << "field '" << a[k].name << "' (" << to_string(a[k].kind) << ") ";
        if (a[k].kind == FieldKind::real) {
          os << a[k].r << " vs " << b[k].r;
        } else {
          os << a[k].i << " vs " << b[k].i;
        }
        return os.str();
      }
    }
    return std::nullopt;
  }
};

}  // namespace detail

/// Whether t2 is t1 with every initial value replaced by the value of equal
/// rank in t2's input. Value-typed fields are substituted; everything else,
/// including fixed-point quantities, must match exactly. Both traces need
/// full detail.
inline TraceComparison traces_order_equivalent(const ExecutionTrace& t1, const ExecutionTrace& t2) {
  TraceComparison out;
  auto fail = [&out](std::string why, std::int64_t event = -1) {
    out.divergence = std::move(why);
    out.event = event;
    return out;
  };
  if (t1.detail != TraceDetail::full || t2.detail != TraceDetail::full)
    return fail("traces were not recorded with full detail");
  if (t1.protocol != t2.protocol || t1.n != t2.n) return fail("different protocol or network size");
  if (t1.inputs.size() != t2.inputs.size() || !order_equivalent(t1.inputs, t2.inputs))
    return fail("initial values are not order-equivalent");

  detail::Substitution sub;
  for (std::size_t i = 0; i < t1.inputs.size(); ++i) sub.map[t1.inputs[i]] = t2.inputs[i];

  if (t1.events.size() != t2.events.size())
    return fail("event counts differ: " + std::to_string(t1.events.size()) + " vs " +
                std::to_string(t2.events.size()));
  for (std::size_t k = 0; k < t1.events.size(); ++k) {
    const auto& a = t1.events[k];
    const auto& b = t2.events[k];
    const auto ev = static_cast<std::int64_t>(k);
    std::ostringstream where;
    where << "event " << k << " (node " << a.node << ", " << to_string(a.kind) << " at t=" << a.time << "): ";
    if (a.time != b.time || a.node != b.node || a.kind != b.kind || a.message != b.message)
      return fail(where.str() + "schedule differs", ev);
    if (auto why = sub.records_match(a.state, b.state)) return fail(where.str() + "state " + *why, ev);
    if (a.kind == EventKind::decide) {
      const bool substitutable = t1.decision_kind == FieldKind::value;
      if ((substitutable ? sub.apply(a.decision) : a.decision) != b.decision)
        return fail(where.str() + "decision " + std::to_string(a.decision) + " vs " + std::to_string(b.decision), ev);
    }
    if (a.kind == EventKind::send && a.message >= 0) {
      const auto& ma = t1.messages[static_cast<std::size_t>(a.message)];
      const auto& mb = t2.messages[static_cast<std::size_t>(b.message)];
      if (ma.receiver != mb.receiver || ma.shape.kind != mb.shape.kind || ma.size_bits != mb.size_bits)
        return fail(where.str() + "message header differs", ev);
      if (auto why = sub.records_match(ma.payload, mb.payload)) return fail(where.str() + "payload " + *why, ev);
    }
  }
  out.equivalent = true;
  return out;
}

}  // namespace consim
