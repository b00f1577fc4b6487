#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "consim/consensus.hpp"
#include "consim/error.hpp"

namespace consim {

/// Field counts of one message payload; priced by SizingModel.
struct PayloadCounts {
  std::uint64_t uids = 0;
  std::uint64_t values = 0;        // b bits each
  std::uint64_t fixed_values = 0;  // b + p bits each
  std::uint64_t levels = 0;
  std::uint64_t weights = 0;       // fragment ids / edge weights
  std::uint64_t aggregates = 0;
  std::uint64_t flags = 0;
  std::uint64_t extra_bits = 0;
};

/// What a protocol reports about a message so the metering model can price
/// it. `kind` and `phase` must point at storage with static duration.
struct MessageShape {
  std::string_view kind;
  std::string_view phase;
  PayloadCounts counts;
};

class SizingModel;
using PayloadFormula = std::function<std::uint64_t(const PayloadCounts&, const SizingModel&)>;

/// Bit-level message pricing for a network of n nodes.
///
/// uid = ceil(log2 n); level = ceil(log2(log2 n + 1)); weight = 2 * uid.
/// Directional headers carry sender and receiver, broadcast headers only the
/// sender.
class SizingModel {
 public:
  SizingModel(std::size_t n, unsigned value_bits, unsigned precision_bits = 0, std::uint64_t aggregate_bits = 0)
      : n_(n),
        uid_bits_(ceil_log2(n)),
        value_bits_(value_bits),
        precision_bits_(precision_bits),
        level_bits_(n <= 1 ? 0 : static_cast<unsigned>(std::ceil(std::log2(std::log2(static_cast<double>(n)) + 1.0) - 1e-12))),
        aggregate_bits_(aggregate_bits) {}

  static SizingModel for_spec(std::size_t n, const ConsensusSpec& spec) {
    return SizingModel(n, spec.value_bits, spec.precision, spec.aggregate_bits(n));
  }

  std::size_t n() const { return n_; }
  unsigned uid_bits() const { return uid_bits_; }
  unsigned value_bits() const { return value_bits_; }
  unsigned precision_bits() const { return precision_bits_; }
  unsigned level_bits() const { return level_bits_; }
  unsigned weight_bits() const { return 2 * uid_bits_; }
  std::uint64_t aggregate_bits() const { return aggregate_bits_; }
  std::uint64_t header_bits(bool broadcast) const { return broadcast ? uid_bits_ : 2ull * uid_bits_; }

  /// Sum of field widths; the default per-kind formula.
  std::uint64_t linear_payload(const PayloadCounts& c) const {
    return c.uids * uid_bits_ + c.values * value_bits_ + c.fixed_values * (value_bits_ + precision_bits_) +
           c.levels * level_bits_ + c.weights * weight_bits() + c.aggregates * aggregate_bits_ + c.flags +
           c.extra_bits;
  }

  void register_kind(std::string_view kind, PayloadFormula formula = {}) {
    formulas_[std::string(kind)] = std::move(formula);
  }

  bool registered(std::string_view kind) const { return formulas_.find(kind) != formulas_.end(); }

  std::uint64_t payload_bits(const MessageShape& shape) const {
    auto it = formulas_.find(shape.kind);
    if (it == formulas_.end())
      throw Error(ErrorKind::unregistered_kind, "message kind '" + std::string(shape.kind) + "' has no size formula");
    return it->second ? it->second(shape.counts, *this) : linear_payload(shape.counts);
  }

 private:
  std::size_t n_;
  unsigned uid_bits_;
  unsigned value_bits_;
  unsigned precision_bits_;
  unsigned level_bits_;
  std::uint64_t aggregate_bits_;
  std::map<std::string, PayloadFormula, std::less<>> formulas_;
};

/// Header plus payload, in bits.
inline std::uint64_t size_of(const MessageShape& shape, bool broadcast, const SizingModel& model) {
  return model.header_bits(broadcast) + model.payload_bits(shape);
}

inline std::uint64_t bytes_of(std::uint64_t bits) { return (bits + 7) / 8; }

}  // namespace consim
