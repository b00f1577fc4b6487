#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "consim/sizing.hpp"

namespace consim {

struct TrafficCounts {
  std::uint64_t messages = 0;    // directional messages
  std::uint64_t broadcasts = 0;  // local broadcasts
  std::uint64_t bits = 0;
  std::uint64_t bytes = 0;       // sum of per-message ceil(bits / 8)

  friend bool operator==(const TrafficCounts&, const TrafficCounts&) = default;
};

/// Complexity counters of one run. Time is in units of (l + d); sizes are
/// in bytes, rounded up per message.
struct ComplexityReport {
  double tc = 0.0;
  double completion_time = 0.0;
  std::uint64_t mc = 0;
  std::uint64_t bc = 0;
  std::uint64_t bmc = 0;
  std::uint64_t bbc = 0;
  std::uint64_t storage = 0;
  std::uint64_t directional_bits = 0;
  std::uint64_t broadcast_bits = 0;
  std::uint64_t peak_state_bits = 0;
  std::map<std::string, TrafficCounts, std::less<>> phases;
  std::map<std::string, TrafficCounts, std::less<>> kinds;
  bool partial = false;

  std::uint64_t phase_total(std::string_view phase) const {
    auto it = phases.find(phase);
    return it == phases.end() ? 0 : it->second.messages + it->second.broadcasts;
  }
  std::uint64_t kind_total(std::string_view kind) const {
    auto it = kinds.find(kind);
    return it == kinds.end() ? 0 : it->second.messages + it->second.broadcasts;
  }

  friend bool operator==(const ComplexityReport&, const ComplexityReport&) = default;
};

/// Accumulates counters as messages are sent and states change.
class Meter {
 public:
  void on_send(const MessageShape& shape, std::uint64_t bits, bool broadcast) {
    const std::uint64_t bytes = bytes_of(bits);
    auto bump = [&](TrafficCounts& t) {
      (broadcast ? t.broadcasts : t.messages) += 1;
      t.bits += bits;
      t.bytes += bytes;
    };
    if (broadcast) {
      ++report_.bmc;
      report_.bbc += bytes;
      report_.broadcast_bits += bits;
    } else {
      ++report_.mc;
      report_.bc += bytes;
      report_.directional_bits += bits;
    }
    bump(phase_slot(shape.phase));
    bump(kind_slot(shape.kind));
  }

  void on_state(std::uint64_t state_bits) { report_.peak_state_bits = std::max(report_.peak_state_bits, state_bits); }

  ComplexityReport finish(double completion_time, double time_unit, bool complete) const {
    ComplexityReport r = report_;
    r.completion_time = completion_time;
    r.tc = completion_time / time_unit;
    r.storage = bytes_of(r.peak_state_bits);
    r.partial = !complete;
    return r;
  }

 private:
  TrafficCounts& phase_slot(std::string_view phase) {
    auto it = report_.phases.find(phase);
    if (it == report_.phases.end()) it = report_.phases.emplace(std::string(phase), TrafficCounts{}).first;
    return it->second;
  }
  TrafficCounts& kind_slot(std::string_view kind) {
    auto it = report_.kinds.find(kind);
    if (it == report_.kinds.end()) it = report_.kinds.emplace(std::string(kind), TrafficCounts{}).first;
    return it->second;
  }

  ComplexityReport report_;
};

}  // namespace consim
