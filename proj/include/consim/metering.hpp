#pragma once

#include <algorithm>
#include <cstdint>

#include "consim/error.hpp"
#include "consim/report.hpp"
#include "consim/runtime.hpp"
#include "consim/sizing.hpp"
#include "consim/trace.hpp"

namespace consim {

/// Recomputes the counters of a recorded run from its message log: every
/// message sent up to the last decision, priced by `model`. Needs a trace
/// recorded with at least summary detail.
inline ComplexityReport account(const ExecutionTrace& trace, const SizingModel& model) {
  if (trace.detail == TraceDetail::none)
    throw Error(ErrorKind::precondition, "trace was recorded without a message log");
  Meter meter;
  for (const auto& m : trace.messages) {
    if (trace.completed && m.sent_at > trace.completion_time) continue;
    meter.on_send(m.shape, size_of(m.shape, m.broadcast(), model), m.broadcast());
  }
  for (const auto& e : trace.events)
    if (e.kind != EventKind::send && e.kind != EventKind::decide) meter.on_state(e.state_bits);
  return meter.finish(trace.completion_time, trace.time_unit, trace.completed);
}

template <Protocol P>
ComplexityReport account(const ExecutionTrace& trace, const P& protocol) {
  return account(trace, protocol.sizing(trace.n));
}

template <Protocol P>
std::uint64_t storage_of(const P& protocol, const typename P::State& state, const SizingModel& model) {
  return protocol.state_bits(state, model);
}

}  // namespace consim
