#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/report.hpp"
#include "consim/sizing.hpp"

namespace consim {

/// Role of a recorded field. `value` and `fixed` fields hold quantities derived
/// from initial values and are the only ones rewritten by order substitution.
enum class FieldKind : std::uint8_t { uid, value, fixed, integer, level, real, flag };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::uid: return "uid";
    case FieldKind::value: return "value";
    case FieldKind::fixed: return "fixed";
    case FieldKind::integer: return "int";
    case FieldKind::level: return "level";
    case FieldKind::real: return "real";
    case FieldKind::flag: return "flag";
  }
  return "?";
}

inline FieldKind field_kind_for(Codomain c) {
  switch (c) {
    case Codomain::value: return FieldKind::value;
    case Codomain::fixed_point: return FieldKind::fixed;
    case Codomain::uid: return FieldKind::uid;
    case Codomain::boolean: return FieldKind::flag;
  }
  return FieldKind::integer;
}

struct Field {
  std::string_view name;
  FieldKind kind = FieldKind::integer;
  std::int64_t i = 0;
  double r = 0.0;

  static Field uid(std::string_view name, std::int64_t v) { return {name, FieldKind::uid, v, 0.0}; }
  static Field value(std::string_view name, std::int64_t v) { return {name, FieldKind::value, v, 0.0}; }
  static Field fixed(std::string_view name, std::int64_t v) { return {name, FieldKind::fixed, v, 0.0}; }
  static Field integer(std::string_view name, std::int64_t v) { return {name, FieldKind::integer, v, 0.0}; }
  static Field level(std::string_view name, std::int64_t v) { return {name, FieldKind::level, v, 0.0}; }
  static Field flag(std::string_view name, bool v) { return {name, FieldKind::flag, v ? 1 : 0, 0.0}; }
  static Field real(std::string_view name, double v) { return {name, FieldKind::real, 0, v}; }

  friend bool operator==(const Field& a, const Field& b) {
    return a.name == b.name && a.kind == b.kind && a.i == b.i && std::memcmp(&a.r, &b.r, sizeof(double)) == 0;
  }
};

using Record = std::vector<Field>;

/// FNV-1a over the record's contents.
inline std::uint64_t digest(const Record& record) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= bytes[k];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : record) {
    mix(f.name.data(), f.name.size());
    mix(&f.kind, sizeof f.kind);
    mix(&f.i, sizeof f.i);
    mix(&f.r, sizeof f.r);
  }
  return h;
}

/// Receiver id 0 marks a local broadcast.
inline constexpr NodeId broadcast_receiver = 0;

struct MessageRecord {
  std::uint64_t id = 0;
  NodeId sender = 0;
  NodeId receiver = broadcast_receiver;
  MessageShape shape;
  std::uint64_t size_bits = 0;
  double sent_at = 0.0;
  std::uint32_t recipients = 0;
  Record payload;  // full detail only

  bool broadcast() const { return receiver == broadcast_receiver; }
};

enum class EventKind : std::uint8_t { init, receive, timer, send, decide };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::init: return "init";
    case EventKind::receive: return "receive";
    case EventKind::timer: return "timer";
    case EventKind::send: return "send";
    case EventKind::decide: return "decide";
  }
  return "?";
}

struct TraceEvent {
  double time = 0.0;
  NodeId node = 0;
  EventKind kind = EventKind::init;
  std::int64_t message = -1;  // index into ExecutionTrace::messages
  double enabled_at = 0.0;    // transitions: when the transition became enabled
  double delivered_at = 0.0;  // receive: arrival time at the receiver
  std::uint64_t pre_digest = 0;
  std::uint64_t post_digest = 0;
  std::uint64_t state_bits = 0;
  std::int64_t decision = 0;  // decide events
  Record state;               // post-state, full detail only
};

struct DecisionRecord {
  NodeId node = 0;
  Value value = 0;
  double time = 0.0;
  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

enum class TraceDetail {
  none,     // decisions and counters only
  summary,  // + event log and message headers
  full,     // + payload fields and post-state records
};

struct ExecutionTrace {
  std::string protocol;
  std::size_t n = 0;
  double time_unit = 2.0;
  TraceDetail detail = TraceDetail::summary;
  FieldKind decision_kind = FieldKind::value;
  std::vector<Value> inputs;
  std::vector<TraceEvent> events;
  std::vector<MessageRecord> messages;
  std::vector<std::optional<DecisionRecord>> decisions;  // indexed by node id - 1
  double completion_time = 0.0;
  double quiescence_time = 0.0;
  bool completed = false;
  bool quiesced = false;
  std::vector<std::uint64_t> peak_state_bits;  // indexed by node id - 1
  std::vector<Record> final_states;            // summary and full detail
  ComplexityReport report;

  bool all_decided() const {
    for (const auto& d : decisions)
      if (!d) return false;
    return !decisions.empty();
  }
};

}  // namespace consim
