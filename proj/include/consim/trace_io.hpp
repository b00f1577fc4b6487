#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "consim/trace.hpp"

namespace consim {

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const Record& r) {
  ojson out = ojson::array();
  for (const auto& f : r) {
    ojson j;
    j["name"] = std::string(f.name);
    j["kind"] = to_string(f.kind);
    if (f.kind == FieldKind::real) {
      j["value"] = f.r;
    } else {
      j["value"] = f.i;
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline ojson to_json(const ComplexityReport& r) {
  ojson j;
  j["tc"] = r.tc;
  j["mc"] = r.mc;
  j["bc"] = r.bc;
  j["bmc"] = r.bmc;
  j["bbc"] = r.bbc;
  j["storage"] = r.storage;
  j["partial"] = r.partial;
  ojson phases = ojson::object();
  for (const auto& [name, t] : r.phases) phases[name] = {{"messages", t.messages}, {"broadcasts", t.broadcasts}, {"bits", t.bits}};
  j["phases"] = std::move(phases);
  return j;
}

}  // namespace detail

/// One JSON object per line: a header, the events (unless digest_only), the
/// decisions and the counters. Field order is fixed.
inline void write_trace_jsonl(std::ostream& os, const ExecutionTrace& t, bool digest_only = false) {
  using detail::ojson;
  ojson head;
  head["record"] = "header";
  head["protocol"] = t.protocol;
  head["n"] = t.n;
  head["time_unit"] = t.time_unit;
  head["completed"] = t.completed;
  head["completion_time"] = t.completion_time;
  os << head.dump() << '\n';
  if (!digest_only) {
    for (const auto& e : t.events) {
      ojson j;
      j["record"] = "event";
      j["time"] = e.time;
      j["node"] = e.node;
      j["kind"] = to_string(e.kind);
      if (e.message >= 0) {
        const auto& m = t.messages[static_cast<std::size_t>(e.message)];
        j["message"] = m.id;
        j["msg_kind"] = std::string(m.shape.kind);
        j["sender"] = m.sender;
        j["receiver"] = m.receiver;
        j["size_bits"] = m.size_bits;
        if (e.kind == EventKind::send && !m.payload.empty()) j["payload"] = detail::to_json(m.payload);
      }
      if (e.kind == EventKind::receive) j["delivered_at"] = e.delivered_at;
      if (e.kind == EventKind::decide) j["decision"] = e.decision;
      if (e.kind != EventKind::send && e.kind != EventKind::decide) {
        j["enabled_at"] = e.enabled_at;
        j["state_bits"] = e.state_bits;
        if (t.detail == TraceDetail::full) {
          j["pre"] = detail::hex(e.pre_digest);
          j["post"] = detail::hex(e.post_digest);
        }
      }
      os << j.dump() << '\n';
    }
  }
  for (const auto& d : t.decisions) {
    if (!d) continue;
    ojson j;
    j["record"] = "decision";
    j["node"] = d->node;
    j["value"] = d->value;
    j["time"] = d->time;
    os << j.dump() << '\n';
  }
  ojson c = detail::to_json(t.report);
  c["record"] = "counters";
  os << c.dump() << '\n';
}

inline std::string trace_jsonl(const ExecutionTrace& t, bool digest_only = false) {
  std::ostringstream os;
  write_trace_jsonl(os, t, digest_only);
  return os.str();
}

}  // namespace consim
