#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "consim/bench/config.hpp"
#include "consim/graph.hpp"
#include "consim/protocols/averaging.hpp"
#include "consim/protocols/flooding.hpp"
#include "consim/protocols/ghs.hpp"
#include "consim/runtime.hpp"

namespace consim::bench {

/// One run of one sweep cell.
struct Row {
  std::string protocol;
  std::string spec;
  std::string family;
  std::size_t n = 0;
  std::size_t edges = 0;
  std::string density;
  std::uint64_t seed = 0;
  std::string policy;
  std::size_t window = 0;
  double epsilon = 0.0;
  bool completed = false;
  bool correct = false;
  double tc = 0.0;
  std::uint64_t mc = 0;
  std::uint64_t bc = 0;
  std::uint64_t bmc = 0;
  std::uint64_t bbc = 0;
  std::uint64_t storage = 0;
  std::size_t rounds = 0;
  double max_error = 0.0;
  std::uint64_t announce = 0;
  std::uint64_t request = 0;
  std::uint64_t convergecast = 0;
  std::uint64_t result = 0;
  int max_level = 0;

  friend bool operator==(const Row&, const Row&) = default;
};

inline const char* row_header() {
  return "protocol,spec,family,n,edges,density,seed,policy,window,epsilon,completed,correct,tc,mc,bc,bmc,bbc,"
         "storage,rounds,max_error,announce,request,convergecast,result,max_level";
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline std::string to_csv(const Row& r) {
  std::ostringstream os;
  os << r.protocol << ',' << r.spec << ',' << r.family << ',' << r.n << ',' << r.edges << ',' << r.density << ','
     << r.seed << ',' << r.policy << ',' << r.window << ',' << detail::fmt_double(r.epsilon) << ','
     << (r.completed ? 1 : 0) << ',' << (r.correct ? 1 : 0) << ',' << detail::fmt_double(r.tc) << ',' << r.mc << ','
     << r.bc << ',' << r.bmc << ',' << r.bbc << ',' << r.storage << ',' << r.rounds << ','
     << detail::fmt_double(r.max_error) << ',' << r.announce << ',' << r.request << ',' << r.convergecast << ','
     << r.result << ',' << r.max_level;
  return os.str();
}

inline Row row_from_csv(const std::string& line) {
  std::vector<std::string> f;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, ',')) f.push_back(item);
  if (f.size() != 25) throw Error(ErrorKind::io, "malformed row: " + line);
  Row r;
  std::size_t k = 0;
  auto u = [&]() { return static_cast<std::uint64_t>(std::stoull(f[k++])); };
  auto d = [&]() { return std::stod(f[k++]); };
  r.protocol = f[k++];
  r.spec = f[k++];
  r.family = f[k++];
  r.n = u();
  r.edges = u();
  r.density = f[k++];
  r.seed = u();
  r.policy = f[k++];
  r.window = u();
  r.epsilon = d();
  r.completed = u() != 0;
  r.correct = u() != 0;
  r.tc = d();
  r.mc = u();
  r.bc = u();
  r.bmc = u();
  r.bbc = u();
  r.storage = u();
  r.rounds = u();
  r.max_error = d();
  r.announce = u();
  r.request = u();
  r.convergecast = u();
  r.result = u();
  r.max_level = static_cast<int>(std::stoi(f[k++]));
  return r;
}

inline std::vector<Row> read_rows(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == row_header()) continue;
    }
    rows.push_back(row_from_csv(line));
  }
  return rows;
}

inline std::vector<Row> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read rows " + path.string());
  return read_rows(in);
}

inline void write_rows(std::ostream& os, const std::vector<Row>& rows) {
  os << row_header() << '\n';
  for (const auto& r : rows) os << to_csv(r) << '\n';
}

/// Deterministic initial values of one cell.
inline std::vector<Value> make_inputs(const ExperimentConfig& c, std::size_t n, std::uint64_t seed) {
  std::vector<Value> x(n);
  const unsigned b = builtin(c.spec, {c.value_bits, c.precision, c.spec_weights}).value_bits;
  const Value top = b >= 62 ? std::numeric_limits<Value>::max() : (Value{1} << b) - 1;
  if (c.inputs == "constant") {
    std::fill(x.begin(), x.end(), top / 2);
  } else if (c.inputs == "ramp") {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<Value>(i) % (top + 1);
  } else {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + n);
    std::uniform_int_distribution<Value> dist(0, top);
    for (auto& v : x) v = dist(rng);
  }
  return x;
}

/// Static graph of one cell (static families only).
inline StaticGraph make_graph(const ExperimentConfig& c, std::size_t n, std::uint64_t seed) {
  std::optional<StaticGraph> g;
  if (c.family == "line") g = make_line(n);
  else if (c.family == "ring") g = make_ring(n);
  else if (c.family == "complete") g = make_complete(n);
  else if (c.family == "random") {
    const std::size_t max_edges = n * (n - 1) / 2;
    auto target = static_cast<std::size_t>(std::llround(c.edge_factor * static_cast<double>(n)));
    target = std::clamp(target, n - 1, max_edges);
    g = make_random_connected(n, target, seed);
  } else if (c.family == "file") {
    std::ifstream in(c.graph_file);
    if (!in) throw Error(ErrorKind::io, "cannot read graph " + c.graph_file.string());
    g = read_edge_list(in);
    if (g->n() != n) throw Error(ErrorKind::config, "graph file has " + std::to_string(g->n()) + " nodes, cell wants " + std::to_string(n));
  } else {
    throw Error(ErrorKind::config, "family '" + c.family + "' is not a static graph");
  }
  if (c.edge_weights == "random") return with_random_weights(*g, seed + 1);
  return std::move(*g);
}

inline EdgeSchedule make_schedule(const ExperimentConfig& c, std::size_t n, std::uint64_t seed) {
  if (c.family == "dconnected") return make_d_connected_schedule(n, c.window, seed);
  if (c.family == "roundrobin") return make_round_robin_ring_schedule(n);
  if (c.family == "schedule") {
    std::ifstream in(c.graph_file);
    if (!in) throw Error(ErrorKind::io, "cannot read schedule " + c.graph_file.string());
    auto s = read_schedule(in);
    if (s.n() != n) throw Error(ErrorKind::config, "schedule file size does not match cell");
    return s;
  }
  throw Error(ErrorKind::config, "family '" + c.family + "' is not a schedule");
}

struct CellOutcome {
  Row row;
  std::optional<ExecutionTrace> trace;
};

namespace detail {

template <Protocol P>
ExecutionTrace run_or_partial(const Network& net, const P& protocol, std::span<const Value> x, const RunOptions& opt) {
  try {
    return run(net, protocol, x, opt);
  } catch (const NonTerminationError& e) {
    return e.partial();
  }
}

inline void fill_counters(Row& row, const ExecutionTrace& t) {
  row.completed = t.completed;
  row.tc = t.report.tc;
  row.mc = t.report.mc;
  row.bc = t.report.bc;
  row.bmc = t.report.bmc;
  row.bbc = t.report.bbc;
  row.storage = t.report.storage;
  row.announce = t.report.kind_total("announce");
  row.request = t.report.phase_total("request");
  row.convergecast = t.report.phase_total("convergecast");
  row.result = t.report.phase_total("result");
}

}  // namespace detail

/// Runs one (n, seed, policy) cell.
inline CellOutcome run_cell(const ExperimentConfig& c, std::size_t n, std::uint64_t seed, SchedulerPolicy policy,
                            TraceDetail detail = TraceDetail::none) {
  policy.seed = seed;
  const ConsensusSpec spec = builtin(c.spec, {c.value_bits, c.precision, c.spec_weights});
  const auto x = make_inputs(c, n, seed);

  Row row;
  row.protocol = c.protocol;
  row.spec = spec.name;
  row.family = c.family;
  row.n = n;
  row.seed = seed;
  row.policy = policy.label();

  std::optional<Network> net;
  if (c.dynamic()) {
    auto s = make_schedule(c, n, seed);
    row.edges = s.union_edges().size();
    row.window = s.window();
    net.emplace(std::move(s));
  } else {
    auto g = make_graph(c, n, seed);
    row.edges = g.num_edges();
    net.emplace(std::move(g));
  }
  row.density = row.edges < density_threshold(n) ? "S" : "D";

  RunOptions opt;
  opt.policy = policy;
  opt.timing = c.timing;
  opt.round_cap = c.round_cap;
  opt.detail = detail;

  ExecutionTrace trace;
  if (c.protocol == "flood" || c.protocol == "flood-dyn") {
    const std::size_t quiet = c.dynamic() ? net->schedule()->period() + 1 : 1;
    Flooding proto(spec, c.channel, quiet);
    trace = detail::run_or_partial(*net, proto, x, opt);
  } else if (c.protocol == "ghs" || c.protocol == "ghs-bcast") {
    Ghs proto(spec, c.protocol == "ghs-bcast" ? Channel::broadcast : Channel::directional);
    if (opt.detail == TraceDetail::none) opt.detail = TraceDetail::summary;
    trace = detail::run_or_partial(*net, proto, x, opt);
    row.max_level = max_level(trace);
    if (detail == TraceDetail::none) {
      trace.events.clear();
      trace.messages.clear();
      trace.final_states.clear();
      trace.detail = TraceDetail::none;
    }
  } else {
    row.epsilon = c.epsilon;
    const RoundBudget budget = c.dynamic()
                                   ? averaging_rounds(*net->schedule(), c.epsilon, spec.value_bits, spec.precision)
                                   : averaging_rounds(*net->static_graph(), c.epsilon, spec.value_bits,
                                                      spec.precision, c.averaging_weights);
    row.rounds = budget.rounds;
    opt.round_cap = std::max(opt.round_cap, budget.rounds + 2);
    Averaging proto(spec, budget.rounds, c.averaging_weights, c.dynamic());
    trace = detail::run_or_partial(*net, proto, x, opt);
  }
  detail::fill_counters(row, trace);

  if (trace.completed) {
    if (c.averaging()) {
      long double sum = 0;
      for (Value v : x) sum += v;
      const long double mean = sum / static_cast<long double>(n);
      long double worst = 0;
      for (const auto& d : trace.decisions)
        worst = std::max(worst, std::fabs(std::ldexp(static_cast<long double>(d->value), -static_cast<int>(spec.precision)) - mean));
      row.max_error = static_cast<double>(worst);
      row.correct = worst <= c.epsilon;
    } else {
      const Value want = evaluate(spec, x);
      row.correct = true;
      for (const auto& d : trace.decisions)
        if (d->value != want) row.correct = false;
    }
  }
  CellOutcome out{std::move(row), std::nullopt};
  if (detail != TraceDetail::none) out.trace = std::move(trace);
  return out;
}

struct Cell {
  std::size_t n;
  std::uint64_t seed;
  SchedulerPolicy policy;
};

inline std::vector<Cell> cells(const ExperimentConfig& c) {
  std::vector<Cell> out;
  for (auto n : c.ns)
    for (auto s : c.seeds)
      for (const auto& p : c.policies) out.push_back({n, s, p});
  return out;
}

inline std::size_t worker_count() {
  if (const char* env = std::getenv("CONSIM_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

struct SweepOptions {
  std::size_t workers = worker_count();
  bool resume = true;
  std::function<void(const Row&)> on_row;  // called in cell order
};

/// Runs every cell of the config in (n, seed, policy) order. When the config
/// names an output file, rows are appended as they finish and cells already
/// present in that file are not re-run.
inline std::vector<Row> run_sweep(const ExperimentConfig& c, const SweepOptions& opt = {}) {
  const auto all = cells(c);
  std::vector<std::optional<Row>> done(all.size());

  std::ofstream out;
  if (!c.output.empty()) {
    std::vector<Row> existing;
    if (opt.resume && std::filesystem::exists(c.output)) existing = read_rows(c.output);
    std::size_t prefix = 0;
    for (; prefix < existing.size() && prefix < all.size(); ++prefix) {
      const auto& r = existing[prefix];
      const auto& cell = all[prefix];
      if (r.n != cell.n || r.seed != cell.seed || r.policy != cell.policy.label() || r.protocol != c.protocol) break;
      done[prefix] = r;
    }
    if (!c.output.parent_path().empty()) std::filesystem::create_directories(c.output.parent_path());
    out.open(c.output, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + c.output.string());
    out << row_header() << '\n';
    for (std::size_t k = 0; k < prefix; ++k) out << to_csv(*done[k]) << '\n';
    out.flush();
  }

  std::mutex mu;
  std::size_t next_to_emit = 0;
  auto emit_ready = [&]() {
    while (next_to_emit < all.size() && done[next_to_emit]) {
      if (out.is_open()) {
        out << to_csv(*done[next_to_emit]) << '\n';
        out.flush();
      }
      if (opt.on_row) opt.on_row(*done[next_to_emit]);
      ++next_to_emit;
    }
  };
  {
    std::lock_guard lock(mu);
    // rows recovered from the file are already written
    while (next_to_emit < all.size() && done[next_to_emit]) {
      if (opt.on_row) opt.on_row(*done[next_to_emit]);
      ++next_to_emit;
    }
  }

  std::atomic<std::size_t> next_cell{next_to_emit};
  std::exception_ptr failure;
  auto work = [&]() {
    for (;;) {
      const std::size_t k = next_cell.fetch_add(1);
      if (k >= all.size()) return;
      try {
        Row r = run_cell(c, all[k].n, all[k].seed, all[k].policy).row;
        std::lock_guard lock(mu);
        done[k] = std::move(r);
        emit_ready();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next_cell = all.size();
        return;
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, all.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Row> rows;
  rows.reserve(all.size());
  for (auto& r : done) rows.push_back(std::move(*r));
  return rows;
}

}  // namespace consim::bench
