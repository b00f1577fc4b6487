// consim: run sweeps, fit growth exponents, render the synoptic table,
// check ring symmetry and export traces.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "consim/consim.hpp"

using namespace consim;
using namespace consim::bench;

namespace {

int cmd_run(const std::string& path, bool fresh, bool quiet) {
  const auto cfg = load_config(path);
  SweepOptions opt;
  opt.resume = !fresh;
  if (cfg.output.empty() && !quiet) std::cout << row_header() << '\n';
  opt.on_row = [&](const Row& r) {
    if (cfg.output.empty()) {
      if (!quiet) std::cout << to_csv(r) << '\n';
    } else if (!quiet) {
      std::fprintf(stderr, "%s n=%zu seed=%llu %s tc=%g mc=%llu%s\n", r.protocol.c_str(), r.n,
                   static_cast<unsigned long long>(r.seed), r.policy.c_str(), r.tc,
                   static_cast<unsigned long long>(r.mc), r.completed ? (r.correct ? "" : " WRONG") : " INCOMPLETE");
    }
  };
  const auto rows = run_sweep(cfg, opt);
  if (!cfg.plot.empty()) {
    std::ofstream svg(cfg.plot);
    if (!svg) throw Error(ErrorKind::io, "cannot write " + cfg.plot.string());
    svg << svg_loglog(rows, cfg.plot_metric, cfg.name + ": " + cfg.plot_metric);
  }
  std::size_t bad = 0;
  for (const auto& r : rows)
    if (!r.completed || !r.correct) ++bad;
  if (!cfg.output.empty()) std::fprintf(stderr, "%zu rows -> %s\n", rows.size(), cfg.output.string().c_str());
  return bad == 0 ? 0 : 3;
}

int cmd_fit(const std::string& rows_path, const std::string& metric, const std::string& model,
            const std::string& output, bool append) {
  const auto rows = read_rows(rows_path);
  const auto fit = fit_scaling(rows, metric, parse_model(model));
  if (output.empty()) {
    std::cout << fit_header() << '\n' << to_csv(fit) << '\n';
    return 0;
  }
  const bool fresh_file = !append || !std::filesystem::exists(output);
  std::ofstream out(output, append ? std::ios::app : std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + output);
  if (fresh_file) out << fit_header() << '\n';
  out << to_csv(fit) << '\n';
  std::cout << to_csv(fit) << '\n';
  return 0;
}

int cmd_table(const std::vector<std::string>& paths, bool csv, const std::string& output) {
  std::vector<ScalingFit> fits;
  for (const auto& p : paths) {
    auto more = read_fits(std::filesystem::path(p));
    fits.insert(fits.end(), more.begin(), more.end());
  }
  const std::string text = csv ? render_table_csv(fits) : render_table_text(fits);
  if (output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output);
    if (!out) throw Error(ErrorKind::io, "cannot write " + output);
    out << text;
  }
  return 0;
}

int cmd_verify_ring(std::size_t n, double c) {
  const auto ring = bit_reversal_ring(n);
  const auto check = is_c_symmetric(ring, c);
  nlohmann::ordered_json j;
  j["n"] = n;
  j["c"] = c;
  j["ring"] = ring;
  j["certified"] = check.certified;
  auto& lengths = j["lengths"] = nlohmann::ordered_json::array();
  for (const auto& st : check.lengths)
    lengths.push_back({{"length", st.length},
                       {"classes", st.classes},
                       {"required", st.required},
                       {"min_multiplicity", st.min_multiplicity}});
  if (check.refutation) {
    const auto& r = *check.refutation;
    j["refutation"] = {{"length", r.length},
                       {"start", r.start},
                       {"segment", r.values},
                       {"multiplicity", r.multiplicity},
                       {"required", r.required}};
  }
  std::cout << j.dump(2) << '\n';
  return check.certified ? 0 : 1;
}

int cmd_trace(const std::string& path, const std::string& export_path, bool digest, std::size_t n,
              std::uint64_t seed, std::size_t policy_index) {
  const auto cfg = load_config(path);
  if (n == 0) n = cfg.ns.front();
  if (policy_index >= cfg.policies.size()) throw Error(ErrorKind::config, "policy index out of range");
  auto out = run_cell(cfg, n, seed, cfg.policies[policy_index], TraceDetail::full);
  std::ofstream os(export_path);
  if (!os) throw Error(ErrorKind::io, "cannot write " + export_path);
  write_trace_jsonl(os, *out.trace, digest);
  std::cout << row_header() << '\n' << to_csv(out.row) << '\n';
  return out.row.completed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus protocol simulator and complexity bench"};
  app.require_subcommand(1);

  std::string config, rows_path, metric = "MC", model = "n", output, export_path;
  std::vector<std::string> fit_paths;
  bool fresh = false, quiet = false, append = false, csv = false, digest = false;
  std::size_t n = 0, policy_index = 0;
  std::uint64_t seed = 1;
  double c = 0.5;

  auto* run = app.add_subcommand("run", "Run every cell of a sweep config");
  run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_flag("--fresh", fresh, "Ignore rows already in the output file");
  run->add_flag("-q,--quiet", quiet, "No progress output");

  auto* fit = app.add_subcommand("fit", "Fit a log-log growth exponent to a row table");
  fit->add_option("rows", rows_path, "Row CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--metric", metric, "TC, MC, BC, bMC, bBC, storage, rounds, announce");
  fit->add_option("--model", model, "n, nlogn, nlog2n, n2, n3, E, nD, n2log1eps");
  fit->add_option("-o,--output", output, "Fit CSV to write");
  fit->add_flag("--append", append, "Append to the fit CSV");

  auto* table = app.add_subcommand("table", "Render the synoptic table from fit files");
  table->add_option("fits", fit_paths, "Fit CSV files")->required()->check(CLI::ExistingFile);
  table->add_flag("--csv", csv, "CSV instead of text");
  table->add_option("-o,--output", output, "File to write");

  auto* ring = app.add_subcommand("verify-ring", "Check c-symmetry of the bit-reversal ring");
  ring->add_option("--n", n, "Ring size (power of two)")->required();
  ring->add_option("--c", c, "Symmetry constant");

  auto* trace = app.add_subcommand("trace", "Run one cell with full detail and export its trace");
  trace->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  trace->add_option("--export", export_path, "JSON lines output")->required();
  trace->add_flag("--digest", digest, "State digests only");
  trace->add_option("--n", n, "Cell size (default: first n)");
  trace->add_option("--seed", seed, "Cell seed");
  trace->add_option("--policy", policy_index, "Index into the policy list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, fresh, quiet);
    if (*fit) return cmd_fit(rows_path, metric, model, output, append);
    if (*table) return cmd_table(fit_paths, csv, output);
    if (*ring) return cmd_verify_ring(n, c);
    if (*trace) return cmd_trace(config, export_path, digest, n, seed, policy_index);
  } catch (const NonTerminationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
