#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "consim/consensus.hpp"
#include "consim/error.hpp"
#include "consim/protocols/averaging.hpp"
#include "consim/protocols/flooding.hpp"
#include "consim/runtime.hpp"

namespace consim::bench {

struct ExperimentConfig {
  std::string name = "experiment";
  std::string protocol = "flood";  // flood, ghs, ghs-bcast, avg, flood-dyn, avg-dyn
  std::string spec = "max";
  std::vector<double> spec_weights;
  std::string family = "line";  // line, ring, complete, random, file, dconnected, roundrobin, schedule
  std::filesystem::path graph_file;
  double edge_factor = 2.0;  // random family: |E| = round(edge_factor * n)
  std::string edge_weights = "unit";  // unit, random
  std::size_t window = 2;
  std::vector<std::size_t> ns;
  std::vector<std::uint64_t> seeds;
  std::vector<SchedulerPolicy> policies{SchedulerPolicy::synchronous()};
  TimingParams timing;
  double epsilon = 1e-3;
  unsigned value_bits = 32;
  unsigned precision = 16;
  std::size_t round_cap = 100000;
  Channel channel = Channel::directional;
  AveragingWeights averaging_weights = AveragingWeights::metropolis;
  std::string inputs = "random";  // random, ramp, constant
  std::filesystem::path output;
  std::filesystem::path plot;
  std::string plot_metric = "MC";

  bool dynamic() const { return protocol == "flood-dyn" || protocol == "avg-dyn"; }
  bool averaging() const { return protocol == "avg" || protocol == "avg-dyn"; }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (!is || !(is >> std::ws).eof()) throw Error(ErrorKind::config, "bad number for '" + key + "': " + text);
  return v;
}

inline SchedulerPolicy parse_policy(const std::string& token, Adversary default_adversary) {
  const auto colon = token.find(':');
  const std::string mode = token.substr(0, colon);
  Adversary adv = default_adversary;
  if (colon != std::string::npos) {
    const std::string a = token.substr(colon + 1);
    if (a == "uniform") adv = Adversary::uniform;
    else if (a == "last-sent-first") adv = Adversary::last_sent_first;
    else if (a == "edge-biased") adv = Adversary::edge_biased;
    else throw Error(ErrorKind::config, "unknown adversary '" + a + "'");
  }
  if (mode == "synchronous") return SchedulerPolicy::synchronous();
  if (mode == "random-async") return SchedulerPolicy::random(0);
  if (mode == "adversarial-async") return SchedulerPolicy::adversarial(adv, 0);
  throw Error(ErrorKind::config, "unknown policy '" + token + "'");
}

inline std::vector<double> read_weights(const std::string& value, const std::filesystem::path& base) {
  std::string text = value;
  if (!value.empty() && value[0] == '@') {
    std::filesystem::path p = value.substr(1);
    if (p.is_relative()) p = base / p;
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::io, "cannot read weight file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    std::replace(text.begin(), text.end(), '\n', ',');
    std::replace(text.begin(), text.end(), ' ', ',');
  }
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<double>("weights", item));
  return out;
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Relative paths resolve
/// against `base`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base = ".") {
  ExperimentConfig c;
  std::string line;
  std::string adversary = "uniform";
  std::vector<std::string> policy_tokens;
  bool have_seeds = false;
  std::size_t lineno = 0;
  auto resolve = [&base](const std::string& v) {
    std::filesystem::path p = v;
    return p.is_relative() ? base / p : p;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    using detail::parse_number;
    if (key == "name") c.name = value;
    else if (key == "protocol") c.protocol = value;
    else if (key == "spec") c.spec = value;
    else if (key == "weights") c.spec_weights = detail::read_weights(value, base);
    else if (key == "graph") c.family = value;
    else if (key == "graph_file") c.graph_file = resolve(value);
    else if (key == "edge_factor") c.edge_factor = parse_number<double>(key, value);
    else if (key == "edge_weights") c.edge_weights = value;
    else if (key == "window") c.window = parse_number<std::size_t>(key, value);
    else if (key == "n") {
      c.ns.clear();
      for (const auto& item : detail::split_list(value)) c.ns.push_back(parse_number<std::size_t>(key, item));
    } else if (key == "seeds") {
      have_seeds = true;
      c.seeds.clear();
      for (const auto& item : detail::split_list(value)) c.seeds.push_back(parse_number<std::uint64_t>(key, item));
    } else if (key == "policy") policy_tokens = detail::split_list(value);
    else if (key == "adversary") adversary = value;
    else if (key == "l") c.timing.l = parse_number<double>(key, value);
    else if (key == "d") c.timing.d = parse_number<double>(key, value);
    else if (key == "epsilon") c.epsilon = parse_number<double>(key, value);
    else if (key == "b") c.value_bits = parse_number<unsigned>(key, value);
    else if (key == "p") c.precision = parse_number<unsigned>(key, value);
    else if (key == "round_cap") c.round_cap = parse_number<std::size_t>(key, value);
    else if (key == "channel") {
      if (value == "directional") c.channel = Channel::directional;
      else if (value == "broadcast") c.channel = Channel::broadcast;
      else throw Error(ErrorKind::config, "unknown channel '" + value + "'");
    } else if (key == "avg_weights") {
      if (value == "metropolis") c.averaging_weights = AveragingWeights::metropolis;
      else if (value == "uniform") c.averaging_weights = AveragingWeights::uniform;
      else throw Error(ErrorKind::config, "unknown averaging weights '" + value + "'");
    } else if (key == "inputs") c.inputs = value;
    else if (key == "output") c.output = resolve(value);
    else if (key == "plot") c.plot = resolve(value);
    else if (key == "plot_metric") c.plot_metric = value;
    else throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }

  Adversary adv = Adversary::uniform;
  if (adversary == "last-sent-first") adv = Adversary::last_sent_first;
  else if (adversary == "edge-biased") adv = Adversary::edge_biased;
  else if (adversary != "uniform") throw Error(ErrorKind::config, "unknown adversary '" + adversary + "'");
  if (!policy_tokens.empty()) {
    c.policies.clear();
    for (const auto& t : policy_tokens) c.policies.push_back(detail::parse_policy(t, adv));
  }

  static const std::vector<std::string> protocols{"flood", "ghs", "ghs-bcast", "avg", "flood-dyn", "avg-dyn"};
  if (std::find(protocols.begin(), protocols.end(), c.protocol) == protocols.end())
    throw Error(ErrorKind::config, "unknown protocol '" + c.protocol + "'");
  static const std::vector<std::string> static_families{"line", "ring", "complete", "random", "file"};
  static const std::vector<std::string> dynamic_families{"dconnected", "roundrobin", "schedule"};
  const auto& families = c.dynamic() ? dynamic_families : static_families;
  if (std::find(families.begin(), families.end(), c.family) == families.end())
    throw Error(ErrorKind::config, "graph family '" + c.family + "' does not fit protocol '" + c.protocol + "'");
  if ((c.family == "file" || c.family == "schedule") && c.graph_file.empty())
    throw Error(ErrorKind::config, "graph family '" + c.family + "' needs graph_file");
  if (c.edge_weights != "unit" && c.edge_weights != "random")
    throw Error(ErrorKind::config, "edge_weights must be unit or random");
  if (c.inputs != "random" && c.inputs != "ramp" && c.inputs != "constant")
    throw Error(ErrorKind::config, "inputs must be random, ramp or constant");
  if (c.ns.empty()) throw Error(ErrorKind::config, "n list is empty");
  for (std::size_t k = 1; k < c.ns.size(); ++k)
    if (c.ns[k] <= c.ns[k - 1]) throw Error(ErrorKind::config, "n list must be strictly increasing");
  if (!have_seeds || c.seeds.empty()) throw Error(ErrorKind::config, "seeds list is empty");
  if (c.window == 0) throw Error(ErrorKind::config, "window must be >= 1");
  if (c.round_cap == 0) throw Error(ErrorKind::config, "round_cap must be >= 1");
  if (c.averaging()) {
    if (c.spec == "max") c.spec = "weighted-average";
    if (c.spec != "weighted-average" && c.spec != "average")
      throw Error(ErrorKind::config, "averaging computes weighted-average only");
    if (!(c.epsilon > 0.0)) throw Error(ErrorKind::config, "epsilon must be positive");
  }
  c.timing.validate();
  builtin(c.spec, {c.value_bits, c.precision, c.spec_weights});  // resolves the name or throws
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config " + path.string());
  return parse_config(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace consim::bench
