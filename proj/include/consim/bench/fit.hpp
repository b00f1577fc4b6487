#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "consim/bench/sweep.hpp"
#include "consim/error.hpp"

namespace consim::bench {

/// Growth laws a metric can be fitted against. nlog2n is n (log2 n)^2.
enum class Model { n, nlogn, nlog2n, n2, n3, edges, nD, n2log1eps };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::n: return "n";
    case Model::nlogn: return "nlogn";
    case Model::nlog2n: return "nlog2n";
    case Model::n2: return "n2";
    case Model::n3: return "n3";
    case Model::edges: return "E";
    case Model::nD: return "nD";
    case Model::n2log1eps: return "n2log1eps";
  }
  return "?";
}

inline Model parse_model(const std::string& s) {
  for (auto m : {Model::n, Model::nlogn, Model::nlog2n, Model::n2, Model::n3, Model::edges, Model::nD,
                 Model::n2log1eps})
    if (s == to_string(m)) return m;
  if (s == "|E|") return Model::edges;
  throw Error(ErrorKind::unknown_name, "unknown model '" + s + "'");
}

inline double model_value(Model m, const Row& r) {
  const double n = static_cast<double>(r.n);
  const double lg = std::log2(n);
  switch (m) {
    case Model::n: return n;
    case Model::nlogn: return n * lg;
    case Model::nlog2n: return n * lg * lg;
    case Model::n2: return n * n;
    case Model::n3: return n * n * n;
    case Model::edges: return static_cast<double>(r.edges);
    case Model::nD: return n * static_cast<double>(std::max<std::size_t>(r.window, 1));
    case Model::n2log1eps: return n * n * std::log(1.0 / (r.epsilon > 0 ? r.epsilon : 1e-3));
  }
  return n;
}

inline std::string canonical_metric(std::string m) {
  std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) { return std::tolower(c); });
  return m;
}

inline double metric_value(const Row& r, const std::string& metric) {
  const std::string m = canonical_metric(metric);
  if (m == "tc") return r.tc;
  if (m == "mc") return static_cast<double>(r.mc);
  if (m == "bc") return static_cast<double>(r.bc);
  if (m == "bmc") return static_cast<double>(r.bmc);
  if (m == "bbc") return static_cast<double>(r.bbc);
  if (m == "storage") return static_cast<double>(r.storage);
  if (m == "rounds") return static_cast<double>(r.rounds);
  if (m == "announce") return static_cast<double>(r.announce);
  if (m == "max_error") return r.max_error;
  throw Error(ErrorKind::unknown_name, "unknown metric '" + metric + "'");
}

/// Least-squares line through (log model(n), log metric), using the largest
/// metric over the rows of each n.
struct ScalingFit {
  std::string protocol;
  std::string family;
  std::string density;
  std::string metric;
  Model model = Model::n;
  double slope = 0.0;
  double constant = 0.0;
  double residual = 0.0;  // root mean square, natural log units
  std::size_t points = 0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
};

inline ScalingFit fit_scaling(std::span<const Row> rows, const std::string& metric, Model model) {
  std::map<std::size_t, std::pair<double, double>> per_n;  // n -> (model, worst metric)
  ScalingFit fit;
  fit.metric = metric;
  fit.model = model;
  for (const auto& r : rows) {
    if (!r.completed) continue;
    const double y = metric_value(r, metric);
    const double x = model_value(model, r);
    if (!(y > 0.0) || !(x > 0.0))
      throw Error(ErrorKind::invalid_parameter, "metric and model must be positive to fit in log space");
    auto [it, fresh] = per_n.try_emplace(r.n, x, y);
    if (!fresh) {
      it->second.first = std::max(it->second.first, x);
      it->second.second = std::max(it->second.second, y);
    }
    if (fit.protocol.empty()) {
      fit.protocol = r.protocol;
      fit.family = r.family;
      fit.density = r.density;
    }
  }
  if (per_n.size() < 4)
    throw Error(ErrorKind::insufficient_points,
                "need at least 4 distinct n values, have " + std::to_string(per_n.size()));
  std::vector<double> xs, ys;
  for (const auto& [n, xy] : per_n) {
    xs.push_back(std::log(xy.first));
    ys.push_back(std::log(xy.second));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw Error(ErrorKind::insufficient_points, "model values do not vary with n");
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  fit.constant = std::exp(intercept);
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + fit.slope * xs[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / k);
  fit.points = per_n.size();
  fit.n_min = per_n.begin()->first;
  fit.n_max = per_n.rbegin()->first;
  return fit;
}

inline const char* fit_header() { return "protocol,family,density,metric,model,slope,constant,residual,points,n_min,n_max"; }

inline std::string to_csv(const ScalingFit& f) {
  std::ostringstream os;
  os << f.protocol << ',' << f.family << ',' << f.density << ',' << f.metric << ',' << to_string(f.model) << ','
     << detail::fmt_double(f.slope) << ',' << detail::fmt_double(f.constant) << ','
     << detail::fmt_double(f.residual) << ',' << f.points << ',' << f.n_min << ',' << f.n_max;
  return os.str();
}

inline std::vector<ScalingFit> read_fits(std::istream& in) {
  std::vector<ScalingFit> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == fit_header()) continue;
    std::vector<std::string> f;
    std::string item;
    std::istringstream is(line);
    while (std::getline(is, item, ',')) f.push_back(item);
    if (f.size() != 11) throw Error(ErrorKind::io, "malformed fit: " + line);
    ScalingFit s;
    s.protocol = f[0];
    s.family = f[1];
    s.density = f[2];
    s.metric = f[3];
    s.model = parse_model(f[4]);
    s.slope = std::stod(f[5]);
    s.constant = std::stod(f[6]);
    s.residual = std::stod(f[7]);
    s.points = std::stoul(f[8]);
    s.n_min = std::stoul(f[9]);
    s.n_max = std::stoul(f[10]);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<ScalingFit> read_fits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read fits " + path.string());
  return read_fits(in);
}

}  // namespace consim::bench
