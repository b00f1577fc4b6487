#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "consim/bench/fit.hpp"

namespace consim::bench {

namespace detail {

struct TableRow {
  const char* label;
  const char* protocol;  // fits with this protocol land here; empty for fixed rows
  std::array<const char*, 8> bound;
};

// Bounds per row: Time, Message (S), Message (D), Msg. (broadcast), Byte (S),
// Byte (D), Byte (broadcast), Storage.
inline const std::vector<TableRow>& synoptic_rows() {
  static const std::vector<TableRow> rows{
      {"Lower bound", "", {"n", "n log n", "n^2", "n log n", "(n log n)(log n + b)", "n^2(log n + b)", "(n log n)(log n + b)", "log n + b"}},
      {"Flooding (no failures)", "flood", {"n", "n^2 log n", "n^3", "n^2", "n^2 log n(log n + b)", "n^3(log n + b)", "n^2(log n + b)", "n(log n + b)"}},
      {"GHS modified (no failures)", "ghs", {"n", "n log n", "n^2", "n log n", "(n log n)(log n + b)", "n^2(log n + b)", "(n log n)(log n + b)", "log n + b"}},
      {"Avg. based (no failures, eps)", "avg", {"n^2 log(1/eps)", "n^3 log n", "n^4", "n^3", "n^3 log n(log n + b)", "n^4(log n + b)", "n^3(log n + b)", "log n + b"}},
      {"Hybrid clustering", "", {"n log(n/m)", "2mn + k|Ec|m", "2mn + k|Ec|m", "n(m + log(n/m))", "m(n + k|Ec|)(log n + b)", "m(n + k|Ec|)(log n + b)", "n(m + log(n/m)) log n", "m(log n + b)"}},
      {"Flooding (D-connectivity)", "flood-dyn", {"nD", "n^2 D log n", "n^3 D", "n^2 D", "n^3 D log n(log n + b)", "n^4 D(log n + b)", "n^3 D(log n + b)", "n(log n + b)"}},
      {"Avg.-based (D-connectivity)", "avg-dyn", {"n^2 D log(1/eps)", "n^3 D log n", "n^4 D", "n^3 D", "n^3 D log n(log n + b)", "n^4 D(log n + b)", "n^3 D(log n + b)", "log n + b"}},
  };
  return rows;
}

inline const std::array<const char*, 8>& column_names() {
  static const std::array<const char*, 8> names{"Time",     "Message (S)",     "Message (D)",       "Msg. (broadcast)",
                                                "Byte (S)", "Byte (D)", "Byte (broadcast)", "Storage"};
  return names;
}

inline int column_of(const ScalingFit& f) {
  const std::string m = canonical_metric(f.metric);
  const bool dense = f.density == "D";
  if (m == "tc") return 0;
  if (m == "mc") return dense ? 2 : 1;
  if (m == "bmc") return 3;
  if (m == "bc") return dense ? 5 : 4;
  if (m == "bbc") return 6;
  if (m == "storage") return 7;
  return -1;
}

inline int row_of(const ScalingFit& f) {
  std::string p = f.protocol == "ghs-bcast" ? "ghs" : f.protocol;
  const auto& rows = synoptic_rows();
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (p == rows[i].protocol) return static_cast<int>(i);
  return -1;
}

inline std::string measured(const ScalingFit& f) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s^%.2f", to_string(f.model), f.slope);
  return buf;
}

inline constexpr const char* not_implemented = "not implemented: external reference";

struct Grid {
  std::vector<std::array<std::string, 8>> cells;
  std::vector<ScalingFit> unplaced;
};

inline Grid place(const std::vector<ScalingFit>& fits) {
  Grid g;
  g.cells.resize(synoptic_rows().size());
  for (std::size_t r = 0; r < g.cells.size(); ++r)
    for (auto& c : g.cells[r]) c = synoptic_rows()[r].label == std::string("Hybrid clustering") ? not_implemented : "-";
  for (const auto& f : fits) {
    const int r = row_of(f), c = column_of(f);
    if (r < 0 || c < 0) {
      g.unplaced.push_back(f);
      continue;
    }
    auto& cell = g.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    cell = cell == "-" ? measured(f) : cell + "; " + measured(f);
  }
  return g;
}

}  // namespace detail

/// Plain-text synoptic table: asymptotic bound and fitted growth side by side.
/// A measured cell "nlogn^1.02" reads as metric ~ (n log n)^1.02.
inline std::string render_table_text(const std::vector<ScalingFit>& fits) {
  const auto grid = detail::place(fits);
  const auto& rows = detail::synoptic_rows();
  const auto& names = detail::column_names();
  std::ostringstream os;
  for (int block = 0; block < 2; ++block) {
    std::vector<std::vector<std::string>> lines;
    std::vector<std::string> head{""};
    for (int c = 4 * block; c < 4 * block + 4; ++c) {
      head.push_back(std::string(names[c]) + " bound");
      head.push_back("measured");
    }
    lines.push_back(head);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::vector<std::string> line{rows[r].label};
      for (int c = 4 * block; c < 4 * block + 4; ++c) {
        line.push_back(rows[r].bound[c]);
        line.push_back(grid.cells[r][c]);
      }
      lines.push_back(line);
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& l : lines)
      for (std::size_t k = 0; k < l.size(); ++k) width[k] = std::max(width[k], l[k].size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      for (std::size_t k = 0; k < lines[i].size(); ++k) {
        os << lines[i][k];
        if (k + 1 < lines[i].size()) os << std::string(width[k] - lines[i][k].size() + 2, ' ');
      }
      os << '\n';
      if (i == 0) {
        std::size_t total = 0;
        for (auto w : width) total += w + 2;
        os << std::string(total - 2, '-') << '\n';
      }
    }
    os << '\n';
  }
  os << "Fits (metric ~ constant * model^slope, max over seeds per n):\n";
  for (const auto& f : fits) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-10s %-9s %s %-8s vs %-10s slope %.4f  constant %.4g  residual %.4f  n %zu..%zu (%zu points)\n",
                  f.protocol.c_str(), f.family.c_str(), f.density.c_str(), f.metric.c_str(), to_string(f.model),
                  f.slope, f.constant, f.residual, f.n_min, f.n_max, f.points);
    os << buf;
  }
  os << "Notes:\n"
     << "  GHS time row: the O(n) time refinement is not implemented; classic GHS is measured.\n"
     << "  Asynchronous worst cases are approximated by seeded adversary families.\n"
     << "  Averaging stops after a precomputed round budget; that termination rule sends no messages.\n";
  return os.str();
}

/// CSV form: one line per (row, column) cell.
inline std::string render_table_csv(const std::vector<ScalingFit>& fits) {
  const auto grid = detail::place(fits);
  const auto& rows = detail::synoptic_rows();
  const auto& names = detail::column_names();
  std::ostringstream os;
  os << "row,column,bound,measured\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c)
      os << '"' << rows[r].label << "\",\"" << names[c] << "\",\"" << rows[r].bound[c] << "\",\"" << grid.cells[r][c]
         << "\"\n";
  return os.str();
}

}  // namespace consim::bench
