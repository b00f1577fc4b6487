#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "consim/bench/config.hpp"
#include "consim/bench/fit.hpp"
#include "consim/bench/plot.hpp"
#include "consim/bench/sweep.hpp"
#include "consim/bench/table.hpp"

using namespace consim;
using namespace consim::bench;

namespace fs = std::filesystem;

namespace {

ExperimentConfig config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, fs::temp_directory_path());
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "consim_bench_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Row synthetic(std::size_t n, double metric) {
  Row r;
  r.protocol = "flood";
  r.family = "line";
  r.density = "S";
  r.n = n;
  r.edges = n - 1;
  r.completed = true;
  r.correct = true;
  r.mc = static_cast<std::uint64_t>(std::llround(metric));
  r.tc = metric;
  return r;
}

void check_golden(const std::string& name, const std::string& text) {
  const fs::path path = fs::path(CONSIM_SOURCE_DIR) / "tests" / "golden" / name;
  if (std::getenv("CONSIM_UPDATE_GOLDEN")) {
    std::ofstream(path) << text;
    GTEST_SKIP() << "rewrote " << path;
  }
  ASSERT_TRUE(fs::exists(path)) << "missing golden file " << path << "; set CONSIM_UPDATE_GOLDEN=1 to create it";
  EXPECT_EQ(slurp(path), text) << "golden mismatch for " << name;
}

}  // namespace

TEST(Config, ParsesKeysAndDefaults) {
  auto c = config(R"(
    # comment
    name = demo
    protocol = ghs-bcast
    spec = leader
    graph = random
    edge_factor = 3
    edge_weights = random
    n = 8, 16, 32
    seeds = 1,2
    policy = synchronous, adversarial-async:last-sent-first, random-async
    l = 0.5
    d = 2
    b = 16
  )");
  EXPECT_EQ(c.name, "demo");
  EXPECT_EQ(c.protocol, "ghs-bcast");
  EXPECT_EQ(c.ns, (std::vector<std::size_t>{8, 16, 32}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  ASSERT_EQ(c.policies.size(), 3u);
  EXPECT_EQ(c.policies[1].label(), "adversarial-async/last-sent-first");
  EXPECT_DOUBLE_EQ(c.timing.unit(), 2.5);
  EXPECT_EQ(c.value_bits, 16u);
  EXPECT_EQ(cells(c).size(), 18u);
}

TEST(Config, Errors) {
  auto kind = [](const std::string& text) {
    try {
      config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind("n = 8\nseeds =\n"), ErrorKind::config);
  EXPECT_EQ(kind("n = 8\n"), ErrorKind::config);
  EXPECT_EQ(kind("n = 16, 8\nseeds = 1\n"), ErrorKind::config);
  EXPECT_EQ(kind("protocol = gossip\nn = 8\nseeds = 1\n"), ErrorKind::config);
  EXPECT_EQ(kind("graph = dconnected\nn = 8\nseeds = 1\n"), ErrorKind::config);
  EXPECT_EQ(kind("n = 8\nseeds = 1\nfoo = bar\n"), ErrorKind::config);
  EXPECT_EQ(kind("n = eight\nseeds = 1\n"), ErrorKind::config);
  EXPECT_EQ(kind("n = 8\nseeds = 1\nspec = median\n"), ErrorKind::unknown_name);
  EXPECT_EQ(kind("protocol = avg\nn = 8\nseeds = 1\nepsilon = 0\n"), ErrorKind::config);
}

TEST(Config, WeightsFromFile) {
  const auto path = scratch("w.txt");
  std::ofstream(path) << "0.5\n0.25 0.25\n";
  auto c = config("spec = weighted-average\nweights = @" + path.string() + "\nn = 3\nseeds = 1\n");
  EXPECT_EQ(c.spec_weights, (std::vector<double>{0.5, 0.25, 0.25}));
}

TEST(Sweep, SingleFloodCell) {
  auto rows = run_sweep(config("protocol = flood\ngraph = line\nn = 8\nseeds = 1\n"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].completed);
  EXPECT_TRUE(rows[0].correct);
  EXPECT_LE(rows[0].tc, 8.0);
  EXPECT_EQ(rows[0].density, "S");
}

TEST(Sweep, RowsRoundTripThroughCsv) {
  auto rows = run_sweep(config("protocol = ghs\ngraph = ring\nedge_weights = random\nn = 8, 12\nseeds = 1, 2\n"));
  std::stringstream ss;
  write_rows(ss, rows);
  EXPECT_EQ(read_rows(ss), rows);
  for (const auto& r : rows) {
    EXPECT_EQ(r.request, r.n - 1);
    EXPECT_EQ(r.convergecast, r.n - 1);
    EXPECT_GE(r.max_level, 1);
  }
}

TEST(Sweep, DeterministicAcrossRunsAndWorkerCounts) {
  const std::string text =
      "protocol = flood\ngraph = random\nn = 8, 16, 24\nseeds = 1, 2, 3\n"
      "policy = synchronous, random-async, adversarial-async:edge-biased\n";
  SweepOptions one;
  one.workers = 1;
  SweepOptions many;
  many.workers = 4;
  auto a = run_sweep(config(text), one);
  auto b = run_sweep(config(text), one);
  auto c = run_sweep(config(text), many);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  for (const auto& r : a) EXPECT_TRUE(r.correct);
}

TEST(Sweep, ResumesFromPartialOutput) {
  const auto out = scratch("resume.csv");
  fs::remove(out);
  const std::string text = "protocol = ghs\ngraph = random\nn = 8, 16, 24, 32\nseeds = 1, 2\noutput = " + out.string() + "\n";
  run_sweep(config(text));
  const std::string complete = slurp(out);

  // keep the header and three rows, plus a torn fourth line
  std::istringstream is(complete);
  std::string line, partial;
  for (int k = 0; k < 4 && std::getline(is, line); ++k) partial += line + "\n";
  std::ofstream(out) << partial;

  std::size_t calls = 0;
  SweepOptions opt;
  opt.on_row = [&](const Row&) { ++calls; };
  auto rows = run_sweep(config(text), opt);
  EXPECT_EQ(calls, 8u);
  EXPECT_EQ(slurp(out), complete);
  EXPECT_EQ(rows, read_rows(out));

  // a file from a different sweep is not reused
  std::ofstream(out) << row_header() << "\n" << to_csv(synthetic(99, 1.0)) << "\n";
  run_sweep(config(text));
  EXPECT_EQ(slurp(out), complete);
}

TEST(Sweep, WorkerCountComesFromEnvironment) {
  setenv("CONSIM_WORKERS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  setenv("CONSIM_WORKERS", "zero", 1);
  EXPECT_EQ(worker_count(), 1u);
  unsetenv("CONSIM_WORKERS");
  EXPECT_EQ(worker_count(), 1u);
}

TEST(Sweep, AveragingRowsCarryErrorAndRounds) {
  auto rows = run_sweep(config("protocol = avg\ngraph = line\nn = 4, 8\nseeds = 1\nb = 8\np = 30\nepsilon = 0.001\n"));
  for (const auto& r : rows) {
    EXPECT_TRUE(r.correct);
    EXPECT_LE(r.max_error, 1e-3);
    EXPECT_GT(r.rounds, 0u);
    EXPECT_DOUBLE_EQ(r.epsilon, 1e-3);
  }
}

TEST(Sweep, DynamicFamilies) {
  auto rows = run_sweep(config("protocol = flood-dyn\ngraph = dconnected\nwindow = 3\nn = 6, 10\nseeds = 1, 2\n"));
  for (const auto& r : rows) {
    EXPECT_TRUE(r.correct);
    EXPECT_EQ(r.window, 3u);
    EXPECT_LE(r.tc, static_cast<double>(r.n * 3));
  }
}

TEST(Fit, ExactSyntheticData) {
  std::vector<Row> rows;
  for (std::size_t n : {8, 16, 32, 64, 128}) rows.push_back(synthetic(n, 5.0 * static_cast<double>(n)));
  auto f = fit_scaling(rows, "TC", Model::n);
  EXPECT_NEAR(f.slope, 1.0, 1e-9);
  EXPECT_NEAR(f.constant, 5.0, 1e-9);
  EXPECT_NEAR(f.residual, 0.0, 1e-9);
  EXPECT_EQ(f.points, 5u);

  rows.clear();
  for (std::size_t n : {8, 16, 32, 64}) rows.push_back(synthetic(n, static_cast<double>(n * n)));
  EXPECT_NEAR(fit_scaling(rows, "tc", Model::n).slope, 2.0, 1e-9);
}

TEST(Fit, EveryModelAgainstItsOwnData) {
  for (auto model : {Model::n, Model::nlogn, Model::nlog2n, Model::n2, Model::n3, Model::edges, Model::nD,
                     Model::n2log1eps}) {
    std::vector<Row> rows;
    for (std::size_t n : {8, 16, 32, 64, 128, 256}) {
      Row r = synthetic(n, 0);
      r.edges = 3 * n + 1;
      r.window = 2 + n % 3;
      r.epsilon = 1e-3;
      r.tc = 7.0 * model_value(model, r);
      rows.push_back(r);
    }
    auto f = fit_scaling(rows, "TC", model);
    EXPECT_NEAR(f.slope, 1.0, 1e-9) << to_string(model);
    EXPECT_NEAR(f.residual, 0.0, 1e-9) << to_string(model);
    EXPECT_EQ(parse_model(to_string(model)), model);
  }
}

TEST(Fit, UsesWorstSeedPerN) {
  std::vector<Row> rows;
  for (std::size_t n : {8, 16, 32, 64}) {
    rows.push_back(synthetic(n, static_cast<double>(n)));
    rows.push_back(synthetic(n, 2.0 * static_cast<double>(n)));
  }
  auto f = fit_scaling(rows, "TC", Model::n);
  EXPECT_NEAR(f.constant, 2.0, 1e-9);
}

TEST(Fit, Errors) {
  std::vector<Row> rows;
  for (std::size_t n : {8, 16, 32}) rows.push_back(synthetic(n, static_cast<double>(n)));
  try {
    fit_scaling(rows, "TC", Model::n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_points);
  }
  rows.push_back(synthetic(64, 64));
  EXPECT_THROW(fit_scaling(rows, "latency", Model::n), Error);
  EXPECT_THROW(parse_model("n4"), Error);
  rows.push_back(synthetic(128, 0));
  EXPECT_THROW(fit_scaling(rows, "TC", Model::n), Error);
}

TEST(Fit, CsvRoundTrip) {
  std::vector<Row> rows;
  for (std::size_t n : {8, 16, 32, 64}) rows.push_back(synthetic(n, 3.0 * static_cast<double>(n)));
  auto f = fit_scaling(rows, "MC", Model::nlogn);
  std::stringstream ss;
  ss << fit_header() << '\n' << to_csv(f) << '\n';
  auto back = read_fits(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(to_csv(back[0]), to_csv(f));
}

TEST(Table, LayoutAndPlaceholders) {
  const auto text = render_table_text({});
  EXPECT_NE(text.find("Hybrid clustering"), std::string::npos);
  EXPECT_NE(text.find("not implemented: external reference"), std::string::npos);
  EXPECT_NE(text.find("Flooding (D-connectivity)"), std::string::npos);
  const auto csv = render_table_csv({});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 7 * 8);
}

TEST(Plot, OnePointPerN) {
  std::vector<Row> rows;
  for (std::size_t n : {8, 16, 32}) {
    rows.push_back(synthetic(n, static_cast<double>(n)));
    rows.push_back(synthetic(n, static_cast<double>(n) + 1));
  }
  const auto svg = svg_loglog(rows, "MC", "demo");
  std::size_t circles = 0;
  for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
  EXPECT_EQ(circles, 3u);
  EXPECT_EQ(svg.rfind("</svg>"), svg.size() - 7);
}

// Golden renderings of three small pipelines: sweep, fit, table.

TEST(Golden, FloodingAndGhsText) {
  auto flood = run_sweep(config("protocol = flood\ngraph = line\nn = 4, 8, 16, 32\nseeds = 1, 2\n"));
  auto ghs = run_sweep(config("protocol = ghs\ngraph = ring\nedge_weights = random\nn = 8, 16, 32, 64\nseeds = 1, 2\n"));
  std::vector<ScalingFit> fits{fit_scaling(flood, "TC", Model::n), fit_scaling(flood, "MC", Model::n2),
                               fit_scaling(ghs, "MC", Model::nlogn), fit_scaling(ghs, "BC", Model::nlog2n),
                               fit_scaling(ghs, "storage", Model::n)};
  check_golden("flood_ghs_table.txt", render_table_text(fits));
}

TEST(Golden, BroadcastAndDenseCsv) {
  auto bghs = run_sweep(
      config("protocol = ghs-bcast\ngraph = ring\nedge_weights = random\nn = 8, 16, 32, 64\nseeds = 1\n"));
  auto dense = run_sweep(config("protocol = ghs\ngraph = complete\nn = 4, 6, 8, 12\nseeds = 1\n"));
  auto bflood = run_sweep(config("protocol = flood\nchannel = broadcast\ngraph = ring\nn = 4, 8, 16, 32\nseeds = 1\n"));
  std::vector<ScalingFit> fits{fit_scaling(bghs, "bMC", Model::nlogn), fit_scaling(bghs, "bBC", Model::nlog2n),
                               fit_scaling(dense, "MC", Model::edges), fit_scaling(bflood, "bMC", Model::n2)};
  check_golden("bcast_dense_table.csv", render_table_csv(fits));
}

TEST(Golden, AveragingAndDynamicText) {
  auto avg = run_sweep(config("protocol = avg\ngraph = line\nn = 4, 6, 8, 12\nseeds = 1\nb = 8\np = 30\n"));
  auto dyn = run_sweep(config("protocol = flood-dyn\ngraph = dconnected\nwindow = 2\nn = 6, 8, 12, 16\nseeds = 1, 2\n"));
  auto avgdyn =
      run_sweep(config("protocol = avg-dyn\ngraph = dconnected\nwindow = 2\nn = 4, 6, 8, 10\nseeds = 1\nb = 8\np = 30\n"));
  std::vector<ScalingFit> fits{fit_scaling(avg, "TC", Model::n2log1eps), fit_scaling(avg, "MC", Model::n3),
                               fit_scaling(dyn, "TC", Model::nD), fit_scaling(avgdyn, "TC", Model::n2)};
  check_golden("avg_dyn_table.txt", render_table_text(fits));
}
