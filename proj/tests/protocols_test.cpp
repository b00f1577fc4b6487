#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "consim/protocols/averaging.hpp"
#include "consim/protocols/flooding.hpp"
#include "consim/protocols/ghs.hpp"
#include "consim/runtime.hpp"
#include "oracles.hpp"

using namespace consim;

namespace {

std::vector<oracle::Pair> pairs(std::span<const Edge> edges) {
  std::vector<oracle::Pair> out;
  for (const auto& e : edges) out.emplace_back(e.u, e.v);
  return out;
}

std::vector<Value> random_inputs(std::size_t n, std::uint64_t seed, Value hi = 1000) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Value> d(0, hi);
  std::vector<Value> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

std::vector<SchedulerPolicy> all_policies(std::uint64_t seed) {
  return {SchedulerPolicy::synchronous(), SchedulerPolicy::random(seed),
          SchedulerPolicy::adversarial(Adversary::uniform, seed),
          SchedulerPolicy::adversarial(Adversary::last_sent_first, seed),
          SchedulerPolicy::adversarial(Adversary::edge_biased, seed)};
}

template <class P>
ExecutionTrace go(const Network& net, const P& p, std::span<const Value> x, SchedulerPolicy policy = {},
                  TraceDetail detail = TraceDetail::summary, std::size_t cap = 100000) {
  RunOptions opt;
  opt.policy = policy;
  opt.detail = detail;
  opt.round_cap = cap;
  return run(net, p, x, opt);
}

std::set<oracle::Pair> mst_oracle(const StaticGraph& g) {
  std::vector<double> w(g.weight_values().begin(), g.weight_values().end());
  return oracle::kruskal(g.n(), pairs(g.edges()), w);
}

std::set<oracle::Pair> as_set(const std::vector<Edge>& edges) {
  std::set<oracle::Pair> out;
  for (const auto& e : edges) out.emplace(e.u, e.v);
  return out;
}

}  // namespace

// Flooding -------------------------------------------------------------------

TEST(Flooding, LineFarEndDecidesAfterDiameterRounds) {
  auto g = make_line(8);
  const std::vector<Value> x{3, 1, 4, 1, 5, 9, 2, 6};
  auto t = run_synchronous(g, Flooding(builtin("max")), x, 100);
  ASSERT_TRUE(t.completed);
  for (const auto& d : t.decisions) EXPECT_EQ(d->value, 9);
  const TimingParams timing;
  EXPECT_EQ(round_of(t.decisions[7]->time, timing), 7u);
  EXPECT_EQ(round_of(t.decisions[0]->time, timing), 7u);
  EXPECT_LE(t.report.tc, 8.0);
}

TEST(Flooding, RepeatedValue) {
  auto t = run_synchronous(make_ring(3), Flooding(builtin("max")), std::vector<Value>{5, 5, 5}, 100);
  for (const auto& d : t.decisions) EXPECT_EQ(d->value, 5);
}

TEST(Flooding, DecisionWithinEccentricity) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = make_random_connected(30, 40, seed);
    auto t = run_synchronous(g, Flooding(builtin("min")), random_inputs(30, seed), 1000);
    const TimingParams timing;
    for (NodeId v = 1; v <= 30; ++v) {
      auto d = oracle::bfs(30, pairs(g.edges()), v);
      const long ecc = *std::max_element(d.begin() + 1, d.end());
      EXPECT_EQ(static_cast<long>(round_of(t.decisions[v - 1]->time, timing)), ecc);
    }
  }
}

TEST(Flooding, CorrectUnderEveryPolicyAndSpec) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto g = make_random_connected(16, 16 + seed * 3, seed);
    for (const char* name : {"max", "min", "leader", "weighted-average"}) {
      auto spec = builtin(name, {16, 16});
      auto x = random_inputs(16, seed * 13, 100);
      for (auto channel : {Channel::directional, Channel::broadcast})
        for (auto policy : all_policies(seed)) {
          auto t = go(g, Flooding(spec, channel), x, policy);
          ASSERT_TRUE(t.completed);
          for (const auto& d : t.decisions) EXPECT_EQ(d->value, evaluate(spec, x)) << name << " " << policy.label();
        }
    }
  }
}

TEST(Flooding, ChannelCountersAreExclusive) {
  auto g = make_ring(10);
  auto x = random_inputs(10, 1);
  auto dir = go(g, Flooding(builtin("max")), x);
  auto bc = go(g, Flooding(builtin("max"), Channel::broadcast), x);
  EXPECT_GT(dir.report.mc, 0u);
  EXPECT_EQ(dir.report.bmc, 0u);
  EXPECT_EQ(bc.report.mc, 0u);
  EXPECT_GT(bc.report.bmc, 0u);
}

TEST(Flooding, CompleteGraphMessageBound) {
  for (std::size_t n : {4, 8, 12}) {
    auto t = run_synchronous(make_complete(n), Flooding(builtin("max")), random_inputs(n, n), 100);
    const double rounds = std::round(t.report.tc);
    EXPECT_LE(static_cast<double>(t.report.mc), (rounds + 1) * n * (n - 1));
  }
}

TEST(Flooding, KnownSetNeverShrinks) {
  auto g = make_random_connected(12, 16, 3);
  auto t = go(g, Flooding(builtin("max")), random_inputs(12, 3), SchedulerPolicy::random(3), TraceDetail::full);
  std::vector<std::int64_t> last(13, 0);
  for (const auto& e : t.events) {
    if (e.state.empty()) continue;
    EXPECT_GE(e.state[0].i, last[e.node]);
    last[e.node] = e.state[0].i;
  }
}

TEST(Flooding, StorageGrowsWithN) {
  auto small = go(make_ring(8), Flooding(builtin("max")), random_inputs(8, 1));
  auto large = go(make_ring(64), Flooding(builtin("max")), random_inputs(64, 1));
  // n (uid + b) dominates
  EXPECT_GE(large.report.peak_state_bits, 64u * (6 + 32));
  EXPECT_GT(large.report.storage, 6 * small.report.storage);
}

TEST(FloodingDynamic, StaticScheduleMatchesStaticGraph) {
  auto g = make_random_connected(12, 18, 2);
  auto x = random_inputs(12, 2);
  auto a = go(g, Flooding(builtin("max")), x);
  auto b = go(make_static_schedule(g), Flooding(builtin("max"), Channel::directional, 2), x);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(a.decisions[i]->value, b.decisions[i]->value);
    EXPECT_EQ(a.decisions[i]->time, b.decisions[i]->time);
  }
}

TEST(FloodingDynamic, DConnectedWithinNDSlots) {
  for (std::size_t D : {2, 3, 4}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const std::size_t n = 6 + 4 * seed;
      auto s = make_d_connected_schedule(n, D, seed);
      auto x = random_inputs(n, seed);
      auto spec = builtin("max");
      auto t = go(s, Flooding(spec, Channel::directional, s.period() + 1), x, {}, TraceDetail::none);
      ASSERT_TRUE(t.completed);
      EXPECT_LE(t.report.tc, static_cast<double>(n * D));
      for (const auto& d : t.decisions) EXPECT_EQ(d->value, evaluate(spec, x));
    }
  }
}

TEST(FloodingDynamic, RoundRobinRingMatchesTimeExpandedReachability) {
  for (std::size_t n : {4, 6, 9}) {
    auto s = make_round_robin_ring_schedule(n);
    std::vector<std::vector<oracle::Pair>> slots;
    for (std::size_t t = 0; t < s.period(); ++t) slots.push_back(pairs(s.slot(t)));
    std::vector<long> want(n + 1, 0);
    for (unsigned src = 1; src <= n; ++src) {
      auto when = oracle::time_expanded_reach(n, slots, src, 4 * n * n);
      for (std::size_t v = 1; v <= n; ++v) {
        ASSERT_GE(when[v], 0);
        want[v] = std::max(want[v], when[v]);
      }
    }
    auto x = random_inputs(n, n);
    auto t = go(s, Flooding(builtin("max"), Channel::directional, s.period() + 1), x);
    const TimingParams timing;
    for (NodeId v = 1; v <= n; ++v) {
      EXPECT_EQ(static_cast<long>(round_of(t.decisions[v - 1]->time, timing)), want[v]) << "n " << n << " v " << v;
      // at most one period per hop
      EXPECT_LE(want[v], static_cast<long>(n * (n - 1)));
    }
  }
}

// GHS -------------------------------------------------------------------------

TEST(Ghs, TriangleMstIsTwoLightestEdges) {
  StaticGraph g(3, {{1, 2}, {2, 3}, {1, 3}}, {0.3, 0.1, 0.2});
  auto t = go(g, Ghs(builtin("max")), std::vector<Value>{4, 8, 6});
  EXPECT_EQ(as_set(branch_edges(t)), (std::set<oracle::Pair>{{2, 3}, {1, 3}}));
  EXPECT_EQ(as_set(branch_edges(t)), mst_oracle(g));
  for (const auto& d : t.decisions) EXPECT_EQ(d->value, 8);
}

TEST(Ghs, UnitWeightsFallBackToUidOrder) {
  StaticGraph g(3, {{1, 2}, {2, 3}, {1, 3}});
  auto t = go(g, Ghs(builtin("max")), std::vector<Value>{1, 2, 3});
  EXPECT_EQ(as_set(branch_edges(t)), (std::set<oracle::Pair>{{1, 2}, {1, 3}}));
}

TEST(Ghs, TwoNodes) {
  auto g = make_line(2);
  const std::vector<Value> x{7, 3};
  auto dir = go(g, Ghs(builtin("max")), x);
  auto bc = go(g, Ghs(builtin("max"), Channel::broadcast), x);
  EXPECT_EQ(as_set(branch_edges(dir)), (std::set<oracle::Pair>{{1, 2}}));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(dir.decisions[i]->value, 7);
    EXPECT_EQ(bc.decisions[i]->value, 7);
  }
  EXPECT_EQ(dir.report.phase_total("convergecast"), 1u);
}

TEST(Ghs, MatchesKruskalAndCountsTreePhasesExactly) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const std::size_t n = 4 + seed % 37;
    const std::size_t m = std::min(n * (n - 1) / 2, n - 1 + (seed * 7) % (2 * n));
    auto g = with_random_weights(make_random_connected(n, m, seed), seed);
    auto x = random_inputs(n, seed);
    const auto policy = all_policies(seed)[seed % 5];
    auto t = go(g, Ghs(builtin("max")), x, policy);
    ASSERT_TRUE(t.completed);
    EXPECT_EQ(as_set(branch_edges(t)), mst_oracle(g)) << "seed " << seed;
    EXPECT_EQ(t.report.phase_total("request"), n - 1);
    EXPECT_EQ(t.report.phase_total("convergecast"), n - 1);
    EXPECT_EQ(t.report.phase_total("result"), n - 1);
    EXPECT_LE(max_level(t), static_cast<int>(std::floor(std::log2(static_cast<double>(n)))));
    for (const auto& d : t.decisions) EXPECT_EQ(d->value, evaluate(builtin("max"), x));
  }
}

TEST(Ghs, PhaseCountersSumToTotal) {
  auto g = with_random_weights(make_random_connected(20, 40, 3), 3);
  auto t = go(g, Ghs(builtin("leader")), random_inputs(20, 3));
  std::uint64_t sum = 0;
  for (const auto& [phase, c] : t.report.phases) sum += c.messages;
  EXPECT_EQ(sum, t.report.mc);
}

TEST(Ghs, NonHierarchicalSpecGathersRawValues) {
  auto spec = builtin("max");
  spec.hierarchy.reset();
  spec.flags.hierarchical = false;
  auto g = with_random_weights(make_ring(9), 2);
  auto x = random_inputs(9, 2);
  auto t = go(g, Ghs(spec), x);
  for (const auto& d : t.decisions) EXPECT_EQ(d->value, evaluate(builtin("max"), x));
  auto folded = go(g, Ghs(builtin("max")), x);
  EXPECT_GT(t.report.bc, folded.report.bc);
}

TEST(GhsBroadcast, SameTreeAsDirectional) {
  auto ring = with_random_weights(make_ring(8), 5);
  auto x = random_inputs(8, 5);
  EXPECT_EQ(as_set(branch_edges(go(ring, Ghs(builtin("max"), Channel::broadcast), x))),
            as_set(branch_edges(go(ring, Ghs(builtin("max")), x))));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 5 + seed % 30;
    auto g = with_random_weights(make_random_connected(n, std::min(n * (n - 1) / 2, 2 * n), seed), seed);
    auto xs = random_inputs(n, seed);
    auto t = go(g, Ghs(builtin("min"), Channel::broadcast), xs, all_policies(seed)[seed % 5]);
    ASSERT_TRUE(t.completed);
    EXPECT_EQ(as_set(branch_edges(t)), mst_oracle(g)) << "seed " << seed;
    EXPECT_EQ(t.report.mc, 0u);
    EXPECT_LE(static_cast<double>(t.report.kind_total("announce")), n * (std::log2(static_cast<double>(n)) + 1.0));
    for (const auto& d : t.decisions) EXPECT_EQ(d->value, evaluate(builtin("min"), xs));
  }
}

// Averaging -------------------------------------------------------------------

TEST(Averaging, UniformWeightsOnCompleteGraphAreExactAfterOneRound) {
  auto spec = builtin("average", {8, 16});
  const std::vector<Value> x{3, 10, 200, 7};
  auto t = run_synchronous(make_complete(4), Averaging(spec, 1, AveragingWeights::uniform), x, 10);
  for (const auto& d : t.decisions) EXPECT_EQ(d->value, evaluate(spec, x));
}

TEST(Averaging, K4MatchesPowerIteration) {
  auto g = make_complete(4);
  auto spec = builtin("average", {8, 30});
  const std::vector<Value> x{0, 0, 4, 4};
  auto budget = averaging_rounds(g, 0.1, 8, 30);
  auto t = run_synchronous(g, Averaging(spec, budget.rounds), x, budget.rounds + 5);
  auto want = oracle::power_iterate(oracle::metropolis(4, pairs(g.edges())), {0, 0, 4, 4}, budget.rounds);
  for (std::size_t i = 0; i < 4; ++i) {
    const double got = std::ldexp(static_cast<double>(t.decisions[i]->value), -30);
    EXPECT_NEAR(got, 2.0, 0.1);
    EXPECT_NEAR(got, want[i], budget.rounding_bound + 1e-12);
  }
}

TEST(Averaging, LineTracksPowerIteration) {
  for (std::size_t n : {5, 9, 16}) {
    auto g = make_line(n);
    auto spec = builtin("average", {10, 30});
    auto x = random_inputs(n, n, 1023);
    for (std::size_t rounds : {1, 7, 40}) {
      auto t = run_synchronous(g, Averaging(spec, rounds), x, rounds + 5, TraceDetail::none);
      std::vector<double> x0(x.begin(), x.end());
      auto want = oracle::power_iterate(oracle::metropolis(n, pairs(g.edges())), x0, rounds);
      for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(std::ldexp(static_cast<double>(t.decisions[i]->value), -30), want[i], 1e-6);
    }
  }
}

TEST(Averaging, SumIsConservedEveryRound) {
  auto g = make_random_connected(14, 25, 4);
  auto spec = builtin("average", {12, 20});
  auto x = random_inputs(14, 4, 4095);
  std::int64_t want = 0;
  for (Value v : x) want += v << 20;
  for (std::size_t rounds = 1; rounds <= 12; ++rounds) {
    auto t = run_synchronous(g, Averaging(spec, rounds), x, rounds + 5, TraceDetail::none);
    std::int64_t sum = 0;
    for (const auto& d : t.decisions) sum += d->value;
    EXPECT_EQ(sum, want) << "rounds " << rounds;
  }
}

TEST(Averaging, MeetsEpsilonOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto g = make_random_connected(20, 30, seed);
    auto spec = builtin("average", {8, 30});
    auto x = random_inputs(20, seed, 255);
    auto budget = averaging_rounds(g, 1e-3, 8, 30);
    auto t = run_synchronous(g, Averaging(spec, budget.rounds), x, budget.rounds + 5, TraceDetail::none);
    double mean = 0;
    for (Value v : x) mean += static_cast<double>(v);
    mean /= 20;
    for (const auto& d : t.decisions) EXPECT_LE(std::fabs(std::ldexp(static_cast<double>(d->value), -30) - mean), 1e-3);
  }
}

TEST(Averaging, DynamicScheduleMeetsEpsilon) {
  auto s = make_d_connected_schedule(12, 3, 2);
  auto spec = builtin("average", {8, 30});
  auto x = random_inputs(12, 2, 255);
  auto budget = averaging_rounds(s, 1e-3, 8, 30);
  EXPECT_EQ(budget.period, 3u);
  auto t = go(s, Averaging(spec, budget.rounds, AveragingWeights::metropolis, true), x, {}, TraceDetail::none,
              budget.rounds + 5);
  double mean = 0;
  for (Value v : x) mean += static_cast<double>(v);
  mean /= 12;
  for (const auto& d : t.decisions) EXPECT_LE(std::fabs(std::ldexp(static_cast<double>(d->value), -30) - mean), 1e-3);
}

TEST(Averaging, StorageDoesNotGrowWithDegreeOrN) {
  auto spec = builtin("average", {8, 30});
  auto a = run_synchronous(make_ring(8), Averaging(spec, 20), random_inputs(8, 1, 255), 30, TraceDetail::none);
  auto b = run_synchronous(make_ring(64), Averaging(spec, 20), random_inputs(64, 1, 255), 30, TraceDetail::none);
  // only the uid field grows, by log2(64/8) = 3 bits
  EXPECT_EQ(b.report.peak_state_bits, a.report.peak_state_bits + 3);
}

TEST(Averaging, RejectsBadParameters) {
  auto g = make_line(6);
  EXPECT_THROW(averaging_rounds(g, 0.0, 8, 30), Error);
  EXPECT_THROW(averaging_rounds(g, -1.0, 8, 30), Error);
  // too few fractional bits for the requested accuracy
  EXPECT_THROW(averaging_rounds(g, 1e-6, 8, 8), Error);
  EXPECT_THROW(Averaging(builtin("max"), 10), Error);
  EXPECT_THROW(run_synchronous(g, Averaging(builtin("average", {8, 20}), 3, AveragingWeights::uniform),
                               random_inputs(6, 1, 255), 10),
               Error);
}

TEST(Averaging, RoundBudgetGrowsQuadraticallyOnLines) {
  auto k16 = averaging_rounds(make_line(16), 1e-3, 8, 30).rounds;
  auto k32 = averaging_rounds(make_line(32), 1e-3, 8, 30).rounds;
  const double ratio = static_cast<double>(k32) / static_cast<double>(k16);
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.5);
}
