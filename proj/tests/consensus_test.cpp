#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "consim/consensus.hpp"

using namespace consim;

namespace {

std::vector<Value> random_values(std::mt19937_64& rng, std::size_t n, Value hi) {
  std::uniform_int_distribution<Value> d(0, hi);
  std::vector<Value> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

TEST(Consensus, SmallExamples) {
  const std::vector<Value> x{3, 1, 2};
  auto max = builtin("MAX");
  EXPECT_EQ(evaluate(max, x), 3);
  EXPECT_EQ(extractive_witness(max, x, 3), 0u);
  EXPECT_EQ(evaluate(builtin("min"), x), 1);

  auto avg = builtin("weighted-average", {8, 4});
  const std::vector<Value> y{0, 0, 4, 4};
  EXPECT_EQ(evaluate(avg, y), 2 << 4);

  auto argmin = builtin("quadratic-argmin", {8, 4});
  EXPECT_EQ(evaluate(argmin, std::vector<Value>{1, 2, 3}), 2 << 4);
}

TEST(Consensus, LeaderBreaksTiesTowardLargerId) {
  auto leader = builtin("leader");
  EXPECT_EQ(evaluate(leader, std::vector<Value>{4, 9, 2}), 2);
  EXPECT_EQ(evaluate(leader, std::vector<Value>{7, 3, 7}), 3);
  EXPECT_EQ(fold(leader, std::vector<Value>{7, 3, 7}), 3);
}

TEST(Consensus, ExplicitWeights) {
  auto spec = builtin("weighted-average", {8, 8, {0.5, 0.25, 0.25}});
  // 0.5*8 + 0.25*4 + 0.25*0 = 5
  EXPECT_EQ(evaluate(spec, std::vector<Value>{8, 4, 0}), 5 << 8);
  EXPECT_EQ(fold(spec, std::vector<Value>{8, 4, 0}), 5 << 8);
  EXPECT_THROW(evaluate(spec, std::vector<Value>{1, 2}), Error);
}

TEST(Consensus, FoldIsOrderIndependent) {
  std::mt19937_64 rng(5);
  for (const char* name : {"max", "min", "leader", "weighted-average", "majority"}) {
    auto spec = builtin(name, {name == std::string("majority") ? 1u : 16u, 16});
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng() % 40;
      auto x = random_values(rng, n, name == std::string("majority") ? 1 : 65535);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      EXPECT_EQ(fold(spec, x, order), evaluate(spec, x)) << name;
      std::reverse(order.begin(), order.end());
      EXPECT_EQ(fold(spec, x, order), evaluate(spec, x)) << name;
    }
  }
  auto max = builtin("max");
  EXPECT_EQ(fold(max, std::vector<Value>{5, 5, 5}), 5);
}

TEST(Consensus, CombineIsCommutativeAndAssociative) {
  std::mt19937_64 rng(9);
  for (const char* name : {"max", "min", "leader", "weighted-average"}) {
    auto spec = builtin(name);
    const auto& h = *spec.hierarchy;
    for (int trial = 0; trial < 200; ++trial) {
      auto v = random_values(rng, 3, 1000);
      auto a = h.lift(1 + rng() % 9, v[0]);
      auto b = h.lift(1 + rng() % 9, v[1]);
      auto c = h.lift(1 + rng() % 9, v[2]);
      EXPECT_EQ(h.combine(a, b), h.combine(b, a)) << name;
      EXPECT_EQ(h.combine(h.combine(a, b), c), h.combine(a, h.combine(b, c))) << name;
    }
  }
}

TEST(Consensus, ExtractiveSpecsReturnAnInput) {
  std::mt19937_64 rng(2);
  for (const char* name : {"max", "min"}) {
    auto spec = builtin(name);
    EXPECT_TRUE(spec.flags.extractive);
    for (int trial = 0; trial < 100; ++trial) {
      auto x = random_values(rng, 1 + rng() % 20, 100);
      EXPECT_TRUE(extractive_witness(spec, x, evaluate(spec, x)).has_value());
    }
  }
  auto leader = builtin("leader");
  auto x = random_values(rng, 12, 5);
  EXPECT_TRUE(extractive_witness(leader, x, evaluate(leader, x)).has_value());
}

TEST(Consensus, DependsOnEveryArgument) {
  const std::vector<Value> grid{0, 1, 2};
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const char* name : {"max", "min", "leader", "weighted-average"}) {
      if (n == 1 && name == std::string_view("leader")) continue;  // the lone uid wins regardless
      EXPECT_TRUE(depends_on_all_arguments(builtin(name, {8, 8}), n, grid)) << name << " n " << n;
    }
  }
  // a function that ignores its last argument must fail the probe
  auto spec = builtin("max");
  spec.evaluate = [](std::span<const Value> x) { return x[0]; };
  EXPECT_FALSE(depends_on_all_arguments(spec, 3, grid));
}

TEST(Consensus, Taxonomy) {
  EXPECT_TRUE(builtin("weighted-average").flags.locally_sensitive);
  EXPECT_FALSE(builtin("weighted-average").flags.extractive);
  EXPECT_TRUE(builtin("leader").flags.extractive);
  EXPECT_EQ(builtin("leader").codomain, Codomain::uid);
  EXPECT_EQ(builtin("average", {8, 30}).result_bits(16), 38u);
}

TEST(Consensus, Errors) {
  auto kind = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind([] { builtin("median"); }), ErrorKind::unknown_name);
  EXPECT_EQ(kind([] { evaluate(builtin("max", {4}), std::vector<Value>{16}); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind([] { evaluate(builtin("max"), std::vector<Value>{}); }), ErrorKind::invalid_size);
  EXPECT_EQ(kind([] {
              auto s = builtin("max");
              s.hierarchy.reset();
              fold(s, std::vector<Value>{1});
            }),
            ErrorKind::unsupported);
  EXPECT_EQ(kind([] {
              std::vector<std::size_t> order{0, 0};
              fold(builtin("max"), std::vector<Value>{1, 2}, order);
            }),
            ErrorKind::precondition);
}
