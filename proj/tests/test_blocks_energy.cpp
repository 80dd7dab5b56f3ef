#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ras/blocks.hpp"
#include "ras/checks.hpp"
#include "ras/energy.hpp"
#include "ras/state.hpp"

using namespace ras;

TEST(Blocks, NoEdgesMeansNoBlocks) {
  EXPECT_TRUE(compute_blocks(std::vector<double>{0.0, 1.0}, Graph(2, {})).empty());
}

TEST(Blocks, HandExamples) {
  auto one = compute_blocks(std::vector<double>{0.0, 0.4, 1.0}, Graph(3, {{0, 1}, {1, 2}}));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].length(), 1.0);

  auto two = compute_blocks(std::vector<double>{0.0, 0.1, 0.9, 1.0}, Graph(4, {{0, 1}, {2, 3}}));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0].length(), 0.1, 1e-15);
  EXPECT_NEAR(two[1].length(), 0.1, 1e-15);
}

TEST(Blocks, TouchingIntervalsMerge) {
  auto b = compute_blocks(std::vector<double>{0.0, 0.5, 0.5 + 1e-13, 1.0}, Graph(4, {{0, 1}, {2, 3}}));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0].length(), 1.0, 1e-15);
}

TEST(Blocks, AgreeWithIntervalUnionOracle) {
  CounterRng rng = CounterRng::stream(21, 0);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 25);
    Graph g = random_graph(n, rng.uniform(0.02, 0.4), rng);
    auto x = random_vector(n, rng);
    auto got = compute_blocks(x, g);
    auto expect = oracle::interval_union(g, x);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i].lo, expect[i].first, 1e-12);
      EXPECT_NEAR(got[i].hi, expect[i].second, 1e-12);
    }
  }
}

TEST(Blocks, ContainingBlockOfIsolatedVertexIsZero) {
  Graph g(3, {{0, 1}});
  std::vector<double> x{0.0, 0.5, 0.2};
  auto b = compute_blocks(x, g);
  EXPECT_DOUBLE_EQ(containing_block_length(b, x, g, 2), 0.0);
  EXPECT_DOUBLE_EQ(containing_block_length(b, x, g, 0), 0.5);
}

TEST(Energy, RejectsExponentOutsideUnitInterval) {
  EXPECT_THROW(EnergyLedger({0.0}), std::invalid_argument);
  EXPECT_THROW(EnergyLedger({1.5}), std::invalid_argument);
}

TEST(Energy, SingleUnitBlock) {
  EnergyLedger l({1.0});
  l.record_lengths({1.0});
  EXPECT_DOUBLE_EQ(s_energy(l, 1.0), 1.0);
}

TEST(Energy, GeometricSeriesOfLengths) {
  EnergyLedger l({1.0, 0.5});
  double len = 1.0, expect_half = 0.0;
  while (len >= 1e-15) {
    l.record_lengths({len});
    expect_half += std::sqrt(len);
    len /= 2.0;
  }
  EXPECT_NEAR(l.total(1.0), 2.0, 1e-12);
  EXPECT_NEAR(l.total(0.5), expect_half, 1e-12);
  EXPECT_NEAR(l.total(0.5), 1.0 / (1.0 - std::sqrt(0.5)), 1e-6);
}

TEST(Energy, TotalsMatchRecomputationAndMaxVariant) {
  CounterRng rng = CounterRng::stream(3, 0);
  EnergyLedger l({0.25, 1.0});
  double sum1 = 0.0, max1 = 0.0;
  for (int t = 0; t < 300; ++t) {
    std::vector<double> lens;
    double top = 0.0;
    for (int k = 0; k < 4; ++k) {
      lens.push_back(rng.uniform());
      sum1 += lens.back();
      top = std::max(top, lens.back());
    }
    max1 += top;
    l.record_lengths(lens);
  }
  EXPECT_NEAR(l.total(1.0), sum1, 1e-9);
  EXPECT_NEAR(l.total_max(1.0), max1, 1e-9);
  EXPECT_NEAR(l.total(0.25), l.recompute(0.25), 1e-9);
  EXPECT_NEAR(l.total_max(0.25), l.recompute_max(0.25), 1e-9);
}

TEST(Energy, NonDecreasingInRunLength) {
  CounterRng rng = CounterRng::stream(4, 0);
  EnergyLedger l({0.5});
  double prev = 0.0;
  auto x = random_vector(10, rng);
  for (int t = 0; t < 100; ++t) {
    Graph g = random_graph(10, 0.2, rng);
    l.record(compute_blocks(x, g));
    x = build_system(g, 0.1).apply(x);
    EXPECT_GE(l.total(0.5), prev);
    prev = l.total(0.5);
  }
}

TEST(Dirichlet, HandExamples) {
  EXPECT_DOUBLE_EQ(dirichlet_form(std::vector<double>{0.0, 1.0}, Graph(2, {})), 0.0);
  Graph g(2, {{0, 1}});
  std::vector<double> x{0.0, 1.0};
  EXPECT_DOUBLE_EQ(dirichlet_form(x, g), 2.0);
  ReversibleSystem sys = build_system(g, 0.5);
  auto y = sys.apply(x);
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
  EXPECT_DOUBLE_EQ(q_norm2(sys.q(), x) - q_norm2(sys.q(), y), 1.0);
}

TEST(Dirichlet, NormDropsByHalfTheFormOnRandomInstances) {
  CounterRng rng = CounterRng::stream(77, 0);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 49);
    Graph g = random_graph(n, rng.uniform(0.02, 0.5), rng);
    auto a = random_weights(g, rng);
    auto p = oracle::agreement_matrix(g, a);
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = 1.0 / a[i];
    auto x = random_vector(n, rng);
    const double lhs = oracle::weighted_norm2(q, oracle::multiply(p, x));
    ASSERT_LE(lhs, oracle::weighted_norm2(q, x) - dirichlet_form(x, g) / 2.0 + 1e-9);
  }
}

TEST(Bounds, Theorem2Values) {
  EXPECT_DOUBLE_EQ(theorem2_bound(1, 1, 0.5, 1.0), 2.0);
  EXPECT_NEAR(theorem2_bound(10, 2, 0.1, 0.5), 4e6, 1e-6);
  const double one = theorem2_bound(10, 1, 0.1, 0.5);
  EXPECT_NEAR(theorem2_bound(10, 2, 0.1, 0.5), one * one, 1e-6);
  EXPECT_THROW(theorem2_bound(10, 11, 0.1, 0.5), std::invalid_argument);
  EXPECT_THROW(theorem2_bound(10, 1, 0.6, 0.5), std::invalid_argument);
  EXPECT_THROW(theorem2_bound(10, 1, 0.1, 0.5, 0.0), std::invalid_argument);
}

TEST(Bounds, RecurrenceMatchesClosedFormForOneComponent) {
  const double alpha = 1.0 - 0.1 / (2.0 * 100.0);
  EXPECT_NEAR(energy_recurrence_bound(10, 1, 0.1, 1.0), 2.0 / (1.0 - std::sqrt(alpha)), 1e-9);
  EXPECT_GT(energy_recurrence_bound(10, 2, 0.1, 1.0), energy_recurrence_bound(10, 1, 0.1, 1.0));
}

TEST(CoverLength, StaticConnectedGraphUsesFirstStep) {
  Graph g = path_graph(4);
  std::vector<double> a(4, 0.25);
  auto h = simulate_agreement({1.0, 0.0, 0.0, 0.0}, std::vector<Graph>(5, g), a);
  auto rep = check_cover_length(h, std::vector<double>(4, 4.0), 0.25);
  EXPECT_EQ(rep.t_c, 1u);
  EXPECT_TRUE(rep.applicable);
  EXPECT_TRUE(rep.holds);
  EXPECT_TRUE(rep.telescope_available);
  EXPECT_TRUE(rep.telescope_holds);
}

TEST(CoverLength, TwoNodeHandValues) {
  Graph g(2, {{0, 1}});
  auto h = simulate_agreement({0.0, 1.0}, {g, g}, std::vector<double>{0.5, 0.5});
  auto rep = check_cover_length(h, std::vector<double>{2.0, 2.0}, 0.5);
  EXPECT_TRUE(rep.applicable);
  // D(0) = 2 and D(1) = 0 after the states meet.
  EXPECT_DOUBLE_EQ(rep.dirichlet_sum, 2.0);
  // rho / n^2 * ||x - xhat||_q^2 with variance 2 * (1/4 + 1/4) = 1.
  EXPECT_DOUBLE_EQ(rep.rhs, 0.125);
  EXPECT_TRUE(rep.holds);
}

TEST(CoverLength, DisconnectedUnionIsNotApplicable) {
  Graph g(3, {{0, 1}});
  auto h = simulate_agreement({0.0, 1.0, 2.0}, {g, g, g}, std::vector<double>(3, 0.25));
  auto rep = check_cover_length(h, std::vector<double>(3, 4.0), 0.25);
  EXPECT_FALSE(rep.applicable);
  EXPECT_FALSE(rep.holds);
}

TEST(CoverLength, HoldsWhenUnionConnectsLate) {
  CounterRng rng = CounterRng::stream(8, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform() * 10);
    std::vector<Graph> graphs;
    // Random sparse graphs followed by a spanning path so the union connects.
    const std::size_t pre = static_cast<std::size_t>(rng.uniform() * 6);
    for (std::size_t t = 0; t < pre; ++t) graphs.push_back(random_graph(n, 0.1, rng));
    graphs.push_back(path_graph(n));
    for (int t = 0; t < 3; ++t) graphs.push_back(random_graph(n, 0.1, rng));
    const double rho = 1.0 / static_cast<double>(n);
    std::vector<double> a(n, rho);
    auto h = simulate_agreement(random_vector(n, rng), graphs, a);
    auto rep = check_cover_length(h, std::vector<double>(n, 1.0 / rho), rho);
    ASSERT_TRUE(rep.applicable);
    EXPECT_TRUE(rep.holds) << rep.dirichlet_sum << " < " << rep.rhs;
    ASSERT_TRUE(rep.telescope_available);
    EXPECT_TRUE(rep.telescope_holds) << rep.telescope_lhs << " < " << rep.telescope_rhs;
  }
}
