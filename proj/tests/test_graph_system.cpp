#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ras/checks.hpp"
#include "ras/graph.hpp"
#include "ras/rng.hpp"
#include "ras/state.hpp"
#include "ras/system.hpp"

using namespace ras;

TEST(Rng, CounterDrawsAreRandomAccess) {
  CounterRng a = CounterRng::stream(42, 3);
  std::vector<std::uint64_t> seq;
  for (int k = 0; k < 10; ++k) seq.push_back(a.next());
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.at(k), seq[k]);
  EXPECT_NE(CounterRng::stream(42, 3).next(), CounterRng::stream(42, 4).next());
  EXPECT_NE(CounterRng::stream(42, 3).next(), CounterRng::stream(43, 3).next());
}

TEST(Rng, UniformMeanAndRange) {
  CounterRng r = CounterRng::stream(7, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, BallSamplesStayInside) {
  CounterRng r = CounterRng::stream(1, 1);
  for (int i = 0; i < 1000; ++i) {
    auto p = r.in_ball(0.3);
    EXPECT_LE(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]), 0.3);
  }
}

TEST(Graph, RejectsSelfLoopsAndBadEndpoints) {
  EXPECT_THROW(Graph(3, {{1, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 3}}), std::invalid_argument);
}

TEST(Graph, DeduplicatesAndOrdersEdges) {
  Graph g(4, {{2, 1}, {1, 2}, {0, 3}});
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_TRUE(g.has_edge(2, 1));
  EXPECT_FALSE(g.has_edge(0, 1));
  EXPECT_EQ(g.degree(3), 1u);
}

TEST(Graph, ComponentsMatchSearchOracle) {
  CounterRng rng = CounterRng::stream(11, 0);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 30);
    Graph g = random_graph(n, rng.uniform(0.0, 0.3), rng);
    EXPECT_EQ(g.component_count(), oracle::component_count(g));
    for (const auto& e : g.edges()) EXPECT_EQ(g.component_of(e.u), g.component_of(e.v));
  }
}

TEST(Graph, StandardFamilies) {
  EXPECT_EQ(path_graph(5).edge_count(), 4u);
  EXPECT_EQ(complete_graph(5).edge_count(), 10u);
  Graph grid = grid_graph(3, 4);
  EXPECT_EQ(grid.n(), 12u);
  EXPECT_EQ(grid.edge_count(), 3u * 3u + 2u * 4u);
  EXPECT_EQ(grid.max_degree(), 4u);
  EXPECT_EQ(grid.component_count(), 1u);
}

TEST(System, MatchesDefinitionOnRandomGraphs) {
  CounterRng rng = CounterRng::stream(5, 0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 20);
    Graph g = random_graph(n, rng.uniform(0.05, 0.5), rng);
    auto a = random_weights(g, rng);
    ReversibleSystem sys = build_system(g, a);
    auto expect = oracle::agreement_matrix(g, a);
    auto got = sys.dense();
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_DOUBLE_EQ(sys.q()[i], 1.0 / a[i]);
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(got[i][j], expect[i][j], 1e-15);
    }
    EXPECT_LE(sys.row_sum_error(), 1e-12);
    EXPECT_LE(sys.detailed_balance_error(), 1e-12);
    EXPECT_FALSE(sys.has_negative_entry());
    auto x = random_vector(n, rng);
    auto y = sys.apply(x);
    auto z = oracle::multiply(expect, x);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], z[i], 1e-14);
  }
}

TEST(System, RejectsInadmissibleWeights) {
  Graph g = path_graph(3);
  EXPECT_THROW(build_system(g, std::vector<double>{0.3, 0.4, 0.3}), std::invalid_argument);
  EXPECT_THROW(build_system(g, std::vector<double>{0.0, 0.1, 0.1}), std::invalid_argument);
  EXPECT_THROW(build_system(g, std::vector<double>{0.1, 0.1}), std::invalid_argument);
  EXPECT_NO_THROW(build_system(g, std::vector<double>{0.5, 1.0 / 3.0, 0.5}));
}

TEST(System, ApplyRejectsWrongDimension) {
  ReversibleSystem sys = build_system(path_graph(4), 0.2);
  EXPECT_THROW(sys.apply(std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(System, FromSymmetricRecoversRowStochasticMatrix) {
  std::vector<SymmetricEntry> upper{{0, 0, 2.0}, {0, 1, 1.0}, {1, 1, 3.0}, {1, 2, 1.0}, {2, 2, 1.0}};
  ReversibleSystem sys = ReversibleSystem::from_symmetric(3, upper);
  EXPECT_DOUBLE_EQ(sys.q()[0], 3.0);
  EXPECT_DOUBLE_EQ(sys.q()[1], 5.0);
  EXPECT_DOUBLE_EQ(sys.q()[2], 2.0);
  EXPECT_DOUBLE_EQ(sys.entry(1, 0), 0.2);
  EXPECT_LE(sys.row_sum_error(), 1e-15);
  EXPECT_LE(sys.detailed_balance_error(), 1e-15);
}

TEST(State, WeightedStatistics) {
  std::vector<double> q{1.0, 3.0};
  std::vector<double> x{4.0, 0.0};
  EXPECT_DOUBLE_EQ(q_mean(q, x), 1.0);
  EXPECT_DOUBLE_EQ(q_norm2(q, x), 16.0);
  EXPECT_DOUBLE_EQ(q_variance(q, x), 9.0 + 3.0);
  EXPECT_DOUBLE_EQ(diameter(x), 4.0);
}

TEST(State, MeanConservedOverManySwitchingSteps) {
  CounterRng rng = CounterRng::stream(9, 0);
  const std::size_t n = 15;
  std::vector<double> a(n);
  for (auto& v : a) v = rng.uniform(0.01, 1.0 / static_cast<double>(n));
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = 1.0 / a[i];
  EmbeddedState s(random_vector(n, rng), q);
  const double m0 = s.mean();
  double drift = 0.0;
  for (int t = 0; t < 10000; ++t) {
    s = step(s, build_system(random_graph(n, 0.1, rng), a));
    drift = std::max(drift, std::abs(s.mean() - m0));
  }
  EXPECT_LE(drift, 1e-10);
}

TEST(State, ConvexHullShrinksAlongOrbits) {
  CounterRng rng = CounterRng::stream(10, 0);
  const std::size_t n = 20;
  std::vector<double> x = random_vector(n, rng);
  double lo = *std::min_element(x.begin(), x.end());
  double hi = *std::max_element(x.begin(), x.end());
  for (int t = 0; t < 2000; ++t) {
    Graph g = random_graph(n, 0.1, rng);
    x = build_system(g, random_weights(g, rng)).apply(x);
    const double nlo = *std::min_element(x.begin(), x.end());
    const double nhi = *std::max_element(x.begin(), x.end());
    ASSERT_GE(nlo, lo - 1e-15);
    ASSERT_LE(nhi, hi + 1e-15);
    lo = nlo;
    hi = nhi;
  }
}

TEST(State, MatrixPowerOracleAgreesWithIteration) {
  Graph g = path_graph(6);
  std::vector<double> a(6, 0.2);
  auto p = oracle::agreement_matrix(g, a);
  auto pk = p;
  for (int k = 1; k < 10; ++k) pk = oracle::multiply(pk, p);
  ReversibleSystem sys = build_system(g, a);
  std::vector<double> x{1, 0, 0, 0, 0, 0};
  auto y = x;
  for (int k = 0; k < 10; ++k) y = sys.apply(y);
  auto z = oracle::multiply(pk, x);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(y[i], z[i], 1e-14);
}
