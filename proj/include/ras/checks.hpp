#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ras/blocks.hpp"
#include "ras/energy.hpp"
#include "ras/flocking.hpp"
#include "ras/graph.hpp"
#include "ras/lower_bound.hpp"
#include "ras/rng.hpp"
#include "ras/state.hpp"
#include "ras/swarm.hpp"
#include "ras/system.hpp"

namespace ras {

/// Erdos-Renyi graph G(n, edge_p) drawn from `rng`.
inline Graph random_graph(std::size_t n, double edge_p, CounterRng& rng) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.uniform() < edge_p) edges.push_back({u, v});
  return Graph(n, std::move(edges));
}

/// Admissible weights a_i in [lo_fraction, 1] * 1/(deg_i + 1).
inline std::vector<double> random_weights(const Graph& g, CounterRng& rng, double lo_fraction = 0.05) {
  std::vector<double> a(g.n());
  for (std::size_t i = 0; i < g.n(); ++i)
    a[i] = rng.uniform(lo_fraction, 1.0) / static_cast<double>(g.degree(i) + 1);
  return a;
}

/// Uniform weight rho admissible for every graph on n vertices.
inline double universal_weight(std::size_t n) { return 1.0 / static_cast<double>(std::max<std::size_t>(n, 2)); }

inline std::vector<double> random_vector(std::size_t n, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(lo, hi);
  return x;
}

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

namespace detail {

inline CheckResult check_matrices(std::uint64_t seed, std::size_t trials) {
  CheckResult r{"stochastic, reversible, nonnegative matrices", true, ""};
  CounterRng rng = CounterRng::stream(seed, 1);
  double worst_row = 0.0, worst_bal = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 20.0);
    const Graph g = random_graph(n, rng.uniform(0.05, 0.6), rng);
    const ReversibleSystem sys = build_system(g, random_weights(g, rng));
    worst_row = std::max(worst_row, sys.row_sum_error());
    worst_bal = std::max(worst_bal, sys.detailed_balance_error());
    if (sys.has_negative_entry()) r.passed = false;
  }
  if (worst_row > 1e-12 || worst_bal > 1e-12) r.passed = false;
  r.detail = fmt::format("row-sum error {:.3g}, balance error {:.3g}", worst_row, worst_bal);
  return r;
}

inline CheckResult check_mean_conservation(std::uint64_t seed, std::size_t steps) {
  CheckResult r{"q-weighted mean conserved on switching graphs", true, ""};
  CounterRng rng = CounterRng::stream(seed, 2);
  const std::size_t n = 12;
  const double a = universal_weight(n);
  std::vector<double> x = random_vector(n, rng);
  const std::vector<double> q(n, 1.0 / a);
  const double m0 = q_mean(q, x);
  double drift = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const Graph g = random_graph(n, 0.15, rng);
    x = build_system(g, a).apply(x);
    drift = std::max(drift, std::abs(q_mean(q, x) - m0));
  }
  r.passed = drift <= 1e-10;
  r.detail = fmt::format("max drift {:.3g} over {} steps", drift, steps);
  return r;
}

inline CheckResult check_dirichlet(std::uint64_t seed, std::size_t trials) {
  CheckResult r{"one-step norm decrease by half the Dirichlet form", true, ""};
  CounterRng rng = CounterRng::stream(seed, 3);
  double worst = -1e300;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 15.0);
    const Graph g = random_graph(n, rng.uniform(0.1, 0.7), rng);
    const auto a = random_weights(g, rng);
    const ReversibleSystem sys = build_system(g, a);
    const auto x = random_vector(n, rng);
    const double slack = q_norm2(sys.q(), sys.apply(x)) - (q_norm2(sys.q(), x) - dirichlet_form(x, g) / 2.0);
    worst = std::max(worst, slack);
  }
  r.passed = worst <= 1e-10;
  r.detail = fmt::format("max slack {:.3g}", worst);
  return r;
}

inline CheckResult check_blocks(std::uint64_t seed, std::size_t trials) {
  CheckResult r{"blocks agree with brute-force interval union", true, ""};
  CounterRng rng = CounterRng::stream(seed, 4);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 10.0);
    const Graph g = random_graph(n, rng.uniform(0.1, 0.5), rng);
    std::vector<double> x(n);
    for (auto& v : x) v = std::round(rng.uniform(0.0, 8.0)) / 8.0;
    // Brute force: a fine grid of points covered by some edge interval.
    double total = 0.0;
    for (const Block& b : compute_blocks(x, g)) total += b.length();
    double covered = 0.0;
    const std::size_t cells = 64;
    for (std::size_t c = 0; c < cells; ++c) {
      const double mid = (static_cast<double>(c) + 0.5) / cells;
      for (const Edge& e : g.edges())
        if (std::min(x[e.u], x[e.v]) < mid && mid < std::max(x[e.u], x[e.v])) {
          covered += 1.0 / cells;
          break;
        }
    }
    if (std::abs(total - covered) > 1e-9) ++bad;
  }
  r.passed = bad == 0;
  r.detail = fmt::format("{} mismatches in {} instances", bad, trials);
  return r;
}

inline CheckResult check_ledger(std::uint64_t seed) {
  CheckResult r{"running energy totals match recomputation", true, ""};
  CounterRng rng = CounterRng::stream(seed, 5);
  const std::size_t n = 10;
  EnergyLedger ledger({0.5, 1.0});
  std::vector<double> x = random_vector(n, rng);
  for (std::size_t t = 0; t < 200; ++t) {
    const Graph g = random_graph(n, 0.2, rng);
    ledger.record(compute_blocks(x, g));
    x = build_system(g, universal_weight(n)).apply(x);
  }
  double err = 0.0;
  for (double s : {0.5, 1.0}) err = std::max(err, std::abs(ledger.total(s) - ledger.recompute(s)));
  r.passed = err <= 1e-9;
  r.detail = fmt::format("max difference {:.3g}", err);
  return r;
}

inline CheckResult check_flock(std::uint64_t seed) {
  CheckResult r{"flock velocity means fixed between switches", true, ""};
  FlockConfig cfg = make_flock_config(8, 0.5, 0.05, 300);
  CounterRng rng = CounterRng::stream(seed, 6);
  auto [x0, v0] = sample_initial_conditions(cfg, rng);
  const FlockRun run = simulate_flock(cfg, std::move(x0), std::move(v0));
  const auto q = run.q();
  double drift = 0.0;
  for (std::size_t t = 1; t <= run.steps(); ++t) {
    // v(t) = P_{t-1} v(t-1), so flock means of G_{t-1} are preserved.
    for (const auto& members : run.graphs[t - 1].components()) {
      const Vec3 before = q_mean_velocity(run.v[t - 1], q, members);
      const Vec3 after = q_mean_velocity(run.v[t], q, members);
      for (std::size_t c = 0; c < 3; ++c) drift = std::max(drift, std::abs(after[c] - before[c]));
    }
  }
  r.passed = drift <= 1e-12;
  r.detail = fmt::format("max drift {:.3g}", drift);
  if (run.steps() >= 2) {
    const TraceResult tr = backward_trace(run, cfg.eps_o / 10.0);
    if (tr.identity_error() > 1e-9 || !tr.monotone_on_R()) {
      r.passed = false;
      r.detail += fmt::format(", trace identity error {:.3g}", tr.identity_error());
    }
  }
  return r;
}

inline CheckResult check_swarm(std::uint64_t seed) {
  CheckResult r{"mirrored swarm keeps pinned plane and antisymmetry", true, ""};
  CounterRng init = CounterRng::stream(seed, 7);
  SwarmScenario sc = make_grid_scenario(5, 6, init);
  SwarmConfig cfg;
  cfg.graph = sc.graph;
  cfg.pinned = sc.pinned;
  cfg.a = default_swarm_weights(sc.graph, sc.pinned, PinningMode::Mirror);
  cfg.p = 0.6;
  cfg.seed = seed;
  cfg.max_steps = 300;
  const SwarmRun run = run_swarm(cfg, sc.x0);
  r.passed = run.max_pinned_offset <= 1e-12 && run.max_antisymmetry_error <= 1e-12 && run.qnorm_monotone;
  r.detail = fmt::format("pinned offset {:.3g}, antisymmetry {:.3g}, monotone {}", run.max_pinned_offset,
                         run.max_antisymmetry_error, run.qnorm_monotone);
  return r;
}

inline CheckResult check_schedule(std::uint64_t) {
  CheckResult r{"recursive schedule serializes losslessly", true, ""};
  ScheduleOptions opt;
  opt.max_rounds = 2;
  const RecursiveSchedule s = build_recursive_schedule(8, 2, 0.1, opt);
  std::ostringstream a;
  write_schedule(a, s);
  std::istringstream in(a.str());
  std::ostringstream b;
  write_schedule(b, read_schedule(in));
  r.passed = a.str() == b.str();
  const ReplayResult res = replay_schedule(s, {1.0});
  if (res.max_components > 2 || res.max_mean_drift > 1e-9) r.passed = false;
  r.detail = fmt::format("{} steps, max components {}, mean drift {:.3g}", res.steps, res.max_components,
                         res.max_mean_drift);
  return r;
}

}  // namespace detail

/// Randomized invariant suite behind `rasim check`.
inline std::vector<CheckResult> run_invariant_checks(std::uint64_t seed) {
  return {detail::check_matrices(seed, 500), detail::check_mean_conservation(seed, 10000),
          detail::check_dirichlet(seed, 1000),  detail::check_blocks(seed, 1000),
          detail::check_ledger(seed),           detail::check_flock(seed),
          detail::check_swarm(seed),            detail::check_schedule(seed)};
}

}  // namespace ras
