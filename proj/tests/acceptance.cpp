// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ras/ras.hpp"

using namespace ras;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Tolerances and budgets.
constexpr double kDirichSlack = 1e-9;
constexpr double kTwoNodeTol = 1e-12;
constexpr double kSpectralTol = 1e-9;
constexpr double kLowerBoundSlack = 1e-12;
constexpr double kSlopeTarget = 1.0;
constexpr double kSlopeTol = 0.15;
constexpr double kTheorem2MaxC = 10.0;
constexpr double kTheorem3MinC = 0.1;
constexpr double kPhaseOneTol = 1e-9;
constexpr double kLimitTol = 1e-8;
constexpr double kIdentityTol = 1e-9;
constexpr double kFlatness = 0.05;

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto start = Clock::now();
  CounterRng rng = CounterRng::stream(1001, 0);
  double worst = -1e300;
  std::size_t violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 49.0);
    const Graph g = random_graph(n, rng.uniform(0.02, 0.6), rng);
    const auto a = random_weights(g, rng, 0.01);
    const ReversibleSystem sys = build_system(g, a);
    const auto x = random_vector(n, rng, -rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0));
    const double slack = q_norm2(sys.q(), sys.apply(x)) - q_norm2(sys.q(), x) + dirichlet_form(x, g) / 2.0;
    worst = std::max(worst, slack);
    if (slack > kDirichSlack) ++violations;
  }
  const double secs = seconds_since(start);
  return {violations == 0 && secs < 10.0,
          fmt::format("1000 instances, {} violations, max slack {:.3g}, {:.2f}s", violations, worst, secs)};
}

Outcome criterion2() {
  const auto start = Clock::now();
  bool ok = true;
  double worst_two = 0.0, worst_spectral = 0.0, worst_lb = 0.0;
  {
    PathSpectralModel model(2, 0.1);
    const auto sim = simulate_path_diameters(model, 200);
    for (std::size_t t = 1; t <= 200; ++t)
      worst_two = std::max(worst_two, std::abs(sim[t - 1] - std::pow(0.8, static_cast<double>(t - 1))));
    ok = ok && worst_two <= kTwoNodeTol;
  }
  for (std::size_t n : {8u, 16u, 32u, 64u}) {
    PathSpectralModel model(n, 0.1);
    const auto sim = simulate_path_diameters(model, 1000);
    for (std::size_t t = 1; t <= sim.size(); ++t) {
      worst_spectral = std::max(worst_spectral, std::abs(sim[t - 1] - path_diameter(model, t)));
      worst_lb = std::max(worst_lb, path_diameter_lower_bound(model, t) - sim[t - 1]);
    }
  }
  ok = ok && worst_spectral <= kSpectralTol && worst_lb <= kLowerBoundSlack;
  const double secs = seconds_since(start);
  return {ok && secs < 5.0,
          fmt::format("n=2 err {:.2g}, spectral err {:.2g}, lower-bound excess {:.2g}, {:.2f}s", worst_two, worst_spectral,
                      worst_lb, secs)};
}

Outcome criterion3() {
  std::vector<double> ns, es;
  std::string values;
  for (std::size_t n : {8u, 16u, 32u, 64u}) {
    const PathEnergy pe = path_s_energy(PathSpectralModel(n, 0.1), 1.0);
    ns.push_back(static_cast<double>(n));
    es.push_back(pe.energy);
    values += fmt::format(" E1({})={:.4g}", n, pe.energy);
  }
  const double slope = loglog_slope(ns, es);
  return {std::abs(slope - kSlopeTarget) <= kSlopeTol, fmt::format("log-log slope {:.4f};{}", slope, values)};
}

// One corpus run: measured energy, unit-variance normalized.
struct CorpusRun {
  std::string label;
  double n = 0, m = 0, rho = 0, s = 0, energy = 0;
};

// Orbit of a switching system until the diameter falls below 1e-10.
std::vector<CorpusRun> switching_run(const std::string& label, std::size_t n, std::size_t m, CounterRng& rng) {
  std::vector<double> a(n);
  for (auto& w : a) w = rng.uniform(0.5, 1.0) / static_cast<double>(n);
  const double rho = *std::min_element(a.begin(), a.end());
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = 1.0 / a[i];
  std::vector<double> x = random_vector(n, rng);
  const double var = q_variance(q, x);
  EnergyLedger ledger({0.5, 1.0}, false);
  std::size_t max_components = 0;
  for (std::size_t t = 0; t < 2000000 && diameter(x) >= 1e-10; ++t) {
    // m groups from a random permutation, each joined by a random tree.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform() * (i + 1))]);
    std::vector<Edge> edges;
    for (std::size_t g = 0; g < m; ++g) {
      const std::size_t lo = g * n / m, hi = (g + 1) * n / m;
      for (std::size_t i = lo + 1; i < hi; ++i) {
        const std::size_t parent = lo + static_cast<std::size_t>(rng.uniform() * (i - lo));
        edges.emplace_back(perm[i], perm[parent]);
      }
    }
    const Graph gt(n, std::move(edges));
    max_components = std::max(max_components, gt.component_count());
    ledger.record(compute_blocks(x, gt));
    x = build_system(gt, a).apply(x);
  }
  std::vector<CorpusRun> out;
  for (double s : {0.5, 1.0})
    out.push_back({label, static_cast<double>(n), static_cast<double>(max_components), rho, s,
                   ledger.total(s) / std::pow(var, s / 2.0)});
  return out;
}

Outcome criterion4() {
  std::vector<CorpusRun> corpus;
  for (std::size_t n : {8u, 16u, 32u, 64u}) {
    const double rho = 0.1;
    const std::vector<double> q(n, 1.0 / rho);
    std::vector<double> x0(n, 0.0);
    x0[0] = 1.0;
    const double var = q_variance(q, x0);
    for (double s : {0.5, 1.0}) {
      const PathEnergy pe = path_s_energy(PathSpectralModel(n, rho), s);
      corpus.push_back({fmt::format("path n={}", n), static_cast<double>(n), 1, rho, s, pe.energy / std::pow(var, s / 2.0)});
    }
  }
  CounterRng rng = CounterRng::stream(4004, 0);
  for (std::size_t m : {1u, 2u, 3u})
    for (std::size_t n : {8u, 16u, 32u, 64u})
      for (int rep = 0; rep < 2; ++rep) {
        auto runs = switching_run(fmt::format("switching n={} m={}", n, m), n, m, rng);
        corpus.insert(corpus.end(), runs.begin(), runs.end());
      }
  for (auto [n, m] : {std::pair{8u, 2u}, std::pair{16u, 2u}, std::pair{12u, 3u}}) {
    const RecursiveSchedule sched = build_recursive_schedule(n, m, 0.1);
    const ReplayResult res = replay_schedule(sched, {0.5, 1.0});
    const std::vector<double> q(n, 1.0 / sched.rho);
    const double var = q_variance(q, sched.initial);
    for (double s : {0.5, 1.0})
      corpus.push_back({fmt::format("schedule n={} m={}", n, m), static_cast<double>(n),
                        static_cast<double>(res.max_components), sched.rho, s,
                        res.energy_for(s) / std::pow(var, s / 2.0)});
  }
  double c_fit = 0.0;
  std::string worst;
  bool within = true;
  for (const auto& r : corpus) {
    if (r.m > 3 || r.n > 64) within = false;
    const double c = r.rho * r.s * std::pow(r.energy, 1.0 / r.m) / (r.n * r.n);
    if (c > c_fit) {
      c_fit = c;
      worst = fmt::format("{} s={}", r.label, r.s);
    }
  }
  bool bounded = true;
  for (const auto& r : corpus)
    if (r.energy > theorem2_bound(r.n, r.m, std::min(0.5, r.rho), r.s, c_fit) * (1.0 + 1e-12)) bounded = false;
  return {within && bounded && c_fit <= kTheorem2MaxC,
          fmt::format("{} runs, fitted c = {:.4g} (largest from {})", corpus.size(), c_fit, worst)};
}

Outcome criterion5() {
  bool ok = true;
  double c_min = 1e300;
  std::string detail;
  for (auto [n, m] : {std::pair{8u, 2u}, std::pair{16u, 2u}, std::pair{16u, 4u}}) {
    const double rho = 0.1;
    const RecursiveSchedule sched = build_recursive_schedule(n, m, rho);
    const ReplayResult res = replay_schedule(sched, {0.5, 1.0});
    const double phase1 = res.first_step_lengths.size() == 1 ? res.first_step_lengths[0] : -1.0;
    if (std::abs(phase1 - 1.0) > kPhaseOneTol) ok = false;
    for (double s : {0.5, 1.0}) {
      const double e = res.energy_for(s);
      const double nm = static_cast<double>(n) / static_cast<double>(m);
      const double md = static_cast<double>(m);
      const double c = s * std::pow(rho, 1.0 - s) * std::pow(e, 1.0 / md) / std::pow(nm, ((1.0 - s) * md + 1.0) / md);
      c_min = std::min(c_min, c);
      detail += fmt::format(" ({},{},s={}) E={:.4g}", n, m, s, e);
    }
  }
  // Every case must clear the bound evaluated at the single fitted constant.
  for (auto [n, m] : {std::pair{8u, 2u}, std::pair{16u, 2u}, std::pair{16u, 4u}}) {
    const RecursiveSchedule sched = build_recursive_schedule(n, m, 0.1);
    const ReplayResult res = replay_schedule(sched, {0.5, 1.0});
    for (double s : {0.5, 1.0})
      if (res.energy_for(s) < theorem3_bound(n, m, 0.1, s, c_min) * (1.0 - 1e-12)) ok = false;
  }
  ok = ok && c_min >= kTheorem3MinC;
  return {ok, fmt::format("fitted c = {:.4g}, phase-1 energy 1;{}", c_min, detail)};
}

struct FlockCorpus {
  std::vector<FlockRun> runs;
};

const FlockCorpus& flock_corpus() {
  static const FlockCorpus corpus = [] {
    FlockCorpus c;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const std::size_t n = 2 + seed % 9;
      FlockConfig cfg = make_flock_config(n, 0.5, 0.05, 10000);
      CounterRng rng = CounterRng::stream(6000 + seed, 0);
      auto [x, v] = sample_initial_conditions(cfg, rng);
      c.runs.push_back(simulate_flock(cfg, std::move(x), std::move(v)));
    }
    return c;
  }();
  return corpus;
}

Outcome criterion6() {
  std::size_t stabilized = 0, rate_ok = 0, limit_ok = 0, flocks = 0;
  double worst_limit = 0.0;
  std::size_t latest = 0;
  for (const FlockRun& run : flock_corpus().runs) {
    const StabilizationReport rep = detect_stabilization(run, 5000);
    if (!rep.stabilized) continue;
    ++stabilized;
    latest = std::max(latest, rep.t_stable);
    bool rates = true, limits = true;
    for (const FlockLimit& f : rep.flocks) {
      ++flocks;
      // a flock that hits exact consensus within two steps leaves no fit; that is faster than any exponential
      const bool collapsed = f.diameter.back() <= 1e-12;
      if (f.members.size() > 1 && f.diameter.front() > 1e-12 && !(f.decay.rate < 0.0) && !collapsed) rates = false;
      for (std::size_t i : f.members)
        for (std::size_t c = 0; c < 3; ++c) {
          const double err = std::abs(run.v.back()[i][c] - f.limit_velocity[c]);
          worst_limit = std::max(worst_limit, err);
          if (err > kLimitTol) limits = false;
        }
    }
    rate_ok += rates;
    limit_ok += limits;
  }
  const std::size_t total = flock_corpus().runs.size();
  return {stabilized == total && rate_ok == total && limit_ok == total,
          fmt::format("{}/{} stabilized (latest switch t={}), {} flocks, decay fits ok {}/{}, limit error {:.3g}",
                      stabilized, total, latest, flocks, rate_ok, total, worst_limit)};
}

Outcome criterion7() {
  std::size_t traces = 0, identity_bad = 0, monotone_bad = 0, empty_bad = 0, switch_free = 0;
  double worst = 0.0;
  const auto examine = [&](const FlockRun& run) {
    const bool no_switch = run.log.events.empty();
    if (no_switch) ++switch_free;
    for (double alpha : {0.05, 0.005})
      for (std::size_t axis = 0; axis < 3; ++axis) {
        const TraceResult tr = backward_trace(run, alpha, 0, axis);
        ++traces;
        worst = std::max(worst, tr.identity_error());
        if (tr.identity_error() > kIdentityTol) ++identity_bad;
        if (!tr.monotone_on_R()) ++monotone_bad;
        if (no_switch && !tr.R.empty()) ++empty_bad;
      }
  };
  for (const FlockRun& run : flock_corpus().runs) examine(run);
  // Birds spread along a line more than r apart with slow velocities never link.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 2 + seed % 3;
    FlockConfig cfg = make_flock_config(n, 0.5, 0.05, 300);
    CounterRng rng = CounterRng::stream(7000 + seed, 0);
    std::vector<Vec3> x(n), v(n);
    const double vmax = std::sqrt(cfg.rho() / static_cast<double>(n)) / std::sqrt(3.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = {-0.99 + 0.99 * static_cast<double>(i), 0.0, 0.0};
      v[i] = {rng.uniform(-vmax, vmax) * 1e-3, rng.uniform(-vmax, vmax), rng.uniform(-vmax, vmax)};
    }
    examine(simulate_flock(cfg, x, v));
  }
  return {identity_bad == 0 && monotone_bad == 0 && empty_bad == 0 && switch_free > 0,
          fmt::format("{} traces, identity error max {:.3g}, monotonicity failures {}, switch-free runs {} with "
                      "nonempty R {}",
                      traces, worst, monotone_bad, switch_free, empty_bad)};
}

Outcome criterion8() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (double p : {1.0, 0.7, 0.5}) {
    std::vector<double> replica_means;
    double c = 0.0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      SwarmScenario sc = make_path_scenario(10, CounterRng::stream(8000, r));
      SwarmConfig cfg;
      cfg.graph = sc.graph;
      cfg.pinned = sc.pinned;
      cfg.a = default_swarm_weights(sc.graph, sc.pinned, PinningMode::Mirror);
      cfg.p = p;
      cfg.seed = 8000;
      cfg.stream = r;
      cfg.max_steps = 500;
      const SwarmRun run = run_swarm(cfg, sc.x0);
      c = contraction_constant(run.rho, p, static_cast<double>(run.max_degree), static_cast<double>(run.size));
      replica_means.push_back(std::accumulate(run.contraction.begin(), run.contraction.end(), 0.0) /
                              static_cast<double>(run.contraction.size()));
    }
    const double k = static_cast<double>(replica_means.size());
    const double mean = std::accumulate(replica_means.begin(), replica_means.end(), 0.0) / k;
    double var = 0.0;
    for (double m : replica_means) var += (m - mean) * (m - mean);
    const double se = std::sqrt(var / (k - 1.0) / k);
    const double limit = 1.0 - c / 2.0 + 3.0 * se;
    if (!(mean <= limit)) ok = false;
    detail += fmt::format(" p={}: mean {:.6f} <= {:.6f}", p, mean, limit);
  }
  const double secs = seconds_since(start);
  return {ok && secs < 60.0, fmt::format("{};{:.2f}s", detail, secs)};
}

Outcome criterion9() {
  const auto start = Clock::now();
  SwarmScenario sc = make_grid_scenario(30, 30, CounterRng::stream(2024, 0).child(~std::uint64_t{0}));
  SwarmConfig cfg;
  cfg.graph = sc.graph;
  cfg.pinned = sc.pinned;
  cfg.a = default_swarm_weights(sc.graph, sc.pinned, PinningMode::Mirror);
  cfg.p = 0.7;
  cfg.seed = 2024;
  cfg.max_steps = 200;
  const SwarmRun run = run_swarm(cfg, sc.x0);
  const double secs = seconds_since(start);
  const double flat = run.max_free_abs_x();
  return {flat < kFlatness && secs < 30.0 && sc.pinned.size() == 60,
          fmt::format("free-robot max |X| = {:.4f} (threshold {}), a = {:.3g}, {:.2f}s", flat, kFlatness, cfg.a[0],
                      secs)};
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion10() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "rasim-acceptance-determinism";
  fs::remove_all(root);
  std::vector<std::string> configs{
      "mode = flock\nseed = 11\nn = 8\nmax_steps = 500\nreplicas = 3\n",
      "mode = lower-bound\nn = 32\ns_values = 0.5,1\n",
      "mode = lower-bound\nn = 12\nm = 3\nmax_rounds = 4\ns_values = 0.5,1\n",
      "mode = swarm\nseed = 5\nrows = 10\ncols = 10\np = 0.7\nmax_steps = 100\nreplicas = 2\n",
  };
  configs.push_back("mode = ras-replay\nschedule = " + (root / "c2-a" / "schedule_000.txt").string() + "\n");
  std::size_t files = 0, differing = 0;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const ScenarioConfig c = parse_config_string(configs[k]);
    const fs::path a = root / fmt::format("c{}-a", k), b = root / fmt::format("c{}-b", k);
    run_scenario(c, a);
    run_scenario(c, b);
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      const fs::path other = b / entry.path().filename();
      if (!fs::exists(other) || read_all(entry.path()) != read_all(other)) ++differing;
    }
  }
  return {differing == 0 && files > 0,
          fmt::format("{} scenarios across all modes, {} files compared, {} differ", configs.size(), files, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"dirichlet lemma on random instances", criterion1},
      {"path-graph diameter exactness", criterion2},
      {"path s-energy grows linearly in n", criterion3},
      {"upper bound with one fitted constant", criterion4},
      {"recursive schedule lower bound", criterion5},
      {"flocking stabilization", criterion6},
      {"backward trace identity and monotonicity", criterion7},
      {"swarm expected contraction", criterion8},
      {"30x30 pinned grid flattens in 200 steps", criterion9},
      {"byte-identical reruns", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failures;
    fmt::print("{} {:>2} {}: {}\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
