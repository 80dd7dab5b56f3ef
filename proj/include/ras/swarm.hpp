#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ras/blocks.hpp"
#include "ras/energy.hpp"
#include "ras/flocking.hpp"
#include "ras/graph.hpp"
#include "ras/rng.hpp"
#include "ras/state.hpp"
#include "ras/system.hpp"

namespace ras {

enum class PinningMode {
  Mirror,      // doubled graph glued at the pinned set
  ZeroWeight,  // pinned rows frozen; not a reversible system
};

struct SwarmConfig {
  Graph graph;                       // connected communication network
  std::vector<std::size_t> pinned;   // vertices held on the plane X = 0
  std::vector<double> a;             // per-vertex weight of the base graph
  double p = 1.0;                    // edge retention probability
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;          // replica index
  std::size_t max_steps = 200;
  std::vector<double> alphas{0.1, 0.03, 0.01};
  std::vector<double> exponents{1.0};
  PinningMode pinning = PinningMode::Mirror;
  bool keep_trajectory = false;

  void validate() const {
    const std::size_t n = graph.n();
    if (n == 0) throw std::invalid_argument("swarm: empty graph");
    if (graph.component_count() != 1) throw std::invalid_argument("swarm: base graph must be connected");
    if (pinned.empty()) throw std::invalid_argument("swarm: pinned set is empty");
    std::vector<char> seen(n, 0);
    for (std::size_t i : pinned) {
      if (i >= n) throw std::invalid_argument("swarm: pinned vertex " + std::to_string(i) + " out of range");
      if (seen[i]++) throw std::invalid_argument("swarm: pinned vertex " + std::to_string(i) + " listed twice");
    }
    if (a.size() != n) throw std::invalid_argument("swarm: expected one weight per vertex");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("swarm: p must lie in (0, 1]");
    for (double al : alphas)
      if (!(al > 0.0)) throw std::invalid_argument("swarm: alpha values must be positive");
    for (double s : exponents) require_exponent(s);
  }
};

/// Base graph doubled by a mirror copy glued along the pinned set.
///
/// Original vertex i keeps index i. The copy of the k-th free vertex (in
/// increasing order) gets index n + k; a pinned vertex is its own mirror.
struct SymmetrizedSystem {
  std::size_t n = 0;   // base vertices
  std::size_t nu = 0;  // 2n - r
  Graph graph;
  std::vector<std::size_t> mirror;
  std::vector<char> pinned;
  std::vector<std::size_t> edge_origin;  // base-edge index for each doubled edge
  std::vector<Vec3> x0;
};

/// Doubles (G, R, x0): the copy gets X negated, Y and Z duplicated. Pinned
/// vertices are placed on X = 0.
inline SymmetrizedSystem symmetrize(const Graph& g, std::span<const std::size_t> pinned_set, std::span<const Vec3> x0) {
  const std::size_t n = g.n();
  if (pinned_set.empty()) throw std::invalid_argument("symmetrize: pinned set is empty");
  if (x0.size() != n) throw std::invalid_argument("symmetrize: initial embedding size differs from n");
  SymmetrizedSystem s;
  s.n = n;
  s.pinned.assign(n, 0);
  for (std::size_t i : pinned_set) {
    if (i >= n) throw std::invalid_argument("symmetrize: pinned vertex out of range");
    s.pinned[i] = 1;
  }
  const std::size_t r = static_cast<std::size_t>(std::count(s.pinned.begin(), s.pinned.end(), 1));
  s.nu = 2 * n - r;
  s.mirror.resize(s.nu);
  s.x0.resize(s.nu);
  std::size_t next = n;
  for (std::size_t i = 0; i < n; ++i) {
    s.x0[i] = x0[i];
    if (s.pinned[i]) {
      s.mirror[i] = i;
      s.x0[i][0] = 0.0;
    } else {
      s.mirror[i] = next;
      s.mirror[next] = i;
      s.x0[next] = {-x0[i][0], x0[i][1], x0[i][2]};
      ++next;
    }
  }
  s.pinned.resize(s.nu, 0);

  std::vector<std::pair<Edge, std::size_t>> tagged;
  const auto& base = g.edges();
  for (std::size_t e = 0; e < base.size(); ++e) {
    tagged.emplace_back(base[e], e);
    Edge m(s.mirror[base[e].u], s.mirror[base[e].v]);
    if (!(m == base[e])) tagged.emplace_back(m, e);
  }
  std::sort(tagged.begin(), tagged.end());
  std::vector<Edge> edges;
  for (auto& [edge, origin] : tagged) {
    edges.push_back(edge);
    s.edge_origin.push_back(origin);
  }
  s.graph = Graph(s.nu, std::move(edges));
  return s;
}

/// Keep-mask over the edges of g for step t: edge e survives iff the e-th
/// uniform of stream derive_key(key, t) is below p.
inline std::vector<char> sample_failures(const Graph& g, double p, std::uint64_t key, std::uint64_t t) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("sample_failures: p must lie in (0, 1]");
  const CounterRng rng(derive_key(key, t));
  std::vector<char> keep(g.edge_count());
  for (std::size_t e = 0; e < keep.size(); ++e) keep[e] = rng.uniform_at(e) < p ? 1 : 0;
  return keep;
}

inline Graph subgraph(const Graph& g, std::span<const char> keep) {
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < g.edge_count(); ++e)
    if (keep[e]) edges.push_back(g.edges()[e]);
  return Graph(g.n(), std::move(edges));
}

/// P_ij = a_i on surviving edges, P_ii = 1 - sum_j P_ij. Weights are checked
/// against the degrees of the full graph.
inline ReversibleSystem build_failure_matrix(const Graph& full, const Graph& surviving, std::span<const double> a) {
  validate_weights(full, a);
  return build_system(surviving, a);
}

// rho p / (2 d nu^2)
inline double contraction_constant(double rho, double p, double d, double nu) { return rho * p / (2.0 * d * nu * nu); }

/// (d^2 n^4 / (p^3 rho^2)) log(n / (rho eps)), times a caller constant.
inline double theorem4_bound(double n, double d, double p, double rho, double eps, double multiplier = 1.0) {
  if (!(n >= 1.0)) throw std::invalid_argument("theorem4_bound: n must be >= 1");
  if (!(d >= 1.0)) throw std::invalid_argument("theorem4_bound: d must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("theorem4_bound: p must lie in (0, 1]");
  if (!(rho > 0.0 && rho <= 0.5)) throw std::invalid_argument("theorem4_bound: rho must lie in (0, 1/2]");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("theorem4_bound: eps must lie in (0, 1)");
  if (!(multiplier > 0.0)) throw std::invalid_argument("theorem4_bound: multiplier must be positive");
  return multiplier * d * d * std::pow(n, 4) / (p * p * p * rho * rho) * std::log(n / (rho * eps));
}

struct ConvergenceStats {
  double alpha = 0.0;
  std::size_t n_alpha = 0;  // steps with some block longer than alpha
  std::size_t k_alpha = 0;  // steps with some surviving edge longer than alpha
  std::optional<std::size_t> t_alpha;  // last step with diameter above alpha
};

struct SwarmRow {
  std::size_t t = 0;
  double max_block = 0.0;
  double diameter = 0.0;
  double qnorm2 = 0.0;
  std::size_t retained = 0;  // surviving base-graph edges
};

struct SwarmRun {
  std::size_t n = 0;                  // base vertices
  std::size_t size = 0;               // simulated vertices (nu in mirror mode)
  std::size_t max_degree = 0;         // of the simulated graph
  double rho = 0.0;
  std::vector<std::size_t> mirror;    // empty in zero-weight mode
  std::vector<char> pinned;           // per simulated vertex
  std::vector<SwarmRow> rows;         // one per step, state before the step
  std::vector<ConvergenceStats> stats;
  std::vector<double> exponents;
  std::vector<double> energy;         // sum_t max_i l_i(t)^s
  std::vector<double> contraction;    // ||x(t+1)||_q^2 / ||x(t)||_q^2
  std::vector<Vec3> final_positions;
  std::vector<std::vector<Vec3>> trajectory;  // only with keep_trajectory
  double max_pinned_offset = 0.0;     // max |X| over pinned vertices and steps
  double max_antisymmetry_error = 0.0;
  bool qnorm_monotone = true;

  double max_free_abs_x() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!pinned[i]) m = std::max(m, std::abs(final_positions[i][0]));
    return m;
  }
};

namespace detail {

// Frozen pinned rows; free rows use P_ij = a_i on surviving edges.
inline void apply_zero_weight(const Graph& g, std::span<const double> a, std::span<const char> pinned,
                              std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < g.n(); ++i) {
    if (pinned[i]) {
      out[i] = in[i];
      continue;
    }
    double acc = 0.0;
    for (std::size_t j : g.neighbors(i)) acc += a[i] * (in[j] - in[i]);
    out[i] = in[i] + acc;
  }
}

}  // namespace detail

/// Runs the pinned swarm with iid edge failures and returns per-step rows,
/// convergence statistics and invariant measurements.
inline SwarmRun run_swarm(const SwarmConfig& cfg, std::span<const Vec3> x0) {
  cfg.validate();
  const std::size_t n = cfg.graph.n();
  const bool mirror = cfg.pinning == PinningMode::Mirror;

  Graph sim_graph;
  std::vector<std::size_t> origin;
  std::vector<double> a;
  std::vector<Vec3> x;
  SwarmRun run;
  run.n = n;
  if (mirror) {
    SymmetrizedSystem sym = symmetrize(cfg.graph, cfg.pinned, x0);
    sim_graph = sym.graph;
    origin = sym.edge_origin;
    x = sym.x0;
    run.mirror = sym.mirror;
    run.pinned = sym.pinned;
    a.resize(sym.nu);
    for (std::size_t i = 0; i < sym.nu; ++i) a[i] = cfg.a[i < n ? i : sym.mirror[i]];
  } else {
    if (x0.size() != n) throw std::invalid_argument("swarm: initial embedding size differs from n");
    sim_graph = cfg.graph;
    for (std::size_t e = 0; e < sim_graph.edge_count(); ++e) origin.push_back(e);
    x.assign(x0.begin(), x0.end());
    run.pinned.assign(n, 0);
    for (std::size_t i : cfg.pinned) {
      run.pinned[i] = 1;
      x[i][0] = 0.0;
    }
    a = cfg.a;
  }
  const std::size_t size = sim_graph.n();
  run.size = size;
  run.max_degree = sim_graph.max_degree();
  validate_weights(sim_graph, a);
  run.rho = *std::min_element(a.begin(), a.end());

  std::vector<double> q(size);
  for (std::size_t i = 0; i < size; ++i) q[i] = (mirror || !run.pinned[i]) ? 1.0 / a[i] : 0.0;

  const std::uint64_t key = CounterRng::stream(cfg.seed, cfg.stream).key();
  run.exponents = cfg.exponents;
  run.energy.assign(cfg.exponents.size(), 0.0);
  for (double al : cfg.alphas) run.stats.push_back({al, 0, 0, std::nullopt});

  std::vector<double> col(size), out(size);
  const auto xs = [&] { return coordinate(x, 0); };
  const auto observe_invariants = [&](std::span<const double> X) {
    for (std::size_t i = 0; i < size; ++i) {
      if (run.pinned[i]) run.max_pinned_offset = std::max(run.max_pinned_offset, std::abs(X[i]));
      if (mirror) run.max_antisymmetry_error = std::max(run.max_antisymmetry_error, std::abs(X[i] + X[run.mirror[i]]));
    }
  };
  const auto note_diameter = [&](std::size_t t, double diam) {
    for (auto& st : run.stats)
      if (diam > st.alpha) st.t_alpha = t;
  };

  for (std::size_t t = 0; t < cfg.max_steps; ++t) {
    if (cfg.keep_trajectory) run.trajectory.push_back(x);
    const auto keep = sample_failures(cfg.graph, cfg.p, key, t);
    std::vector<char> sim_keep(sim_graph.edge_count());
    for (std::size_t e = 0; e < sim_keep.size(); ++e) sim_keep[e] = keep[origin[e]];
    const Graph gt = subgraph(sim_graph, sim_keep);

    const auto X = xs();
    observe_invariants(X);
    const auto blocks = compute_blocks(X, gt);
    SwarmRow row;
    row.t = t;
    row.max_block = max_block_length(blocks);
    row.diameter = diameter(X);
    row.qnorm2 = q_norm2(q, X);
    row.retained = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
    run.rows.push_back(row);

    double longest_edge = 0.0;
    for (const Edge& e : gt.edges()) longest_edge = std::max(longest_edge, std::abs(X[e.u] - X[e.v]));
    for (auto& st : run.stats) {
      if (row.max_block > st.alpha) ++st.n_alpha;
      if (longest_edge > st.alpha) ++st.k_alpha;
    }
    note_diameter(t, row.diameter);
    for (std::size_t k = 0; k < cfg.exponents.size(); ++k)
      if (row.max_block > 0.0) run.energy[k] += std::pow(row.max_block, cfg.exponents[k]);

    if (mirror) {
      const ReversibleSystem sys = build_failure_matrix(sim_graph, gt, a);
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < size; ++i) col[i] = x[i][c];
        sys.apply(col, out);
        for (std::size_t i = 0; i < size; ++i) x[i][c] = out[i];
      }
    } else {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < size; ++i) col[i] = x[i][c];
        detail::apply_zero_weight(gt, a, run.pinned, col, out);
        for (std::size_t i = 0; i < size; ++i) x[i][c] = out[i];
      }
    }
    const double after = q_norm2(q, coordinate(x, 0));
    if (row.qnorm2 > 0.0) run.contraction.push_back(after / row.qnorm2);
    if (after > row.qnorm2 * (1.0 + 1e-12) + 1e-300) run.qnorm_monotone = false;
  }
  const auto X = xs();
  observe_invariants(X);
  note_diameter(cfg.max_steps, diameter(X));
  if (cfg.keep_trajectory) run.trajectory.push_back(x);
  run.final_positions = std::move(x);
  return run;
}

/// Uniform weight factor/(d+1) where d is the largest degree of the graph
/// that will actually be simulated for this pinning mode.
inline std::vector<double> default_swarm_weights(const Graph& g, std::span<const std::size_t> pinned, PinningMode mode,
                                                 double factor = 1.0) {
  std::size_t d = g.max_degree();
  if (mode == PinningMode::Mirror) {
    std::vector<Vec3> zeros(g.n(), Vec3{});
    d = symmetrize(g, pinned, zeros).graph.max_degree();
  }
  return std::vector<double>(g.n(), factor / static_cast<double>(d + 1));
}

struct SwarmScenario {
  Graph graph;
  std::vector<std::size_t> pinned;
  std::vector<Vec3> x0;
};

/// rows x cols grid with the first and last columns pinned. Free robots start
/// uniformly in [0,1]^3; pinned robots sit at X = 0 on a regular Y/Z lattice.
inline SwarmScenario make_grid_scenario(std::size_t rows, std::size_t cols, CounterRng rng) {
  if (rows < 1 || cols < 2) throw std::invalid_argument("grid scenario: need at least 1 row and 2 columns");
  SwarmScenario sc;
  sc.graph = grid_graph(rows, cols);
  sc.x0.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t id = r * cols + c;
      if (c == 0 || c + 1 == cols) {
        sc.pinned.push_back(id);
        const double y = rows > 1 ? static_cast<double>(r) / static_cast<double>(rows - 1) : 0.0;
        sc.x0[id] = {0.0, y, static_cast<double>(c) / static_cast<double>(cols - 1)};
      } else {
        sc.x0[id] = {rng.uniform(), rng.uniform(), rng.uniform()};
      }
    }
  }
  std::sort(sc.pinned.begin(), sc.pinned.end());
  return sc;
}

/// Path on n vertices with vertex 0 pinned; free vertices uniform in [0,1]^3.
inline SwarmScenario make_path_scenario(std::size_t n, CounterRng rng) {
  if (n < 2) throw std::invalid_argument("path scenario: need at least 2 vertices");
  SwarmScenario sc;
  sc.graph = path_graph(n);
  sc.pinned = {0};
  sc.x0.resize(n);
  sc.x0[0] = {0.0, 0.0, 0.0};
  for (std::size_t i = 1; i < n; ++i) sc.x0[i] = {rng.uniform(), rng.uniform(), rng.uniform()};
  return sc;
}

}  // namespace ras
