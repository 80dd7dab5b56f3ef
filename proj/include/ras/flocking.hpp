#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ras/blocks.hpp"
#include "ras/fit.hpp"
#include "ras/graph.hpp"
#include "ras/rng.hpp"
#include "ras/state.hpp"
#include "ras/system.hpp"

namespace ras {

using Vec3 = std::array<double, 3>;

inline double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
inline double distance(const Vec3& a, const Vec3& b) {
  return norm(Vec3{a[0] - b[0], a[1] - b[1], a[2] - b[2]});
}

inline std::vector<double> coordinate(std::span<const Vec3> pts, std::size_t axis) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = pts[i][axis];
  return out;
}

struct FlockConfig {
  std::size_t n = 0;
  double r = 0.5;
  double eps_o = 0.05;
  std::vector<double> a;  // per-bird influence weight
  std::size_t max_steps = 1000;
  // When set, an edge is only dropped if the velocity gap also exceeds theta.
  std::optional<double> theta;

  double rho() const { return a.empty() ? 0.0 : *std::min_element(a.begin(), a.end()); }

  void validate() const {
    if (n == 0) throw std::invalid_argument("flock: n must be positive");
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("flock: r must lie in (0, 1]");
    if (!(eps_o > 0.0)) throw std::invalid_argument("flock: eps_o must be positive");
    if (a.size() != n) throw std::invalid_argument("flock: expected one weight per bird");
    for (double w : a)
      if (!(w > 0.0 && w <= 1.0 / static_cast<double>(n) + 1e-15))
        throw std::invalid_argument("flock: weights must lie in (0, 1/n]");
    if (theta && !(*theta > 0.0)) throw std::invalid_argument("flock: theta must be positive when set");
  }
};

/// Uniform weights 1/n, admissible for every possible network.
inline FlockConfig make_flock_config(std::size_t n, double r, double eps_o, std::size_t max_steps) {
  FlockConfig c;
  c.n = n;
  c.r = r;
  c.eps_o = eps_o;
  c.a.assign(n, 1.0 / static_cast<double>(n));
  c.max_steps = max_steps;
  return c;
}

inline constexpr double kInitialSlack = 1e-12;

inline void validate_initial_conditions(const FlockConfig& cfg, std::span<const Vec3> x, std::span<const Vec3> v) {
  if (x.size() != cfg.n || v.size() != cfg.n) throw std::invalid_argument("flock: initial state size differs from n");
  const double vmax = std::sqrt(cfg.rho() / static_cast<double>(cfg.n));
  for (std::size_t i = 0; i < cfg.n; ++i) {
    if (norm(x[i]) > 1.0 + kInitialSlack)
      throw std::invalid_argument("flock: |x_" + std::to_string(i) + "(0)| exceeds 1");
    if (norm(v[i]) > vmax + kInitialSlack)
      throw std::invalid_argument("flock: |v_" + std::to_string(i) + "(0)| exceeds sqrt(rho/n)");
  }
}

inline std::pair<std::vector<Vec3>, std::vector<Vec3>> sample_initial_conditions(const FlockConfig& cfg,
                                                                                 CounterRng& rng) {
  std::vector<Vec3> x(cfg.n), v(cfg.n);
  const double vmax = std::sqrt(cfg.rho() / static_cast<double>(cfg.n));
  for (auto& p : x) p = rng.in_ball(1.0);
  for (auto& p : v) p = rng.in_ball(vmax);
  return {std::move(x), std::move(v)};
}

struct FlockState {
  std::vector<Vec3> x;
  std::vector<Vec3> v;
  Graph graph;  // network in force at time t (G_{t-1} before update_network runs)
  std::size_t t = 0;

  std::vector<std::vector<std::size_t>> flocks() const { return graph.components(); }
};

struct SwitchEvent {
  std::size_t t = 0;
  Edge edge;
  bool created = false;
};

struct SwitchLog {
  std::vector<SwitchEvent> events;

  // Distinct times with at least one network change, ascending.
  std::vector<std::size_t> switch_times() const {
    std::vector<std::size_t> ts;
    for (const auto& e : events)
      if (ts.empty() || ts.back() != e.t) ts.push_back(e.t);
    return ts;
  }
};

struct NetworkUpdate {
  Graph graph;
  std::vector<SwitchEvent> events;
};

/// Next flocking network from positions and velocities at time state.t.
///
/// An existing edge survives while its endpoints stay within r. A new edge
/// needs distance <= r and a velocity gap strictly above eps_o.
inline NetworkUpdate update_network(const FlockState& state, const FlockConfig& cfg) {
  const std::size_t n = state.x.size();
  const bool have_prev = state.graph.n() == n;
  std::vector<Edge> edges;
  NetworkUpdate out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = distance(state.x[i], state.x[j]);
      const double gap = distance(state.v[i], state.v[j]);
      const bool linked = have_prev && state.graph.has_edge(i, j);
      bool keep;
      if (linked) {
        keep = dist <= cfg.r;
        if (!keep && cfg.theta) keep = gap <= *cfg.theta;
        if (!keep) out.events.push_back({state.t, Edge(i, j), false});
      } else {
        keep = dist <= cfg.r && gap > cfg.eps_o;
        if (keep) out.events.push_back({state.t, Edge(i, j), true});
      }
      if (keep) edges.emplace_back(i, j);
    }
  }
  out.graph = Graph(n, std::move(edges));
  return out;
}

/// v(t+1) = P_t v(t) per coordinate, then x(t+1) = x(t) + v(t+1).
inline FlockState vcs_step(const FlockState& state, const FlockConfig& cfg) {
  const std::size_t n = state.x.size();
  ReversibleSystem sys = build_system(state.graph, cfg.a);
  FlockState next;
  next.x = state.x;
  next.v.resize(n);
  next.graph = state.graph;
  next.t = state.t + 1;
  std::vector<double> col(n), out(n);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = state.v[i][c];
    sys.apply(col, out);
    for (std::size_t i = 0; i < n; ++i) {
      next.v[i][c] = out[i];
      next.x[i][c] += out[i];
    }
  }
  return next;
}

/// Full dense history of a flocking run: x(t), v(t), G_t for t = 0..T.
struct FlockRun {
  FlockConfig config;
  std::vector<std::vector<Vec3>> x;
  std::vector<std::vector<Vec3>> v;
  std::vector<Graph> graphs;
  SwitchLog log;

  std::size_t steps() const { return graphs.empty() ? 0 : graphs.size() - 1; }
  bool switched(std::size_t t) const {
    if (t == 0) return graphs[0].edge_count() > 0;
    return !(graphs[t] == graphs[t - 1]);
  }
  std::vector<double> q() const {
    std::vector<double> w(config.n);
    for (std::size_t i = 0; i < config.n; ++i) w[i] = 1.0 / config.a[i];
    return w;
  }
};

inline FlockRun simulate_flock(const FlockConfig& cfg, std::vector<Vec3> x0, std::vector<Vec3> v0) {
  cfg.validate();
  if (x0.size() != cfg.n || v0.size() != cfg.n) throw std::invalid_argument("flock: initial state size differs from n");
  FlockRun run;
  run.config = cfg;
  FlockState state{std::move(x0), std::move(v0), Graph(), 0};
  for (std::size_t t = 0;; ++t) {
    NetworkUpdate upd = update_network(state, cfg);
    state.graph = std::move(upd.graph);
    run.log.events.insert(run.log.events.end(), upd.events.begin(), upd.events.end());
    run.x.push_back(state.x);
    run.v.push_back(state.v);
    run.graphs.push_back(state.graph);
    if (t == cfg.max_steps) break;
    state = vcs_step(state, cfg);
  }
  return run;
}

struct FlockLimit {
  std::vector<std::size_t> members;
  Vec3 limit_velocity{};
  std::vector<double> diameter;  // velocity diameter from t_stable on (max over axes)
  ExponentialFit decay;
  double decay_constant = 0.0;   // a in exp(-a rho t / n^2), from the fitted rate
};

struct StabilizationReport {
  bool stabilized = false;
  std::string reason;
  std::size_t t_stable = 0;
  std::vector<FlockLimit> flocks;
};

inline Vec3 q_mean_velocity(std::span<const Vec3> v, std::span<const double> q, std::span<const std::size_t> members) {
  Vec3 m{};
  double w = 0.0;
  for (std::size_t i : members) {
    for (std::size_t c = 0; c < 3; ++c) m[c] += q[i] * v[i][c];
    w += q[i];
  }
  for (auto& c : m) c /= w;
  return m;
}

inline double velocity_diameter(std::span<const Vec3> v, std::span<const std::size_t> members) {
  double d = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i : members) {
      lo = std::min(lo, v[i][c]);
      hi = std::max(hi, v[i][c]);
    }
    d = std::max(d, hi - lo);
  }
  return d;
}

/// Last switch time, per-flock limit velocities and decay fits.
///
/// The run counts as stabilized when at least `quiet_steps` switch-free steps
/// follow the last switch.
inline StabilizationReport detect_stabilization(const FlockRun& run, std::size_t quiet_steps,
                                                double fit_floor = 1e-12) {
  StabilizationReport rep;
  const std::size_t T = run.steps();
  for (std::size_t t = 0; t <= T; ++t)
    if (run.switched(t)) rep.t_stable = t;
  if (T - rep.t_stable < quiet_steps) {
    rep.reason = "not stabilized within budget";
    return rep;
  }
  rep.stabilized = true;
  const auto q = run.q();
  const double n = static_cast<double>(run.config.n);
  for (auto& members : run.graphs[T].components()) {
    FlockLimit f;
    f.members = members;
    f.limit_velocity = q_mean_velocity(run.v[rep.t_stable], q, members);
    std::vector<double> ts;
    for (std::size_t t = rep.t_stable; t <= T; ++t) {
      ts.push_back(static_cast<double>(t - rep.t_stable));
      f.diameter.push_back(velocity_diameter(run.v[t], members));
    }
    f.decay = fit_exponential(ts, f.diameter, fit_floor);
    f.decay_constant = -f.decay.rate * n * n / run.config.rho();
    rep.flocks.push_back(std::move(f));
  }
  return rep;
}

struct FlightLineFit {
  Vec3 beta{};                 // common drift velocity
  std::vector<Vec3> gamma;     // per-bird offset
  std::vector<double> residual;  // max_i |eta_i(t)|_inf for t in [begin, end]
};

/// Fits y_i(t) = beta t + gamma_i + eta_i(t) for a flock over [begin, end].
///
/// beta is the least-squares slope of the q-weighted flock centre, which moves
/// exactly linearly on a switch-free suffix. gamma_i is the mean of
/// y_i(t) - beta t over the last quarter of the window.
inline FlightLineFit fit_flight_line(const FlockRun& run, std::span<const std::size_t> members, std::size_t begin,
                                     std::size_t end) {
  if (end > run.steps() || end < begin || end - begin + 1 < 4)
    throw std::invalid_argument("fit_flight_line: suffix shorter than 4 steps");
  const auto q = run.q();
  double wsum = 0.0;
  for (std::size_t i : members) wsum += q[i];

  FlightLineFit fit;
  std::vector<double> ts;
  for (std::size_t t = begin; t <= end; ++t) ts.push_back(static_cast<double>(t));
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> centre;
    for (std::size_t t = begin; t <= end; ++t) {
      double y = 0.0;
      for (std::size_t i : members) y += q[i] * run.x[t][i][c];
      centre.push_back(y / wsum);
    }
    fit.beta[c] = fit_line(ts, centre).slope;
  }
  const std::size_t tail_begin = end - (end - begin) / 4;
  fit.gamma.resize(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (std::size_t c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::size_t t = tail_begin; t <= end; ++t)
        acc += run.x[t][members[k]][c] - fit.beta[c] * static_cast<double>(t);
      fit.gamma[k][c] = acc / static_cast<double>(end - tail_begin + 1);
    }
  }
  for (std::size_t t = begin; t <= end; ++t) {
    double worst = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k)
      for (std::size_t c = 0; c < 3; ++c)
        worst = std::max(worst, std::abs(run.x[t][members[k]][c] - fit.beta[c] * static_cast<double>(t) -
                                         fit.gamma[k][c]));
    fit.residual.push_back(worst);
  }
  return fit;
}

struct TraceResult {
  std::size_t t = 0;
  std::size_t bird = 0;
  std::size_t axis = 0;
  double alpha = 0.0;
  std::vector<double> wbar;          // wbar[k] for k = 1..t; wbar[0] unused
  std::vector<std::size_t> visited;  // l(k) for k = 1..t; visited[0] unused
  std::vector<std::size_t> R;        // times passing the block-length test, ascending
  std::size_t final_bird = 0;        // l'
  double u = 0.0;                    // (y(t) - y(0)) / t from positions
  double u_from_velocities = 0.0;    // (1/t) sum_{k=1}^t w(k)
  double delta = 0.0;                // u - w(t)
  double identity_lhs = 0.0;         // sum_{k=1}^t wbar(k)
  double identity_rhs = 0.0;         // t wbar(t) - sum_{k=1}^{t-1} k (wbar(k+1) - wbar(k))

  double identity_error() const { return std::abs(identity_lhs - identity_rhs); }

  bool monotone_on_R(double tol = 1e-12) const {
    for (std::size_t k : R)
      if (wbar[k + 1] < wbar[k] - tol) return false;
    return true;
  }
};

/// Backward trace of one bird's velocity coordinate from time t down to 1.
///
/// At step k the current bird l is replaced by the smallest-velocity member
/// of its closed neighbourhood in G_k whenever the block holding l's flock is
/// longer than alpha. Ties go to the smallest index.
inline TraceResult backward_trace(const FlockRun& run, double alpha, std::size_t bird = 0, std::size_t axis = 0,
                                  std::optional<std::size_t> until = std::nullopt) {
  if (!(alpha > 0.0 && alpha <= run.config.eps_o))
    throw std::invalid_argument("backward_trace: alpha must lie in (0, eps_o]");
  if (bird >= run.config.n || axis >= 3) throw std::invalid_argument("backward_trace: bird or axis out of range");
  const std::size_t t = until.value_or(run.steps());
  if (t == 0) throw std::invalid_argument("backward_trace: need t >= 1");
  if (t > run.steps() || run.v.size() <= t || run.x.size() <= t)
    throw std::invalid_argument("backward_trace: missing history step");

  TraceResult tr;
  tr.t = t;
  tr.bird = bird;
  tr.axis = axis;
  tr.alpha = alpha;
  tr.wbar.assign(t + 1, std::numeric_limits<double>::quiet_NaN());
  tr.visited.assign(t + 1, bird);

  std::size_t l = bird;
  tr.wbar[t] = run.v[t][bird][axis];
  for (std::size_t k = t - 1; k >= 1; --k) {
    const Graph& g = run.graphs[k];
    const auto w = coordinate(run.v[k], axis);
    const auto blocks = compute_blocks(w, g);
    if (containing_block_length(blocks, w, g, l) > alpha) {
      std::size_t best = l;
      for (std::size_t j : g.neighbors(l))
        if (w[j] < w[best] || (w[j] == w[best] && j < best)) best = j;
      l = best;
      tr.R.push_back(k);
    }
    tr.wbar[k] = w[l];
    tr.visited[k] = l;
  }
  std::reverse(tr.R.begin(), tr.R.end());
  tr.final_bird = l;

  const double td = static_cast<double>(t);
  tr.u = (run.x[t][bird][axis] - run.x[0][bird][axis]) / td;
  double vs = 0.0;
  for (std::size_t k = 1; k <= t; ++k) vs += run.v[k][bird][axis];
  tr.u_from_velocities = vs / td;
  tr.delta = tr.u - run.v[t][bird][axis];

  for (std::size_t k = 1; k <= t; ++k) tr.identity_lhs += tr.wbar[k];
  tr.identity_rhs = td * tr.wbar[t];
  for (std::size_t k = 1; k < t; ++k) tr.identity_rhs -= static_cast<double>(k) * (tr.wbar[k + 1] - tr.wbar[k]);
  return tr;
}

struct SwitchStats {
  struct Interval {
    std::size_t begin = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    std::size_t r_count = 0;
    std::size_t long_block_count = 0;  // times in the interval with a block > alpha on the traced axis
  };
  std::size_t switches = 0;   // |S|
  std::size_t creations = 0;
  std::size_t deletions = 0;
  std::size_t r_count = 0;    // |R|
  std::size_t n_alpha = 0;    // times with a block > alpha on any axis
  std::vector<Interval> intervals;
  bool intervals_ok = true;   // |R ∩ I| <= long-block count of I for every I
  bool creations_ok = true;   // each creation sits in a block >= eps_o / sqrt(3) on some axis
};

inline SwitchStats count_switch_stats(const FlockRun& run, double alpha, std::size_t bird = 0, std::size_t axis = 0) {
  SwitchStats st;
  const std::size_t T = run.steps();
  const auto times = run.log.switch_times();
  st.switches = times.size();
  for (const auto& e : run.log.events) (e.created ? st.creations : st.deletions)++;

  std::vector<char> long_axis(T + 1, 0);
  for (std::size_t t = 0; t <= T; ++t) {
    bool any = false;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto w = coordinate(run.v[t], c);
      const double top = max_block_length(compute_blocks(w, run.graphs[t]));
      if (top > alpha) {
        any = true;
        if (c == axis) long_axis[t] = 1;
      }
    }
    if (any) ++st.n_alpha;
  }

  std::vector<char> in_r(T + 1, 0);
  if (T >= 1) {
    TraceResult tr = backward_trace(run, alpha, bird, axis);
    st.r_count = tr.R.size();
    for (std::size_t k : tr.R) in_r[k] = 1;
  }

  std::vector<std::size_t> cuts{0};
  for (std::size_t s : times)
    if (s > 0) cuts.push_back(s);
  cuts.push_back(T + 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    SwitchStats::Interval iv{cuts[i], cuts[i + 1], 0, 0};
    for (std::size_t k = iv.begin; k < iv.end; ++k) {
      iv.r_count += static_cast<std::size_t>(in_r[k]);
      iv.long_block_count += static_cast<std::size_t>(long_axis[k]);
    }
    if (iv.r_count > iv.long_block_count) st.intervals_ok = false;
    st.intervals.push_back(iv);
  }

  const double need = run.config.eps_o / std::sqrt(3.0);
  for (const auto& e : run.log.events) {
    if (!e.created) continue;
    double best = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto w = coordinate(run.v[e.t], c);
      const auto blocks = compute_blocks(w, run.graphs[e.t]);
      std::size_t b = block_of_edge(blocks, w, e.edge);
      if (b < blocks.size()) best = std::max(best, blocks[b].length());
    }
    if (best < need - 1e-12) st.creations_ok = false;
  }
  return st;
}

/// |v_i(t) - (x_i(t) - x_i(0)) / t|
inline double line_of_sight_gap(const FlockRun& run, std::size_t i, std::size_t t) {
  if (t <= 1) throw std::invalid_argument("line_of_sight_gap: need t > 1");
  if (t > run.steps()) throw std::invalid_argument("line_of_sight_gap: t beyond recorded history");
  Vec3 d{};
  for (std::size_t c = 0; c < 3; ++c)
    d[c] = run.v[t][i][c] - (run.x[t][i][c] - run.x[0][i][c]) / static_cast<double>(t);
  return norm(d);
}

inline Vec3 line_of_sight(const FlockRun& run, std::size_t i, std::size_t t) {
  Vec3 u{};
  for (std::size_t c = 0; c < 3; ++c) u[c] = (run.x[t][i][c] - run.x[0][i][c]) / static_cast<double>(t);
  return u;
}

}  // namespace ras
