#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ras/blocks.hpp"
#include "ras/energy.hpp"
#include "ras/graph.hpp"
#include "ras/state.hpp"
#include "ras/system.hpp"

namespace ras {

/// P = I - rho L on the path 0 - 1 - ... - (n-1), with its closed-form
/// eigenpairs lambda_k = 1 - 2 rho (1 - cos(k pi / n)) and
/// v_k(i) = cos((i + 1/2) k pi / n), i zero-based.
class PathSpectralModel {
 public:
  PathSpectralModel(std::size_t n, double rho) : n_(n), rho_(rho) {
    if (n == 0) throw std::invalid_argument("path model: n must be positive");
    if (!(rho > 0.0 && rho < 0.25)) throw std::invalid_argument("path model: rho must lie in (0, 1/4) for P to be PSD");
  }

  std::size_t n() const { return n_; }
  double rho() const { return rho_; }

  double eigenvalue(std::size_t k) const {
    return 1.0 - 2.0 * rho_ * (1.0 - std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n_)));
  }
  double eigenvector(std::size_t k, std::size_t i) const {
    return std::cos((static_cast<double>(i) + 0.5) * static_cast<double>(k) * std::numbers::pi /
                    static_cast<double>(n_));
  }
  std::vector<double> eigenvector(std::size_t k) const {
    std::vector<double> v(n_);
    for (std::size_t i = 0; i < n_; ++i) v[i] = eigenvector(k, i);
    return v;
  }

  Graph graph() const { return path_graph(n_); }
  ReversibleSystem system() const { return build_system(graph(), rho_); }

 private:
  std::size_t n_;
  double rho_;
};

/// Diameter at time t >= 1 of the orbit started at x(1) = (1, 0, ..., 0),
/// from the spectral expansion of P^{t-1}.
inline double path_diameter(const PathSpectralModel& model, std::size_t t) {
  if (t == 0) throw std::invalid_argument("path_diameter: t starts at 1");
  const std::size_t n = model.n();
  if (n == 1) return 0.0;
  const double norm2 = static_cast<double>(n) / 2.0;
  double d = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double first = model.eigenvector(k, 0);
    const double last = model.eigenvector(k, n - 1);
    d += std::pow(model.eigenvalue(k), static_cast<double>(t - 1)) * first * (first - last) / norm2;
  }
  return d;
}

/// Delta_1..Delta_horizon by stepping the path system.
inline std::vector<double> simulate_path_diameters(const PathSpectralModel& model, std::size_t horizon) {
  const ReversibleSystem sys = model.system();
  std::vector<double> x(model.n(), 0.0), y(model.n());
  x[0] = 1.0;
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    out.push_back(diameter(x));
    sys.apply(x, y);
    std::swap(x, y);
  }
  return out;
}

// (2/n) lambda_1^{t-1}
inline double path_diameter_lower_bound(const PathSpectralModel& model, std::size_t t) {
  return 2.0 / static_cast<double>(model.n()) * std::pow(model.eigenvalue(1), static_cast<double>(t - 1));
}

struct PathEnergy {
  double energy = 0.0;       // sum_t Delta_t^s over the simulated horizon
  std::size_t steps = 0;
  double final_diameter = 0.0;
  double lower_bound = 0.0;  // (2/n)^s / (1 - lambda_1^s)
};

/// s-energy of the path orbit, measured by stepping the system and summing
/// block lengths. With horizon == 0 the run stops once the diameter drops
/// below `cutoff`; otherwise exactly `horizon` steps are taken and the final
/// diameter must be below `cutoff`.
inline PathEnergy path_s_energy(const PathSpectralModel& model, double s, std::size_t horizon = 0,
                                double cutoff = 1e-12) {
  require_exponent(s);
  const ReversibleSystem sys = model.system();
  const Graph g = model.graph();
  EnergyLedger ledger({s}, false);
  std::vector<double> x(model.n(), 0.0), y(model.n());
  x[0] = 1.0;
  PathEnergy pe;
  const std::size_t limit = horizon == 0 ? std::numeric_limits<std::size_t>::max() : horizon;
  while (pe.steps < limit) {
    if (horizon == 0 && diameter(x) < cutoff) break;
    ledger.record(compute_blocks(x, g));
    ++pe.steps;
    sys.apply(x, y);
    std::swap(x, y);
  }
  pe.final_diameter = diameter(x);
  if (horizon != 0 && pe.final_diameter >= cutoff)
    throw std::invalid_argument("path_s_energy: horizon too short, diameter still " + std::to_string(pe.final_diameter));
  pe.energy = ledger.total(s);
  const double l1 = model.eigenvalue(1);
  pe.lower_bound = std::pow(2.0 / static_cast<double>(model.n()), s) / (1.0 - std::pow(l1, s));
  return pe;
}

/// (c / (s rho^{1-s}))^m (n/m)^{(1-s) m + 1}
inline double theorem3_bound(double n, double m, double rho, double s, double c = 1.0) {
  detail::require_bound_args(n, m, rho, s, c);
  return std::pow(c / (s * std::pow(rho, 1.0 - s)), m) * std::pow(n / m, (1.0 - s) * m + 1.0);
}

// Factor (rho/n)^{s/2} that moves a unit-diameter lower bound to unit variance.
inline double unit_variance_scale(double n, double rho, double s) { return std::pow(rho / n, s / 2.0); }

struct ScheduleSegment {
  enum class Kind { Average, Snap };
  Kind kind = Kind::Average;
  std::size_t graph = 0;    // index into the schedule's graph pool
  std::size_t repeats = 1;  // Average only
  // Snap only: inclusive vertex ranges averaged completely in one step.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  int phase = 0;
  std::size_t depth = 0;
};

/// Executable step list realizing the recursive m-cluster construction.
///
/// Average segments apply I - rho L(G) for a pool graph G `repeats` times.
/// Snap segments stand in for the tail of an infinite contraction: each
/// listed range is replaced by its mean in a single step (rows 1/k), every
/// other row follows I - rho L of the pool graph.
struct RecursiveSchedule {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t nu = 0;
  double rho = 0.0;
  std::vector<double> initial;
  std::vector<Graph> graphs;
  std::vector<ScheduleSegment> segments;

  std::size_t total_steps() const {
    std::size_t s = 0;
    for (const auto& seg : segments) s += seg.kind == ScheduleSegment::Kind::Average ? seg.repeats : 1;
    return s;
  }
};

struct ScheduleOptions {
  double contraction_cutoff = 1e-10;  // relative cluster diameter at which a contraction is snapped
  double gap_cutoff = 1e-6;           // relative gap at which the outer recursion stops
  std::size_t max_rounds = 16;        // cap on outer-recursion rounds per level
};

namespace detail {

// Steps of I - rho L on a path of length nu from (1, 0, ..., 0) until the
// diameter falls below cutoff.
inline std::size_t contraction_steps(std::size_t nu, double rho, double cutoff) {
  if (nu < 2) return 0;
  const ReversibleSystem sys = build_system(path_graph(nu), rho);
  std::vector<double> x(nu, 0.0), y(nu);
  x[0] = 1.0;
  std::size_t k = 0;
  while (diameter(x) >= cutoff) {
    sys.apply(x, y);
    std::swap(x, y);
    ++k;
  }
  return k;
}

// All m cluster paths, plus the bridge joining cluster `bridge - 1` to
// cluster `bridge` when bridge > 0.
inline Graph cluster_forest(std::size_t m, std::size_t nu, std::size_t bridge) {
  std::vector<Edge> edges;
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t i = 0; i + 1 < nu; ++i) edges.emplace_back(c * nu + i, c * nu + i + 1);
  if (bridge > 0) edges.emplace_back(bridge * nu - 1, bridge * nu);
  return Graph(m * nu, std::move(edges));
}

class ScheduleBuilder {
 public:
  ScheduleBuilder(RecursiveSchedule& s, const ScheduleOptions& o, std::size_t contraction)
      : s_(s), o_(o), contraction_(contraction) {}

  // Clusters c0..m-1: c0 sits at the low end, the rest share the high end.
  void construct(std::size_t c0, std::size_t depth) {
    const std::size_t k = s_.m - c0;
    if (k < 2) return;
    const double nu = static_cast<double>(s_.nu);
    const double level_n = static_cast<double>(k * s_.nu);
    const double ratio = 1.0 - s_.rho / nu - s_.rho / (level_n - nu);
    double gap = 1.0;
    const auto cluster = [&](std::size_t c) { return std::make_pair(c * s_.nu, (c + 1) * s_.nu - 1); };
    for (std::size_t round = 0; round < o_.max_rounds; ++round) {
      average(c0 + 1, 1, 1, depth);
      if (contraction_ > 0) average(0, contraction_, 2, depth);
      snap({cluster(c0), cluster(c0 + 1)}, 2, depth);
      construct(c0 + 1, depth + 1);
      gap *= ratio;
      if (gap < o_.gap_cutoff) break;
    }
    snap({{c0 * s_.nu, s_.n - 1}}, 4, depth);
  }

 private:
  void average(std::size_t graph, std::size_t repeats, int phase, std::size_t depth) {
    ScheduleSegment seg;
    seg.kind = ScheduleSegment::Kind::Average;
    seg.graph = graph;
    seg.repeats = repeats;
    seg.phase = phase;
    seg.depth = depth;
    s_.segments.push_back(std::move(seg));
  }
  void snap(std::vector<std::pair<std::size_t, std::size_t>> ranges, int phase, std::size_t depth) {
    ScheduleSegment seg;
    seg.kind = ScheduleSegment::Kind::Snap;
    seg.ranges = std::move(ranges);
    seg.phase = phase;
    seg.depth = depth;
    s_.segments.push_back(std::move(seg));
  }

  RecursiveSchedule& s_;
  const ScheduleOptions& o_;
  std::size_t contraction_;
};

}  // namespace detail

/// Builds the recursive m-cluster schedule on n = m nu vertices.
///
/// Cluster C_c is the path on [c nu, (c+1) nu). Each round links the low
/// cluster to its neighbour for one step, contracts both clusters in
/// parallel, recurses on the upper clusters and repeats on the shrunken gap.
/// Pool graph 0 is the plain forest; graph b > 0 bridges C_{b-1} and C_b.
inline RecursiveSchedule build_recursive_schedule(std::size_t n, std::size_t m, double rho,
                                                  const ScheduleOptions& options = {}) {
  if (m < 2) throw std::invalid_argument("recursive schedule: m must be >= 2");
  if (n % m != 0) throw std::invalid_argument("recursive schedule: n/m must be an integer");
  if (!(rho > 0.0 && rho < 0.25)) throw std::invalid_argument("recursive schedule: rho must lie in (0, 1/4)");
  if (!(options.contraction_cutoff > 0.0 && options.gap_cutoff > 0.0 && options.max_rounds > 0))
    throw std::invalid_argument("recursive schedule: cutoffs and round cap must be positive");

  RecursiveSchedule s;
  s.n = n;
  s.m = m;
  s.nu = n / m;
  s.rho = rho;
  s.initial.assign(n, 1.0);
  for (std::size_t i = 0; i < s.nu; ++i) s.initial[i] = 0.0;
  for (std::size_t b = 0; b < m; ++b) s.graphs.push_back(detail::cluster_forest(m, s.nu, b));

  detail::ScheduleBuilder builder(s, options, detail::contraction_steps(s.nu, rho, options.contraction_cutoff));
  builder.construct(0, 0);
  return s;
}

struct ReplayResult {
  std::vector<double> exponents;
  std::vector<double> energy;              // measured E_s per exponent
  std::vector<double> first_step_lengths;  // block lengths of the first step
  std::size_t steps = 0;
  std::size_t max_components = 0;
  double min_average_entry = std::numeric_limits<double>::infinity();  // over Average steps
  double max_row_sum_error = 0.0;
  double max_balance_error = 0.0;
  double max_mean_drift = 0.0;
  std::vector<double> final_positions;

  double energy_for(double s) const {
    for (std::size_t k = 0; k < exponents.size(); ++k)
      if (exponents[k] == s) return energy[k];
    throw std::invalid_argument("replay: exponent not measured");
  }
};

// Called once per step with (t, positions before the step, blocks).
using ReplayObserver = std::function<void(std::size_t, std::span<const double>, std::span<const Block>)>;

namespace detail {

inline std::pair<Graph, ReversibleSystem> snap_system(const Graph& base, double rho,
                                                     const std::vector<std::pair<std::size_t, std::size_t>>& ranges) {
  const std::size_t n = base.n();
  std::vector<int> inside(n, -1);
  for (std::size_t r = 0; r < ranges.size(); ++r)
    for (std::size_t i = ranges[r].first; i <= ranges[r].second; ++i) inside[i] = static_cast<int>(r);
  std::vector<SymmetricEntry> m;
  std::vector<Edge> edges;
  for (const Edge& e : base.edges()) {
    if (inside[e.u] >= 0 || inside[e.v] >= 0) continue;
    m.push_back({e.u, e.v, 1.0});
    edges.push_back(e);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (inside[i] >= 0) continue;
    std::size_t deg = 0;
    for (std::size_t j : base.neighbors(i)) deg += inside[j] < 0 ? 1 : 0;
    m.push_back({i, i, 1.0 / rho - static_cast<double>(deg)});
  }
  for (const auto& [lo, hi] : ranges) {
    const double w = 1.0 / (rho * static_cast<double>(hi - lo + 1));
    for (std::size_t i = lo; i <= hi; ++i)
      for (std::size_t j = i; j <= hi; ++j) {
        m.push_back({i, j, w});
        if (j > i) edges.emplace_back(i, j);
      }
  }
  return {Graph(n, std::move(edges)), ReversibleSystem::from_symmetric(n, m)};
}

}  // namespace detail

/// Executes a schedule through the agreement engine and measures its
/// s-energy from the blocks of every step.
inline ReplayResult replay_schedule(const RecursiveSchedule& schedule, std::vector<double> exponents,
                                    const ReplayObserver& observer = {}) {
  for (double s : exponents) require_exponent(s);
  const std::size_t n = schedule.n;
  if (schedule.initial.size() != n) throw std::invalid_argument("replay: initial state size differs from n");
  std::vector<ReversibleSystem> systems;
  for (const Graph& g : schedule.graphs) {
    if (g.n() != n) throw std::invalid_argument("replay: pool graph size differs from n");
    systems.push_back(build_system(g, schedule.rho));
  }

  ReplayResult res;
  res.exponents = exponents;
  EnergyLedger ledger(exponents, false);
  std::vector<double> x = schedule.initial, y(n);
  const std::vector<double> q(n, 1.0 / schedule.rho);
  const double mean0 = q_mean(q, x);
  std::map<std::vector<std::pair<std::size_t, std::size_t>>, std::pair<Graph, ReversibleSystem>> snaps;

  const auto account = [&](const ReversibleSystem& sys, const Graph& g, bool average) {
    res.max_components = std::max(res.max_components, g.component_count());
    res.max_row_sum_error = std::max(res.max_row_sum_error, sys.row_sum_error());
    res.max_balance_error = std::max(res.max_balance_error, sys.detailed_balance_error());
    if (average) res.min_average_entry = std::min(res.min_average_entry, sys.min_positive_entry());
  };
  const auto advance = [&](const ReversibleSystem& sys, const Graph& g) {
    const auto blocks = compute_blocks(x, g);
    if (res.steps == 0)
      for (const Block& b : blocks) res.first_step_lengths.push_back(b.length());
    if (observer) observer(res.steps, x, blocks);
    ledger.record(blocks);
    sys.apply(x, y);
    std::swap(x, y);
    res.max_mean_drift = std::max(res.max_mean_drift, std::abs(q_mean(q, x) - mean0));
    ++res.steps;
  };

  std::vector<char> checked(systems.size(), 0);
  for (const ScheduleSegment& seg : schedule.segments) {
    if (seg.graph >= systems.size()) throw std::invalid_argument("replay: segment references unknown graph");
    if (seg.kind == ScheduleSegment::Kind::Average) {
      if (!checked[seg.graph]) {
        account(systems[seg.graph], schedule.graphs[seg.graph], true);
        checked[seg.graph] = 1;
      }
      for (std::size_t r = 0; r < seg.repeats; ++r) advance(systems[seg.graph], schedule.graphs[seg.graph]);
    } else {
      auto it = snaps.find(seg.ranges);
      if (it == snaps.end()) {
        for (const auto& [lo, hi] : seg.ranges)
          if (lo > hi || hi >= n) throw std::invalid_argument("replay: snap range out of bounds");
        it = snaps.emplace(seg.ranges, detail::snap_system(schedule.graphs[seg.graph], schedule.rho, seg.ranges)).first;
        account(it->second.second, it->second.first, false);
      }
      advance(it->second.second, it->second.first);
    }
  }
  for (std::size_t k = 0; k < exponents.size(); ++k) res.energy.push_back(ledger.total(exponents[k]));
  res.final_positions = std::move(x);
  return res;
}

inline void write_schedule(std::ostream& out, const RecursiveSchedule& s) {
  std::ostringstream o;
  o.precision(17);
  o << "ras-schedule 1\n";
  o << "n " << s.n << "\nm " << s.m << "\nnu " << s.nu << "\nrho " << s.rho << "\ninitial";
  for (double v : s.initial) o << ' ' << v;
  o << '\n';
  for (std::size_t g = 0; g < s.graphs.size(); ++g) {
    o << "graph " << g;
    for (const Edge& e : s.graphs[g].edges()) o << ' ' << e.u << '-' << e.v;
    o << '\n';
  }
  for (const auto& seg : s.segments) {
    if (seg.kind == ScheduleSegment::Kind::Average) {
      o << "avg " << seg.graph << ' ' << seg.repeats << ' ' << seg.phase << ' ' << seg.depth << '\n';
    } else {
      o << "snap " << seg.graph << ' ' << seg.phase << ' ' << seg.depth;
      for (const auto& [lo, hi] : seg.ranges) o << ' ' << lo << '-' << hi;
      o << '\n';
    }
  }
  out << o.str();
}

inline RecursiveSchedule read_schedule(std::istream& in) {
  RecursiveSchedule s;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  const auto fail = [&](const std::string& what) {
    throw std::invalid_argument("schedule line " + std::to_string(lineno) + ": " + what);
  };
  const auto pair_of = [&](const std::string& tok) {
    auto dash = tok.find('-');
    if (dash == std::string::npos) fail("expected a-b, got '" + tok + "'");
    return std::make_pair(static_cast<std::size_t>(std::stoull(tok.substr(0, dash))),
                          static_cast<std::size_t>(std::stoull(tok.substr(dash + 1))));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (!header) {
      int version = 0;
      if (key != "ras-schedule" || !(ls >> version) || version != 1) fail("missing 'ras-schedule 1' header");
      header = true;
      continue;
    }
    if (key == "n") {
      ls >> s.n;
    } else if (key == "m") {
      ls >> s.m;
    } else if (key == "nu") {
      ls >> s.nu;
    } else if (key == "rho") {
      ls >> s.rho;
    } else if (key == "initial") {
      double v;
      while (ls >> v) s.initial.push_back(v);
    } else if (key == "graph") {
      std::size_t id;
      if (!(ls >> id) || id != s.graphs.size()) fail("graph ids must be consecutive from 0");
      std::vector<Edge> edges;
      std::string tok;
      while (ls >> tok) {
        auto [u, v] = pair_of(tok);
        edges.emplace_back(u, v);
      }
      s.graphs.emplace_back(s.n, std::move(edges));
    } else if (key == "avg") {
      ScheduleSegment seg;
      if (!(ls >> seg.graph >> seg.repeats >> seg.phase >> seg.depth)) fail("avg needs graph repeats phase depth");
      s.segments.push_back(std::move(seg));
    } else if (key == "snap") {
      ScheduleSegment seg;
      seg.kind = ScheduleSegment::Kind::Snap;
      if (!(ls >> seg.graph >> seg.phase >> seg.depth)) fail("snap needs graph phase depth ranges");
      std::string tok;
      while (ls >> tok) seg.ranges.push_back(pair_of(tok));
      if (seg.ranges.empty()) fail("snap without ranges");
      s.segments.push_back(std::move(seg));
    } else {
      fail("unknown record '" + key + "'");
    }
    if (ls.fail() && !ls.eof()) fail("malformed value");
  }
  if (!header) throw std::invalid_argument("schedule: empty input");
  if (s.n == 0 || !(s.rho > 0.0) || s.initial.size() != s.n)
    throw std::invalid_argument("schedule: n, rho and initial positions are required");
  return s;
}

}  // namespace ras
