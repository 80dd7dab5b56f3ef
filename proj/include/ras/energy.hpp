#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ras/blocks.hpp"
#include "ras/graph.hpp"
#include "ras/state.hpp"
#include "ras/system.hpp"

namespace ras {

inline void require_exponent(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("s-energy: exponent s = " + std::to_string(s) + " outside (0, 1]");
}

/// Per-step block lengths and running s-energy totals.
///
/// Totals are kept for every exponent given at construction, both as the
/// usual sum over blocks and as the max-over-blocks variant. With history
/// enabled, totals for other exponents can be recomputed afterwards.
class EnergyLedger {
 public:
  explicit EnergyLedger(std::vector<double> exponents = {1.0}, bool keep_history = true)
      : exponents_(std::move(exponents)),
        sum_(exponents_.size(), 0.0),
        max_(exponents_.size(), 0.0),
        keep_history_(keep_history) {
    for (double s : exponents_) require_exponent(s);
  }

  void record(std::span<const Block> blocks) {
    std::vector<double> lengths;
    lengths.reserve(blocks.size());
    for (const Block& b : blocks) lengths.push_back(b.length());
    record_lengths(std::move(lengths));
  }

  void record_lengths(std::vector<double> lengths) {
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
      double s = exponents_[k];
      double total = 0.0;
      double top = 0.0;
      for (double l : lengths) {
        double p = l > 0.0 ? std::pow(l, s) : 0.0;
        total += p;
        top = std::max(top, p);
      }
      sum_[k] += total;
      max_[k] += top;
    }
    ++steps_;
    if (keep_history_) per_step_.push_back(std::move(lengths));
  }

  std::size_t steps() const { return steps_; }
  const std::vector<double>& exponents() const { return exponents_; }
  const std::vector<std::vector<double>>& per_step() const { return per_step_; }
  bool has_history() const { return keep_history_; }

  double total(double s) const { return lookup(s, sum_, false); }
  double total_max(double s) const { return lookup(s, max_, true); }

  // Sum over recorded steps of sum_i l_i^s, from the stored history.
  double recompute(double s) const {
    require_history();
    double total = 0.0;
    for (const auto& step : per_step_)
      for (double l : step) total += l > 0.0 ? std::pow(l, s) : 0.0;
    return total;
  }

  double recompute_max(double s) const {
    require_history();
    double total = 0.0;
    for (const auto& step : per_step_) {
      double top = 0.0;
      for (double l : step) top = std::max(top, l > 0.0 ? std::pow(l, s) : 0.0);
      total += top;
    }
    return total;
  }

 private:
  double lookup(double s, const std::vector<double>& totals, bool max_variant) const {
    require_exponent(s);
    for (std::size_t k = 0; k < exponents_.size(); ++k)
      if (exponents_[k] == s) return totals[k];
    return max_variant ? recompute_max(s) : recompute(s);
  }

  void require_history() const {
    if (!keep_history_) throw std::logic_error("ledger: history disabled, exponent not tracked");
  }

  std::vector<double> exponents_;
  std::vector<double> sum_;
  std::vector<double> max_;
  bool keep_history_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> per_step_;
};

inline double s_energy(const EnergyLedger& ledger, double s) { return ledger.total(s); }

/// D = sum_i max_{j ~ i} (x_i - x_j)^2; isolated vertices contribute 0.
inline double dirichlet_form(std::span<const double> x, const Graph& graph) {
  double d = 0.0;
  for (std::size_t i = 0; i < graph.n(); ++i) {
    double best = 0.0;
    for (std::size_t j : graph.neighbors(i)) best = std::max(best, (x[i] - x[j]) * (x[i] - x[j]));
    d += best;
  }
  return d;
}

namespace detail {
inline void require_bound_args(double n, double m, double rho, double s, double c) {
  if (!(n >= 1.0)) throw std::invalid_argument("bound: n must be >= 1");
  if (!(m >= 1.0 && m <= n)) throw std::invalid_argument("bound: m must lie in [1, n]");
  if (!(rho > 0.0 && rho <= 0.5)) throw std::invalid_argument("bound: rho must lie in (0, 1/2]");
  require_exponent(s);
  if (!(c > 0.0)) throw std::invalid_argument("bound: constant c must be positive");
}
}  // namespace detail

/// Upper bound (c n^2 / (rho s))^m on the s-energy of unit-variance systems
/// with at most m components.
inline double theorem2_bound(double n, double m, double rho, double s, double c = 1.0) {
  detail::require_bound_args(n, m, rho, s, c);
  return std::pow(c * n * n / (rho * s), m);
}

/// Iterates U(k) = 2/(1 - alpha^{s/2}) (U(k-1) + k) from U(0) = 0 with
/// alpha = 1 - rho/(2 n^2); returns U(m).
inline double energy_recurrence_bound(double n, std::size_t m, double rho, double s) {
  detail::require_bound_args(n, static_cast<double>(m), rho, s, 1.0);
  const double alpha = 1.0 - rho / (2.0 * n * n);
  const double factor = 2.0 / (1.0 - std::pow(alpha, s / 2.0));
  double u = 0.0;
  for (std::size_t k = 1; k <= m; ++k) u = factor * (u + static_cast<double>(k));
  return u;
}

/// Graphs G_0..G_{T-1} with states x(0)..x(T-1), optionally followed by x(T).
struct AgreementHistory {
  std::vector<Graph> graphs;
  std::vector<std::vector<double>> states;
};

struct CoverLengthReport {
  bool applicable = false;  // cumulative union connected at t_c
  std::size_t t_c = 1;
  double dirichlet_sum = 0.0;  // sum_{t <= t_c} D_t
  double rhs = 0.0;            // rho n^{-2} ||x - x_hat||_q^2
  bool holds = false;
  // ||x||_q^2 - ||x(t_c + 1)||_q^2 against (rho / 2n^2) ||x - x_hat||_q^2.
  bool telescope_available = false;
  double telescope_lhs = 0.0;
  double telescope_rhs = 0.0;
  bool telescope_holds = false;
};

/// t_c is the last t >= 1 at which adding G_t to the cumulative union
/// G_{<= t-1} lowers its component count, or 1 when no such t exists. It
/// is clipped to the recorded horizon.
inline CoverLengthReport check_cover_length(const AgreementHistory& history, std::span<const double> q, double rho,
                                            double tolerance = 1e-9) {
  if (history.graphs.empty()) throw std::invalid_argument("cover-length: empty history");
  if (history.states.size() < history.graphs.size()) throw std::invalid_argument("cover-length: missing states");
  const std::size_t n = history.graphs.front().n();
  const std::size_t horizon = history.graphs.size();

  CoverLengthReport rep;
  UnionFind uf(n);
  std::size_t t_c = 1;
  std::vector<std::size_t> components(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::size_t before = uf.count();
    for (const Edge& e : history.graphs[t].edges()) uf.unite(e.u, e.v);
    if (t >= 1 && uf.count() < before) t_c = t;
    components[t] = uf.count();
  }
  t_c = std::min(t_c, horizon - 1);
  rep.t_c = t_c;
  rep.applicable = components[t_c] == 1;

  const auto& x0 = history.states.front();
  const double var = q_variance(q, x0);
  const double nn = static_cast<double>(n);
  for (std::size_t t = 0; t <= t_c; ++t) rep.dirichlet_sum += dirichlet_form(history.states[t], history.graphs[t]);
  rep.rhs = rho / (nn * nn) * var;
  rep.holds = rep.applicable && rep.dirichlet_sum >= rep.rhs - tolerance;

  if (t_c + 1 < history.states.size()) {
    rep.telescope_available = true;
    rep.telescope_lhs = q_norm2(q, x0) - q_norm2(q, history.states[t_c + 1]);
    rep.telescope_rhs = rho / (2.0 * nn * nn) * var;
    rep.telescope_holds = rep.applicable && rep.telescope_lhs >= rep.telescope_rhs - tolerance;
  }
  return rep;
}

/// Runs x(t+1) = P_t x(t) over the given graph sequence with fixed weights
/// and returns the full history (states x(0)..x(T)).
inline AgreementHistory simulate_agreement(std::vector<double> x0, std::vector<Graph> graphs,
                                           std::span<const double> a, EnergyLedger* ledger = nullptr) {
  AgreementHistory h;
  h.states.push_back(std::move(x0));
  for (const Graph& g : graphs) {
    const auto& x = h.states.back();
    if (ledger) ledger->record(compute_blocks(x, g));
    ReversibleSystem sys = build_system(g, a);
    h.states.push_back(sys.apply(x));
  }
  h.graphs = std::move(graphs);
  return h;
}

}  // namespace ras
