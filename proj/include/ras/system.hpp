#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ras/graph.hpp"

namespace ras {

/// Entry (i, j, value) of a symmetric matrix, i <= j.
struct SymmetricEntry {
  std::size_t i;
  std::size_t j;
  double value;
};

/// Row-stochastic matrix P = Q^{-1} M with M symmetric and Q = diag(M 1).
///
/// Stored as compressed rows of (column, value) pairs. Each row keeps its
/// diagonal entry. The weight vector q satisfies q_i P_ij = q_j P_ji.
class ReversibleSystem {
 public:
  ReversibleSystem() = default;

  std::size_t size() const { return q_.size(); }
  const std::vector<double>& q() const { return q_; }

  std::span<const std::size_t> row_columns(std::size_t i) const {
    return {col_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {val_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  double entry(std::size_t i, std::size_t j) const {
    auto cols = row_columns(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return val_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  // out = P in. `in` and `out` must not alias.
  void apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != size() || out.size() != size()) {
      throw std::invalid_argument("system: dimension mismatch (matrix " + std::to_string(size()) + ", vector " +
                                  std::to_string(in.size()) + ")");
    }
    for (std::size_t i = 0; i < size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += val_[k] * in[col_[k]];
      out[i] = acc;
    }
  }

  std::vector<double> apply(std::span<const double> in) const {
    std::vector<double> out(in.size());
    apply(in, out);
    return out;
  }

  double row_sum_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      for (double v : row_values(i)) s += v;
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

  // max |q_i P_ij - q_j P_ji| over stored entries.
  double detailed_balance_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      auto cols = row_columns(i);
      auto vals = row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        std::size_t j = cols[k];
        worst = std::max(worst, std::abs(q_[i] * vals[k] - q_[j] * entry(j, i)));
      }
    }
    return worst;
  }

  double min_positive_entry() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : val_)
      if (v > 0.0) m = std::min(m, v);
    return m;
  }

  bool has_negative_entry() const {
    return std::any_of(val_.begin(), val_.end(), [](double v) { return v < 0.0; });
  }

  std::vector<std::vector<double>> dense() const {
    std::vector<std::vector<double>> d(size(), std::vector<double>(size(), 0.0));
    for (std::size_t i = 0; i < size(); ++i) {
      auto cols = row_columns(i);
      auto vals = row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) d[i][cols[k]] = vals[k];
    }
    return d;
  }

  /// Builds P from the upper triangle of a symmetric M (diagonal included).
  /// Every row of M must have a positive sum.
  static ReversibleSystem from_symmetric(std::size_t n, std::span<const SymmetricEntry> upper) {
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (const auto& e : upper) {
      if (e.i > e.j || e.j >= n) throw std::invalid_argument("system: entry outside upper triangle");
      if (e.value == 0.0) continue;
      rows[e.i].emplace_back(e.j, e.value);
      if (e.i != e.j) rows[e.j].emplace_back(e.i, e.value);
    }
    ReversibleSystem s;
    s.q_.assign(n, 0.0);
    s.row_ptr_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& r = rows[i];
      std::sort(r.begin(), r.end());
      double sum = 0.0;
      for (auto& [c, v] : r) sum += v;
      if (!(sum > 0.0)) throw std::invalid_argument("system: row " + std::to_string(i) + " of M has no mass");
      s.q_[i] = sum;
      for (auto& [c, v] : r) {
        s.col_.push_back(c);
        s.val_.push_back(v / sum);
      }
      s.row_ptr_[i + 1] = s.col_.size();
    }
    return s;
  }

  friend ReversibleSystem build_system(const Graph& graph, std::span<const double> a);

 private:
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> val_;
  std::vector<double> q_;
};

// Relative slack accepted on the upper weight limit 1/(deg+1).
inline constexpr double kWeightSlack = 1e-12;

inline void validate_weights(const Graph& graph, std::span<const double> a) {
  if (a.size() != graph.n()) {
    throw std::invalid_argument("weights: expected " + std::to_string(graph.n()) + " values, got " +
                                std::to_string(a.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    double limit = 1.0 / static_cast<double>(graph.degree(i) + 1);
    if (!(a[i] > 0.0) || a[i] > limit * (1.0 + kWeightSlack)) {
      throw std::invalid_argument("weights: a[" + std::to_string(i) + "] = " + std::to_string(a[i]) +
                                  " outside (0, 1/(deg+1)] with deg = " + std::to_string(graph.degree(i)));
    }
  }
}

/// P_ij = a_i on edges, P_ii = 1 - a_i deg_i, q_i = 1/a_i.
///
/// Equivalent to M with unit off-diagonal entries and M_ii = 1/a_i - deg_i,
/// so M is symmetric for any admissible a.
inline ReversibleSystem build_system(const Graph& graph, std::span<const double> a) {
  validate_weights(graph, a);
  const std::size_t n = graph.n();
  ReversibleSystem s;
  s.q_.resize(n);
  s.row_ptr_.assign(n + 1, 0);
  s.col_.reserve(n + 2 * graph.edge_count());
  s.val_.reserve(n + 2 * graph.edge_count());
  for (std::size_t i = 0; i < n; ++i) {
    s.q_[i] = 1.0 / a[i];
    auto nb = graph.neighbors(i);
    double diag = 1.0 - a[i] * static_cast<double>(nb.size());
    bool placed = false;
    for (std::size_t j : nb) {
      if (!placed && j > i) {
        s.col_.push_back(i);
        s.val_.push_back(diag);
        placed = true;
      }
      s.col_.push_back(j);
      s.val_.push_back(a[i]);
    }
    if (!placed) {
      s.col_.push_back(i);
      s.val_.push_back(diag);
    }
    s.row_ptr_[i + 1] = s.col_.size();
  }
  return s;
}

inline ReversibleSystem build_system(const Graph& graph, double uniform_a) {
  std::vector<double> a(graph.n(), uniform_a);
  return build_system(graph, a);
}

}  // namespace ras
