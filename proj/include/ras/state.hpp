#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ras/system.hpp"

namespace ras {

inline double q_dot(std::span<const double> q, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += q[i] * x[i] * y[i];
  return s;
}

inline double q_norm2(std::span<const double> q, std::span<const double> x) { return q_dot(q, x, x); }

// ||q||_1^{-1} <x, 1>_q
inline double q_mean(std::span<const double> q, std::span<const double> x) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += q[i] * x[i];
    den += q[i];
  }
  return num / den;
}

// ||x - x_hat||_q^2
inline double q_variance(std::span<const double> q, std::span<const double> x) {
  double m = q_mean(q, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += q[i] * (x[i] - m) * (x[i] - m);
  return s;
}

inline double diameter(std::span<const double> x) {
  if (x.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

/// One spatial coordinate of an agent embedding together with its weights.
struct EmbeddedState {
  std::vector<double> values;
  std::vector<double> q;

  EmbeddedState() = default;
  EmbeddedState(std::vector<double> v, std::vector<double> w) : values(std::move(v)), q(std::move(w)) {
    if (values.size() != q.size()) throw std::invalid_argument("state: values and q differ in length");
  }

  std::size_t size() const { return values.size(); }
  double mean() const { return q_mean(q, values); }
  double norm2() const { return q_norm2(q, values); }
  double variance() const { return q_variance(q, values); }
};

inline EmbeddedState step(const EmbeddedState& state, const ReversibleSystem& sys) {
  if (state.size() != sys.size()) {
    throw std::invalid_argument("step: state has " + std::to_string(state.size()) + " agents, system has " +
                                std::to_string(sys.size()));
  }
  EmbeddedState next;
  next.q = state.q;
  next.values = sys.apply(state.values);
  return next;
}

}  // namespace ras
