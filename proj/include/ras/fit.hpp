#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ras {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y ~ slope * x + intercept.
inline LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = xs.size();
  return f;
}

inline double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return fit_line(lx, ly).slope;
}

struct ExponentialFit {
  double log_scale = 0.0;  // log C
  double rate = 0.0;       // y ~ C exp(rate * t)
  std::size_t points = 0;
};

/// Fits y_k ~ C exp(rate * t_k) on the points with y_k > floor.
inline ExponentialFit fit_exponential(std::span<const double> ts, std::span<const double> ys, double floor = 1e-13) {
  std::vector<double> t, ly;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ys[i] > floor) {
      t.push_back(ts[i]);
      ly.push_back(std::log(ys[i]));
    }
  }
  ExponentialFit e;
  e.points = t.size();
  if (t.size() < 2) return e;
  LinearFit f = fit_line(t, ly);
  e.log_scale = f.intercept;
  e.rate = f.slope;
  return e;
}

}  // namespace ras
