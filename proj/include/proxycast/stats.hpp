#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace proxycast {

constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;    // sample standard deviation (n - 1); 0 when n < 2
  double ci95 = 0.0;  // kZ95 * sd / sqrt(n)
  std::size_t n = 0;

  double lower() const { return mean - ci95; }
  double upper() const { return mean + ci95; }
};

inline SummaryStats summarize(std::span<const double> xs) {
  SummaryStats s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double x : xs) {
      const double d = x - s.mean;
      ss += d * d;
    }
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95 = kZ95 * s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

inline bool intervals_disjoint(const SummaryStats& a, const SummaryStats& b) {
  return a.upper() < b.lower() || b.upper() < a.lower();
}

inline double standard_error(const SummaryStats& s) {
  return s.n >= 2 ? s.sd / std::sqrt(static_cast<double>(s.n)) : 0.0;
}

// Ordinary least squares y = intercept + slope * x with the classical
// t-test on the slope. p_slope_positive is the one-sided p-value for
// H0: slope <= 0.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double t_stat = 0.0;
  double p_slope_positive = 1.0;
  std::size_t n = 0;
};

inline SlopeFit fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_slope: size mismatch");
  if (x.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_slope: x has no variation");

  SlopeFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  const double df = n - 2.0;
  const double sigma2 = ssr / df;
  fit.stderr_slope = std::sqrt(sigma2 / sxx);
  fit.t_stat = fit.slope / fit.stderr_slope;
  const boost::math::students_t dist(df);
  fit.p_slope_positive = boost::math::cdf(boost::math::complement(dist, fit.t_stat));
  return fit;
}

// Survival function of the chi-squared distribution (upper tail).
inline double chi_squared_sf(double statistic, double dof) {
  const boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

// Pearson goodness-of-fit statistic against expected probabilities.
inline double chi_squared_statistic(std::span<const std::int64_t> observed,
                                    std::span<const double> expected_probs,
                                    std::int64_t n_samples) {
  if (observed.size() != expected_probs.size())
    throw std::invalid_argument("chi_squared_statistic: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = expected_probs[i] * static_cast<double>(n_samples);
    if (expected <= 0.0) continue;
    const double d = static_cast<double>(observed[i]) - expected;
    stat += d * d / expected;
  }
  return stat;
}

// Centered moving average with window w (odd windows are symmetric; edges
// shrink the window). w = 1 returns the input unchanged.
inline std::vector<double> smooth_series(std::span<const double> xs, int window) {
  if (window < 1) throw std::invalid_argument("smoothing window must be >= 1");
  std::vector<double> out(xs.size());
  if (window == 1) {
    out.assign(xs.begin(), xs.end());
    return out;
  }
  const auto n = static_cast<std::int64_t>(xs.size());
  const std::int64_t half = window / 2;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t lo = std::max<std::int64_t>(0, i - half);
    const std::int64_t hi = std::min<std::int64_t>(n - 1, i + half);
    double acc = 0.0;
    for (std::int64_t j = lo; j <= hi; ++j) acc += xs[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace proxycast
