#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "proxycast/core.hpp"

namespace proxycast {

// Additive-smoothing sequential estimator over a finite alphabet. After
// observing counts n_a (total n), category a is predicted with probability
//
//   (n_a + alpha) / (n + |A| * alpha)
//
// alpha = 1 is the Laplace estimator, alpha = 1/2 the Krichevsky-Trofimov
// estimator. Predictions are always strictly positive.
class SmoothedCategoricalEstimator {
 public:
  SmoothedCategoricalEstimator(int n_categories, double alpha)
      : alpha_(alpha), counts_(static_cast<std::size_t>(n_categories), 0) {
    if (n_categories < 1)
      throw std::invalid_argument("estimator needs at least one category");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  }

  static SmoothedCategoricalEstimator laplace(int n_categories) {
    return {n_categories, 1.0};
  }
  static SmoothedCategoricalEstimator kt(int n_categories) {
    return {n_categories, 0.5};
  }

  int n_categories() const { return static_cast<int>(counts_.size()); }
  double alpha() const { return alpha_; }
  std::int64_t count(int category) const {
    check_range(category);
    return counts_[static_cast<std::size_t>(category)];
  }
  std::int64_t total() const { return total_; }

  double prob(int category) const {
    check_range(category);
    const double denom = static_cast<double>(total_) + alpha_ * n_categories();
    return (static_cast<double>(counts_[static_cast<std::size_t>(category)]) + alpha_) / denom;
  }

  ProbVector predict() const {
    const double denom = static_cast<double>(total_) + alpha_ * n_categories();
    std::vector<double> p(counts_.size());
    for (std::size_t a = 0; a < counts_.size(); ++a)
      p[a] = (static_cast<double>(counts_[a]) + alpha_) / denom;
    return ProbVector(std::move(p));
  }

  void update(int category) {
    check_range(category);
    ++counts_[static_cast<std::size_t>(category)];
    ++total_;
  }

  void reset() {
    counts_.assign(counts_.size(), 0);
    total_ = 0;
  }

 private:
  void check_range(int category) const {
    if (category < 0 || category >= n_categories())
      throw std::out_of_range("estimator category index out of range");
  }

  double alpha_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

// Right-hand side of the prediction-drift bound for a bank of per-instance
// smoothed estimators run with outcome delay D over horizon T:
//
//   D * |X| * |Y| * ln((T - 1) / (alpha * |X| * |Y|) + 1)
inline double drift_bound_rhs(int n_instances, int n_outcomes, double alpha,
                              int delay, std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const double xy = static_cast<double>(n_instances) * n_outcomes;
  return static_cast<double>(delay) * xy *
         std::log(static_cast<double>(horizon - 1) / (alpha * xy) + 1.0);
}

// Cumulated prediction drift sum_s ln(p_s(y_s|x_s) / p_{s-D}(y_s|x_s)) for
// the per-instance smoothed estimator replayed over `events` (pairs of
// (instance, outcome)). p_t uses the outcomes of rounds 1..t-1 restricted
// to the queried instance; for t <= 0 the estimator evaluates to the
// smoothing prior (uniform), so boundary terms stay well-defined
// probabilities.
inline double cumulative_drift(std::span<const std::pair<int, int>> events,
                               int n_instances, int n_outcomes, double alpha,
                               int delay) {
  if (n_instances < 1 || n_outcomes < 1)
    throw std::invalid_argument("alphabet sizes must be positive");
  if (delay < 0) throw std::invalid_argument("delay must be >= 0");

  const auto x_size = static_cast<std::size_t>(n_instances);
  const auto y_size = static_cast<std::size_t>(n_outcomes);
  std::vector<std::int64_t> counts_now(x_size * y_size, 0), counts_lag(x_size * y_size, 0);
  std::vector<std::int64_t> total_now(x_size, 0), total_lag(x_size, 0);
  const auto cell = [y_size](int x, int y) {
    return static_cast<std::size_t>(x) * y_size + static_cast<std::size_t>(y);
  };

  double drift = 0.0;
  const auto horizon = static_cast<std::int64_t>(events.size());
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const auto [x, y] = events[static_cast<std::size_t>(t - 1)];
    if (x < 0 || x >= n_instances || y < 0 || y >= n_outcomes)
      throw std::out_of_range("drift event index out of range");
    const double denom_now = static_cast<double>(total_now[static_cast<std::size_t>(x)]) + alpha * n_outcomes;
    const double denom_lag = static_cast<double>(total_lag[static_cast<std::size_t>(x)]) + alpha * n_outcomes;
    const double p_now = (static_cast<double>(counts_now[cell(x, y)]) + alpha) / denom_now;
    const double p_lag = (static_cast<double>(counts_lag[cell(x, y)]) + alpha) / denom_lag;
    drift += std::log(p_now / p_lag);

    ++counts_now[cell(x, y)];
    ++total_now[static_cast<std::size_t>(x)];
    const std::int64_t lag_round = t - delay;
    if (lag_round >= 1) {
      const auto [lx, ly] = events[static_cast<std::size_t>(lag_round - 1)];
      ++counts_lag[cell(lx, ly)];
      ++total_lag[static_cast<std::size_t>(lx)];
    }
  }
  return drift;
}

}  // namespace proxycast
