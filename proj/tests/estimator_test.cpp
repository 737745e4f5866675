#include "proxycast/estimator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "proxycast/rng.hpp"

namespace px = proxycast;

TEST(SmoothedEstimator, UniformPrior) {
  px::SmoothedCategoricalEstimator est(2, 1.0);
  const px::ProbVector p = est.predict();
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(SmoothedEstimator, LaplaceCounts) {
  px::SmoothedCategoricalEstimator est(2, 1.0);
  est.update(0);
  est.update(0);
  const px::ProbVector p = est.predict();
  EXPECT_DOUBLE_EQ(p[0], 0.75);  // (2 + 1) / (2 + 2)
  EXPECT_DOUBLE_EQ(p[1], 0.25);
}

TEST(SmoothedEstimator, KtCounts) {
  px::SmoothedCategoricalEstimator est = px::SmoothedCategoricalEstimator::kt(2);
  est.update(0);
  const px::ProbVector p = est.predict();
  EXPECT_DOUBLE_EQ(p[0], 0.75);  // (1 + 0.5) / (1 + 1)
  EXPECT_DOUBLE_EQ(p[1], 0.25);
}

TEST(SmoothedEstimator, FiveSequentialUpdates) {
  px::SmoothedCategoricalEstimator est = px::SmoothedCategoricalEstimator::laplace(2);
  for (int i = 0; i < 5; ++i) est.update(0);
  const px::ProbVector p = est.predict();
  EXPECT_NEAR(p[0], 6.0 / 7.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 7.0, 1e-15);
}

TEST(SmoothedEstimator, UpdateBookkeeping) {
  px::SmoothedCategoricalEstimator est(2, 1.0);
  est.update(0);
  EXPECT_EQ(est.count(0), 1);
  EXPECT_EQ(est.count(1), 0);
  est.update(0);
  est.update(1);
  EXPECT_EQ(est.count(0), 2);
  EXPECT_EQ(est.count(1), 1);
  EXPECT_EQ(est.total(), 3);
}

TEST(SmoothedEstimator, RejectsBadInput) {
  EXPECT_THROW(px::SmoothedCategoricalEstimator(0, 1.0), std::invalid_argument);
  EXPECT_THROW(px::SmoothedCategoricalEstimator(2, 0.0), std::invalid_argument);
  px::SmoothedCategoricalEstimator est(2, 1.0);
  EXPECT_THROW(est.update(2), std::out_of_range);
  EXPECT_THROW(est.update(-1), std::out_of_range);
}

// Exactness: predictions match the closed-form formula recomputed from the
// observation sequence, and depend only on counts, not on order.
TEST(SmoothedEstimator, MatchesClosedFormOnRandomSequences) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const double alpha = (rep % 2 == 0) ? 1.0 : 0.5;
    px::SmoothedCategoricalEstimator est(n, alpha);
    std::vector<std::int64_t> counts(n, 0);
    const int len = static_cast<int>(rng() % 200);
    for (int i = 0; i < len; ++i) {
      const int a = static_cast<int>(rng() % n);
      est.update(a);
      ++counts[a];
    }
    const px::ProbVector p = est.predict();
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      const double expected =
          (static_cast<double>(counts[a]) + alpha) / (static_cast<double>(len) + n * alpha);
      EXPECT_NEAR(p[a], expected, 1e-12);
      EXPECT_GT(p[a], 0.0);
      sum += p[a];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(SmoothedEstimator, PermutationSufficiency) {
  std::mt19937_64 rng(12);
  std::vector<int> obs;
  for (int i = 0; i < 60; ++i) obs.push_back(static_cast<int>(rng() % 4));
  px::SmoothedCategoricalEstimator a(4, 0.5), b(4, 0.5);
  for (int o : obs) a.update(o);
  std::shuffle(obs.begin(), obs.end(), rng);
  for (int o : obs) b.update(o);
  EXPECT_EQ(a.predict(), b.predict());
}

TEST(DriftBound, KnownValues) {
  // 2 * 1 * 2 * ln((5-1)/(1*1*2) + 1) = 4 ln 3
  EXPECT_NEAR(px::drift_bound_rhs(1, 2, 1.0, 2, 5), 4.0 * std::log(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(px::drift_bound_rhs(3, 4, 0.5, 0, 100), 0.0);
  EXPECT_DOUBLE_EQ(px::drift_bound_rhs(1, 1, 1.0, 3, 1), 0.0);
}

TEST(CumulativeDrift, ZeroDelayIsZero) {
  std::vector<std::pair<int, int>> events = {{0, 1}, {1, 0}, {0, 0}, {1, 1}};
  EXPECT_DOUBLE_EQ(px::cumulative_drift(events, 2, 2, 1.0, 0), 0.0);
}

TEST(CumulativeDrift, SingleEventIsZero) {
  std::vector<std::pair<int, int>> events = {{0, 1}};
  EXPECT_DOUBLE_EQ(px::cumulative_drift(events, 1, 2, 1.0, 5), 0.0);
}

// Brute-force replay of the two estimator sequences for
// events = [(0,0),(0,0),(0,0)], |X|=1, |Y|=2, alpha=1, D=1:
//   p_1 = 1/2, p_2 = 2/3, p_3 = 3/4; lagged: 1/2, 1/2, 2/3
//   drift = ln(1) + ln(4/3) + ln(9/8) = ln(3/2)
TEST(CumulativeDrift, HandComputedSequence) {
  std::vector<std::pair<int, int>> events = {{0, 0}, {0, 0}, {0, 0}};
  EXPECT_NEAR(px::cumulative_drift(events, 1, 2, 1.0, 1), std::log(1.5), 1e-12);
}

// Independent oracle: replay two full estimator banks (no sharing with the
// implementation's incremental counters) and compare.
namespace {
double drift_oracle(const std::vector<std::pair<int, int>>& events, int n_instances,
                    int n_outcomes, double alpha, int delay) {
  const auto prob_at = [&](std::int64_t t, int x, int y) {
    // counts over rounds 1..t-1 for instance x; t <= 0 is the prior
    std::int64_t cnt = 0, tot = 0;
    for (std::int64_t s = 1; s < t; ++s) {
      const auto& e = events[static_cast<std::size_t>(s - 1)];
      if (e.first == x) {
        ++tot;
        if (e.second == y) ++cnt;
      }
    }
    return (static_cast<double>(cnt) + alpha) / (static_cast<double>(tot) + alpha * n_outcomes);
  };
  (void)n_instances;
  double drift = 0.0;
  for (std::int64_t t = 1; t <= static_cast<std::int64_t>(events.size()); ++t) {
    const auto& e = events[static_cast<std::size_t>(t - 1)];
    const double now = prob_at(t, e.first, e.second);
    const double lag = prob_at(std::max<std::int64_t>(t - delay, 0), e.first, e.second);
    drift += std::log(now / lag);
  }
  return drift;
}
}  // namespace

TEST(CumulativeDrift, MatchesBruteForceOracle) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    const int nx = 1 + static_cast<int>(rng() % 4);
    const int ny = 2 + static_cast<int>(rng() % 3);
    const int delay = static_cast<int>(rng() % 20);
    const double alpha = (rep % 2 == 0) ? 1.0 : 0.5;
    const int len = 1 + static_cast<int>(rng() % 50);
    std::vector<std::pair<int, int>> events;
    for (int i = 0; i < len; ++i)
      events.emplace_back(static_cast<int>(rng() % nx), static_cast<int>(rng() % ny));
    EXPECT_NEAR(px::cumulative_drift(events, nx, ny, alpha, delay),
                drift_oracle(events, nx, ny, alpha, delay), 1e-10);
  }
}

// The drift bound holds on random sequences (the acceptance suite runs the
// full 1000-configuration version).
TEST(CumulativeDrift, BoundHoldsOnRandomSequences) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const int nx = 1 + static_cast<int>(rng() % 5);
    const int ny = 2 + static_cast<int>(rng() % 4);
    const int delay = static_cast<int>(rng() % 51);
    const std::int64_t horizon = 1 + static_cast<std::int64_t>(rng() % 200);
    const double alpha = (rep % 2 == 0) ? 1.0 : 0.5;
    std::vector<std::pair<int, int>> events;
    for (std::int64_t i = 0; i < horizon; ++i)
      events.emplace_back(static_cast<int>(rng() % nx), static_cast<int>(rng() % ny));
    const double lhs = px::cumulative_drift(events, nx, ny, alpha, delay);
    const double rhs = px::drift_bound_rhs(nx, ny, alpha, delay, horizon);
    EXPECT_LE(lhs, rhs + 1e-9);
  }
}
