#include "proxycast/core.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "proxycast/rng.hpp"

namespace px = proxycast;

TEST(ProblemSpaces, ValidatesRanges) {
  px::ProblemSpaces ok{10, 4, 5, 0, 100};
  EXPECT_NO_THROW(ok.validate());

  EXPECT_THROW((px::ProblemSpaces{0, 4, 5, 0, 100}.validate()), std::invalid_argument);
  EXPECT_THROW((px::ProblemSpaces{10, 0, 5, 0, 100}.validate()), std::invalid_argument);
  EXPECT_THROW((px::ProblemSpaces{10, 4, 1, 0, 100}.validate()), std::invalid_argument);
  EXPECT_THROW((px::ProblemSpaces{10, 4, 5, -1, 100}.validate()), std::invalid_argument);
  // proxies may not be revealed later than outcomes
  EXPECT_THROW((px::ProblemSpaces{10, 4, 5, 101, 100}.validate()), std::invalid_argument);
  // zero proxy delay is the theoretical setting and always allowed
  EXPECT_NO_THROW((px::ProblemSpaces{10, 4, 5, 0, 0}.validate()));
}

TEST(LogLoss, KnownValues) {
  EXPECT_NEAR(px::log_loss(px::ProbVector({0.5, 0.5}), 0), 0.6931471805599453, 1e-15);
  EXPECT_DOUBLE_EQ(px::log_loss(px::ProbVector({1.0, 0.0}), 0), 0.0);
  EXPECT_NEAR(px::log_loss(px::ProbVector({0.25, 0.75}), 1), 0.2876820724517809, 1e-15);
}

TEST(LogLoss, CapsZeroProbability) {
  EXPECT_DOUBLE_EQ(px::log_loss(px::ProbVector({1.0, 0.0}), 1), 50.0);
  EXPECT_DOUBLE_EQ(px::log_loss(px::ProbVector({1.0, 0.0}), 1, 30.0), 30.0);
  // values beyond the cap are clamped too
  EXPECT_DOUBLE_EQ(px::log_loss(px::ProbVector({1.0 - 1e-60, 1e-60}), 1), 50.0);
}

TEST(LogLoss, OutOfRangeOutcome) {
  EXPECT_THROW(px::log_loss(px::ProbVector({0.5, 0.5}), 2), std::out_of_range);
  EXPECT_THROW(px::log_loss(px::ProbVector({0.5, 0.5}), -1), std::out_of_range);
}

TEST(LogLoss, NonNegativeAndDecreasing) {
  px::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double p = 1e-6 + (1.0 - 2e-6) * rng.uniform();
    const double q = p + (1.0 - p) * 0.5;  // strictly larger probability
    const double lp = px::log_loss(px::ProbVector({p, 1.0 - p}), 0);
    const double lq = px::log_loss(px::ProbVector({q, 1.0 - q}), 0);
    EXPECT_GE(lp, 0.0);
    EXPECT_LT(lq, lp);
  }
}

TEST(ValidateProbVector, AcceptsCleanInput) {
  const px::ProbVector v = px::validate_prob_vector(std::vector<double>{0.3, 0.7});
  EXPECT_EQ(v.probs(), (std::vector<double>{0.3, 0.7}));
}

TEST(ValidateProbVector, RejectsBadSum) {
  try {
    px::validate_prob_vector(std::vector<double>{0.5, 0.5, 0.1});
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("1.1"), std::string::npos)
        << "error should name the offending sum: " << e.what();
  }
}

TEST(ValidateProbVector, ClampsTinyNegatives) {
  const px::ProbVector v =
      px::validate_prob_vector(std::vector<double>{1.0 + 1e-13, -1e-13});
  ASSERT_EQ(v.size(), 2);
  EXPECT_DOUBLE_EQ(v[0], 1.0);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
}

TEST(ValidateProbVector, RejectsLargeNegatives) {
  EXPECT_THROW(px::validate_prob_vector(std::vector<double>{1.1, -0.1}),
               std::invalid_argument);
}

TEST(RevelationSchedule, ZeroDelayRevealsSameRound) {
  const px::RevelationSchedule sched(10, 0, 0);
  EXPECT_EQ(sched.proxy_reveal_round(3), 3);
  EXPECT_EQ(sched.outcome_reveal_round(3), 3);
  EXPECT_EQ(sched.proxy_origin_at(3), 3);
}

TEST(RevelationSchedule, DelayedOrigins) {
  const px::RevelationSchedule sched(10, 2, 7);
  EXPECT_EQ(sched.proxy_origin_at(1), std::nullopt);
  EXPECT_EQ(sched.proxy_origin_at(3), 1);
  EXPECT_EQ(sched.outcome_origin_at(8), 1);
  EXPECT_EQ(sched.outcome_origin_at(7), std::nullopt);
  EXPECT_EQ(sched.proxy_origin_at(11), std::nullopt);  // beyond the horizon
  EXPECT_EQ(sched.proxy_reveal_count(), 8);
  EXPECT_EQ(sched.outcome_reveal_count(), 3);
}

// No signal is lost or duplicated: the multiset of origins revealed across
// rounds 1..T equals rounds 1..T-d, for random horizons and delays.
TEST(RevelationSchedule, RevealMultisetMatchesGeneration) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const std::int64_t horizon = 1 + static_cast<std::int64_t>(rng() % 60);
    const int outcome_delay = static_cast<int>(rng() % 70);
    const int proxy_delay = static_cast<int>(rng() % (outcome_delay + 1));
    const px::RevelationSchedule sched(horizon, proxy_delay, outcome_delay);

    std::vector<std::int64_t> proxy_origins, outcome_origins;
    for (std::int64_t t = 1; t <= horizon; ++t) {
      if (const auto o = sched.proxy_origin_at(t)) proxy_origins.push_back(*o);
      if (const auto o = sched.outcome_origin_at(t)) outcome_origins.push_back(*o);
    }
    std::vector<std::int64_t> expected_proxy, expected_outcome;
    for (std::int64_t s = 1; s <= horizon - proxy_delay; ++s) expected_proxy.push_back(s);
    for (std::int64_t s = 1; s <= horizon - outcome_delay; ++s) expected_outcome.push_back(s);
    EXPECT_EQ(proxy_origins, expected_proxy);
    EXPECT_EQ(outcome_origins, expected_outcome);
    EXPECT_EQ(sched.proxy_reveal_count(), static_cast<std::int64_t>(expected_proxy.size()));
    EXPECT_EQ(sched.outcome_reveal_count(), static_cast<std::int64_t>(expected_outcome.size()));
  }
}

TEST(RoundEvent, ValidatesIndices) {
  const px::ProblemSpaces spaces{10, 4, 5, 0, 100};
  EXPECT_NO_THROW(px::validate_event({1, 9, 3, 4}, spaces));
  EXPECT_THROW(px::validate_event({1, 10, 3, 4}, spaces), std::out_of_range);
  EXPECT_THROW(px::validate_event({1, 9, 4, 4}, spaces), std::out_of_range);
  EXPECT_THROW(px::validate_event({1, 9, 3, 5}, spaces), std::out_of_range);
  EXPECT_THROW(px::validate_event({0, 9, 3, 4}, spaces), std::invalid_argument);
}
