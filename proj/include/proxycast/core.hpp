#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace proxycast {

// Alphabet sizes and revelation delays for one prediction game.
// proxy_delay = 0 reproduces the theoretical setting where proxies arrive
// at the end of the round they were generated in.
struct ProblemSpaces {
  int n_instances = 1;
  int n_proxies = 1;
  int n_outcomes = 2;
  int proxy_delay = 0;
  int outcome_delay = 0;

  void validate() const {
    if (n_instances < 1) throw std::invalid_argument("n_instances must be >= 1");
    if (n_proxies < 1) throw std::invalid_argument("n_proxies must be >= 1");
    if (n_outcomes < 2) throw std::invalid_argument("n_outcomes must be >= 2");
    if (proxy_delay < 0) throw std::invalid_argument("proxy_delay must be >= 0");
    if (outcome_delay < 0) throw std::invalid_argument("outcome_delay must be >= 0");
    if (proxy_delay > outcome_delay)
      throw std::invalid_argument("proxy_delay must not exceed outcome_delay");
  }

  bool operator==(const ProblemSpaces&) const = default;
};

// Probability vector over a finite alphabet: entries non-negative, summing
// to 1 within kSumTolerance. The constructor trusts its input; use
// validate_prob_vector() for untrusted data.
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ProbVector() = default;
  explicit ProbVector(std::vector<double> probs) : p_(std::move(probs)) {}

  int size() const { return static_cast<int>(p_.size()); }
  bool empty() const { return p_.empty(); }
  double operator[](int i) const { return p_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& probs() const { return p_; }
  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

  double sum() const {
    double s = 0.0;
    for (double v : p_) s += v;
    return s;
  }

  bool is_valid() const {
    for (double v : p_)
      if (!(v >= 0.0) || !(v <= 1.0 + kSumTolerance)) return false;
    return std::abs(sum() - 1.0) <= kSumTolerance;
  }

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> p_;
};

// Accepts iff all entries are >= -1e-12 and the sum is within 1e-9 of 1.
// Tiny negative entries are clamped to zero and the vector renormalized.
inline ProbVector validate_prob_vector(std::span<const double> raw) {
  constexpr double kNegativeTolerance = -1e-12;
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < kNegativeTolerance) {
      std::ostringstream msg;
      msg << "probability entry " << i << " is negative (" << raw[i] << ")";
      throw std::invalid_argument(msg.str());
    }
    sum += raw[i];
  }
  if (std::abs(sum - 1.0) > ProbVector::kSumTolerance) {
    std::ostringstream msg;
    msg << "probabilities sum to " << sum << ", expected 1 within "
        << ProbVector::kSumTolerance;
    throw std::invalid_argument(msg.str());
  }
  std::vector<double> probs(raw.begin(), raw.end());
  bool clamped = false;
  double clamped_sum = 0.0;
  for (double& v : probs) {
    if (v < 0.0) {
      v = 0.0;
      clamped = true;
    }
    clamped_sum += v;
  }
  if (clamped || clamped_sum != 1.0) {
    for (double& v : probs) v /= clamped_sum;
  }
  return ProbVector(std::move(probs));
}

inline ProbVector validate_prob_vector(const std::vector<double>& raw) {
  return validate_prob_vector(std::span<const double>(raw));
}

inline ProbVector uniform_prob_vector(int n) {
  return ProbVector(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
}

constexpr double kDefaultLogLossCap = 50.0;

// Instantaneous loss -ln(prediction[outcome]), capped so that a degenerate
// zero-probability prediction yields `cap` instead of infinity.
inline double log_loss(const ProbVector& prediction, int outcome,
                       double cap = kDefaultLogLossCap) {
  if (outcome < 0 || outcome >= prediction.size())
    throw std::out_of_range("log_loss: outcome index out of range");
  const double p = prediction[outcome];
  if (!(p > 0.0)) return cap;
  return std::min(-std::log(p), cap);
}

// One generated round: (x_t, z_t, y_t) with a 1-based round index t.
// `proxy` is the proxy shown to the forecaster (which may be a noised view
// of the proxy that generated the outcome; see EventStream).
struct RoundEvent {
  std::int64_t round = 1;
  int instance = 0;
  int proxy = 0;
  int outcome = 0;

  bool operator==(const RoundEvent&) const = default;
};

inline void validate_event(const RoundEvent& e, const ProblemSpaces& spaces) {
  if (e.round < 1) throw std::invalid_argument("round index must be >= 1");
  if (e.instance < 0 || e.instance >= spaces.n_instances)
    throw std::out_of_range("instance index out of range");
  if (e.proxy < 0 || e.proxy >= spaces.n_proxies)
    throw std::out_of_range("proxy index out of range");
  if (e.outcome < 0 || e.outcome >= spaces.n_outcomes)
    throw std::out_of_range("outcome index out of range");
}

// When each round's signals become visible, for a contiguous game of
// `horizon` rounds: a signal generated at round s with delay d is revealed
// at the end of round s + d, so it can influence predictions at rounds
// strictly greater than s + d. Signals whose reveal round exceeds the
// horizon are never delivered.
class RevelationSchedule {
 public:
  RevelationSchedule(std::int64_t horizon, int proxy_delay, int outcome_delay)
      : horizon_(horizon), proxy_delay_(proxy_delay), outcome_delay_(outcome_delay) {
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    if (proxy_delay < 0 || outcome_delay < 0)
      throw std::invalid_argument("delays must be >= 0");
  }

  std::int64_t horizon() const { return horizon_; }
  int proxy_delay() const { return proxy_delay_; }
  int outcome_delay() const { return outcome_delay_; }

  std::int64_t proxy_reveal_round(std::int64_t origin) const {
    return origin + proxy_delay_;
  }
  std::int64_t outcome_reveal_round(std::int64_t origin) const {
    return origin + outcome_delay_;
  }

  // Origin round of the proxy (outcome) revealed at the end of `round`.
  std::optional<std::int64_t> proxy_origin_at(std::int64_t round) const {
    const std::int64_t origin = round - proxy_delay_;
    if (origin < 1 || origin > horizon_ || round > horizon_) return std::nullopt;
    return origin;
  }
  std::optional<std::int64_t> outcome_origin_at(std::int64_t round) const {
    const std::int64_t origin = round - outcome_delay_;
    if (origin < 1 || origin > horizon_ || round > horizon_) return std::nullopt;
    return origin;
  }

  std::int64_t proxy_reveal_count() const {
    return std::max<std::int64_t>(0, horizon_ - proxy_delay_);
  }
  std::int64_t outcome_reveal_count() const {
    return std::max<std::int64_t>(0, horizon_ - outcome_delay_);
  }

 private:
  std::int64_t horizon_;
  int proxy_delay_;
  int outcome_delay_;
};

}  // namespace proxycast
