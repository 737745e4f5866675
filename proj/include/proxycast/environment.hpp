#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "proxycast/core.hpp"
#include "proxycast/rng.hpp"

namespace proxycast {

// Parameters of the synthetic factored prediction task. The defaults are
// the appendix preset (see appendix_preset()).
struct TaskParams {
  int n_instances = 10;
  int n_proxies = 4;
  int n_outcomes = 5;
  std::int64_t rounds = 1000;
  int outcome_delay = 100;
  int proxy_delay = 0;
  double epsilon = 0.2;               // one-hot vs random-row interpolation
  double mu = 0.0;                    // uniform mixing of the instance schedule
  double useful_proxy_fraction = 1.0; // probability the observed proxy is the true one
  std::uint64_t seed = 1;

  static TaskParams appendix_preset() { return TaskParams{}; }

  ProblemSpaces spaces() const {
    return ProblemSpaces{n_instances, n_proxies, n_outcomes, proxy_delay, outcome_delay};
  }

  void validate() const {
    spaces().validate();
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (epsilon < 0.0 || epsilon > 1.0)
      throw std::invalid_argument("epsilon must be in [0, 1]");
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("mu must be in [0, 1]");
    if (useful_proxy_fraction < 0.0 || useful_proxy_fraction > 1.0)
      throw std::invalid_argument("fraction must be in [0, 1]");
  }

  bool operator==(const TaskParams&) const = default;
};

// Ground truth of one synthetic task: row-stochastic instance-to-proxy and
// proxy-to-outcome matrices plus the schedule parameters they were drawn
// with.
struct FactoredTask {
  ProblemSpaces spaces;
  std::vector<std::vector<double>> instance_to_proxy;  // N x |Z|
  std::vector<std::vector<double>> proxy_to_outcome;   // |Z| x |Y|
  double epsilon = 0.0;
  double mu = 0.0;
  double useful_proxy_fraction = 1.0;
  std::uint64_t seed = 0;

  // The optimal factored predictor p(y|x) = sum_z g(y|z) h(z|x).
  ProbVector optimal_prediction(int instance) const {
    if (instance < 0 || instance >= spaces.n_instances)
      throw std::out_of_range("instance index out of range");
    std::vector<double> p(static_cast<std::size_t>(spaces.n_outcomes), 0.0);
    const auto& h = instance_to_proxy[static_cast<std::size_t>(instance)];
    for (int z = 0; z < spaces.n_proxies; ++z)
      for (int y = 0; y < spaces.n_outcomes; ++y)
        p[static_cast<std::size_t>(y)] += proxy_to_outcome[static_cast<std::size_t>(z)][static_cast<std::size_t>(y)] * h[static_cast<std::size_t>(z)];
    return ProbVector(std::move(p));
  }
};

// A pre-generated game: `events` carry the proxy shown to the forecaster,
// `true_proxies` the proxy that actually generated each outcome. The two
// coincide at useful_proxy_fraction = 1.
struct EventStream {
  std::vector<RoundEvent> events;
  std::vector<int> true_proxies;

  std::int64_t size() const { return static_cast<std::int64_t>(events.size()); }
  bool empty() const { return events.empty(); }
  // Largest round index (== size() for contiguous streams).
  std::int64_t last_round() const { return events.empty() ? 0 : events.back().round; }
};

// One row: (1 - epsilon) * one_hot(uniform column) + epsilon * u / sum(u)
// with u drawn uniformly from [0,1)^cols. Per row the draws are: the
// one-hot column first (one uniform_int), then `cols` uniforms — always
// both, for every epsilon, so streams align across epsilon values.
inline std::vector<std::vector<double>> generate_stochastic_matrix(int rows, int cols,
                                                                   double epsilon,
                                                                   Rng& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("matrix dims must be positive");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("epsilon must be in [0, 1]");
  std::vector<std::vector<double>> m(static_cast<std::size_t>(rows));
  for (auto& row : m) {
    const int hot = rng.uniform_int(cols);
    std::vector<double> u(static_cast<std::size_t>(cols));
    double usum = 0.0;
    for (double& v : u) {
      v = rng.uniform();
      usum += v;
    }
    row.assign(static_cast<std::size_t>(cols), 0.0);
    for (int c = 0; c < cols; ++c)
      row[static_cast<std::size_t>(c)] = epsilon * u[static_cast<std::size_t>(c)] / usum;
    row[static_cast<std::size_t>(hot)] += 1.0 - epsilon;
  }
  return m;
}

// Instance schedule: with probability mu a uniform instance, otherwise the
// staggered block schedule min(N, floor(t / D) + 1), 0-based. Every call
// consumes the mixing coin; the uniform instance draw happens only on the
// mixing branch. A zero delay degenerates the block schedule to the last
// instance.
inline int schedule_instance(std::int64_t t, int n_instances, int outcome_delay,
                             double mu, Rng& rng) {
  if (t < 1) throw std::invalid_argument("round index must be >= 1");
  const double coin = rng.uniform();
  if (coin < mu) return rng.uniform_int(n_instances);
  if (outcome_delay <= 0) return n_instances - 1;
  const std::int64_t block = t / outcome_delay + 1;
  return static_cast<int>(std::min<std::int64_t>(n_instances, block)) - 1;
}

struct SampledRound {
  RoundEvent event;  // event.proxy is the observed proxy
  int true_proxy = 0;
};

// Draw order per round: schedule coin (+ uniform instance if mixing), true
// proxy from the instance's row, outcome from the true proxy's row,
// dilution coin (+ uniform proxy if diluted). The outcome is always driven
// by the true proxy; dilution only noises what the forecaster sees.
inline SampledRound sample_round(std::int64_t t, const FactoredTask& task, Rng& rng) {
  SampledRound r;
  r.event.round = t;
  r.event.instance =
      schedule_instance(t, task.spaces.n_instances, task.spaces.outcome_delay, task.mu, rng);
  r.true_proxy = rng.categorical(task.instance_to_proxy[static_cast<std::size_t>(r.event.instance)]);
  r.event.outcome = rng.categorical(task.proxy_to_outcome[static_cast<std::size_t>(r.true_proxy)]);
  const double coin = rng.uniform();
  r.event.proxy = coin < task.useful_proxy_fraction ? r.true_proxy
                                                    : rng.uniform_int(task.spaces.n_proxies);
  return r;
}

struct GeneratedTask {
  FactoredTask task;
  EventStream stream;
};

// Seed-derivation tags used by generate_task.
inline constexpr std::uint64_t kProxyMatrixTag = 1;
inline constexpr std::uint64_t kOutcomeMatrixTag = 2;
inline constexpr std::uint64_t kStreamTag = 3;

// Materializes the task matrices and the full length-T event stream. The
// whole stream is drawn before the game, so forecaster behavior cannot
// influence it. Substreams: instance-to-proxy matrix from
// mix_seed(seed, kProxyMatrixTag), proxy-to-outcome from kOutcomeMatrixTag,
// the event stream from kStreamTag.
inline GeneratedTask generate_task(const TaskParams& params) {
  params.validate();
  GeneratedTask out;
  out.task.spaces = params.spaces();
  out.task.epsilon = params.epsilon;
  out.task.mu = params.mu;
  out.task.useful_proxy_fraction = params.useful_proxy_fraction;
  out.task.seed = params.seed;

  Rng proxy_rng(mix_seed(params.seed, kProxyMatrixTag));
  out.task.instance_to_proxy =
      generate_stochastic_matrix(params.n_instances, params.n_proxies, params.epsilon, proxy_rng);
  Rng outcome_rng(mix_seed(params.seed, kOutcomeMatrixTag));
  out.task.proxy_to_outcome =
      generate_stochastic_matrix(params.n_proxies, params.n_outcomes, params.epsilon, outcome_rng);

  Rng stream_rng(mix_seed(params.seed, kStreamTag));
  out.stream.events.reserve(static_cast<std::size_t>(params.rounds));
  out.stream.true_proxies.reserve(static_cast<std::size_t>(params.rounds));
  for (std::int64_t t = 1; t <= params.rounds; ++t) {
    const SampledRound r = sample_round(t, out.task, stream_rng);
    out.stream.events.push_back(r.event);
    out.stream.true_proxies.push_back(r.true_proxy);
  }
  return out;
}

}  // namespace proxycast
