#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "proxycast/core.hpp"
#include "proxycast/environment.hpp"
#include "proxycast/estimator.hpp"
#include "proxycast/forecaster.hpp"
#include "proxycast/rng.hpp"
#include "proxycast/stats.hpp"
#include "proxycast/tabular.hpp"

namespace proxycast {

// Pending revelations keyed by reveal round. Constant per-run delays mean
// entries are scheduled in nondecreasing reveal order, so a FIFO suffices;
// deliver_due hands out everything due at or before `now`, oldest first.
template <typename Payload>
class DelayQueue {
 public:
  void schedule(std::int64_t reveal_round, Payload payload) {
    if (!pending_.empty() && pending_.back().first > reveal_round)
      throw std::logic_error("delay queue scheduled out of order");
    pending_.emplace_back(reveal_round, std::move(payload));
  }

  template <typename Fn>
  void deliver_due(std::int64_t now, Fn&& deliver) {
    while (!pending_.empty() && pending_.front().first <= now) {
      deliver(pending_.front().second);
      pending_.pop_front();
    }
  }

  std::size_t pending() const { return pending_.size(); }

 private:
  std::deque<std::pair<std::int64_t, Payload>> pending_;
};

enum class ComparatorKind { TrueModel, Hindsight, External };

inline ComparatorKind parse_comparator_kind(const std::string& name) {
  if (name == "true-model") return ComparatorKind::TrueModel;
  if (name == "hindsight") return ComparatorKind::Hindsight;
  if (name == "external") return ComparatorKind::External;
  throw std::invalid_argument("unknown comparator '" + name + "'");
}

inline std::string comparator_kind_name(ComparatorKind kind) {
  switch (kind) {
    case ComparatorKind::TrueModel: return "true-model";
    case ComparatorKind::Hindsight: return "hindsight";
    case ComparatorKind::External: return "external";
  }
  return "?";
}

// The predictor the forecaster's loss is measured against.
//   TrueModel: the optimal factored predictor of the generating task.
//   Hindsight: the best fixed per-instance predictor of the realized
//              outcomes, smoothed by hindsight_alpha to keep losses finite.
//   External:  precomputed per-round comparator losses.
struct ComparatorSpec {
  ComparatorKind kind = ComparatorKind::TrueModel;
  const FactoredTask* task = nullptr;     // TrueModel
  double hindsight_alpha = 1e-6;          // Hindsight
  std::vector<double> external_losses;    // External, one per stream row
};

// Per-round record of one trial plus the derived regret series.
struct TrialTrace {
  std::vector<std::int64_t> rounds;
  std::vector<int> instances;
  std::vector<ProbVector> predictions;
  std::vector<int> observed_proxies;
  std::vector<int> outcomes;
  std::vector<double> losses;
  std::vector<double> comparator_losses;
  std::vector<double> cumulative_regret;

  std::int64_t size() const { return static_cast<std::int64_t>(rounds.size()); }
  double final_regret() const {
    return cumulative_regret.empty() ? 0.0 : cumulative_regret.back();
  }
};

// Called right after each prediction, before any end-of-round revelation,
// so the forecaster is still in its prediction-time state.
using RoundObserver = std::function<void(std::int64_t round, const ProbVector& prediction)>;

namespace detail {

inline std::vector<double> comparator_losses_for(const ComparatorSpec& comparator,
                                                 const EventStream& stream,
                                                 const ProblemSpaces& spaces) {
  const std::size_t n = stream.events.size();
  std::vector<double> losses(n, 0.0);
  switch (comparator.kind) {
    case ComparatorKind::TrueModel: {
      if (comparator.task == nullptr)
        throw std::invalid_argument("true-model comparator needs the generating task");
      std::vector<ProbVector> rows;
      rows.reserve(static_cast<std::size_t>(spaces.n_instances));
      for (int x = 0; x < spaces.n_instances; ++x)
        rows.push_back(comparator.task->optimal_prediction(x));
      for (std::size_t i = 0; i < n; ++i)
        losses[i] = log_loss(rows[static_cast<std::size_t>(stream.events[i].instance)],
                             stream.events[i].outcome);
      break;
    }
    case ComparatorKind::Hindsight: {
      // Best fixed per-instance predictor of the full realized sequence.
      std::vector<SmoothedCategoricalEstimator> fits(
          static_cast<std::size_t>(spaces.n_instances),
          SmoothedCategoricalEstimator(spaces.n_outcomes, comparator.hindsight_alpha));
      for (const auto& e : stream.events)
        fits[static_cast<std::size_t>(e.instance)].update(e.outcome);
      std::vector<ProbVector> rows;
      rows.reserve(fits.size());
      for (const auto& f : fits) rows.push_back(f.predict());
      for (std::size_t i = 0; i < n; ++i)
        losses[i] = log_loss(rows[static_cast<std::size_t>(stream.events[i].instance)],
                             stream.events[i].outcome);
      break;
    }
    case ComparatorKind::External: {
      if (comparator.external_losses.size() != n)
        throw std::invalid_argument("external comparator length does not match the stream");
      losses = comparator.external_losses;
      break;
    }
  }
  return losses;
}

}  // namespace detail

// Plays one game of the stream against the forecaster.
//
// Round t: the instance is revealed and the forecaster predicts; at the end
// of the round the proxy generated at round t - proxy_delay and then the
// outcome generated at round t - outcome_delay (if any) are delivered, each
// exactly once, in originating-round order; end_round follows. Signals
// whose reveal round exceeds the final round are dropped. Streams with
// gaps in the round numbers deliver in-between revelations before the next
// prediction.
inline TrialTrace run_trial(Forecaster& forecaster, const EventStream& stream,
                            const ProblemSpaces& spaces, const ComparatorSpec& comparator,
                            const RoundObserver* observer = nullptr) {
  if (stream.empty()) throw std::invalid_argument("stream must have at least one round");
  for (const auto& e : stream.events) validate_event(e, spaces);
  if (stream.true_proxies.size() != stream.events.size())
    throw std::invalid_argument("stream true-proxy column length mismatch");

  struct ProxyReveal {
    int instance;
    int proxy;
  };
  struct OutcomeReveal {
    int instance;
    int proxy;  // observed proxy of the originating round
    int outcome;
  };
  DelayQueue<ProxyReveal> proxy_queue;
  DelayQueue<OutcomeReveal> outcome_queue;

  TrialTrace trace;
  const std::size_t n = stream.events.size();
  trace.rounds.reserve(n);
  trace.instances.reserve(n);
  trace.predictions.reserve(n);
  trace.observed_proxies.reserve(n);
  trace.outcomes.reserve(n);
  trace.losses.reserve(n);

  const auto deliver_proxy = [&](const ProxyReveal& r) {
    forecaster.observe_proxy(r.instance, r.proxy);
  };
  const auto deliver_outcome = [&](const OutcomeReveal& r) {
    forecaster.observe_outcome(r.instance, r.proxy, r.outcome);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const RoundEvent& e = stream.events[i];
    // Revelations from skipped rounds (streams with gaps) first.
    proxy_queue.deliver_due(e.round - 1, deliver_proxy);
    outcome_queue.deliver_due(e.round - 1, deliver_outcome);

    ProbVector prediction = forecaster.predict(e.instance);
    const double loss = log_loss(prediction, e.outcome);
    if (observer) (*observer)(e.round, prediction);

    trace.rounds.push_back(e.round);
    trace.instances.push_back(e.instance);
    trace.observed_proxies.push_back(e.proxy);
    trace.outcomes.push_back(e.outcome);
    trace.losses.push_back(loss);
    trace.predictions.push_back(std::move(prediction));

    proxy_queue.schedule(e.round + spaces.proxy_delay, ProxyReveal{e.instance, e.proxy});
    outcome_queue.schedule(e.round + spaces.outcome_delay,
                           OutcomeReveal{e.instance, e.proxy, e.outcome});
    // End of round: due proxies, then due outcomes.
    proxy_queue.deliver_due(e.round, deliver_proxy);
    outcome_queue.deliver_due(e.round, deliver_outcome);
    forecaster.end_round(e.round);
  }

  trace.comparator_losses = detail::comparator_losses_for(comparator, stream, spaces);
  trace.cumulative_regret.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += trace.losses[i] - trace.comparator_losses[i];
    trace.cumulative_regret[i] = acc;
  }
  return trace;
}

// A named way to build a fresh forecaster for one trial.
struct ForecasterSetup {
  std::string name;
  std::function<std::unique_ptr<Forecaster>(const ProblemSpaces&, std::uint64_t seed)> build;
};

// Multi-trial experiment over either a synthetic task (fresh task and
// stream drawn per trial) or a fixed replay stream.
struct ExperimentSpec {
  TaskParams task;
  const EventStream* replay_stream = nullptr;  // when set, task is ignored
  ProblemSpaces replay_spaces;                 // spaces of the replay stream
  int n_trials = 1;
  std::uint64_t seed = 1;
  ComparatorKind comparator = ComparatorKind::TrueModel;
  double hindsight_alpha = 1e-6;
  std::vector<double> external_losses;
  int jobs = 1;
};

struct ForecasterSeries {
  std::string name;
  // Per-round aggregates over trials (raw, unsmoothed loss series).
  std::vector<double> mean_loss, loss_ci95;
  std::vector<double> mean_regret, regret_ci95, std_regret;
  std::vector<double> final_regrets;  // one per trial
  SummaryStats final_regret_stats;
};

struct ExperimentResult {
  std::vector<std::int64_t> rounds;
  std::vector<ForecasterSeries> series;
};

// Seed-derivation tags for experiment substreams.
inline constexpr std::uint64_t kTrialTaskTag = 1;
inline constexpr std::uint64_t kTrialForecasterBaseTag = 16;

// Runs n_trials independent trials per forecaster. Within a trial every
// forecaster sees the same stream (paired comparison); across trials both
// the task matrices and the samples are redrawn. Trials may run on
// `jobs` threads; results are merged in trial order, so the output is
// independent of scheduling.
inline ExperimentResult run_experiment(const ExperimentSpec& spec,
                                       std::span<const ForecasterSetup> forecasters) {
  if (spec.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (spec.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (forecasters.empty()) throw std::invalid_argument("need at least one forecaster");
  if (spec.replay_stream == nullptr) spec.task.validate();
  if (spec.replay_stream != nullptr && spec.comparator == ComparatorKind::TrueModel)
    throw std::invalid_argument("true-model comparator is unavailable on replay streams");
  if (spec.comparator == ComparatorKind::External) {
    const std::size_t expected =
        spec.replay_stream ? spec.replay_stream->events.size()
                           : static_cast<std::size_t>(spec.task.rounds);
    if (spec.external_losses.size() != expected)
      throw std::invalid_argument("external comparator length does not match the stream");
  }

  const std::size_t n_forecasters = forecasters.size();
  const std::size_t n_trials = static_cast<std::size_t>(spec.n_trials);
  // per (trial, forecaster): per-round losses and regrets
  std::vector<std::vector<std::vector<double>>> losses(n_trials);
  std::vector<std::vector<std::vector<double>>> regrets(n_trials);

  std::atomic<std::size_t> next_trial{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto worker = [&]() {
    while (true) {
      const std::size_t trial = next_trial.fetch_add(1);
      if (trial >= n_trials || failed.load()) return;
      try {
        const std::uint64_t trial_seed = mix_seed(spec.seed, trial);
        GeneratedTask generated;
        const EventStream* stream = spec.replay_stream;
        ProblemSpaces spaces = spec.replay_spaces;
        ComparatorSpec comparator{spec.comparator, nullptr, spec.hindsight_alpha,
                                  spec.comparator == ComparatorKind::External
                                      ? spec.external_losses
                                      : std::vector<double>{}};
        if (stream == nullptr) {
          TaskParams params = spec.task;
          params.seed = mix_seed(trial_seed, kTrialTaskTag);
          generated = generate_task(params);
          stream = &generated.stream;
          spaces = generated.task.spaces;
          comparator.task = &generated.task;
        }
        losses[trial].resize(n_forecasters);
        regrets[trial].resize(n_forecasters);
        for (std::size_t j = 0; j < n_forecasters; ++j) {
          const std::uint64_t f_seed = mix_seed(trial_seed, kTrialForecasterBaseTag + j);
          const auto forecaster = forecasters[j].build(spaces, f_seed);
          TrialTrace trace = run_trial(*forecaster, *stream, spaces, comparator);
          losses[trial][j] = std::move(trace.losses);
          regrets[trial][j] = std::move(trace.cumulative_regret);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  if (spec.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(spec.jobs, static_cast<int>(n_trials));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  const std::size_t horizon = losses[0][0].size();
  result.rounds.reserve(horizon);
  if (spec.replay_stream) {
    for (const auto& e : spec.replay_stream->events) result.rounds.push_back(e.round);
  } else {
    for (std::size_t i = 0; i < horizon; ++i)
      result.rounds.push_back(static_cast<std::int64_t>(i + 1));
  }

  result.series.resize(n_forecasters);
  std::vector<double> column(n_trials);
  for (std::size_t j = 0; j < n_forecasters; ++j) {
    ForecasterSeries& s = result.series[j];
    s.name = forecasters[j].name;
    s.mean_loss.resize(horizon);
    s.loss_ci95.resize(horizon);
    s.mean_regret.resize(horizon);
    s.regret_ci95.resize(horizon);
    s.std_regret.resize(horizon);
    for (std::size_t i = 0; i < horizon; ++i) {
      for (std::size_t trial = 0; trial < n_trials; ++trial) column[trial] = losses[trial][j][i];
      const SummaryStats ls = summarize(column);
      s.mean_loss[i] = ls.mean;
      s.loss_ci95[i] = ls.ci95;
      for (std::size_t trial = 0; trial < n_trials; ++trial) column[trial] = regrets[trial][j][i];
      const SummaryStats rs = summarize(column);
      s.mean_regret[i] = rs.mean;
      s.regret_ci95[i] = rs.ci95;
      s.std_regret[i] = rs.sd;
    }
    s.final_regrets.resize(n_trials);
    for (std::size_t trial = 0; trial < n_trials; ++trial)
      s.final_regrets[trial] = regrets[trial][j].back();
    s.final_regret_stats = summarize(s.final_regrets);
  }
  return result;
}

// One (forecaster, parameter value) row of a sweep.
struct SweepRow {
  std::string forecaster;
  double param = 0.0;
  double final_mean_regret = 0.0;
  double final_std = 0.0;
  double final_ci95 = 0.0;
  std::vector<double> trial_finals;
};

namespace detail {

inline std::vector<SweepRow> sweep_impl(const ExperimentSpec& base,
                                        std::span<const double> values,
                                        std::span<const ForecasterSetup> forecasters,
                                        const std::function<void(ExperimentSpec&, double)>& apply) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (base.replay_stream != nullptr)
    throw std::invalid_argument("sweeps need a synthetic task");
  std::vector<SweepRow> rows;
  rows.reserve(values.size() * forecasters.size());
  for (const double v : values) {
    ExperimentSpec spec = base;
    apply(spec, v);
    const ExperimentResult result = run_experiment(spec, forecasters);
    for (const auto& s : result.series) {
      SweepRow row;
      row.forecaster = s.name;
      row.param = v;
      row.final_mean_regret = s.final_regret_stats.mean;
      row.final_std = s.final_regret_stats.sd;
      row.final_ci95 = s.final_regret_stats.ci95;
      row.trial_finals = s.final_regrets;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace detail

inline std::vector<SweepRow> sweep_mu(const ExperimentSpec& base, std::span<const double> mus,
                                      std::span<const ForecasterSetup> forecasters) {
  return detail::sweep_impl(base, mus, forecasters,
                            [](ExperimentSpec& s, double v) { s.task.mu = v; });
}

inline std::vector<SweepRow> sweep_fraction(const ExperimentSpec& base,
                                            std::span<const double> fractions,
                                            std::span<const ForecasterSetup> forecasters) {
  return detail::sweep_impl(base, fractions, forecasters, [](ExperimentSpec& s, double v) {
    s.task.useful_proxy_fraction = v;
  });
}

// Delay sweep; each point runs at horizon = horizon_scale * N * max(D, 1)
// so the block schedule completes with room to spare (and D = 0 keeps a
// nonempty game).
inline std::vector<SweepRow> sweep_delay(const ExperimentSpec& base,
                                         std::span<const double> delays, int horizon_scale,
                                         std::span<const ForecasterSetup> forecasters) {
  if (horizon_scale < 1) throw std::invalid_argument("horizon scale must be >= 1");
  return detail::sweep_impl(base, delays, forecasters, [horizon_scale](ExperimentSpec& s, double v) {
    const int delay = static_cast<int>(v);
    if (delay < 0 || static_cast<double>(delay) != v)
      throw std::invalid_argument("delay sweep values must be non-negative integers");
    s.task.outcome_delay = delay;
    s.task.rounds = static_cast<std::int64_t>(horizon_scale) * s.task.n_instances *
                    std::max(delay, 1);
  });
}

// Empirical check of the factored-regret decomposition: per trial,
//   lhs = sum_t ln(p*(y_t|x_t) / p_t(y_t|x_t))
//   rhs = sum_t ln(g(y_t|z_t) / g_t(y_t|z_t)) + sum_t ln(h(z_t|x_t) / h_t(z_t|x_t))
// evaluated at the true proxies with the forecaster's prediction-time
// estimates. holds() allows two combined standard errors of slack.
struct DecompositionReport {
  SummaryStats lhs;           // regret vs the true model
  SummaryStats rhs;           // outcome term + proxy term
  SummaryStats outcome_term;
  SummaryStats proxy_term;
  int n_trials = 0;

  double combined_se() const {
    const double a = standard_error(lhs);
    const double b = standard_error(rhs);
    return std::sqrt(a * a + b * b);
  }
  bool holds() const { return lhs.mean <= rhs.mean + 2.0 * combined_se(); }
};

// Runs the tabular factored forecaster (or, with use_oracle, the optimal
// predictor) over fresh tasks and accumulates both sides of the bound.
inline DecompositionReport decomposition_check(const TaskParams& base_params, int n_trials,
                                               std::uint64_t seed, double estimator_alpha = 1.0,
                                               bool use_oracle = false) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  base_params.validate();

  std::vector<double> lhs_sums, rhs_sums, g_sums, h_sums;
  lhs_sums.reserve(static_cast<std::size_t>(n_trials));
  rhs_sums.reserve(static_cast<std::size_t>(n_trials));
  g_sums.reserve(static_cast<std::size_t>(n_trials));
  h_sums.reserve(static_cast<std::size_t>(n_trials));

  for (int trial = 0; trial < n_trials; ++trial) {
    TaskParams params = base_params;
    params.seed = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(trial)), kTrialTaskTag);
    const GeneratedTask generated = generate_task(params);
    const FactoredTask& task = generated.task;
    const EventStream& stream = generated.stream;

    std::unique_ptr<TabularFactoredForecaster> learner;
    std::unique_ptr<OracleForecaster> oracle;
    Forecaster* forecaster = nullptr;
    std::function<ProbVector(int)> proxy_estimate, outcome_estimate;
    if (use_oracle) {
      oracle = std::make_unique<OracleForecaster>(task.instance_to_proxy, task.proxy_to_outcome);
      forecaster = oracle.get();
      proxy_estimate = [&](int x) { return oracle->proxy_distribution(x); };
      outcome_estimate = [&](int z) { return oracle->outcome_distribution(z); };
    } else {
      learner = std::make_unique<TabularFactoredForecaster>(task.spaces, estimator_alpha);
      forecaster = learner.get();
      proxy_estimate = [&](int x) { return learner->proxy_distribution(x); };
      outcome_estimate = [&](int z) { return learner->outcome_distribution(z); };
    }

    double lhs = 0.0, g_term = 0.0, h_term = 0.0;
    std::size_t i = 0;
    const RoundObserver observer = [&](std::int64_t, const ProbVector& prediction) {
      const RoundEvent& e = stream.events[i];
      const int z_true = stream.true_proxies[i];
      const ProbVector p_star = task.optimal_prediction(e.instance);
      lhs += std::log(p_star[e.outcome] / prediction[e.outcome]);
      const double g_true = task.proxy_to_outcome[static_cast<std::size_t>(z_true)]
                                                 [static_cast<std::size_t>(e.outcome)];
      const double h_true = task.instance_to_proxy[static_cast<std::size_t>(e.instance)]
                                                  [static_cast<std::size_t>(z_true)];
      g_term += std::log(g_true / outcome_estimate(z_true)[e.outcome]);
      h_term += std::log(h_true / proxy_estimate(e.instance)[z_true]);
      ++i;
    };

    ComparatorSpec comparator{ComparatorKind::TrueModel, &task, 1e-6, {}};
    run_trial(*forecaster, stream, task.spaces, comparator, &observer);
    lhs_sums.push_back(lhs);
    g_sums.push_back(g_term);
    h_sums.push_back(h_term);
    rhs_sums.push_back(g_term + h_term);
  }

  DecompositionReport report;
  report.lhs = summarize(lhs_sums);
  report.rhs = summarize(rhs_sums);
  report.outcome_term = summarize(g_sums);
  report.proxy_term = summarize(h_sums);
  report.n_trials = n_trials;
  return report;
}

}  // namespace proxycast
