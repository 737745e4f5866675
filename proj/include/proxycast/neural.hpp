#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proxycast/core.hpp"
#include "proxycast/forecaster.hpp"
#include "proxycast/mlp.hpp"
#include "proxycast/replay_buffer.hpp"
#include "proxycast/rng.hpp"

namespace proxycast {

struct TrainCadence {
  int steps_per_trigger = 1;
  int trigger_every_rounds = 4;

  void validate() const {
    if (steps_per_trigger < 1 || trigger_every_rounds < 1)
      throw std::invalid_argument("cadence values must be >= 1");
  }
  bool operator==(const TrainCadence&) const = default;
};

// Hyperparameters shared by the neural forecasters. Towers taking an
// instance input (and the residual correction tower) have the configured
// hidden layers, biases, and L2 regularization, trained at learning_rate.
// Proxy-to-outcome towers are plain linear maps without hidden layers,
// bias, or regularization, trained at outcome_learning_rate.
struct NeuralConfig {
  std::vector<int> hidden_sizes = {40, 20};
  double learning_rate = 0.1;
  double outcome_learning_rate = 1.0;
  double l2_scale = 0.01;
  int buffer_capacity = 1000;
  int min_fill = 128;
  int batch_size = 128;
  TrainCadence cadence = {1, 4};

  // One gradient step of batch 128 every 4 rounds, buffer 1000/128.
  static NeuralConfig github() { return NeuralConfig{}; }

  // 20 steps of batch 128 every 1000 rounds, buffer 3000/500, gentler
  // proxy-to-outcome learning rate.
  static NeuralConfig marketplace() {
    NeuralConfig c;
    c.hidden_sizes = {20, 10};
    c.outcome_learning_rate = 0.1;
    c.buffer_capacity = 3000;
    c.min_fill = 500;
    c.cadence = {20, 1000};
    return c;
  }

  static NeuralConfig preset(const std::string& name) {
    if (name == "github") return github();
    if (name == "marketplace") return marketplace();
    throw std::invalid_argument("unknown neural preset '" + name + "' (expected github or marketplace)");
  }

  void validate() const {
    for (int h : hidden_sizes)
      if (h < 1) throw std::invalid_argument("hidden sizes must be positive");
    if (!(learning_rate > 0.0) || !(outcome_learning_rate > 0.0))
      throw std::invalid_argument("learning rates must be positive");
    if (l2_scale < 0.0) throw std::invalid_argument("l2_scale must be >= 0");
    if (buffer_capacity < 1 || min_fill < 1 || batch_size < 1)
      throw std::invalid_argument("buffer parameters must be >= 1");
    cadence.validate();
  }

  bool operator==(const NeuralConfig&) const = default;
};

struct ProxySample {
  int instance = 0;
  int proxy = 0;
};

struct OutcomeSample {
  int instance = 0;
  int proxy = 0;
  int outcome = 0;
};

namespace detail {

inline std::vector<double> one_hot(int index, int width) {
  std::vector<double> v(static_cast<std::size_t>(width), 0.0);
  v[static_cast<std::size_t>(index)] = 1.0;
  return v;
}

inline std::vector<int> tower_sizes(int input, std::span<const int> hidden, int output) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(input);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output);
  return sizes;
}

inline void dump_tower(std::ostream& out, const std::string& tower, const Mlp& net) {
  char buf[32];
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const int fan_in = net.config().layer_sizes[l];
    const int fan_out = net.config().layer_sizes[l + 1];
    out << tower << "," << l << ",weights," << fan_out << "," << fan_in;
    for (double v : net.layer_weights(l)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
    if (!net.layer_biases(l).empty()) {
      out << tower << "," << l << ",bias," << fan_out << ",1";
      for (double v : net.layer_biases(l)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

}  // namespace detail

// Seed-derivation tags for the per-forecaster streams.
inline constexpr std::uint64_t kNeuralInitTag = 1;
inline constexpr std::uint64_t kNeuralTrainTag = 2;

// Single tower mapping a one-hot instance to outcome logits; proxies are
// ignored. Trains from a FIFO buffer of (instance, outcome) pairs filled at
// outcome revelation.
class NeuralDirectForecaster final : public Forecaster {
 public:
  NeuralDirectForecaster(const ProblemSpaces& spaces, NeuralConfig cfg, std::uint64_t seed)
      : spaces_(spaces),
        cfg_(std::move(cfg)),
        seed_(seed),
        train_rng_(0),
        tower_(make_tower(spaces_, cfg_)),
        buffer_(cfg_.buffer_capacity, cfg_.min_fill, cfg_.batch_size) {
    spaces_.validate();
    cfg_.validate();
    reset();
  }

  ProbVector predict(int instance) const override {
    check_instance(instance);
    return ProbVector(softmax(tower_.forward(detail::one_hot(instance, spaces_.n_instances))));
  }

  void observe_proxy(int, int) override {}

  void observe_outcome(int instance, int proxy, int outcome) override {
    buffer_.push(OutcomeSample{instance, proxy, outcome});
  }

  void end_round(std::int64_t round) override {
    if (round % cfg_.cadence.trigger_every_rounds != 0) return;
    if (!buffer_.ready()) return;
    for (int s = 0; s < cfg_.cadence.steps_per_trigger; ++s) {
      const auto batch = buffer_.sample(train_rng_);
      std::vector<TrainSample> samples;
      samples.reserve(batch.size());
      for (const auto& b : batch)
        samples.push_back({detail::one_hot(b.instance, spaces_.n_instances), b.outcome});
      tower_.sgd_step(samples);
      ++train_steps_;
    }
  }

  void reset() override {
    Rng init_rng(mix_seed(seed_, kNeuralInitTag));
    tower_ = make_tower(spaces_, cfg_, &init_rng);
    train_rng_ = Rng(mix_seed(seed_, kNeuralTrainTag));
    buffer_.clear();
    train_steps_ = 0;
  }

  std::int64_t train_steps() const { return train_steps_; }
  const Mlp& tower() const { return tower_; }
  Mlp& tower() { return tower_; }

  void dump_weights(std::ostream& out) const { detail::dump_tower(out, "outcome", tower_); }

 private:
  static Mlp make_tower(const ProblemSpaces& spaces, const NeuralConfig& cfg,
                        Rng* rng = nullptr) {
    MlpConfig mc;
    mc.layer_sizes = detail::tower_sizes(spaces.n_instances, cfg.hidden_sizes, spaces.n_outcomes);
    mc.output_bias = true;
    mc.l2_scale = cfg.l2_scale;
    mc.learning_rate = cfg.learning_rate;
    Rng scratch(0);
    return Mlp(mc, rng ? *rng : scratch);
  }
  void check_instance(int instance) const {
    if (instance < 0 || instance >= spaces_.n_instances)
      throw std::out_of_range("instance index out of range");
  }

  ProblemSpaces spaces_;
  NeuralConfig cfg_;
  std::uint64_t seed_;
  Rng train_rng_;
  Mlp tower_;
  ReplayBuffer<OutcomeSample> buffer_;
  std::int64_t train_steps_ = 0;
};

// Two towers: instance -> proxy distribution and proxy -> outcome
// distribution, combined as p(y|x) = sum_z softmax_g(z)[y] softmax_h(x)[z].
class NeuralFactoredForecaster final : public Forecaster {
 public:
  NeuralFactoredForecaster(const ProblemSpaces& spaces, NeuralConfig cfg, std::uint64_t seed)
      : spaces_(spaces),
        cfg_(std::move(cfg)),
        seed_(seed),
        train_rng_(0),
        proxy_tower_(make_proxy_tower(spaces_, cfg_)),
        outcome_tower_(make_outcome_tower(spaces_, cfg_)),
        proxy_buffer_(cfg_.buffer_capacity, cfg_.min_fill, cfg_.batch_size),
        outcome_buffer_(cfg_.buffer_capacity, cfg_.min_fill, cfg_.batch_size) {
    spaces_.validate();
    cfg_.validate();
    reset();
  }

  ProbVector predict(int instance) const override {
    const ProbVector h = proxy_distribution(instance);
    std::vector<double> p(static_cast<std::size_t>(spaces_.n_outcomes), 0.0);
    for (int z = 0; z < spaces_.n_proxies; ++z) {
      const ProbVector g = outcome_distribution(z);
      for (int y = 0; y < spaces_.n_outcomes; ++y)
        p[static_cast<std::size_t>(y)] += g[y] * h[z];
    }
    return ProbVector(std::move(p));
  }

  void observe_proxy(int instance, int proxy) override {
    proxy_buffer_.push(ProxySample{instance, proxy});
  }

  void observe_outcome(int instance, int proxy, int outcome) override {
    outcome_buffer_.push(OutcomeSample{instance, proxy, outcome});
  }

  void end_round(std::int64_t round) override {
    if (round % cfg_.cadence.trigger_every_rounds != 0) return;
    if (proxy_buffer_.ready()) {
      for (int s = 0; s < cfg_.cadence.steps_per_trigger; ++s) {
        proxy_step(proxy_buffer_.sample(train_rng_));
      }
    }
    if (outcome_buffer_.ready()) {
      for (int s = 0; s < cfg_.cadence.steps_per_trigger; ++s) {
        outcome_step(outcome_buffer_.sample(train_rng_));
      }
    }
  }

  void reset() override {
    Rng init_rng(mix_seed(seed_, kNeuralInitTag));
    proxy_tower_ = make_proxy_tower(spaces_, cfg_, &init_rng);
    outcome_tower_ = make_outcome_tower(spaces_, cfg_, &init_rng);
    train_rng_ = Rng(mix_seed(seed_, kNeuralTrainTag));
    proxy_buffer_.clear();
    outcome_buffer_.clear();
    proxy_steps_ = outcome_steps_ = 0;
  }

  ProbVector proxy_distribution(int instance) const {
    check_instance(instance);
    return ProbVector(softmax(proxy_tower_.forward(detail::one_hot(instance, spaces_.n_instances))));
  }
  ProbVector outcome_distribution(int proxy) const {
    check_proxy(proxy);
    return ProbVector(softmax(outcome_tower_.forward(detail::one_hot(proxy, spaces_.n_proxies))));
  }

  std::int64_t proxy_steps() const { return proxy_steps_; }
  std::int64_t outcome_steps() const { return outcome_steps_; }
  const Mlp& proxy_tower() const { return proxy_tower_; }
  Mlp& proxy_tower() { return proxy_tower_; }
  const Mlp& outcome_tower() const { return outcome_tower_; }
  Mlp& outcome_tower() { return outcome_tower_; }

  void dump_weights(std::ostream& out) const {
    detail::dump_tower(out, "proxy", proxy_tower_);
    detail::dump_tower(out, "outcome", outcome_tower_);
  }

 private:
  void proxy_step(const std::vector<ProxySample>& batch) {
    std::vector<TrainSample> samples;
    samples.reserve(batch.size());
    for (const auto& b : batch)
      samples.push_back({detail::one_hot(b.instance, spaces_.n_instances), b.proxy});
    proxy_tower_.sgd_step(samples);
    ++proxy_steps_;
  }

  void outcome_step(const std::vector<OutcomeSample>& batch) {
    std::vector<TrainSample> samples;
    samples.reserve(batch.size());
    for (const auto& b : batch)
      samples.push_back({detail::one_hot(b.proxy, spaces_.n_proxies), b.outcome});
    outcome_tower_.sgd_step(samples);
    ++outcome_steps_;
  }

  static Mlp make_proxy_tower(const ProblemSpaces& spaces, const NeuralConfig& cfg,
                              Rng* rng = nullptr) {
    MlpConfig mc;
    mc.layer_sizes = detail::tower_sizes(spaces.n_instances, cfg.hidden_sizes, spaces.n_proxies);
    mc.output_bias = true;
    mc.l2_scale = cfg.l2_scale;
    mc.learning_rate = cfg.learning_rate;
    Rng scratch(0);
    return Mlp(mc, rng ? *rng : scratch);
  }
  static Mlp make_outcome_tower(const ProblemSpaces& spaces, const NeuralConfig& cfg,
                                Rng* rng = nullptr) {
    MlpConfig mc;
    mc.layer_sizes = {spaces.n_proxies, spaces.n_outcomes};  // linear, no hidden layers
    mc.output_bias = false;
    mc.l2_scale = 0.0;
    mc.learning_rate = cfg.outcome_learning_rate;
    Rng scratch(0);
    return Mlp(mc, rng ? *rng : scratch);
  }
  void check_instance(int instance) const {
    if (instance < 0 || instance >= spaces_.n_instances)
      throw std::out_of_range("instance index out of range");
  }
  void check_proxy(int proxy) const {
    if (proxy < 0 || proxy >= spaces_.n_proxies)
      throw std::out_of_range("proxy index out of range");
  }

  ProblemSpaces spaces_;
  NeuralConfig cfg_;
  std::uint64_t seed_;
  Rng train_rng_;
  Mlp proxy_tower_;
  Mlp outcome_tower_;
  ReplayBuffer<ProxySample> proxy_buffer_;
  ReplayBuffer<OutcomeSample> outcome_buffer_;
  std::int64_t proxy_steps_ = 0;
  std::int64_t outcome_steps_ = 0;
};

// Factored forecaster with a residual correction. Per proxy z the outcome
// logits are feedback_logits(z) + residual_logits(x, z, sg(feedback_logits)),
// softmaxed and mixed by the proxy distribution. The residual tower sees
// the feedback logits as plain inputs; its loss never propagates into the
// feedback tower, which is trained by its own feedback-only loss.
class NeuralResidualForecaster final : public Forecaster {
 public:
  NeuralResidualForecaster(const ProblemSpaces& spaces, NeuralConfig cfg, std::uint64_t seed)
      : spaces_(spaces),
        cfg_(std::move(cfg)),
        seed_(seed),
        train_rng_(0),
        proxy_tower_(make_proxy_tower(spaces_, cfg_)),
        feedback_tower_(make_feedback_tower(spaces_, cfg_)),
        residual_tower_(make_residual_tower(spaces_, cfg_)),
        proxy_buffer_(cfg_.buffer_capacity, cfg_.min_fill, cfg_.batch_size),
        outcome_buffer_(cfg_.buffer_capacity, cfg_.min_fill, cfg_.batch_size) {
    spaces_.validate();
    cfg_.validate();
    reset();
  }

  ProbVector predict(int instance) const override {
    const ProbVector h = proxy_distribution(instance);
    std::vector<double> p(static_cast<std::size_t>(spaces_.n_outcomes), 0.0);
    for (int z = 0; z < spaces_.n_proxies; ++z) {
      const std::vector<double> q = combined_outcome_probs(instance, z);
      for (int y = 0; y < spaces_.n_outcomes; ++y)
        p[static_cast<std::size_t>(y)] += q[static_cast<std::size_t>(y)] * h[z];
    }
    return ProbVector(std::move(p));
  }

  void observe_proxy(int instance, int proxy) override {
    proxy_buffer_.push(ProxySample{instance, proxy});
  }

  void observe_outcome(int instance, int proxy, int outcome) override {
    outcome_buffer_.push(OutcomeSample{instance, proxy, outcome});
  }

  void end_round(std::int64_t round) override {
    if (round % cfg_.cadence.trigger_every_rounds != 0) return;
    if (proxy_buffer_.ready()) {
      for (int s = 0; s < cfg_.cadence.steps_per_trigger; ++s) {
        proxy_step(proxy_buffer_.sample(train_rng_));
      }
    }
    if (outcome_buffer_.ready()) {
      for (int s = 0; s < cfg_.cadence.steps_per_trigger; ++s) {
        outcome_group_step(outcome_buffer_.sample(train_rng_), true, true);
        ++outcome_steps_;
      }
    }
  }

  void reset() override {
    Rng init_rng(mix_seed(seed_, kNeuralInitTag));
    proxy_tower_ = make_proxy_tower(spaces_, cfg_, &init_rng);
    feedback_tower_ = make_feedback_tower(spaces_, cfg_, &init_rng);
    residual_tower_ = make_residual_tower(spaces_, cfg_, &init_rng);
    train_rng_ = Rng(mix_seed(seed_, kNeuralTrainTag));
    proxy_buffer_.clear();
    outcome_buffer_.clear();
    proxy_steps_ = outcome_steps_ = 0;
  }

  // Feedback-only training step (trains the proxy-to-outcome tower alone).
  void feedback_step(std::span<const OutcomeSample> batch) {
    outcome_group_step(batch, true, false);
  }
  // Residual-only training step; feedback-tower parameters stay untouched.
  void residual_step(std::span<const OutcomeSample> batch) {
    outcome_group_step(batch, false, true);
  }

  ProbVector proxy_distribution(int instance) const {
    check_instance(instance);
    return ProbVector(softmax(proxy_tower_.forward(detail::one_hot(instance, spaces_.n_instances))));
  }
  // Outcome distribution from the feedback tower alone.
  ProbVector outcome_distribution(int proxy) const {
    check_proxy(proxy);
    return ProbVector(softmax(feedback_tower_.forward(detail::one_hot(proxy, spaces_.n_proxies))));
  }

  std::int64_t proxy_steps() const { return proxy_steps_; }
  std::int64_t outcome_steps() const { return outcome_steps_; }
  const Mlp& proxy_tower() const { return proxy_tower_; }
  Mlp& proxy_tower() { return proxy_tower_; }
  const Mlp& feedback_tower() const { return feedback_tower_; }
  Mlp& feedback_tower() { return feedback_tower_; }
  const Mlp& residual_tower() const { return residual_tower_; }
  Mlp& residual_tower() { return residual_tower_; }

  void dump_weights(std::ostream& out) const {
    detail::dump_tower(out, "proxy", proxy_tower_);
    detail::dump_tower(out, "feedback", feedback_tower_);
    detail::dump_tower(out, "residual", residual_tower_);
  }

 private:
  std::vector<double> residual_input(int instance, int proxy,
                                     std::span<const double> feedback_logits) const {
    std::vector<double> in;
    in.reserve(static_cast<std::size_t>(spaces_.n_instances + spaces_.n_proxies + spaces_.n_outcomes));
    const auto x = detail::one_hot(instance, spaces_.n_instances);
    const auto z = detail::one_hot(proxy, spaces_.n_proxies);
    in.insert(in.end(), x.begin(), x.end());
    in.insert(in.end(), z.begin(), z.end());
    in.insert(in.end(), feedback_logits.begin(), feedback_logits.end());
    return in;
  }

  std::vector<double> combined_outcome_probs(int instance, int proxy) const {
    const std::vector<double> fb = feedback_tower_.forward(detail::one_hot(proxy, spaces_.n_proxies));
    const std::vector<double> delta = residual_tower_.forward(residual_input(instance, proxy, fb));
    std::vector<double> combined(fb.size());
    for (std::size_t y = 0; y < fb.size(); ++y) combined[y] = fb[y] + delta[y];
    return softmax(combined);
  }

  void proxy_step(const std::vector<ProxySample>& batch) {
    std::vector<TrainSample> samples;
    samples.reserve(batch.size());
    for (const auto& b : batch)
      samples.push_back({detail::one_hot(b.instance, spaces_.n_instances), b.proxy});
    proxy_tower_.sgd_step(samples);
    ++proxy_steps_;
  }

  // Both outcome losses are evaluated at the current weights on the same
  // batch: the feedback-only cross-entropy drives the feedback tower, the
  // combined-logits cross-entropy drives the residual tower only.
  void outcome_group_step(std::span<const OutcomeSample> batch, bool update_feedback,
                          bool update_residual) {
    if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
    Mlp::Gradients fb_grads = feedback_tower_.make_gradients();
    Mlp::Gradients res_grads = residual_tower_.make_gradients();
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& b : batch) {
      const auto z_in = detail::one_hot(b.proxy, spaces_.n_proxies);
      const std::vector<double> fb = feedback_tower_.forward(z_in);
      if (update_feedback) {
        std::vector<double> d = softmax(fb);
        d[static_cast<std::size_t>(b.outcome)] -= 1.0;
        feedback_tower_.accumulate_sample_gradient(z_in, d, scale, fb_grads);
      }
      if (update_residual) {
        const auto res_in = residual_input(b.instance, b.proxy, fb);
        const std::vector<double> delta = residual_tower_.forward(res_in);
        std::vector<double> combined(fb.size());
        for (std::size_t y = 0; y < fb.size(); ++y) combined[y] = fb[y] + delta[y];
        std::vector<double> d = softmax(combined);
        d[static_cast<std::size_t>(b.outcome)] -= 1.0;
        residual_tower_.accumulate_sample_gradient(res_in, d, scale, res_grads);
      }
    }
    if (update_feedback) {
      feedback_tower_.add_l2_gradient(fb_grads);  // no-op: feedback tower is unregularized
      feedback_tower_.apply_sgd(fb_grads, cfg_.outcome_learning_rate);
    }
    if (update_residual) {
      residual_tower_.add_l2_gradient(res_grads);
      residual_tower_.apply_sgd(res_grads, cfg_.learning_rate);
    }
  }

  static Mlp make_proxy_tower(const ProblemSpaces& spaces, const NeuralConfig& cfg,
                              Rng* rng = nullptr) {
    MlpConfig mc;
    mc.layer_sizes = detail::tower_sizes(spaces.n_instances, cfg.hidden_sizes, spaces.n_proxies);
    mc.output_bias = true;
    mc.l2_scale = cfg.l2_scale;
    mc.learning_rate = cfg.learning_rate;
    Rng scratch(0);
    return Mlp(mc, rng ? *rng : scratch);
  }
  static Mlp make_feedback_tower(const ProblemSpaces& spaces, const NeuralConfig& cfg,
                                 Rng* rng = nullptr) {
    MlpConfig mc;
    mc.layer_sizes = {spaces.n_proxies, spaces.n_outcomes};
    mc.output_bias = false;
    mc.l2_scale = 0.0;
    mc.learning_rate = cfg.outcome_learning_rate;
    Rng scratch(0);
    return Mlp(mc, rng ? *rng : scratch);
  }
  static Mlp make_residual_tower(const ProblemSpaces& spaces, const NeuralConfig& cfg,
                                 Rng* rng = nullptr) {
    MlpConfig mc;
    mc.layer_sizes = detail::tower_sizes(
        spaces.n_instances + spaces.n_proxies + spaces.n_outcomes, cfg.hidden_sizes,
        spaces.n_outcomes);
    mc.output_bias = true;
    mc.l2_scale = cfg.l2_scale;
    mc.learning_rate = cfg.learning_rate;
    Rng scratch(0);
    return Mlp(mc, rng ? *rng : scratch);
  }
  void check_instance(int instance) const {
    if (instance < 0 || instance >= spaces_.n_instances)
      throw std::out_of_range("instance index out of range");
  }
  void check_proxy(int proxy) const {
    if (proxy < 0 || proxy >= spaces_.n_proxies)
      throw std::out_of_range("proxy index out of range");
  }

  ProblemSpaces spaces_;
  NeuralConfig cfg_;
  std::uint64_t seed_;
  Rng train_rng_;
  Mlp proxy_tower_;
  Mlp feedback_tower_;
  Mlp residual_tower_;
  ReplayBuffer<ProxySample> proxy_buffer_;
  ReplayBuffer<OutcomeSample> outcome_buffer_;
  std::int64_t proxy_steps_ = 0;
  std::int64_t outcome_steps_ = 0;
};

}  // namespace proxycast
