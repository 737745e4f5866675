#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "proxycast/rng.hpp"

namespace proxycast {

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// -ln softmax(logits)[target], computed in log space.
inline double cross_entropy(std::span<const double> logits, int target) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return std::log(sum) + mx - logits[static_cast<std::size_t>(target)];
}

struct TrainSample {
  std::vector<double> input;
  int target = 0;
};

struct MlpConfig {
  std::vector<int> layer_sizes;  // {input, hidden..., output}; may have no hidden layers
  bool output_bias = true;       // hidden layers always carry biases
  double l2_scale = 0.0;         // applied to weight matrices only, never biases
  double learning_rate = 0.1;
};

// Small fully connected network: ReLU hidden layers, identity output
// (logits). Weights are initialized uniformly in +-1/sqrt(fan_in), biases
// at zero. A zero-hidden-layer configuration is a single linear map.
class Mlp {
 public:
  Mlp(MlpConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    if (cfg_.layer_sizes.size() < 2)
      throw std::invalid_argument("mlp needs at least input and output sizes");
    for (int s : cfg_.layer_sizes)
      if (s < 1) throw std::invalid_argument("mlp layer sizes must be positive");
    const std::size_t n_layers = cfg_.layer_sizes.size() - 1;
    weights_.resize(n_layers);
    biases_.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
      const int fan_in = cfg_.layer_sizes[l];
      const int fan_out = cfg_.layer_sizes[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      weights_[l].resize(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
      for (double& w : weights_[l]) w = (2.0 * rng.uniform() - 1.0) * bound;
      const bool has_bias = l + 1 < n_layers || cfg_.output_bias;
      biases_[l].assign(has_bias ? static_cast<std::size_t>(fan_out) : 0, 0.0);
    }
  }

  const MlpConfig& config() const { return cfg_; }
  int input_size() const { return cfg_.layer_sizes.front(); }
  int output_size() const { return cfg_.layer_sizes.back(); }
  std::size_t layer_count() const { return weights_.size(); }

  std::vector<double> forward(std::span<const double> input) const {
    check_input(input);
    std::vector<std::vector<double>> acts;
    return run_forward(input, acts);
  }

  struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
  };

  Gradients make_gradients() const {
    Gradients g;
    g.w.resize(weights_.size());
    g.b.resize(biases_.size());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.w[l].assign(weights_[l].size(), 0.0);
      g.b[l].assign(biases_[l].size(), 0.0);
    }
    return g;
  }

  // Accumulates scale * dLoss/dparams for one sample, given dLoss/dlogits.
  void accumulate_sample_gradient(std::span<const double> input,
                                  std::span<const double> dlogits, double scale,
                                  Gradients& grads) const {
    check_input(input);
    if (static_cast<int>(dlogits.size()) != output_size())
      throw std::invalid_argument("dlogits width mismatch");
    std::vector<std::vector<double>> acts;
    run_forward(input, acts);

    std::vector<double> delta(dlogits.begin(), dlogits.end());
    for (std::size_t l = weights_.size(); l-- > 0;) {
      const int fan_in = cfg_.layer_sizes[l];
      const int fan_out = cfg_.layer_sizes[l + 1];
      const std::vector<double>& below = acts[l];  // acts[0] is the input
      for (int r = 0; r < fan_out; ++r) {
        const double d = delta[static_cast<std::size_t>(r)] * scale;
        double* wrow = &grads.w[l][static_cast<std::size_t>(r) * static_cast<std::size_t>(fan_in)];
        for (int c = 0; c < fan_in; ++c) wrow[c] += d * below[static_cast<std::size_t>(c)];
        if (!grads.b[l].empty()) grads.b[l][static_cast<std::size_t>(r)] += d;
      }
      if (l == 0) break;
      std::vector<double> next(static_cast<std::size_t>(fan_in), 0.0);
      for (int r = 0; r < fan_out; ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        const double* wrow = &weights_[l][static_cast<std::size_t>(r) * static_cast<std::size_t>(fan_in)];
        for (int c = 0; c < fan_in; ++c) next[static_cast<std::size_t>(c)] += d * wrow[c];
      }
      // ReLU derivative off the stored activation (relu'(0) treated as 0)
      for (int c = 0; c < fan_in; ++c)
        if (!(below[static_cast<std::size_t>(c)] > 0.0)) next[static_cast<std::size_t>(c)] = 0.0;
      delta = std::move(next);
    }
  }

  void add_l2_gradient(Gradients& grads) const {
    if (cfg_.l2_scale == 0.0) return;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      for (std::size_t i = 0; i < weights_[l].size(); ++i)
        grads.w[l][i] += cfg_.l2_scale * weights_[l][i];
  }

  void apply_sgd(const Gradients& grads, double lr) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (std::size_t i = 0; i < weights_[l].size(); ++i) weights_[l][i] -= lr * grads.w[l][i];
      for (std::size_t i = 0; i < biases_[l].size(); ++i) biases_[l][i] -= lr * grads.b[l][i];
    }
  }

  // Mean cross-entropy of the batch plus the L2 penalty l2/2 * ||W||^2.
  double batch_objective(std::span<const TrainSample> batch) const {
    if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
    double loss = 0.0;
    for (const auto& s : batch) loss += cross_entropy(forward(s.input), s.target);
    loss /= static_cast<double>(batch.size());
    if (cfg_.l2_scale != 0.0) {
      double ss = 0.0;
      for (const auto& w : weights_)
        for (double v : w) ss += v * v;
      loss += 0.5 * cfg_.l2_scale * ss;
    }
    return loss;
  }

  // Gradient of batch_objective.
  Gradients batch_gradients(std::span<const TrainSample> batch) const {
    if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
    Gradients grads = make_gradients();
    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dlogits;
    for (const auto& s : batch) {
      const std::vector<double> logits = forward(s.input);
      dlogits = softmax(logits);
      dlogits[static_cast<std::size_t>(s.target)] -= 1.0;
      accumulate_sample_gradient(s.input, dlogits, scale, grads);
    }
    add_l2_gradient(grads);
    return grads;
  }

  // One SGD step on the batch; returns the pre-step mean cross-entropy.
  double sgd_step(std::span<const TrainSample> batch) {
    if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
    double mean_loss = 0.0;
    for (const auto& s : batch) mean_loss += cross_entropy(forward(s.input), s.target);
    mean_loss /= static_cast<double>(batch.size());
    apply_sgd(batch_gradients(batch), cfg_.learning_rate);
    return mean_loss;
  }

  // Parameter access; flat order is per layer: weights row-major, then bias.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  double parameter(std::size_t index) const {
    const auto [l, i, is_bias] = locate(index);
    return is_bias ? biases_[l][i] : weights_[l][i];
  }

  void set_parameter(std::size_t index, double value) {
    const auto [l, i, is_bias] = locate(index);
    (is_bias ? biases_[l][i] : weights_[l][i]) = value;
  }

  std::vector<double> parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      flat.insert(flat.end(), weights_[l].begin(), weights_[l].end());
      flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
    }
    return flat;
  }

  void set_all_zero() {
    for (auto& w : weights_) w.assign(w.size(), 0.0);
    for (auto& b : biases_) b.assign(b.size(), 0.0);
  }

  const std::vector<double>& layer_weights(std::size_t l) const { return weights_.at(l); }
  const std::vector<double>& layer_biases(std::size_t l) const { return biases_.at(l); }
  std::vector<double>& layer_weights(std::size_t l) { return weights_.at(l); }
  std::vector<double>& layer_biases(std::size_t l) { return biases_.at(l); }

 private:
  void check_input(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != input_size())
      throw std::invalid_argument("mlp input width mismatch");
  }

  // Forward pass recording post-activation values; acts[0] is the input,
  // acts[l] the activations feeding layer l. Returns the output logits.
  std::vector<double> run_forward(std::span<const double> input,
                                  std::vector<std::vector<double>>& acts) const {
    acts.clear();
    acts.emplace_back(input.begin(), input.end());
    std::vector<double> cur(input.begin(), input.end());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const int fan_in = cfg_.layer_sizes[l];
      const int fan_out = cfg_.layer_sizes[l + 1];
      std::vector<double> next(static_cast<std::size_t>(fan_out), 0.0);
      for (int r = 0; r < fan_out; ++r) {
        const double* wrow = &weights_[l][static_cast<std::size_t>(r) * static_cast<std::size_t>(fan_in)];
        double acc = biases_[l].empty() ? 0.0 : biases_[l][static_cast<std::size_t>(r)];
        for (int c = 0; c < fan_in; ++c) acc += wrow[c] * cur[static_cast<std::size_t>(c)];
        next[static_cast<std::size_t>(r)] = acc;
      }
      if (l + 1 < weights_.size()) {
        for (double& v : next) v = v > 0.0 ? v : 0.0;
        acts.push_back(next);
      }
      cur = std::move(next);
    }
    return cur;
  }

  std::tuple<std::size_t, std::size_t, bool> locate(std::size_t index) const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (index < weights_[l].size()) return {l, index, false};
      index -= weights_[l].size();
      if (index < biases_[l].size()) return {l, index, true};
      index -= biases_[l].size();
    }
    throw std::out_of_range("mlp parameter index out of range");
  }

  MlpConfig cfg_;
  std::vector<std::vector<double>> weights_;  // [l]: fan_out x fan_in, row-major
  std::vector<std::vector<double>> biases_;   // [l]: fan_out, or empty
};

}  // namespace proxycast
