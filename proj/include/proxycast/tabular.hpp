#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "proxycast/core.hpp"
#include "proxycast/estimator.hpp"
#include "proxycast/forecaster.hpp"

namespace proxycast {

// Direct forecaster: one smoothed outcome estimator per instance.
// Ignores proxies entirely.
class TabularDirectForecaster final : public Forecaster {
 public:
  TabularDirectForecaster(const ProblemSpaces& spaces, double alpha = 1.0)
      : spaces_(spaces) {
    spaces_.validate();
    outcome_models_.reserve(static_cast<std::size_t>(spaces_.n_instances));
    for (int x = 0; x < spaces_.n_instances; ++x)
      outcome_models_.emplace_back(spaces_.n_outcomes, alpha);
  }

  ProbVector predict(int instance) const override {
    return model(instance).predict();
  }

  void observe_proxy(int, int) override {}

  void observe_outcome(int instance, int /*proxy*/, int outcome) override {
    mutable_model(instance).update(outcome);
  }

  void reset() override {
    for (auto& m : outcome_models_) m.reset();
  }

  const SmoothedCategoricalEstimator& model(int instance) const {
    check_instance(instance);
    return outcome_models_[static_cast<std::size_t>(instance)];
  }

 private:
  SmoothedCategoricalEstimator& mutable_model(int instance) {
    check_instance(instance);
    return outcome_models_[static_cast<std::size_t>(instance)];
  }
  void check_instance(int instance) const {
    if (instance < 0 || instance >= spaces_.n_instances)
      throw std::out_of_range("instance index out of range");
  }

  ProblemSpaces spaces_;
  std::vector<SmoothedCategoricalEstimator> outcome_models_;
};

// Factored forecaster: per-instance proxy estimators composed with
// per-proxy outcome estimators,
//
//   p(y|x) = sum_z outcome_model[z](y) * proxy_model[x](z).
//
// Proxy observations update only the queried instance's proxy model; outcome
// observations update only the outcome model keyed by the observed proxy of
// the originating round.
class TabularFactoredForecaster final : public Forecaster {
 public:
  TabularFactoredForecaster(const ProblemSpaces& spaces, double alpha = 1.0)
      : spaces_(spaces) {
    spaces_.validate();
    proxy_models_.reserve(static_cast<std::size_t>(spaces_.n_instances));
    for (int x = 0; x < spaces_.n_instances; ++x)
      proxy_models_.emplace_back(spaces_.n_proxies, alpha);
    outcome_models_.reserve(static_cast<std::size_t>(spaces_.n_proxies));
    for (int z = 0; z < spaces_.n_proxies; ++z)
      outcome_models_.emplace_back(spaces_.n_outcomes, alpha);
  }

  ProbVector predict(int instance) const override {
    check_instance(instance);
    std::vector<double> p(static_cast<std::size_t>(spaces_.n_outcomes), 0.0);
    const auto& h = proxy_models_[static_cast<std::size_t>(instance)];
    for (int z = 0; z < spaces_.n_proxies; ++z) {
      const double hz = h.prob(z);
      const auto& g = outcome_models_[static_cast<std::size_t>(z)];
      for (int y = 0; y < spaces_.n_outcomes; ++y) p[static_cast<std::size_t>(y)] += hz * g.prob(y);
    }
    return ProbVector(std::move(p));
  }

  void observe_proxy(int instance, int proxy) override {
    check_instance(instance);
    proxy_models_[static_cast<std::size_t>(instance)].update(proxy);
  }

  void observe_outcome(int /*instance*/, int proxy, int outcome) override {
    check_proxy(proxy);
    outcome_models_[static_cast<std::size_t>(proxy)].update(outcome);
  }

  void reset() override {
    for (auto& m : proxy_models_) m.reset();
    for (auto& m : outcome_models_) m.reset();
  }

  // Current estimate of the proxy distribution for `instance`.
  ProbVector proxy_distribution(int instance) const {
    check_instance(instance);
    return proxy_models_[static_cast<std::size_t>(instance)].predict();
  }
  // Current estimate of the outcome distribution for `proxy`.
  ProbVector outcome_distribution(int proxy) const {
    check_proxy(proxy);
    return outcome_models_[static_cast<std::size_t>(proxy)].predict();
  }

  const SmoothedCategoricalEstimator& proxy_model(int instance) const {
    check_instance(instance);
    return proxy_models_[static_cast<std::size_t>(instance)];
  }
  const SmoothedCategoricalEstimator& outcome_model(int proxy) const {
    check_proxy(proxy);
    return outcome_models_[static_cast<std::size_t>(proxy)];
  }

 private:
  void check_instance(int instance) const {
    if (instance < 0 || instance >= spaces_.n_instances)
      throw std::out_of_range("instance index out of range");
  }
  void check_proxy(int proxy) const {
    if (proxy < 0 || proxy >= spaces_.n_proxies)
      throw std::out_of_range("proxy index out of range");
  }

  ProblemSpaces spaces_;
  std::vector<SmoothedCategoricalEstimator> proxy_models_;
  std::vector<SmoothedCategoricalEstimator> outcome_models_;
};

// Stateless forecaster playing the optimal factored predictor of a known
// task: p(y|x) = sum_z outcome_probs[z][y] * proxy_probs[x][z].
class OracleForecaster final : public Forecaster {
 public:
  OracleForecaster(std::vector<std::vector<double>> proxy_probs,
                   std::vector<std::vector<double>> outcome_probs)
      : proxy_probs_(std::move(proxy_probs)), outcome_probs_(std::move(outcome_probs)) {
    if (proxy_probs_.empty() || outcome_probs_.empty())
      throw std::invalid_argument("oracle matrices must be non-empty");
  }

  ProbVector predict(int instance) const override {
    if (instance < 0 || instance >= static_cast<int>(proxy_probs_.size()))
      throw std::out_of_range("instance index out of range");
    const auto& h = proxy_probs_[static_cast<std::size_t>(instance)];
    std::vector<double> p(outcome_probs_.front().size(), 0.0);
    for (std::size_t z = 0; z < h.size(); ++z)
      for (std::size_t y = 0; y < p.size(); ++y) p[y] += outcome_probs_[z][y] * h[z];
    return ProbVector(std::move(p));
  }

  void observe_proxy(int, int) override {}
  void observe_outcome(int, int, int) override {}
  void reset() override {}

  ProbVector proxy_distribution(int instance) const {
    if (instance < 0 || instance >= static_cast<int>(proxy_probs_.size()))
      throw std::out_of_range("instance index out of range");
    return ProbVector(proxy_probs_[static_cast<std::size_t>(instance)]);
  }
  ProbVector outcome_distribution(int proxy) const {
    if (proxy < 0 || proxy >= static_cast<int>(outcome_probs_.size()))
      throw std::out_of_range("proxy index out of range");
    return ProbVector(outcome_probs_[static_cast<std::size_t>(proxy)]);
  }

 private:
  std::vector<std::vector<double>> proxy_probs_;    // N x |Z|
  std::vector<std::vector<double>> outcome_probs_;  // |Z| x |Y|
};

}  // namespace proxycast
