#pragma once

#include <cstdint>

#include "proxycast/core.hpp"

namespace proxycast {

// Uniform interface over tabular and neural forecasters.
//
// The harness drives one game round as: predict(instance), then (at the end
// of the round) observe_proxy for the proxy revealed that round,
// observe_outcome for the outcome revealed that round, then end_round.
// observe_outcome carries the instance and the observed proxy of the
// *originating* round, because factored forecasters key their
// proxy-to-outcome update on that proxy; forecasters that do not use a
// field simply ignore it. Each generated signal is delivered exactly once.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  // Distribution over outcomes for this round's instance. Must not mutate.
  virtual ProbVector predict(int instance) const = 0;

  virtual void observe_proxy(int instance, int proxy) = 0;
  virtual void observe_outcome(int instance, int proxy, int outcome) = 0;

  // Called once at the end of every round; cadence-trained forecasters
  // hook their training here. `round` is the 1-based round index.
  virtual void end_round(std::int64_t round) { (void)round; }

  // Restore the initial (pre-observation) state.
  virtual void reset() = 0;
};

}  // namespace proxycast
