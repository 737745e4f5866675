#include "proxycast/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <vector>

#include "proxycast/rng.hpp"

namespace px = proxycast;

namespace {

px::Mlp make_net(std::vector<int> sizes, bool output_bias, double l2, std::uint64_t seed) {
  px::MlpConfig cfg;
  cfg.layer_sizes = std::move(sizes);
  cfg.output_bias = output_bias;
  cfg.l2_scale = l2;
  px::Rng rng(seed);
  return px::Mlp(cfg, rng);
}

// True iff no hidden pre-activation lies within `margin` of a ReLU kink,
// where finite differences of a piecewise-linear function are meaningless.
bool clear_of_relu_kinks(const px::Mlp& net, std::span<const double> input, double margin) {
  std::vector<double> cur(input.begin(), input.end());
  for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) {
    const auto& w = net.layer_weights(l);
    const auto& b = net.layer_biases(l);
    const int fan_in = static_cast<int>(cur.size());
    const int fan_out = static_cast<int>(w.size()) / fan_in;
    std::vector<double> next(static_cast<std::size_t>(fan_out));
    for (int r = 0; r < fan_out; ++r) {
      double z = b.empty() ? 0.0 : b[static_cast<std::size_t>(r)];
      for (int c = 0; c < fan_in; ++c)
        z += w[static_cast<std::size_t>(r * fan_in + c)] * cur[static_cast<std::size_t>(c)];
      if (std::abs(z) < margin) return false;
      next[static_cast<std::size_t>(r)] = z > 0.0 ? z : 0.0;
    }
    cur = std::move(next);
  }
  return true;
}

// Central finite differences of the batch objective over every parameter.
void expect_gradients_match_fd(px::Mlp& net, const std::vector<px::TrainSample>& batch,
                               double h, double rel_tol) {
  const px::Mlp::Gradients analytic = net.batch_gradients(batch);
  std::vector<double> flat;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    flat.insert(flat.end(), analytic.w[l].begin(), analytic.w[l].end());
    flat.insert(flat.end(), analytic.b[l].begin(), analytic.b[l].end());
  }
  ASSERT_EQ(flat.size(), net.parameter_count());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double orig = net.parameter(i);
    net.set_parameter(i, orig + h);
    const double up = net.batch_objective(batch);
    net.set_parameter(i, orig - h);
    const double down = net.batch_objective(batch);
    net.set_parameter(i, orig);
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(flat[i]), 1e-5});
    EXPECT_LE(std::abs(fd - flat[i]) / scale, rel_tol)
        << "param " << i << ": analytic " << flat[i] << " vs fd " << fd;
  }
}

}  // namespace

TEST(Mlp, ZeroInitGivesUniformSoftmax) {
  px::Mlp net = make_net({3, 4, 2}, true, 0.0, 1);
  net.set_all_zero();
  const std::vector<double> logits = net.forward(std::vector<double>{1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(logits[0], 0.0);
  EXPECT_DOUBLE_EQ(logits[1], 0.0);
  const std::vector<double> p = px::softmax(logits);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Mlp, LinearMapSelectsColumnOnOneHot) {
  px::Mlp net = make_net({3, 2}, false, 0.0, 1);
  // weights are row-major fan_out x fan_in
  net.layer_weights(0) = {1.0, 2.0, 3.0,
                          4.0, 5.0, 6.0};
  const std::vector<double> logits = net.forward(std::vector<double>{0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(logits[0], 2.0);
  EXPECT_DOUBLE_EQ(logits[1], 5.0);
}

TEST(Mlp, HandComputedForwardPass) {
  // 2-2-2 with ReLU hidden: weights chosen so one hidden unit clips
  px::Mlp net = make_net({2, 2, 2}, true, 0.0, 1);
  net.layer_weights(0) = {1.0, -1.0,
                          -2.0, 0.5};
  net.layer_biases(0) = {0.5, -0.25};
  net.layer_weights(1) = {1.0, 2.0,
                          -1.0, 3.0};
  net.layer_biases(1) = {0.1, -0.2};
  // input [1, 0]: pre-hidden = [1.5, -2.25] -> relu [1.5, 0]
  // logits = [1*1.5 + 2*0 + 0.1, -1*1.5 + 3*0 - 0.2] = [1.6, -1.7]
  const std::vector<double> logits = net.forward(std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(logits[0], 1.6, 1e-15);
  EXPECT_NEAR(logits[1], -1.7, 1e-15);
}

TEST(Mlp, InputWidthMismatchThrows) {
  px::Mlp net = make_net({3, 2}, false, 0.0, 1);
  EXPECT_THROW(net.forward(std::vector<double>{1.0, 0.0}), std::invalid_argument);
}

TEST(Mlp, PerfectPredictionHasZeroGradient) {
  px::Mlp net = make_net({2, 2}, false, 0.0, 1);
  // saturate the correct logit so softmax(target) == 1 in double precision
  net.layer_weights(0) = {60.0, 0.0,
                          -60.0, 0.0};
  const std::vector<px::TrainSample> batch = {{{1.0, 0.0}, 0}};
  const std::vector<double> before = net.parameters();
  const double loss = net.sgd_step(batch);
  EXPECT_DOUBLE_EQ(loss, 0.0);
  EXPECT_EQ(net.parameters(), before);
}

TEST(Mlp, SingleLayerGradientClosedForm) {
  // d loss / d logits = softmax - onehot; weight grad is its outer product
  // with the input
  px::Mlp net = make_net({3, 2}, false, 0.0, 7);
  const std::vector<double> input = {0.5, -1.0, 2.0};
  const std::vector<px::TrainSample> batch = {{input, 1}};
  const std::vector<double> probs = px::softmax(net.forward(input));
  const px::Mlp::Gradients grads = net.batch_gradients(batch);
  for (int r = 0; r < 2; ++r) {
    const double d = probs[static_cast<std::size_t>(r)] - (r == 1 ? 1.0 : 0.0);
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(grads.w[0][static_cast<std::size_t>(r * 3 + c)],
                  d * input[static_cast<std::size_t>(c)], 1e-12);
  }
}

TEST(Mlp, SgdStepMovesAgainstGradient) {
  px::Mlp net = make_net({2, 3, 2}, true, 0.0, 9);
  const std::vector<px::TrainSample> batch = {{{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}};
  const double before = net.batch_objective(batch);
  for (int i = 0; i < 50; ++i) net.sgd_step(batch);
  EXPECT_LT(net.batch_objective(batch), before);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  px::Rng data_rng(123);
  // the tower shapes used by the forecasters, plus a no-bias linear map
  struct Shape {
    std::vector<int> sizes;
    bool bias;
    double l2;
  };
  const std::vector<Shape> shapes = {
      {{10, 40, 20, 5}, true, 0.01},  // instance tower
      {{4, 5}, false, 0.0},           // proxy-to-outcome tower
      {{19, 20, 10, 5}, true, 0.01},  // residual tower
      {{3, 7, 2}, true, 0.0},
  };
  int shape_idx = 0;
  for (const auto& shape : shapes) {
    ++shape_idx;
    for (int draw = 0; draw < 5; ++draw) {
      px::Mlp net = make_net(shape.sizes, shape.bias, shape.l2,
                             static_cast<std::uint64_t>(shape_idx * 100 + draw));
      std::vector<px::TrainSample> batch;
      for (int s = 0; s < 3; ++s) {
        std::vector<double> input(static_cast<std::size_t>(shape.sizes.front()));
        for (int attempt = 0; attempt < 1000; ++attempt) {
          for (double& v : input) v = 2.0 * data_rng.uniform() - 1.0;
          if (clear_of_relu_kinks(net, input, 5e-3)) break;
        }
        batch.push_back({std::move(input), data_rng.uniform_int(shape.sizes.back())});
      }
      expect_gradients_match_fd(net, batch, 1e-5, 1e-4);
    }
  }
}

TEST(Mlp, L2AppliesToWeightsOnly) {
  px::Mlp net = make_net({2, 3, 2}, true, 0.5, 3);
  const std::vector<px::TrainSample> batch = {{{1.0, 0.0}, 0}};
  const px::Mlp::Gradients with_l2 = net.batch_gradients(batch);

  px::Mlp plain = make_net({2, 3, 2}, true, 0.0, 3);  // same seed, same weights
  const px::Mlp::Gradients without = plain.batch_gradients(batch);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (std::size_t i = 0; i < with_l2.w[l].size(); ++i)
      EXPECT_NEAR(with_l2.w[l][i] - without.w[l][i], 0.5 * net.layer_weights(l)[i], 1e-12);
    for (std::size_t i = 0; i < with_l2.b[l].size(); ++i)
      EXPECT_DOUBLE_EQ(with_l2.b[l][i], without.b[l][i]);
  }
}

TEST(Mlp, ParameterIndexingRoundTrip) {
  px::Mlp net = make_net({3, 4, 2}, true, 0.0, 5);
  const std::vector<double> flat = net.parameters();
  ASSERT_EQ(flat.size(), net.parameter_count());
  for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_DOUBLE_EQ(net.parameter(i), flat[i]);
  net.set_parameter(0, 42.0);
  EXPECT_DOUBLE_EQ(net.parameter(0), 42.0);
}

TEST(Mlp, InitializationIsSeededAndBounded) {
  px::Mlp a = make_net({9, 4, 2}, true, 0.0, 77);
  px::Mlp b = make_net({9, 4, 2}, true, 0.0, 77);
  EXPECT_EQ(a.parameters(), b.parameters());
  const double bound = 1.0 / 3.0;  // 1/sqrt(9)
  for (double w : a.layer_weights(0)) {
    EXPECT_GE(w, -bound);
    EXPECT_LE(w, bound);
  }
  for (double v : a.layer_biases(0)) EXPECT_DOUBLE_EQ(v, 0.0);
}
