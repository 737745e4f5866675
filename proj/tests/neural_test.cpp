#include "proxycast/neural.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "proxycast/core.hpp"
#include "proxycast/mlp.hpp"
#include "proxycast/replay_buffer.hpp"

namespace px = proxycast;

namespace {

const px::ProblemSpaces kSpaces{4, 3, 2, 0, 2};

px::NeuralConfig small_config() {
  px::NeuralConfig cfg;
  cfg.hidden_sizes = {8, 4};
  cfg.buffer_capacity = 64;
  cfg.min_fill = 8;
  cfg.batch_size = 8;
  cfg.cadence = {1, 1};
  return cfg;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(NeuralConfig, Presets) {
  const px::NeuralConfig gh = px::NeuralConfig::preset("github");
  EXPECT_EQ(gh.hidden_sizes, (std::vector<int>{40, 20}));
  EXPECT_DOUBLE_EQ(gh.learning_rate, 0.1);
  EXPECT_DOUBLE_EQ(gh.outcome_learning_rate, 1.0);
  EXPECT_DOUBLE_EQ(gh.l2_scale, 0.01);
  EXPECT_EQ(gh.buffer_capacity, 1000);
  EXPECT_EQ(gh.min_fill, 128);
  EXPECT_EQ(gh.batch_size, 128);
  EXPECT_EQ(gh.cadence, (px::TrainCadence{1, 4}));

  const px::NeuralConfig mp = px::NeuralConfig::preset("marketplace");
  EXPECT_EQ(mp.hidden_sizes, (std::vector<int>{20, 10}));
  EXPECT_DOUBLE_EQ(mp.outcome_learning_rate, 0.1);
  EXPECT_EQ(mp.buffer_capacity, 3000);
  EXPECT_EQ(mp.min_fill, 500);
  EXPECT_EQ(mp.cadence, (px::TrainCadence{20, 1000}));

  EXPECT_THROW(px::NeuralConfig::preset("nope"), std::invalid_argument);
}

TEST(ReplayBufferT, FifoEviction) {
  px::ReplayBuffer<int> buf(5, 2, 3);
  for (int i = 0; i < 8; ++i) buf.push(i);
  ASSERT_EQ(buf.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(buf.at(i), static_cast<int>(i + 3));
}

TEST(ReplayBufferT, SamplesWithReplacementFromContents) {
  px::ReplayBuffer<int> buf(4, 1, 64);
  buf.push(7);
  px::Rng rng(3);
  const std::vector<int> batch = buf.sample(rng);
  ASSERT_EQ(batch.size(), 64u);
  for (int v : batch) EXPECT_EQ(v, 7);  // only possible with replacement
}

TEST(NeuralDirect, FreshPredictionIsValid) {
  px::NeuralDirectForecaster f(kSpaces, small_config(), 1);
  const px::ProbVector p = f.predict(0);
  ASSERT_EQ(p.size(), 2);
  EXPECT_TRUE(p.is_valid());
}

TEST(NeuralDirect, ZeroWeightsGiveUniform) {
  px::NeuralDirectForecaster f(kSpaces, small_config(), 1);
  f.tower().set_all_zero();
  const px::ProbVector p = f.predict(2);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(NeuralDirect, BelowMinFillDoesNotTrain) {
  px::NeuralDirectForecaster f(kSpaces, small_config(), 1);
  const std::vector<double> before = f.tower().parameters();
  for (int i = 0; i < 7; ++i) {  // min_fill is 8
    f.observe_outcome(0, 0, 1);
    f.end_round(i + 1);
  }
  EXPECT_TRUE(bit_identical(f.tower().parameters(), before));
  EXPECT_EQ(f.train_steps(), 0);
}

TEST(NeuralDirect, CadenceCountsSteps) {
  px::NeuralConfig cfg = small_config();
  cfg.cadence = {3, 4};
  px::NeuralDirectForecaster f(kSpaces, cfg, 1);
  for (int i = 0; i < 16; ++i) f.observe_outcome(0, 0, i % 2);
  for (std::int64_t round = 1; round <= 8; ++round) f.end_round(round);
  // triggers at rounds 4 and 8, three steps each
  EXPECT_EQ(f.train_steps(), 6);
}

TEST(NeuralDirect, ConvergesOnDeterministicPattern) {
  px::NeuralDirectForecaster f(kSpaces, small_config(), 5);
  for (int i = 0; i < 32; ++i) f.observe_outcome(3, 0, 1);
  for (std::int64_t round = 1; round <= 400; ++round) f.end_round(round);
  const px::ProbVector p = f.predict(3);
  EXPECT_GT(p[1], 0.9);
}

TEST(NeuralFactored, FreshMixtureIsValidAndNearUniform) {
  px::NeuralFactoredForecaster f(kSpaces, small_config(), 2);
  f.proxy_tower().set_all_zero();
  f.outcome_tower().set_all_zero();
  const px::ProbVector p = f.predict(1);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(NeuralFactored, MatchesExplicitDoubleSum) {
  px::NeuralFactoredForecaster f(kSpaces, small_config(), 9);
  for (int x = 0; x < kSpaces.n_instances; ++x) {
    const px::ProbVector p = f.predict(x);
    const px::ProbVector h = f.proxy_distribution(x);
    double sum = 0.0;
    for (int y = 0; y < kSpaces.n_outcomes; ++y) {
      double expected = 0.0;
      for (int z = 0; z < kSpaces.n_proxies; ++z)
        expected += f.outcome_distribution(z)[y] * h[z];
      EXPECT_NEAR(p[y], expected, 1e-12);
      sum += p[y];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(NeuralFactored, SaturatedProxyTowerSelectsOneRow) {
  px::NeuralFactoredForecaster f(kSpaces, small_config(), 4);
  // force the proxy tower to emit a saturated one-hot on z = 1 for any input
  f.proxy_tower().set_all_zero();
  auto& last = f.proxy_tower().layer_weights(f.proxy_tower().layer_count() - 1);
  (void)last;
  auto& bias = f.proxy_tower().layer_biases(f.proxy_tower().layer_count() - 1);
  bias[1] = 1000.0;
  const px::ProbVector p = f.predict(0);
  const px::ProbVector g1 = f.outcome_distribution(1);
  EXPECT_NEAR(p[0], g1[0], 1e-12);
  EXPECT_NEAR(p[1], g1[1], 1e-12);
}

TEST(NeuralResidual, ZeroResidualReducesToFactored) {
  const px::NeuralConfig cfg = small_config();
  px::NeuralFactoredForecaster ff(kSpaces, cfg, 31);
  px::NeuralResidualForecaster rff(kSpaces, cfg, 31);
  // identical seeds build identical proxy and outcome towers
  EXPECT_TRUE(bit_identical(ff.proxy_tower().parameters(), rff.proxy_tower().parameters()));
  EXPECT_TRUE(bit_identical(ff.outcome_tower().parameters(), rff.feedback_tower().parameters()));
  rff.residual_tower().set_all_zero();
  for (int x = 0; x < kSpaces.n_instances; ++x) {
    const px::ProbVector a = ff.predict(x);
    const px::ProbVector b = rff.predict(x);
    for (int y = 0; y < kSpaces.n_outcomes; ++y) EXPECT_NEAR(a[y], b[y], 1e-12);
  }
}

TEST(NeuralResidual, ConstantResidualShiftsWithinComponent) {
  px::NeuralResidualForecaster rff(kSpaces, small_config(), 8);
  // saturate the proxy tower on z = 2
  rff.proxy_tower().set_all_zero();
  rff.proxy_tower().layer_biases(rff.proxy_tower().layer_count() - 1)[2] = 1000.0;
  // constant residual output c
  rff.residual_tower().set_all_zero();
  auto& rbias = rff.residual_tower().layer_biases(rff.residual_tower().layer_count() - 1);
  rbias[0] = 0.7;
  rbias[1] = -0.3;
  const px::ProbVector p = rff.predict(1);
  const std::vector<double> fb =
      rff.feedback_tower().forward(std::vector<double>{0.0, 0.0, 1.0});
  const std::vector<double> expected =
      px::softmax(std::vector<double>{fb[0] + 0.7, fb[1] - 0.3});
  EXPECT_NEAR(p[0], expected[0], 1e-12);
  EXPECT_NEAR(p[1], expected[1], 1e-12);
}

TEST(NeuralResidual, ResidualStepLeavesFeedbackTowerBitIdentical) {
  px::NeuralResidualForecaster rff(kSpaces, small_config(), 13);
  std::vector<px::OutcomeSample> batch;
  for (int i = 0; i < 16; ++i) batch.push_back({i % 4, i % 3, i % 2});
  const std::vector<double> fb_before = rff.feedback_tower().parameters();
  const std::vector<double> res_before = rff.residual_tower().parameters();
  const std::vector<double> proxy_before = rff.proxy_tower().parameters();
  rff.residual_step(batch);
  EXPECT_TRUE(bit_identical(rff.feedback_tower().parameters(), fb_before));
  EXPECT_TRUE(bit_identical(rff.proxy_tower().parameters(), proxy_before));
  EXPECT_FALSE(bit_identical(rff.residual_tower().parameters(), res_before));
}

TEST(NeuralResidual, FeedbackStepLeavesResidualTowerAlone) {
  px::NeuralResidualForecaster rff(kSpaces, small_config(), 14);
  std::vector<px::OutcomeSample> batch;
  for (int i = 0; i < 16; ++i) batch.push_back({i % 4, i % 3, i % 2});
  const std::vector<double> res_before = rff.residual_tower().parameters();
  const std::vector<double> fb_before = rff.feedback_tower().parameters();
  rff.feedback_step(batch);
  EXPECT_TRUE(bit_identical(rff.residual_tower().parameters(), res_before));
  EXPECT_FALSE(bit_identical(rff.feedback_tower().parameters(), fb_before));
}

TEST(NeuralForecasters, DeterministicAcrossRuns) {
  const auto run_once = [](auto& f) {
    std::vector<double> out;
    for (std::int64_t round = 1; round <= 120; ++round) {
      const int x = static_cast<int>(round % 4);
      const px::ProbVector p = f.predict(x);
      out.insert(out.end(), p.begin(), p.end());
      f.observe_proxy(x, static_cast<int>(round % 3));
      if (round > 2) f.observe_outcome(x, static_cast<int>(round % 3), static_cast<int>(round % 2));
      f.end_round(round);
    }
    return out;
  };
  px::NeuralResidualForecaster a(kSpaces, small_config(), 99);
  px::NeuralResidualForecaster b(kSpaces, small_config(), 99);
  EXPECT_TRUE(bit_identical(run_once(a), run_once(b)));

  // reset restores the exact initial state
  px::NeuralResidualForecaster c(kSpaces, small_config(), 99);
  const std::vector<double> first = run_once(c);
  c.reset();
  EXPECT_TRUE(bit_identical(run_once(c), first));
}

TEST(NeuralForecasters, PredictionsValidUnderRandomWeights) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    px::NeuralDirectForecaster df(kSpaces, small_config(), seed);
    px::NeuralFactoredForecaster ff(kSpaces, small_config(), seed);
    px::NeuralResidualForecaster rff(kSpaces, small_config(), seed);
    for (int x = 0; x < kSpaces.n_instances; ++x) {
      EXPECT_TRUE(df.predict(x).is_valid());
      EXPECT_TRUE(ff.predict(x).is_valid());
      EXPECT_TRUE(rff.predict(x).is_valid());
    }
  }
}

TEST(NeuralForecasters, WeightDumpListsEveryTower) {
  px::NeuralResidualForecaster rff(kSpaces, small_config(), 3);
  std::ostringstream out;
  rff.dump_weights(out);
  const std::string dump = out.str();
  EXPECT_NE(dump.find("proxy,0,weights,8,4"), std::string::npos);
  EXPECT_NE(dump.find("proxy,0,bias,8,1"), std::string::npos);
  EXPECT_NE(dump.find("feedback,0,weights,2,3"), std::string::npos);
  EXPECT_EQ(dump.find("feedback,0,bias"), std::string::npos);  // linear tower has no bias
  EXPECT_NE(dump.find("residual,2,weights,2,4"), std::string::npos);
  // every line is tower,layer,kind,rows,cols followed by rows*cols values
  std::istringstream lines(dump);
  std::string line;
  while (std::getline(lines, line)) {
    const auto commas = static_cast<int>(std::count(line.begin(), line.end(), ','));
    std::istringstream fields(line);
    std::string tower, layer, kind, rows, cols;
    std::getline(fields, tower, ',');
    std::getline(fields, layer, ',');
    std::getline(fields, kind, ',');
    std::getline(fields, rows, ',');
    std::getline(fields, cols, ',');
    const int expected_values = std::stoi(rows) * (kind == "bias" ? 1 : std::stoi(cols));
    EXPECT_EQ(commas, 4 + expected_values) << line;
  }
}

TEST(NeuralFactored, LearnsFactoredStructure) {
  // deterministic x -> z -> y chain: x0,x1 -> z0 -> y0; x2,x3 -> z1 -> y1
  px::NeuralConfig cfg = small_config();
  cfg.cadence = {1, 1};
  px::NeuralFactoredForecaster f(kSpaces, cfg, 17);
  for (std::int64_t round = 1; round <= 600; ++round) {
    const int x = static_cast<int>(round % 4);
    const int z = x < 2 ? 0 : 1;
    f.observe_proxy(x, z);
    f.observe_outcome(x, z, z);
    f.end_round(round);
  }
  EXPECT_GT(f.predict(0)[0], 0.85);
  EXPECT_GT(f.predict(3)[1], 0.85);
}
