#include <gtest/gtest.h>

#include <cmath>

#include "cvec/error.hpp"
#include "cvec/nets.hpp"
#include "cvec/ops.hpp"
#include "test_util.hpp"

namespace cvec::nets {
namespace {

using test::normal_values;
using test::random_matrix;

FeatureSequence random_feats(std::size_t frames, Rng& rng) {
  FeatureSequence f;
  f.data = normal_values(frames * kFeatureDim, rng);
  return f;
}

void zero_all(ParamStore& params) {
  for (auto& [name, t] : params) {
    for (auto& v : t.mutable_values()) v = 0.0;
  }
}

/// Every parameter tensor receives some nonzero gradient from a random projection loss.
void expect_no_dead_parameters(ParamStore& params, const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  const auto r = Tensor::constant(out.shape(), normal_values(out.size(), rng));
  params.zero_grad();
  backward(sum(hadamard(out, r)));
  for (const auto& [name, t] : params) {
    bool any = false;
    if (t.has_grad()) {
      for (double g : t.grad()) any = any || g != 0.0;
    }
    EXPECT_TRUE(any) << name << " received no gradient";
  }
}

TEST(Tdnn, DefaultLayersMatchTable) {
  const TdnnConfig cfg;
  ASSERT_EQ(cfg.layers.size(), 6u);
  const std::vector<std::vector<int>> contexts = {{-2, -1, 0, 1, 2}, {-2, 0, 2}, {-3, 0, 3}, {0}, {0}, {0}};
  const std::size_t in_dims[] = {200, 768, 768, 256, 256, 256};
  const std::size_t out_dims[] = {256, 256, 256, 256, 256, 128};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(cfg.layers[i].context, contexts[i]);
    EXPECT_EQ(cfg.layer_input_dim(i), in_dims[i]);
    EXPECT_EQ(cfg.layers[i].output_dim, out_dims[i]);
    EXPECT_EQ(cfg.layers[i].activation, i == 5 ? Activation::Identity : Activation::Relu);
  }
  EXPECT_EQ(cfg.left_context() + cfg.right_context() + 1, 15);
}

TEST(Tdnn, OutputHasOneVectorPerFrame) {
  Rng rng(1);
  ParamStore params;
  const TdnnConfig cfg;
  init_tdnn(params, cfg, rng);
  const auto out = tdnn_forward(random_matrix(200, 40, rng), cfg, params);
  EXPECT_EQ(out.shape(), (Shape{200, 128}));
  const auto one = tdnn_forward(random_matrix(1, 40, rng), cfg, params);
  EXPECT_EQ(one.shape(), (Shape{1, 128}));
}

TEST(Tdnn, ZeroWeightsGiveZeroOutput) {
  Rng rng(2);
  ParamStore params;
  const auto cfg = TdnnConfig::for_profile(Profile::Tiny);
  init_tdnn(params, cfg, rng);
  zero_all(params);
  const auto out = tdnn_forward(Tensor::constant({30, 40}, std::vector<double>(1200, 0.7)), cfg, params);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Tdnn, ReceptiveFieldIsSevenFramesEachSide) {
  Rng rng(3);
  ParamStore params;
  const auto cfg = TdnnConfig::for_profile(Profile::Tiny);
  init_tdnn(params, cfg, rng);
  auto data = normal_values(40 * 40, rng);
  const auto base = tdnn_forward(Tensor::matrix(40, 40, data), cfg, params);
  const std::size_t t = 20;
  auto changed = [&](long offset) {
    auto d = data;
    for (std::size_t k = 0; k < 40; ++k) d[(t + offset) * 40 + k] += 1.0;
    const auto out = tdnn_forward(Tensor::matrix(40, 40, d), cfg, params);
    double diff = 0.0;
    for (std::size_t k = 0; k < out.cols(); ++k) diff += std::abs(out(t, k) - base(t, k));
    return diff > 0.0;
  };
  EXPECT_TRUE(changed(7));
  EXPECT_TRUE(changed(-7));
  EXPECT_FALSE(changed(8));
  EXPECT_FALSE(changed(-8));
}

TEST(Tdnn, EdgesUseReplicatePadding) {
  // Frame 0 of a sequence equals frame 7 of the same sequence with seven copies
  // of its first frame prepended.
  Rng rng(4);
  ParamStore params;
  const auto cfg = TdnnConfig::for_profile(Profile::Tiny);
  init_tdnn(params, cfg, rng);
  const auto data = normal_values(20 * 40, rng);
  std::vector<double> padded;
  for (int i = 0; i < 7; ++i) padded.insert(padded.end(), data.begin(), data.begin() + 40);
  padded.insert(padded.end(), data.begin(), data.end());
  const auto a = tdnn_forward(Tensor::matrix(20, 40, data), cfg, params);
  const auto b = tdnn_forward(Tensor::matrix(27, 40, padded), cfg, params);
  for (std::size_t k = 0; k < a.cols(); ++k) EXPECT_NEAR(a(0, k), b(7, k), 1e-12);
}

TEST(Tdnn, SegmentsArePaddedIndependently) {
  Rng rng(5);
  ParamStore params;
  const auto cfg = TdnnConfig::for_profile(Profile::Tiny);
  init_tdnn(params, cfg, rng);
  const auto a = normal_values(12 * 40, rng), b = normal_values(9 * 40, rng);
  auto joined = a;
  joined.insert(joined.end(), b.begin(), b.end());
  const std::size_t lengths[] = {12, 9};
  const auto both = tdnn_forward_segments(Tensor::matrix(21, 40, joined), lengths, cfg, params);
  const auto only_b = tdnn_forward(Tensor::matrix(9, 40, b), cfg, params);
  for (std::size_t t = 0; t < 9; ++t) {
    for (std::size_t k = 0; k < only_b.cols(); ++k) EXPECT_NEAR(both(12 + t, k), only_b(t, k), 1e-12);
  }
}

TEST(Tdnn, WrongFeatureDimensionIsConfigError) {
  Rng rng(6);
  ParamStore params;
  const auto cfg = TdnnConfig::for_profile(Profile::Tiny);
  init_tdnn(params, cfg, rng);
  EXPECT_THROW(tdnn_forward(random_matrix(10, 39, rng), cfg, params), ConfigError);
}

TEST(Tdnn, EveryParameterGetsGradient) {
  Rng rng(7);
  ParamStore params;
  const auto cfg = TdnnConfig::for_profile(Profile::Tiny);
  init_tdnn(params, cfg, rng);
  expect_no_dead_parameters(params, tdnn_forward(random_matrix(30, 40, rng), cfg, params), 70);
}

TEST(Hornn, DefaultsMatchDescription) {
  const HornnConfig cfg;
  EXPECT_EQ(cfg.hidden_dim, 256u);
  EXPECT_EQ(cfg.lags, (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(cfg.projection_dim, 128u);
}

TEST(Hornn, ZeroInputAndBiasGiveZeroStates) {
  Rng rng(8);
  ParamStore params;
  const auto cfg = HornnConfig::for_profile(Profile::Tiny);
  init_hornn(params, cfg, rng);
  const auto out = hornn_forward(Tensor::zeros({25, 40}), cfg, params);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Hornn, ScalarRecurrenceMatchesHandUnrolling) {
  HornnConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_dim = 1;
  cfg.projection_dim = 1;
  ParamStore params;
  const double w = 0.8, u1 = 0.5, u4 = -0.3, b = 0.1, proj = 2.0;
  params.add("hornn.W", {1, 1}, {w});
  params.add("hornn.U.lag1", {1, 1}, {u1});
  params.add("hornn.U.lag4", {1, 1}, {u4});
  params.add("hornn.b", {1}, {b});
  params.add("hornn.proj", {1, 1}, {proj});
  const std::vector<double> x = {1.0, -0.5, 2.0, 0.3, -1.0, 0.7};
  const auto out = hornn_forward(Tensor::matrix(6, 1, x), cfg, params);
  std::vector<double> h(6, 0.0);
  for (std::size_t t = 0; t < 6; ++t) {
    double pre = w * x[t] + b;
    if (t >= 1) pre += u1 * h[t - 1];
    if (t >= 4) pre += u4 * h[t - 4];
    h[t] = std::max(0.0, pre);
    EXPECT_NEAR(out(t, 0), proj * h[t], 1e-12) << "t=" << t;
  }
}

TEST(Hornn, IsCausal) {
  Rng rng(9);
  ParamStore params;
  const auto cfg = HornnConfig::for_profile(Profile::Tiny);
  init_hornn(params, cfg, rng);
  auto data = normal_values(20 * 40, rng);
  const auto base = hornn_forward(Tensor::matrix(20, 40, data), cfg, params);
  for (std::size_t k = 0; k < 40; ++k) data[11 * 40 + k] += 1.0;
  const auto moved = hornn_forward(Tensor::matrix(20, 40, data), cfg, params);
  for (std::size_t t = 0; t <= 10; ++t) {
    for (std::size_t k = 0; k < base.cols(); ++k) EXPECT_EQ(base(t, k), moved(t, k));
  }
}

TEST(Hornn, BatchMatchesSingleSequences) {
  Rng rng(10);
  ParamStore params;
  const auto cfg = HornnConfig::for_profile(Profile::Tiny);
  init_hornn(params, cfg, rng);
  const auto a = normal_values(15 * 40, rng), b = normal_values(15 * 40, rng);
  auto joined = a;
  joined.insert(joined.end(), b.begin(), b.end());
  const auto both = hornn_forward_batch(Tensor::matrix(30, 40, joined), 2, cfg, params);
  const auto only_b = hornn_forward(Tensor::matrix(15, 40, b), cfg, params);
  for (std::size_t t = 0; t < 15; ++t) {
    for (std::size_t k = 0; k < only_b.cols(); ++k) EXPECT_NEAR(both(15 + t, k), only_b(t, k), 1e-12);
  }
}

TEST(Hornn, EveryParameterGetsGradient) {
  Rng rng(11);
  ParamStore params;
  const auto cfg = HornnConfig::for_profile(Profile::Tiny);
  init_hornn(params, cfg, rng);
  expect_no_dead_parameters(params, hornn_forward(random_matrix(12, 40, rng), cfg, params), 71);
}

TEST(Vad, SevenHiddenLayersOverFiftyFiveFrames) {
  const VadConfig cfg;
  EXPECT_EQ(cfg.window(), 55u);
  EXPECT_EQ(cfg.spliced_dim(), 55u * 40u);
  Rng rng(12);
  ParamStore params;
  init_vad(params, cfg, rng);
  for (int i = 1; i <= 7; ++i) EXPECT_TRUE(params.contains("vad.L" + std::to_string(i) + ".W"));
  EXPECT_FALSE(params.contains("vad.L8.W"));
  EXPECT_EQ(params.get("vad.out.W").shape(), (Shape{256, 2}));
}

TEST(Vad, ZeroWeightsGiveEvenPosterior) {
  Rng rng(13);
  ParamStore params;
  const auto cfg = VadConfig::for_profile(Profile::Tiny);
  init_vad(params, cfg, rng);
  zero_all(params);
  const auto p = vad_forward(random_feats(55, rng), cfg, params);
  EXPECT_EQ(p(0), 0.5);
  EXPECT_EQ(p(1), 0.5);
}

TEST(Vad, PosteriorSumsToOne) {
  Rng rng(14);
  ParamStore params;
  const auto cfg = VadConfig::for_profile(Profile::Tiny);
  init_vad(params, cfg, rng);
  for (int i = 0; i < 5; ++i) {
    const auto p = vad_forward(random_feats(55, rng), cfg, params);
    EXPECT_NEAR(p(0) + p(1), 1.0, 1e-15);
  }
}

TEST(Vad, WrongWindowLengthIsContractError) {
  Rng rng(15);
  ParamStore params;
  const auto cfg = VadConfig::for_profile(Profile::Tiny);
  init_vad(params, cfg, rng);
  EXPECT_THROW(vad_forward(random_feats(54, rng), cfg, params), ContractError);
}

TEST(Vad, SpliceReplicatesStreamEdges) {
  Rng rng(16);
  const auto cfg = VadConfig::for_profile(Profile::Tiny);
  const auto stream = random_feats(10, rng);
  const std::size_t frames[] = {0};
  const auto s = vad_splice(stream, frames, cfg);
  ASSERT_EQ(s.shape(), (Shape{1, 55 * 40}));
  // Offsets -27..0 all read frame 0; offset +1 reads frame 1.
  for (std::size_t k = 0; k < 40; ++k) {
    EXPECT_EQ(s(0, k), stream.frame(0)[k]);
    EXPECT_EQ(s(0, 27 * 40 + k), stream.frame(0)[k]);
    EXPECT_EQ(s(0, 28 * 40 + k), stream.frame(1)[k]);
    EXPECT_EQ(s(0, 54 * 40 + k), stream.frame(9)[k]);
  }
}

TEST(Vad, EveryParameterGetsGradient) {
  Rng rng(17);
  ParamStore params;
  const auto cfg = VadConfig::for_profile(Profile::Tiny);
  init_vad(params, cfg, rng);
  const auto stream = random_feats(40, rng);
  const std::size_t frames[] = {0, 10, 20, 39};
  expect_no_dead_parameters(params, vad_logits(vad_splice(stream, frames, cfg), cfg, params), 72);
}

class CpdFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg = CpdConfig::for_profile(Profile::Tiny);
    Rng rng(18);
    init_cpd(params, cfg, rng);
  }
  CpdConfig cfg;
  ParamStore params;
};

TEST_F(CpdFixture, ContextCoversOneSecondEachSide) {
  EXPECT_EQ(CpdConfig{}.context, 50u);
  EXPECT_EQ(cfg.side_length(), 51u);
}

TEST_F(CpdFixture, MirroredContextFusesToSquaredState) {
  Rng rng(19);
  const auto past = random_feats(51, rng);
  const auto future = past.reversed();
  const auto past_d = tdnn_forward(past.to_tensor(), cfg.tdnn, params, "cpd.tdnn");
  const auto future_d = tdnn_forward(future.reversed().to_tensor(), cfg.tdnn, params, "cpd.tdnn");
  StepIndex steps;
  for (std::size_t i = 0; i < 51; ++i) steps.push_back({i});
  const auto fused = cpd_fuse(past_d, steps, future_d, steps, cfg, params);
  const auto h = cpd_encode(past_d, steps, cfg, params);
  for (std::size_t k = 0; k < fused.size(); ++k) EXPECT_EQ(fused.values()[k], h.values()[k] * h.values()[k]);
}

TEST_F(CpdFixture, SwappingSidesWithReversalIsInvariant) {
  Rng rng(20);
  const auto past = random_feats(51, rng);
  const auto future = random_feats(51, rng);
  const auto a = cpd_forward(past, future, cfg, params);
  const auto b = cpd_forward(future.reversed(), past.reversed(), cfg, params);
  EXPECT_EQ(a(0), b(0));
  EXPECT_EQ(a(1), b(1));
}

TEST_F(CpdFixture, ZeroClassifierGivesEvenPosterior) {
  for (auto name : {"cpd.out.W", "cpd.out.b"}) {
    for (auto& v : params.get(name).mutable_values()) v = 0.0;
  }
  Rng rng(21);
  const auto p = cpd_forward(random_feats(51, rng), random_feats(51, rng), cfg, params);
  EXPECT_EQ(p(0), 0.5);
  EXPECT_EQ(p(1), 0.5);
  const auto region = cpd_region_posteriors(random_matrix(120, 40, rng), cfg, params);
  ASSERT_EQ(region.size(), 120u);
  for (double v : region) EXPECT_EQ(v, 0.5);
}

TEST_F(CpdFixture, RegionPosteriorsAreProbabilities) {
  Rng rng(22);
  const auto post = cpd_region_posteriors(random_matrix(140, 40, rng), cfg, params);
  ASSERT_EQ(post.size(), 140u);
  for (double v : post) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST_F(CpdFixture, RegionStepsReadBothSidesTowardsCenter) {
  StepIndex past, future;
  const std::size_t centers[] = {3};
  cpd_region_steps(centers, 0, 10, 4, past, future);
  ASSERT_EQ(past.size(), 5u);
  // Past reads t-4..t clamped to the region; future reads t+4..t.
  EXPECT_EQ(past.front()[0], 0u);
  EXPECT_EQ(past.back()[0], 3u);
  EXPECT_EQ(future.front()[0], 7u);
  EXPECT_EQ(future.back()[0], 3u);
}

TEST_F(CpdFixture, EveryParameterGetsGradient) {
  Rng rng(23);
  const auto dv = tdnn_forward(random_matrix(60, 40, rng), cfg.tdnn, params, "cpd.tdnn");
  StepIndex past, future;
  const std::size_t centers[] = {20, 40};
  cpd_region_steps(centers, 0, 60, 15, past, future);
  const auto logits = cpd_classify(cpd_fuse(dv, past, dv, future, cfg, params), params);
  expect_no_dead_parameters(params, logits, 73);
}

}  // namespace
}  // namespace cvec::nets
