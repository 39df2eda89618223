#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cgnp/npmodels/model.hpp"
#include "cgnp/npmodels/params.hpp"
#include "cgnp/trainer/trainer.hpp"
#include "fd_oracle.hpp"
#include "model_fixtures.hpp"

using namespace cgnp;
using cgnp::testing::close_rel;
using cgnp::testing::random_episode;

namespace {

ModelConfig cnp_config(std::uint64_t seed = 1) {
  return ModelConfig{.kind = ModelKind::kCnp, .latent_dim = 8, .radius = 0.0, .init_seed = seed};
}

ModelConfig cgnp_config(double radius, std::uint64_t seed = 1) {
  return ModelConfig{.kind = ModelKind::kCgnp, .latent_dim = 8, .radius = radius, .init_seed = seed};
}

/// Gives BN layers non-trivial running statistics and moves gamma/beta and
/// the biases off their initial values.
void perturb(ParameterStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (auto& p : store.params())
    if (p.name.ends_with(".b") || p.name.ends_with(".gamma") || p.name.ends_with(".beta"))
      for (double& v : p.value.data()) v += nd(rng);
  for (auto& n : store.norms()) {
    for (double& v : n.stats.running_mean.data()) v = nd(rng);
    for (double& v : n.stats.running_var.data()) v = 0.5 + std::abs(nd(rng));
  }
}

void expect_predictions_close(const GaussianPrediction& a, const GaussianPrediction& b, double rel) {
  ASSERT_EQ(a.mu.size(), b.mu.size());
  for (std::size_t t = 0; t < a.mu.size(); ++t) {
    EXPECT_TRUE(close_rel(a.mu[t], b.mu[t], rel)) << t << ": " << a.mu[t] << " vs " << b.mu[t];
    EXPECT_TRUE(close_rel(a.sigma[t], b.sigma[t], rel)) << t << ": " << a.sigma[t] << " vs " << b.sigma[t];
  }
}

Episode permuted_context(const Episode& ep, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(ep.x_c.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Episode out = ep;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.x_c[k] = ep.x_c[perm[k]];
    out.y_c[k] = ep.y_c[perm[k]];
  }
  return out;
}

}  // namespace

TEST(InitParams, CnpShapes) {
  const ParameterStore s = init_params(cnp_config());
  EXPECT_EQ(s.at("enc.0.W").value.rows(), 2u);
  EXPECT_EQ(s.at("enc.0.W").value.cols(), 8u);
  EXPECT_EQ(s.at("enc.1.W").value.rows(), 8u);
  EXPECT_EQ(s.at("enc.2.W").value.cols(), 8u);
  EXPECT_EQ(s.at("dec.0.W").value.rows(), 9u);
  EXPECT_EQ(s.at("dec.0.W").value.cols(), 8u);
  EXPECT_EQ(s.at("dec.1.W").value.rows(), 8u);
  EXPECT_EQ(s.at("dec.1.W").value.cols(), 2u);
  EXPECT_EQ(s.norms().size(), 4u);
  for (const auto& p : s.params()) {
    if (p.name.ends_with(".b") || p.name.ends_with(".beta")) {
      for (double v : p.value.data()) EXPECT_EQ(v, 0.0);
    }
    if (p.name.ends_with(".gamma")) {
      for (double v : p.value.data()) EXPECT_EQ(v, 1.0);
    }
  }
  for (const auto& n : s.norms()) {
    for (double v : n.stats.running_mean.data()) EXPECT_EQ(v, 0.0);
    for (double v : n.stats.running_var.data()) EXPECT_EQ(v, 1.0);
  }
}

TEST(InitParams, CgnpShapesAddPositionRow) {
  const ParameterStore s = init_params(cgnp_config(0.7));
  EXPECT_EQ(s.at("enc.0.W_nbr").value.rows(), 3u);
  EXPECT_EQ(s.at("enc.1.W_nbr").value.rows(), 9u);
  EXPECT_EQ(s.at("enc.2.W_nbr").value.rows(), 9u);
  EXPECT_EQ(s.at("dec.0.W_nbr").value.rows(), 9u);
  EXPECT_EQ(s.at("dec.0.W_self").value.rows(), 9u);
  EXPECT_EQ(s.at("dec.1.W").value.cols(), 2u);
}

TEST(InitParams, DeterministicAndSeedSensitive) {
  EXPECT_EQ(init_params(cgnp_config(0.7, 4)), init_params(cgnp_config(0.7, 4)));
  EXPECT_FALSE(init_params(cgnp_config(0.7, 4)) == init_params(cgnp_config(0.7, 5)));
}

TEST(InitParams, FanInBound) {
  const ParameterStore s = init_params(cnp_config());
  for (const auto& p : s.params()) {
    if (!p.name.ends_with("W")) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.rows()));
    for (double v : p.value.data()) EXPECT_LE(std::abs(v), bound);
  }
}

TEST(Equivalence, ZeroRadiusCgnpMatchesCnp) {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 100; ++i) {
    const ModelConfig g_cfg = cgnp_config(0.0, 100 + i);
    ParameterStore g = init_params(g_cfg);
    perturb(g, i);
    const ParameterStore c = cnp_equivalent(g, g_cfg);
    const Episode ep = random_episode(rng, 3 + i % 8, 2 + i % 9);
    expect_predictions_close(predict(ep, g, g_cfg), predict(ep, c, cnp_config()), 1e-9);
  }
}

TEST(Equivalence, ZeroRadiusTrainModeMatches) {
  std::mt19937_64 rng(5);
  const ModelConfig g_cfg = cgnp_config(0.0, 3);
  ParameterStore g = init_params(g_cfg);
  ParameterStore c = cnp_equivalent(g, g_cfg);
  const Episode ep = random_episode(rng, 6, 5);
  expect_predictions_close(forward(ep, g, g_cfg, Mode::kTrain), forward(ep, c, cnp_config(), Mode::kTrain), 1e-9);
  for (std::size_t k = 0; k < g.norms().size(); ++k) {
    EXPECT_EQ(g.norms()[k].stats.running_mean, c.norms()[k].stats.running_mean);
  }
}

TEST(Equivalence, SingleContextAnyRadiusEncoder) {
  std::mt19937_64 rng(6);
  for (double radius : {0.0, 0.7, 5.0}) {
    const ModelConfig g_cfg = cgnp_config(radius, 9);
    ParameterStore g = init_params(g_cfg);
    perturb(g, 1);
    ParameterStore c = cnp_equivalent(g, g_cfg);
    const Episode ep = random_episode(rng, 1, 4);
    const BatchLayout layout(std::span<const Episode>(&ep, 1));
    Tape t;
    const Matrix hg = encode_context(t, layout, g, g_cfg, Mode::kEval).value();
    const Matrix hc = encode_context(t, layout, c, cnp_config(), Mode::kEval).value();
    for (std::size_t j = 0; j < hg.size(); ++j) EXPECT_TRUE(close_rel(hg.data()[j], hc.data()[j], 1e-9));
  }
}

TEST(Encoder, ContextPermutationPermutesRows) {
  std::mt19937_64 rng(8);
  for (const ModelConfig& cfg : {cnp_config(2), cgnp_config(0.7, 2)}) {
    ParameterStore s = init_params(cfg);
    perturb(s, 3);
    const Episode ep = random_episode(rng, 9, 3);
    const Episode pe = permuted_context(ep, rng);
    Tape t;
    const Matrix h = encode_context(t, BatchLayout(std::span<const Episode>(&ep, 1)), s, cfg, Mode::kEval).value();
    const Matrix hp = encode_context(t, BatchLayout(std::span<const Episode>(&pe, 1)), s, cfg, Mode::kEval).value();
    for (std::size_t k = 0; k < pe.x_c.size(); ++k) {
      const auto src = std::find(ep.x_c.begin(), ep.x_c.end(), pe.x_c[k]) - ep.x_c.begin();
      for (std::size_t j = 0; j < 8; ++j) {
        EXPECT_TRUE(close_rel(hp(k, j), h(static_cast<std::size_t>(src), j), 1e-9));
      }
    }
  }
}

TEST(Forward, ContextPermutationInvariance) {
  std::mt19937_64 rng(12);
  for (const ModelConfig& cfg : {cnp_config(2), cgnp_config(0.7, 2)}) {
    ParameterStore s = init_params(cfg);
    perturb(s, 4);
    for (int i = 0; i < 30; ++i) {
      const Episode ep = random_episode(rng, 3 + i % 8, 7);
      expect_predictions_close(predict(ep, s, cfg), predict(permuted_context(ep, rng), s, cfg), 1e-6);
    }
  }
}

TEST(Forward, SigmaFloorAndShapes) {
  std::mt19937_64 rng(13);
  for (const ModelConfig& cfg : {cnp_config(3), cgnp_config(0.7, 3)}) {
    ParameterStore s = init_params(cfg);
    perturb(s, 5);
    for (std::size_t n_c : {1u, 2u, 10u, 60u}) {
      for (std::size_t n_t : {1u, 3u, 120u}) {
        const Episode ep = random_episode(rng, n_c, n_t);
        const GaussianPrediction p = predict(ep, s, cfg);
        ASSERT_EQ(p.mu.size(), n_t);
        ASSERT_EQ(p.sigma.size(), n_t);
        for (double v : p.sigma) EXPECT_GE(v, ModelConfig::kSigmaFloor);
      }
    }
  }
}

TEST(Forward, TargetWithoutNearbyContextUsesSelfTerm) {
  const ModelConfig cfg = cgnp_config(0.7, 4);
  const ParameterStore s = init_params(cfg);
  Episode ep;
  ep.x_c = {-2.0, -1.6, -1.3, -1.0};
  ep.y_c = {0.1, 0.4, -0.2, 0.3};
  ep.x_t = {2.0, -1.5};
  ep.y_t = {0.0, 0.0};
  const GaussianPrediction p = predict(ep, s, cfg);
  for (double v : p.mu) EXPECT_TRUE(std::isfinite(v));
  for (double v : p.sigma) EXPECT_TRUE(std::isfinite(v));
}

TEST(Forward, BatchedEqualsPerEpisodeInEval) {
  std::mt19937_64 rng(14);
  const ModelConfig cfg = cgnp_config(0.7, 6);
  ParameterStore s = init_params(cfg);
  perturb(s, 6);
  std::vector<Episode> eps{random_episode(rng, 4, 3), random_episode(rng, 7, 2), random_episode(rng, 3, 5)};
  Tape t;
  const PredictionVars joint = forward(t, BatchLayout(eps), s, cfg, Mode::kEval);
  std::size_t row = 0;
  for (const Episode& ep : eps) {
    const GaussianPrediction p = predict(ep, s, cfg);
    for (std::size_t k = 0; k < p.mu.size(); ++k, ++row) {
      EXPECT_TRUE(close_rel(joint.mu.value()(row, 0), p.mu[k], 1e-12));
      EXPECT_TRUE(close_rel(joint.sigma.value()(row, 0), p.sigma[k], 1e-12));
    }
  }
}

TEST(Forward, RejectsMalformedEpisodes) {
  const ModelConfig cfg = cnp_config();
  const ParameterStore s = init_params(cfg);
  Episode ep;
  ep.x_t = {0.0};
  EXPECT_THROW(predict(ep, s, cfg), DimensionError);
  ep.x_c = {0.1};
  ep.y_c = {0.2};
  ep.x_t.clear();
  EXPECT_THROW(predict(ep, s, cfg), DimensionError);
}

TEST(Forward, LatentDimensionIsD) {
  std::mt19937_64 rng(15);
  const ModelConfig cfg = cgnp_config(0.7, 1);
  ParameterStore s = init_params(cfg);
  for (std::size_t n_c = 3; n_c <= 10; ++n_c) {
    const Episode ep = random_episode(rng, n_c, 2);
    const BatchLayout layout(std::span<const Episode>(&ep, 1));
    Tape t;
    const Var r = pool_latent(encode_context(t, layout, s, cfg, Mode::kEval), layout);
    EXPECT_EQ(r.value().rows(), 1u);
    EXPECT_EQ(r.value().cols(), 8u);
  }
}

TEST(Gradient, EpisodeNllMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (const ModelConfig& cfg : {cnp_config(7), cgnp_config(0.7, 7)}) {
    ParameterStore s = init_params(cfg);
    perturb(s, 8);
    const Episode ep = random_episode(rng, 5, 4);
    const std::span<const Episode> batch(&ep, 1);
    s.zero_grad();
    {
      Tape t;
      t.backward(batch_loss(t, batch, s, cfg));
    }
    for (ParamLeaf& leaf : s.params()) {
      const Matrix analytic = leaf.grad;
      const Matrix numeric = cgnp::testing::numeric_gradient(leaf.value, [&] { return batch_loss(batch, s, cfg); });
      const auto bad = cgnp::testing::grad_mismatches(analytic, numeric);
      EXPECT_TRUE(bad.empty()) << to_string(cfg.kind) << " " << cgnp::testing::describe(leaf.name, bad);
    }
  }
}

TEST(CnpEquivalent, RejectsCnpStore) {
  EXPECT_THROW(cnp_equivalent(init_params(cnp_config()), cnp_config()), UsageError);
}

TEST(ModelKindText, RoundTrip) {
  EXPECT_EQ(parse_model_kind("CGNP"), ModelKind::kCgnp);
  EXPECT_EQ(parse_model_kind(to_string(ModelKind::kCnp)), ModelKind::kCnp);
  EXPECT_THROW(parse_model_kind("np"), UsageError);
}
