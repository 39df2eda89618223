#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cgnp/numkit/adam.hpp"
#include "cgnp/numkit/errors.hpp"
#include "cgnp/numkit/ops.hpp"
#include "fd_oracle.hpp"

using namespace cgnp;
using cgnp::testing::grad_mismatches;
using cgnp::testing::numeric_gradient;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng);
  return m;
}

double scalar(Var v) { return v.value()(0, 0); }

}  // namespace

TEST(Affine, IdentityAndBias) {
  Tape t;
  Var x = t.constant({{1, 2}});
  EXPECT_EQ(affine(x, t.constant({{1, 0}, {0, 1}}), t.constant({{0, 0}})).value(), (Matrix{{1, 2}}));
  EXPECT_EQ(affine(x, t.constant({{1, 0}, {0, 1}}), t.constant({{3, 4}})).value(), (Matrix{{4, 6}}));
  EXPECT_EQ(affine(t.constant({{2, 3}}), t.constant({{1}, {1}}), t.constant({{0.5}})).value(),
            (Matrix{{5.5}}));
}

TEST(Affine, ShapeMismatchThrows) {
  Tape t;
  EXPECT_THROW(affine(t.constant({{1, 2, 3}}), t.constant({{1}, {1}}), t.constant({{0}})),
               DimensionError);
  EXPECT_THROW(affine(t.constant({{1, 2}}), t.constant({{1}, {1}}), t.constant({{0, 0}})),
               DimensionError);
}

TEST(Relu, ClampAndSubgradientAtZero) {
  Tape t;
  ParamLeaf x("x", Matrix{{-3, 2, 0}});
  Var y = relu(t.param(x));
  EXPECT_EQ(y.value(), (Matrix{{0, 2, 0}}));
  t.backward(sum(y));
  EXPECT_EQ(x.grad, (Matrix{{0, 1, 0}}));
}

TEST(BoundedSoftplus, Values) {
  EXPECT_NEAR(bounded_softplus(0.0), 0.1 + 0.9 * std::log(2.0), 1e-15);
  EXPECT_NEAR(bounded_softplus(0.0), 0.72383, 1e-5);
  EXPECT_EQ(bounded_softplus(-40.0), 0.1);
  EXPECT_NEAR(bounded_softplus(40.0), 36.1, 1e-12);
  EXPECT_TRUE(std::isfinite(bounded_softplus(1e6)));
  EXPECT_EQ(bounded_softplus(-1e6), 0.1);
}

TEST(BoundedSoftplus, FloorAndMonotone) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-60.0, 60.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = d(rng);
    const double b = a + 1e-3;
    EXPECT_GE(bounded_softplus(a), 0.1);
    if (a > -30.0) {
      EXPECT_LT(bounded_softplus(a), bounded_softplus(b)) << a;
    }
  }
}

TEST(BatchNorm, TrainModeNormalizesColumns) {
  Tape t;
  BatchNormStats stats(1);
  Var y = batch_norm(t.constant({{1}, {3}}), t.constant({{1}}), t.constant({{0}}), stats, Mode::kTrain);
  const double expect = 1.0 / std::sqrt(1.0 + stats.eps);
  EXPECT_NEAR(y.value()(0, 0), -expect, 1e-15);
  EXPECT_NEAR(y.value()(1, 0), expect, 1e-15);
  // running = 0.9 * (0, 1) + 0.1 * (2, 1)
  EXPECT_NEAR(stats.running_mean(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(stats.running_var(0, 0), 1.0, 1e-15);
}

TEST(BatchNorm, ConstantColumnMapsToZero) {
  Tape t;
  BatchNormStats stats(1);
  Var y = batch_norm(t.constant({{5}, {5}}), t.constant({{1}}), t.constant({{0}}), stats, Mode::kTrain);
  EXPECT_EQ(y.value(), (Matrix{{0}, {0}}));
}

TEST(BatchNorm, EvalWithUnitStatsIsNearIdentity) {
  Tape t;
  BatchNormStats stats(2);
  Matrix x{{0.3, -1.2}, {4.0, 2.5}, {-0.7, 0.0}};
  Var y = batch_norm(t.constant(x), t.constant({{1, 1}}), t.constant({{0, 0}}), stats, Mode::kEval);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(y.value().data()[i], x.data()[i] / std::sqrt(1.0 + stats.eps), 1e-15);
  EXPECT_EQ(stats.running_mean, (Matrix{{0, 0}}));
}

TEST(BatchNorm, Errors) {
  Tape t;
  BatchNormStats stats(1);
  EXPECT_THROW(batch_norm(t.constant({{1}}), t.constant({{1}}), t.constant({{0}}), stats, Mode::kTrain),
               DegenerateBatchError);
  EXPECT_NO_THROW(batch_norm(t.constant({{1}}), t.constant({{1}}), t.constant({{0}}), stats, Mode::kEval));
  EXPECT_THROW(batch_norm(t.constant({{1, 2}, {3, 4}}), t.constant({{1}}), t.constant({{0}}), stats,
                          Mode::kTrain),
               DimensionError);
}

TEST(BatchNorm, TrainOutputMoments) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 30;
    Matrix x = random_matrix(n, 4, rng, 3.0);
    for (std::size_t i = 0; i < n; ++i) x(i, 1) += 100.0;
    Tape t;
    BatchNormStats stats(4);
    const Matrix& y =
        batch_norm(t.constant(x), t.constant(Matrix(1, 4, 1.0)), t.constant(Matrix(1, 4, 0.0)), stats, Mode::kTrain)
            .value();
    for (std::size_t j = 0; j < 4; ++j) {
      double mean = 0.0, var = 0.0, raw_var = 0.0, raw_mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) raw_mean += x(i, j) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) raw_var += std::pow(x(i, j) - raw_mean, 2) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) mean += y(i, j) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) var += y(i, j) * y(i, j) / static_cast<double>(n);
      EXPECT_NEAR(mean, 0.0, 1e-8);
      // eps shrinks the variance to raw/(raw + eps).
      EXPECT_NEAR(var, 1.0, 1e-6 + stats.eps / raw_var);
      EXPECT_NEAR(var, raw_var / (raw_var + stats.eps), 1e-12);
    }
  }
}

TEST(GaussianNll, Values) {
  Tape t;
  ParamLeaf mu("mu", Matrix{{0}});
  ParamLeaf sigma("sigma", Matrix{{1}});
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(scalar(gaussian_nll(Matrix{{0}}, t.param(mu), t.param(sigma))), half_log_2pi, 1e-15);
  EXPECT_NEAR(half_log_2pi, 0.91894, 1e-5);
  EXPECT_NEAR(scalar(gaussian_nll(Matrix{{1}}, t.param(mu), t.param(sigma))), half_log_2pi + 0.5, 1e-15);
}

TEST(GaussianNll, ZeroGradientAtMean) {
  for (double s : {0.1, 0.5, 3.0}) {
    Tape t;
    ParamLeaf mu("mu", Matrix{{0.37}});
    ParamLeaf sigma("sigma", Matrix{{s}});
    t.backward(gaussian_nll(Matrix{{0.37}}, t.param(mu), t.param(sigma)));
    EXPECT_EQ(mu.grad(0, 0), 0.0);
  }
}

TEST(GaussianNll, MinimizedAtTarget) {
  for (double offset : {-1.0, -1e-3, 1e-3, 2.0}) {
    Tape t;
    ParamLeaf mu("mu", Matrix{{0.5 + offset}});
    ParamLeaf sigma("sigma", Matrix{{0.8}});
    t.backward(gaussian_nll(Matrix{{0.5}}, t.param(mu), t.param(sigma)));
    // Gradient points away from y, so descent moves mu toward it.
    EXPECT_EQ(std::signbit(mu.grad(0, 0)), std::signbit(offset));
  }
}

TEST(GaussianNll, NonPositiveSigmaThrows) {
  Tape t;
  EXPECT_THROW(gaussian_nll(Matrix{{0}}, t.constant({{0}}), t.constant({{0}})), DomainError);
  EXPECT_THROW(gaussian_nll(Matrix{{0}}, t.constant({{0}}), t.constant({{-1}})), DomainError);
}

TEST(Backward, LinearChain) {
  Tape t;
  ParamLeaf w("w", Matrix{{0.7}});
  t.backward(affine(t.constant({{2}}), t.param(w), t.constant({{0}})));
  EXPECT_EQ(w.grad(0, 0), 2.0);
}

TEST(Backward, UnreachedLeavesKeepZeroGrad) {
  Tape t;
  ParamLeaf w1("w1", Matrix{{0.5, -1.0}});
  ParamLeaf w2("w2", Matrix{{2.0, 3.0}});
  Var a = sum(relu(t.param(w1)));
  Var b = sum(t.param(w2));
  (void)b;
  t.backward(a);
  EXPECT_EQ(w2.grad, (Matrix{{0, 0}}));
  EXPECT_EQ(w1.grad, (Matrix{{1, 0}}));
}

TEST(Backward, NonScalarIsUsageError) {
  Tape t;
  ParamLeaf w("w", Matrix{{1, 2}});
  EXPECT_THROW(t.backward(t.param(w)), UsageError);
}

TEST(Tape, NonFiniteIsRejected) {
  Tape t;
  ParamLeaf w("w", Matrix{{1e308}});
  EXPECT_THROW(scale(t.param(w), 10.0), NonFiniteError);
}

// Random compositions of every op against central differences.
class RandomNetworkGradient : public ::testing::TestWithParam<int> {};

TEST_P(RandomNetworkGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(1000 + GetParam());
  const std::size_t n = 6;
  const int depth = 1 + GetParam() % 5;
  std::vector<std::size_t> widths{3};
  std::vector<int> kinds;
  std::uniform_int_distribution<int> kind_dist(0, 3);
  std::uniform_int_distribution<std::size_t> width_dist(1, 5);
  for (int k = 0; k < depth; ++k) {
    widths.push_back(width_dist(rng));
    kinds.push_back(kind_dist(rng));
  }

  std::vector<ParamLeaf> leaves;
  leaves.reserve(4 * depth + 2);
  leaves.emplace_back("x", random_matrix(n, widths[0], rng));
  for (int k = 0; k < depth; ++k) {
    leaves.emplace_back("W" + std::to_string(k), random_matrix(widths[k], widths[k + 1], rng, 0.8));
    leaves.emplace_back("b" + std::to_string(k), random_matrix(1, widths[k + 1], rng, 0.3));
    leaves.emplace_back("g" + std::to_string(k), random_matrix(1, widths[k + 1], rng, 0.5));
    leaves.emplace_back("be" + std::to_string(k), random_matrix(1, widths[k + 1], rng, 0.5));
  }
  Matrix y = random_matrix(n, 1, rng);

  auto build = [&](Tape& t) {
    std::vector<BatchNormStats> stats;
    stats.reserve(depth);
    Var h = t.param(leaves[0]);
    for (int k = 0; k < depth; ++k) {
      h = affine(h, t.param(leaves[1 + 4 * k]), t.param(leaves[2 + 4 * k]));
      switch (kinds[k]) {
        case 0: h = relu(h); break;
        case 1: h = bounded_softplus(h); break;
        case 2: {
          auto& s = stats.emplace_back(widths[k + 1]);
          h = batch_norm(h, t.param(leaves[3 + 4 * k]), t.param(leaves[4 + 4 * k]), s, Mode::kTrain);
          break;
        }
        default: h = concat_cols(slice_cols(h, 0, 1), h); h = slice_cols(h, 1, widths[k + 1]); break;
      }
    }
    Var mu = slice_cols(h, 0, 1);
    Var sigma = bounded_softplus(gather_rows(slice_cols(h, widths.back() - 1, 1), {0, 1, 2, 3, 4, 5}));
    return add(gaussian_nll(y, mu, sigma), scale(sum(segment_mean(h, {0, 2, 6})), 0.3));
  };

  Tape tape;
  tape.backward(build(tape));
  for (auto& leaf : leaves) {
    const Matrix numeric = numeric_gradient(leaf.value, [&] {
      Tape t;
      return build(t).value()(0, 0);
    });
    const auto bad = grad_mismatches(leaf.grad, numeric);
    EXPECT_TRUE(bad.empty()) << cgnp::testing::describe(leaf.name, bad);
  }
}

INSTANTIATE_TEST_SUITE_P(Depths, RandomNetworkGradient, ::testing::Range(0, 40));

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamLeaf p("p", Matrix{{0.5}});
  p.grad(0, 0) = 1.0;
  AdamState state;
  ParamLeaf* leaves[] = {&p};
  adam_step(leaves, state);
  EXPECT_NEAR(p.value(0, 0) - 0.5, -1e-3, 1e-11);
  EXPECT_EQ(state.t, 1u);
  EXPECT_EQ(p.grad(0, 0), 1.0);
}

TEST(Adam, ZeroGradientIsNoOp) {
  ParamLeaf p("p", Matrix{{0.5, -2.0}});
  AdamState state;
  ParamLeaf* leaves[] = {&p};
  adam_step(leaves, state);
  EXPECT_EQ(p.value, (Matrix{{0.5, -2.0}}));
  adam_step(leaves, state);
  EXPECT_EQ(p.value, (Matrix{{0.5, -2.0}}));
  EXPECT_EQ(state.t, 2u);
}

TEST(Adam, SecondStepMatchesClosedForm) {
  const double b1 = 0.9, b2 = 0.999, lr = 1e-3, eps = 1e-8;
  const double g1 = 0.3, g2 = -0.1;
  ParamLeaf p("p", Matrix{{1.0}});
  AdamState state;
  ParamLeaf* leaves[] = {&p};
  p.grad(0, 0) = g1;
  adam_step(leaves, state);
  p.grad(0, 0) = g2;
  adam_step(leaves, state);

  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = t == 1 ? g1 : g2;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  EXPECT_NEAR(p.value(0, 0), theta, 1e-15);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  ParamLeaf p("p", Matrix{{0.0}});
  AdamState state;
  ParamLeaf* leaves[] = {&p};
  double prev = 0.0;
  for (int i = 0; i < 100; ++i) {
    p.grad(0, 0) = 2.5;
    adam_step(leaves, state);
    EXPECT_LT(p.value(0, 0), prev);
    prev = p.value(0, 0);
  }
  EXPECT_EQ(state.t, 100u);
}

TEST(Determinism, SameInputsBitIdentical) {
  std::mt19937_64 rng(3);
  Matrix x = random_matrix(9, 4, rng);
  Matrix w = random_matrix(4, 3, rng);
  auto run = [&] {
    Tape t;
    BatchNormStats s(3);
    Var h = batch_norm(affine(t.constant(x), t.constant(w), t.constant(Matrix(1, 3))), t.constant(Matrix(1, 3, 1.0)),
                       t.constant(Matrix(1, 3)), s, Mode::kTrain);
    return bounded_softplus(relu(h)).value();
  };
  EXPECT_EQ(run(), run());
}
