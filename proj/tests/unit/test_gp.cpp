#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fbgp/errors.hpp"
#include "fbgp/gp.hpp"
#include "oracles.hpp"

using fbgp::Dataset;
using fbgp::Hyperparameters;

namespace {

Hyperparameters theta(std::initializer_list<double> ls, double noise_std) {
  Hyperparameters t;
  t.log_length_scales.resize(static_cast<Eigen::Index>(ls.size()));
  Eigen::Index k = 0;
  for (double l : ls) t.log_length_scales(k++) = std::log(l);
  t.log_noise_std = std::log(noise_std);
  return t;
}

}  // namespace

TEST(Kernel, SinglePointWithNoise) {
  const Eigen::MatrixXd a{{0.3}};
  const auto k = fbgp::kernel_matrix(a, a, theta({1.0}, 0.1), true);
  EXPECT_NEAR(k(0, 0), 1.01, 1e-15);
}

TEST(Kernel, ScalarDistance) {
  const Eigen::MatrixXd a{{0.0}};
  const Eigen::MatrixXd b{{2.0}};
  EXPECT_NEAR(fbgp::kernel_matrix(a, b, theta({1.0}, 0.1), false)(0, 0), std::exp(-2.0), 1e-15);
}

TEST(Kernel, PerDimensionLengthScales) {
  const Eigen::MatrixXd a{{0.0, 0.0}};
  const Eigen::MatrixXd b{{1.0, 1.0}};
  EXPECT_NEAR(fbgp::kernel_matrix(a, b, theta({1.0, 2.0}, 0.1), false)(0, 0), std::exp(-0.625), 1e-15);
}

TEST(Kernel, DimensionMismatchThrows) {
  const Eigen::MatrixXd a(2, 2);
  const Eigen::MatrixXd b(2, 3);
  EXPECT_THROW((void)fbgp::kernel_matrix(a, b, theta({1.0, 1.0}, 0.1), false), std::invalid_argument);
}

TEST(Kernel, SymmetricAndFactorizable) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = oracle::random_instance(rng);
    const auto k = fbgp::kernel_matrix(in.data.inputs, in.data.inputs, in.theta, true);
    EXPECT_TRUE(k.isApprox(k.transpose(), 0.0));
    EXPECT_NO_THROW((void)fbgp::robust_cholesky(k));
  }
}

TEST(Lml, ZeroTargetSinglePoint) {
  const Dataset d{Eigen::MatrixXd{{0.4}}, Eigen::VectorXd{{0.0}}};
  const auto t = theta({0.7}, 0.3);
  EXPECT_NEAR(fbgp::log_marginal_likelihood(d, t), -0.5 * std::log(1.09) - 0.5 * oracle::kLog2Pi, 1e-14);
  EXPECT_NEAR(fbgp::nlml_of(d, t), 0.5 * std::log(1.09) + 0.5 * oracle::kLog2Pi, 1e-14);
}

TEST(Lml, UnitTargetClosedForm) {
  const Dataset d{Eigen::MatrixXd{{0.4}}, Eigen::VectorXd{{1.0}}};
  const double expected = -0.25 - 0.5 * std::log(2.0) - 0.5 * oracle::kLog2Pi;
  EXPECT_NEAR(fbgp::log_marginal_likelihood(d, theta({1.0}, 1.0)), expected, 1e-14);
}

TEST(Lml, MatchesDenseOracleSmall) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto in = oracle::random_instance(rng, 3, 3);
    EXPECT_NEAR(fbgp::log_marginal_likelihood(in.data, in.theta), oracle::lml(in.data, in.theta), 1e-10);
  }
}

TEST(Lml, CholeskyFailureCarriesJitter) {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(0, 0) = -5.0;
  try {
    (void)fbgp::robust_cholesky(bad);
    FAIL() << "expected NumericalError";
  } catch (const fbgp::NumericalError& e) {
    EXPECT_GT(e.attempted_jitter(), 0.0);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = oracle::random_instance(rng);
    const auto f = [&](const Eigen::VectorXd& v) {
      return fbgp::log_marginal_likelihood(in.data, Hyperparameters::unpack(v));
    };
    const Eigen::VectorXd fd = oracle::gradient(f, in.theta.packed());
    const Eigen::VectorXd g = fbgp::lml_gradient(in.data, in.theta);
    EXPECT_LT((g - fd).norm() / std::max(fd.norm(), 1e-8), 1e-5) << "trial " << trial;
  }
}

TEST(Gradient, ValueAndGradientAgree) {
  std::mt19937_64 rng(6);
  const auto in = oracle::random_instance(rng);
  const auto both = fbgp::lml_and_gradient(in.data, in.theta);
  EXPECT_DOUBLE_EQ(both.value, fbgp::log_marginal_likelihood(in.data, in.theta));
  EXPECT_TRUE(both.gradient.isApprox(fbgp::lml_gradient(in.data, in.theta), 1e-14));
}

TEST(Gradient, SinglePointZeroTargetHasNoLengthScaleGradient) {
  const Dataset d{Eigen::MatrixXd{{0.2, 0.9}}, Eigen::VectorXd{{0.0}}};
  const auto g = fbgp::lml_gradient(d, theta({0.5, 2.0}, 0.2));
  EXPECT_EQ(g(0), 0.0);
  EXPECT_EQ(g(1), 0.0);
}

TEST(Gradient, DuplicateFeatureSymmetry) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  d.inputs.resize(8, 2);
  d.targets.resize(8);
  for (int i = 0; i < 8; ++i) {
    d.inputs(i, 0) = d.inputs(i, 1) = u(rng);
    d.targets(i) = u(rng) - 0.5;
  }
  const auto g = fbgp::lml_gradient(d, theta({0.4, 0.4}, 0.3));
  EXPECT_NEAR(g(0), g(1), 1e-12);
}

TEST(Predict, MatchesDenseOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = oracle::random_instance(rng);
    const auto p = fbgp::posterior_predict(in.data, in.theta, in.queries);
    const auto o = oracle::predict(in.data, in.theta, in.queries);
    for (Eigen::Index i = 0; i < in.queries.rows(); ++i) {
      EXPECT_NEAR(p.latent_mean(i), o.mean(i), 1e-8);
      EXPECT_NEAR(p.latent_variance(i), std::max(o.var(i), 0.0), 1e-8);
    }
  }
}

TEST(Predict, TwoPointOracleTight) {
  const Dataset d{Eigen::MatrixXd{{0.1}, {0.6}}, Eigen::VectorXd{{0.5, -1.0}}};
  const auto t = theta({0.3}, 0.2);
  const Eigen::MatrixXd q{{0.0}, {0.35}, {0.9}};
  const auto p = fbgp::posterior_predict(d, t, q);
  const auto o = oracle::predict(d, t, q);
  EXPECT_TRUE(p.latent_mean.isApprox(o.mean, 1e-10));
  EXPECT_LT((p.latent_variance - o.var).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Predict, NoiselessInterpolation) {
  const Dataset d{Eigen::MatrixXd{{0.2}, {0.7}}, Eigen::VectorXd{{1.3, -0.4}}};
  const auto p = fbgp::posterior_predict(d, theta({0.3}, 1e-6), Eigen::MatrixXd{{0.2}});
  EXPECT_NEAR(p.latent_mean(0), 1.3, 1e-4);
  EXPECT_NEAR(p.latent_variance(0), 0.0, 1e-4);
}

TEST(Predict, FarQueryRevertsToPrior) {
  const Dataset d{Eigen::MatrixXd{{0.0}}, Eigen::VectorXd{{1.0}}};
  const auto t = theta({0.01}, 0.1);
  const auto p = fbgp::posterior_predict(d, t, Eigen::MatrixXd{{1.0}});
  EXPECT_NEAR(p.latent_variance(0), 1.0, 1e-6);
  EXPECT_NEAR(p.observation_variance(0), 1.01, 1e-6);
}

TEST(Predict, NoiseGapIsConstant) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = oracle::random_instance(rng);
    const auto p = fbgp::posterior_predict(in.data, in.theta, in.queries);
    const Eigen::VectorXd gap = p.observation_variance - p.latent_variance;
    EXPECT_LT((gap.array() - in.theta.noise_variance()).abs().maxCoeff(), 1e-14);
    EXPECT_GE(p.latent_variance.minCoeff(), 0.0);
  }
}

TEST(Predict, DuplicatePointNeverIncreasesVariance) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> pick(0, 100);
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = oracle::random_instance(rng);
    const Eigen::Index j = pick(rng) % in.data.size();
    Dataset more = in.data;
    more.inputs.conservativeResize(more.size() + 1, Eigen::NoChange);
    more.inputs.row(more.inputs.rows() - 1) = in.data.inputs.row(j);
    more.targets.conservativeResize(more.targets.size() + 1);
    more.targets(more.targets.size() - 1) = in.data.targets(j);
    const auto before = fbgp::posterior_predict(in.data, in.theta, in.queries);
    const auto after = fbgp::posterior_predict(more, in.theta, in.queries);
    EXPECT_TRUE(((after.latent_variance - before.latent_variance).array() <= 1e-12).all());
  }
}

TEST(Hyperparameters, PackRoundTrip) {
  const auto t = theta({0.5, 2.0, 3.0}, 0.1);
  const auto back = Hyperparameters::unpack(t.packed());
  EXPECT_EQ(back.log_length_scales, t.log_length_scales);
  EXPECT_EQ(back.log_noise_std, t.log_noise_std);
}
