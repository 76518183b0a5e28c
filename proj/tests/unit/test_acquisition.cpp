#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fbgp/acquisition.hpp"
#include "fbgp/mcmc.hpp"
#include "oracles.hpp"

using fbgp::EnsemblePrediction;

namespace {

EnsemblePrediction two_components() {
  EnsemblePrediction e;
  e.means = Eigen::MatrixXd{{-1.0}, {1.0}};
  e.latent_variances = Eigen::MatrixXd{{0.5}, {0.5}};
  e.observation_variances = Eigen::MatrixXd{{1.0}, {1.0}};
  return e;
}

EnsemblePrediction replicate(const EnsemblePrediction& e, int times) {
  EnsemblePrediction out;
  out.means = e.means.replicate(times, 1);
  out.latent_variances = e.latent_variances.replicate(times, 1);
  out.observation_variances = e.observation_variances.replicate(times, 1);
  return out;
}

}  // namespace

TEST(Mixture, TwoComponentHandCase) {
  const auto m = fbgp::mixture_moments(two_components());
  EXPECT_DOUBLE_EQ(m.mixture_mean(0), 0.0);
  EXPECT_DOUBLE_EQ(m.mixture_variance(0), 2.0);
}

TEST(Mixture, SingleComponent) {
  std::mt19937_64 rng(1);
  const auto e = oracle::random_ensemble(rng, 1, 6);
  const auto m = fbgp::mixture_moments(e);
  EXPECT_EQ(m.mixture_mean, e.means.row(0).transpose());
  EXPECT_EQ(m.mixture_variance, e.observation_variances.row(0).transpose());
}

TEST(Mixture, DecompositionAndQbMgpIdentities) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> m_dist(1, 30);
  std::uniform_int_distribution<int> p_dist(1, 20);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto e = oracle::random_ensemble(rng, m_dist(rng), p_dist(rng));
    const auto mm = fbgp::mixture_moments(e);
    const auto b_alm = fbgp::score_b_alm(e).scores;
    const auto b_qbc = fbgp::score_b_qbc(e).scores;
    const auto qb = fbgp::score_qb_mgp(e).scores;
    for (Eigen::Index i = 0; i < e.pool_size(); ++i) {
      double mean = 0.0;
      double obs = 0.0;
      for (Eigen::Index j = 0; j < e.members(); ++j) {
        mean += e.means(j, i);
        obs += e.observation_variances(j, i);
      }
      mean /= static_cast<double>(e.members());
      obs /= static_cast<double>(e.members());
      double spread = 0.0;
      for (Eigen::Index j = 0; j < e.members(); ++j) spread += std::pow(e.means(j, i) - mean, 2);
      spread /= static_cast<double>(e.members());
      ASSERT_NEAR(b_alm(i), obs, 1e-12);
      ASSERT_NEAR(b_qbc(i), spread, 1e-12);
      ASSERT_NEAR(mm.mixture_variance(i), obs + spread, 1e-12);
      ASSERT_NEAR(qb(i), b_alm(i) + b_qbc(i), 1e-12);
      ASSERT_NEAR(qb(i), mm.mixture_variance(i), 1e-12);
    }
  }
}

TEST(Mixture, MonteCarloMoments) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto e = oracle::random_ensemble(rng, 2 + trial, 1);
    const auto mm = fbgp::mixture_moments(e);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(e.members()) - 1);
    const int n = 1000000;
    double s1 = 0.0;
    double s2 = 0.0;
    double s4 = 0.0;
    for (int t = 0; t < n; ++t) {
      const int j = pick(rng);
      const double c = e.means(j, 0) + std::sqrt(e.observation_variances(j, 0)) * z(rng) - mm.mixture_mean(0);
      s1 += c;
      s2 += c * c;
      s4 += c * c * c * c;
    }
    const double mean_dev = s1 / n;
    const double var = s2 / n - mean_dev * mean_dev;
    EXPECT_LT(std::abs(mean_dev), 3.0 * std::sqrt(var / n));
    EXPECT_LT(std::abs(var - mm.mixture_variance(0)), 3.0 * std::sqrt((s4 / n - var * var) / n));
  }
}

TEST(Bald, TwoComponentHandCase) {
  EXPECT_NEAR(fbgp::score_bald(two_components()).scores(0), 0.5 * std::log(2.0), 1e-12);
}

TEST(Bald, IdenticalDrawsScoreZero) {
  std::mt19937_64 rng(4);
  const auto row = oracle::random_ensemble(rng, 1, 9);
  EXPECT_EQ(fbgp::score_bald(row).scores.cwiseAbs().maxCoeff(), 0.0);
  const auto same = replicate(row, 7);
  EXPECT_LT(fbgp::score_bald(same).scores.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(fbgp::score_b_qbc(same).scores.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bald, NonNegative) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> m_dist(1, 20);
  for (int trial = 0; trial < 1000; ++trial) {
    auto e = oracle::random_ensemble(rng, m_dist(rng), 5);
    if (trial % 3 == 0) e.observation_variances.array() *= 1e-9;  // near the floor
    ASSERT_GE(fbgp::score_bald(e).scores.minCoeff(), -1e-10);
  }
}

TEST(Bald, ZeroVarianceIsFinite) {
  EnsemblePrediction e;
  e.means = Eigen::MatrixXd::Zero(2, 1);
  e.latent_variances = Eigen::MatrixXd::Zero(2, 1);
  e.observation_variances = Eigen::MatrixXd::Zero(2, 1);
  EXPECT_TRUE(fbgp::score_bald(e).scores.allFinite());
}

TEST(Scores, BqbcTwoPointVariance) {
  EnsemblePrediction e = two_components();
  e.means *= 1.7;
  EXPECT_NEAR(fbgp::score_b_qbc(e).scores(0), 1.7 * 1.7, 1e-12);
}

TEST(Scores, PermutationAndShiftInvariance) {
  std::mt19937_64 rng(6);
  const auto e = oracle::random_ensemble(rng, 6, 4);
  EnsemblePrediction r = e;
  r.means = e.means.colwise().reverse();
  r.latent_variances = e.latent_variances.colwise().reverse();
  r.observation_variances = e.observation_variances.colwise().reverse();
  for (const auto c : {fbgp::Criterion::B_ALM, fbgp::Criterion::BALD, fbgp::Criterion::B_QBC, fbgp::Criterion::QB_MGP}) {
    EXPECT_TRUE(fbgp::score_ensemble(c, e).scores.isApprox(fbgp::score_ensemble(c, r).scores, 1e-12));
  }
  EnsemblePrediction shifted = e;
  shifted.means.array() += 3.25;
  EXPECT_TRUE(fbgp::score_b_qbc(e).scores.isApprox(fbgp::score_b_qbc(shifted).scores, 1e-9));
  EXPECT_EQ(fbgp::score_b_alm(e).scores, fbgp::score_b_alm(shifted).scores);
}

TEST(Scores, SingleMemberReductions) {
  std::mt19937_64 rng(7);
  const auto in = oracle::random_instance(rng);
  const auto pred = fbgp::posterior_predict(in.data, in.theta, in.queries);
  EnsemblePrediction e;
  e.means = pred.latent_mean.transpose();
  e.latent_variances = pred.latent_variance.transpose();
  e.observation_variances = pred.observation_variance.transpose();
  const auto alm = fbgp::score_alm(pred).scores;
  EXPECT_EQ(fbgp::score_b_alm(e).scores, alm);
  EXPECT_TRUE(fbgp::score_qb_mgp(e).scores.isApprox(alm, 1e-15));
  EXPECT_EQ(fbgp::score_b_qbc(e).scores.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Scores, AlmFarPointBeatsTrainingPoint) {
  const fbgp::Dataset d{Eigen::MatrixXd{{0.2}}, Eigen::VectorXd{{0.5}}};
  fbgp::Hyperparameters t;
  t.log_length_scales = Eigen::VectorXd::Constant(1, std::log(0.1));
  t.log_noise_std = std::log(0.1);
  const auto s = fbgp::score_alm(fbgp::posterior_predict(d, t, Eigen::MatrixXd{{0.2}, {0.95}})).scores;
  EXPECT_GT(s(1), s(0));
}

TEST(Scores, AlmArgmaxMatchesEntropyArgmax) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = oracle::random_instance(rng);
    const auto pred = fbgp::posterior_predict(in.data, in.theta, in.queries);
    const Eigen::VectorXd entropy = 0.5 * (2.0 * M_PI * M_E * pred.observation_variance.array()).log();
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    fbgp::score_alm(pred).scores.maxCoeff(&a);
    entropy.maxCoeff(&b);
    EXPECT_EQ(a, b);
  }
}

TEST(Scores, EnsembleDispatchRejectsSingleModelCriteria) {
  std::mt19937_64 rng(9);
  const auto e = oracle::random_ensemble(rng, 3, 3);
  EXPECT_THROW((void)fbgp::score_ensemble(fbgp::Criterion::ALM, e), std::invalid_argument);
  EXPECT_THROW((void)fbgp::score_ensemble(fbgp::Criterion::RANDOM, e), std::invalid_argument);
}

TEST(Select, ArgmaxAndTies) {
  fbgp::Rng rng(1);
  const Eigen::MatrixXd pool = Eigen::MatrixXd::Zero(5, 1);
  EXPECT_EQ(fbgp::select_query({fbgp::Criterion::ALM, Eigen::VectorXd{{0.1, 0.2, 0.3, 0.4, 0.5}}}, pool, rng), 4);
  EXPECT_EQ(fbgp::select_query({fbgp::Criterion::ALM, Eigen::VectorXd{{3.0}}}, Eigen::MatrixXd::Zero(1, 1), rng), 0);

  std::vector<int> counts(5, 0);
  const fbgp::AcquisitionScores flat{fbgp::Criterion::ALM, Eigen::VectorXd::Ones(5)};
  const int trials = 50000;
  for (int t = 0; t < trials; ++t) ++counts[static_cast<std::size_t>(fbgp::select_query(flat, pool, rng))];
  // Chi-square with 4 dof; 18.47 is the 0.001 critical value.
  double chi2 = 0.0;
  for (const int c : counts) chi2 += std::pow(c - trials / 5.0, 2) / (trials / 5.0);
  EXPECT_LT(chi2, 18.47);
}

TEST(Ensemble, RowsMatchSinglePredictions) {
  std::mt19937_64 rng(10);
  auto in = oracle::random_instance(rng, 12, 3);
  fbgp::PosteriorSamples s;
  s.draws.resize(4, in.theta.packed().size());
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd v = in.theta.packed();
    v.array() += 0.1 * j;
    s.draws.row(j) = v.transpose();
  }
  s.chain_ids = {0, 0, 1, 1};
  const auto e = fbgp::predict_ensemble(in.data, s, in.queries);
  ASSERT_EQ(e.dropped_draws, 0);
  for (int j = 0; j < 4; ++j) {
    const auto p = fbgp::posterior_predict(in.data, s.at(j), in.queries);
    EXPECT_EQ(e.means.row(j).transpose(), p.latent_mean);
    EXPECT_EQ(e.observation_variances.row(j).transpose(), p.observation_variance);
    const auto o = oracle::predict(in.data, s.at(j), in.queries);
    EXPECT_LT((p.latent_mean - o.mean).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Criterion, NamesRoundTrip) {
  for (const auto c : {fbgp::Criterion::ALM, fbgp::Criterion::B_ALM, fbgp::Criterion::BALD, fbgp::Criterion::B_QBC,
                       fbgp::Criterion::QB_MGP, fbgp::Criterion::RANDOM}) {
    EXPECT_EQ(fbgp::criterion_from_string(fbgp::to_string(c)), c);
  }
  EXPECT_EQ(fbgp::criterion_from_string("qb_mgp"), fbgp::Criterion::QB_MGP);
  EXPECT_FALSE(fbgp::criterion_from_string("EI").has_value());
}
