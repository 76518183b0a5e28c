#include "fbgp/acquisition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbgp/errors.hpp"

namespace fbgp {

std::string_view to_string(Criterion c) noexcept {
  switch (c) {
    case Criterion::ALM: return "ALM";
    case Criterion::B_ALM: return "B-ALM";
    case Criterion::BALD: return "BALD";
    case Criterion::B_QBC: return "B-QBC";
    case Criterion::QB_MGP: return "QB-MGP";
    case Criterion::RANDOM: return "RANDOM";
  }
  return "?";
}

std::optional<Criterion> criterion_from_string(std::string_view name) {
  std::string key;
  for (const char ch : name) {
    if (ch == '-' || ch == '_') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  if (key == "ALM") return Criterion::ALM;
  if (key == "BALM") return Criterion::B_ALM;
  if (key == "BALD") return Criterion::BALD;
  if (key == "BQBC") return Criterion::B_QBC;
  if (key == "QBMGP") return Criterion::QB_MGP;
  if (key == "RANDOM") return Criterion::RANDOM;
  return std::nullopt;
}

EnsemblePrediction predict_ensemble(const Dataset& data, const PosteriorSamples& samples,
                                    const Eigen::Ref<const Eigen::MatrixXd>& pool) {
  if (pool.rows() == 0) throw std::invalid_argument("pool is empty");
  if (samples.size() == 0) throw std::invalid_argument("no posterior draws");
  const Eigen::Index m = samples.size();
  const Eigen::Index p = pool.rows();

  EnsemblePrediction ens;
  ens.means.resize(m, p);
  ens.latent_variances.resize(m, p);
  ens.observation_variances.resize(m, p);
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    try {
      const PredictiveDistribution pred = posterior_predict(data, samples.at(j), pool);
      ens.means.row(kept) = pred.latent_mean.transpose();
      ens.latent_variances.row(kept) = pred.latent_variance.transpose();
      ens.observation_variances.row(kept) = pred.observation_variance.transpose();
      ++kept;
    } catch (const NumericalError&) {
      ++ens.dropped_draws;
    }
  }
  if (static_cast<double>(ens.dropped_draws) > kMaxDroppedFraction * static_cast<double>(m)) {
    throw NumericalError(std::to_string(ens.dropped_draws) + " of " + std::to_string(m) +
                             " posterior draws failed to factorize",
                         0.0);
  }
  ens.means.conservativeResize(kept, Eigen::NoChange);
  ens.latent_variances.conservativeResize(kept, Eigen::NoChange);
  ens.observation_variances.conservativeResize(kept, Eigen::NoChange);
  return ens;
}

MixtureMoments mixture_moments(const EnsemblePrediction& ens) {
  if (ens.members() < 1) throw std::invalid_argument("ensemble has no members");
  MixtureMoments mm;
  mm.mixture_mean = ens.means.colwise().mean().transpose();
  const Eigen::VectorXd within = ens.observation_variances.colwise().mean().transpose();
  const Eigen::VectorXd between =
      (ens.means.rowwise() - mm.mixture_mean.transpose()).array().square().colwise().mean().transpose();
  mm.mixture_variance = within + between;
  return mm;
}

AcquisitionScores score_alm(const PredictiveDistribution& pred) {
  return {Criterion::ALM, pred.observation_variance};
}

AcquisitionScores score_b_alm(const EnsemblePrediction& ens) {
  return {Criterion::B_ALM, ens.observation_variances.colwise().mean().transpose()};
}

AcquisitionScores score_b_qbc(const EnsemblePrediction& ens) {
  const Eigen::RowVectorXd mean = ens.means.colwise().mean();
  return {Criterion::B_QBC, (ens.means.rowwise() - mean).array().square().colwise().mean().transpose()};
}

AcquisitionScores score_qb_mgp(const EnsemblePrediction& ens) {
  return {Criterion::QB_MGP, mixture_moments(ens).mixture_variance};
}

AcquisitionScores score_bald(const EnsemblePrediction& ens) {
  // Entropy of the mixture is moment-matched to a Gaussian with the mixture
  // variance; the 1/2 ln(2 pi e) constants cancel between the two terms.
  // Scalar std::log on both sides so identical inputs cancel exactly.
  const MixtureMoments mm = mixture_moments(ens);
  const Eigen::Index p = ens.means.cols();
  const Eigen::Index m = ens.members();
  Eigen::VectorXd scores(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    double mean_log = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) mean_log += std::log(std::max(ens.observation_variances(j, i), kVarianceFloor));
    scores(i) = 0.5 * (std::log(std::max(mm.mixture_variance(i), kVarianceFloor)) - mean_log / static_cast<double>(m));
  }
  return {Criterion::BALD, scores};
}

AcquisitionScores score_ensemble(Criterion c, const EnsemblePrediction& ens) {
  switch (c) {
    case Criterion::B_ALM: return score_b_alm(ens);
    case Criterion::BALD: return score_bald(ens);
    case Criterion::B_QBC: return score_b_qbc(ens);
    case Criterion::QB_MGP: return score_qb_mgp(ens);
    case Criterion::ALM:
    case Criterion::RANDOM: break;
  }
  throw std::invalid_argument(std::string(to_string(c)) + " is not an ensemble criterion");
}

Eigen::Index select_query(const AcquisitionScores& scores, const Eigen::Ref<const Eigen::MatrixXd>& pool, Rng& rng) {
  const Eigen::Index p = scores.scores.size();
  if (p == 0) throw std::invalid_argument("cannot select from an empty pool");
  if (pool.rows() != p) throw std::invalid_argument("scores and pool sizes differ");
  const double best = scores.scores.maxCoeff();
  std::vector<Eigen::Index> ties;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (scores.scores(i) == best) ties.push_back(i);
  }
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

}  // namespace fbgp
