#pragma once

// Pool-based acquisition criteria for a GP and for a fully Bayesian GP
// represented by posterior hyperparameter draws.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

#include "fbgp/gp.hpp"
#include "fbgp/mcmc.hpp"
#include "fbgp/seeding.hpp"

namespace fbgp {

/// The five scoring criteria plus RANDOM, the uniform-query control.
enum class Criterion { ALM, B_ALM, BALD, B_QBC, QB_MGP, RANDOM };

[[nodiscard]] std::string_view to_string(Criterion c) noexcept;
[[nodiscard]] std::optional<Criterion> criterion_from_string(std::string_view name);

/// Per-draw predictive diagonals on a pool: row j is the GP under draw j.
struct EnsemblePrediction {
  Eigen::MatrixXd means;                  // M x P
  Eigen::MatrixXd latent_variances;       // M x P
  Eigen::MatrixXd observation_variances;  // M x P
  int dropped_draws = 0;

  [[nodiscard]] Eigen::Index members() const noexcept { return means.rows(); }
  [[nodiscard]] Eigen::Index pool_size() const noexcept { return means.cols(); }
};

struct MixtureMoments {
  Eigen::VectorXd mixture_mean;
  Eigen::VectorXd mixture_variance;
};

struct AcquisitionScores {
  Criterion criterion = Criterion::ALM;
  Eigen::VectorXd scores;
};

/// Variance floor applied before taking logarithms.
inline constexpr double kVarianceFloor = 1e-12;

/// Fraction of draws allowed to fail factorization before predict_ensemble throws.
inline constexpr double kMaxDroppedFraction = 0.10;

[[nodiscard]] EnsemblePrediction predict_ensemble(const Dataset& data, const PosteriorSamples& samples,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& pool);

[[nodiscard]] MixtureMoments mixture_moments(const EnsemblePrediction& ens);

[[nodiscard]] AcquisitionScores score_alm(const PredictiveDistribution& pred);
[[nodiscard]] AcquisitionScores score_b_alm(const EnsemblePrediction& ens);
[[nodiscard]] AcquisitionScores score_b_qbc(const EnsemblePrediction& ens);
[[nodiscard]] AcquisitionScores score_qb_mgp(const EnsemblePrediction& ens);
[[nodiscard]] AcquisitionScores score_bald(const EnsemblePrediction& ens);

/// Dispatch for the ensemble criteria. ALM needs a single predictive
/// distribution and RANDOM needs an RNG; both are rejected here.
[[nodiscard]] AcquisitionScores score_ensemble(Criterion c, const EnsemblePrediction& ens);

/// Index of the maximal score; exact ties are broken uniformly with `rng`.
[[nodiscard]] Eigen::Index select_query(const AcquisitionScores& scores, const Eigen::Ref<const Eigen::MatrixXd>& pool,
                                        Rng& rng);

}  // namespace fbgp
