#pragma once

// The sequential pool-based active-learning experiment: maximin LHS start,
// then per iteration rescale and standardize, sample the hyperparameter
// posterior, record NLML and RMSE at the KDE best mode, score the pool and
// label the chosen point.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbgp/acquisition.hpp"
#include "fbgp/gp.hpp"
#include "fbgp/mcmc.hpp"
#include "fbgp/simulators.hpp"

namespace fbgp {

/// Affine maps between the simulator domain and the unit cube, and between
/// natural outputs and standardized outputs.
struct StandardizationState {
  Eigen::VectorXd input_shift;  // domain lower bounds
  Eigen::VectorXd input_scale;  // domain widths
  double output_mean = 0.0;
  double output_std = 1.0;  // population std, floored

  static constexpr double kStdFloor = 1e-12;

  [[nodiscard]] static StandardizationState fit(const SimulatorSpec& sim, const Eigen::VectorXd& targets);

  [[nodiscard]] Eigen::MatrixXd standardize_inputs(const Eigen::Ref<const Eigen::MatrixXd>& natural) const;
  [[nodiscard]] Eigen::MatrixXd unstandardize_inputs(const Eigen::Ref<const Eigen::MatrixXd>& unit) const;
  [[nodiscard]] Eigen::VectorXd standardize_targets(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  [[nodiscard]] Eigen::VectorXd unstandardize_targets(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

struct PoolConfig {
  int per_axis = 100;
  int cap = 10000;
};

struct ExperimentConfig {
  std::string simulator;
  Criterion criterion = Criterion::QB_MGP;
  int initial_points = 3;
  int iterations = 100;
  int test_points = 1000;
  int lhs_candidates = 100;
  SamplerConfig sampler;  // seed is re-derived per iteration
  PriorSpec prior;
  PoolConfig pool;
  std::uint64_t seed = 0;
  /// Seeds the initial design, its labels and the test set when set, so runs
  /// of different criteria can share initial data.
  std::optional<std::uint64_t> design_seed;

  void validate() const;
};

struct IterationRecord {
  int train_size = 0;
  double nlml = 0.0;
  double rmse = 0.0;
  Eigen::VectorXd theta;  // packed log-space best mode
  Eigen::VectorXd query;  // natural units
  double query_value = 0.0;
  double wall_seconds = 0.0;
};

struct LearningCurve {
  std::vector<IterationRecord> records;
  Eigen::MatrixXd initial_inputs;  // natural units
  Eigen::VectorXd initial_targets;
  bool complete = true;
  std::string failure;
  int sampler_retries = 0;
};

/// KDE bandwidth per dimension: Scott's factor M^(-1/(D+4)) times the draw
/// std, floored at 1e-6.
[[nodiscard]] Eigen::VectorXd kde_bandwidths(const Eigen::Ref<const Eigen::MatrixXd>& draws);

/// Row index of the draw with maximal Gaussian-kernel density estimate.
[[nodiscard]] Eigen::Index best_mode_index(const Eigen::Ref<const Eigen::MatrixXd>& draws);

/// The posterior draw at the highest KDE density.
[[nodiscard]] Hyperparameters best_mode(const PosteriorSamples& samples);

/// i.i.d. uniform scores; tagged RANDOM.
[[nodiscard]] AcquisitionScores random_baseline_scores(const Eigen::Ref<const Eigen::MatrixXd>& pool, Rng& rng);

/// Indices of pool rows farther than `tol` (unit-cube Euclidean distance)
/// from every training row.
[[nodiscard]] std::vector<Eigen::Index> rows_not_in_training(const Eigen::Ref<const Eigen::MatrixXd>& pool_unit,
                                                             const Eigen::Ref<const Eigen::MatrixXd>& train_unit,
                                                             double tol = 1e-12);

/// Drops pool rows within `tol` (unit-cube Euclidean distance) of any training row.
[[nodiscard]] Eigen::MatrixXd exclude_training_points(const Eigen::Ref<const Eigen::MatrixXd>& pool_unit,
                                                      const Eigen::Ref<const Eigen::MatrixXd>& train_unit,
                                                      double tol = 1e-12);

[[nodiscard]] LearningCurve run_experiment(const ExperimentConfig& config, const SimulatorRegistry& registry);
[[nodiscard]] LearningCurve run_experiment(const ExperimentConfig& config);

}  // namespace fbgp
