#include "fbgp/active_learning.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fbgp/errors.hpp"

namespace fbgp {

StandardizationState StandardizationState::fit(const SimulatorSpec& sim, const Eigen::VectorXd& targets) {
  if (targets.size() < 1) throw std::invalid_argument("cannot standardize an empty target vector");
  StandardizationState s;
  s.input_shift.resize(sim.dim());
  s.input_scale.resize(sim.dim());
  for (int k = 0; k < sim.dim(); ++k) {
    s.input_shift(k) = sim.domain[static_cast<std::size_t>(k)].lo;
    s.input_scale(k) = sim.domain[static_cast<std::size_t>(k)].width();
  }
  s.output_mean = targets.mean();
  const double var = (targets.array() - s.output_mean).square().mean();
  s.output_std = std::max(std::sqrt(var), kStdFloor);
  return s;
}

Eigen::MatrixXd StandardizationState::standardize_inputs(const Eigen::Ref<const Eigen::MatrixXd>& natural) const {
  return (natural.rowwise() - input_shift.transpose()).array().rowwise() / input_scale.transpose().array();
}

Eigen::MatrixXd StandardizationState::unstandardize_inputs(const Eigen::Ref<const Eigen::MatrixXd>& unit) const {
  return (unit.array().rowwise() * input_scale.transpose().array()).rowwise() + input_shift.transpose().array();
}

Eigen::VectorXd StandardizationState::standardize_targets(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return (y.array() - output_mean) / output_std;
}

Eigen::VectorXd StandardizationState::unstandardize_targets(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return z.array() * output_std + output_mean;
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (initial_points < 1) throw ConfigError("initial_points must be >= 1");
  if (test_points < 1) throw ConfigError("test_points must be >= 1");
  if (lhs_candidates < 1) throw ConfigError("lhs_candidates must be >= 1");
  if (pool.per_axis < 1 || pool.cap < 1) throw ConfigError("pool sizes must be positive");
  try {
    sampler.validate();
    prior.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

AcquisitionScores random_baseline_scores(const Eigen::Ref<const Eigen::MatrixXd>& pool, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AcquisitionScores s{Criterion::RANDOM, Eigen::VectorXd(pool.rows())};
  for (Eigen::Index i = 0; i < pool.rows(); ++i) s.scores(i) = unif(rng);
  return s;
}

std::vector<Eigen::Index> rows_not_in_training(const Eigen::Ref<const Eigen::MatrixXd>& pool_unit,
                                               const Eigen::Ref<const Eigen::MatrixXd>& train_unit, double tol) {
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(pool_unit.rows()));
  for (Eigen::Index i = 0; i < pool_unit.rows(); ++i) {
    bool clash = false;
    for (Eigen::Index j = 0; j < train_unit.rows() && !clash; ++j) {
      clash = (pool_unit.row(i) - train_unit.row(j)).norm() <= tol;
    }
    if (!clash) keep.push_back(i);
  }
  return keep;
}

Eigen::MatrixXd exclude_training_points(const Eigen::Ref<const Eigen::MatrixXd>& pool_unit,
                                        const Eigen::Ref<const Eigen::MatrixXd>& train_unit, double tol) {
  const auto keep = rows_not_in_training(pool_unit, train_unit, tol);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), pool_unit.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = pool_unit.row(keep[r]);
  return out;
}

namespace {

// Stream labels for per-run RNGs.
enum : std::uint64_t { kInitStream = 1, kTestStream, kInitLabelStream, kIterationStream };
enum : std::uint64_t { kMcmcStream = 1, kPoolStream, kSelectStream, kLabelStream, kRetryStream };

void append_row(Eigen::MatrixXd& m, const Eigen::RowVectorXd& row) {
  m.conservativeResize(m.rows() + 1, Eigen::NoChange);
  m.row(m.rows() - 1) = row;
}

}  // namespace

LearningCurve run_experiment(const ExperimentConfig& config, const SimulatorRegistry& registry) {
  config.validate();
  const SimulatorSpec& sim = registry.at(config.simulator);
  const int d = sim.dim();

  LearningCurve curve;
  const std::uint64_t design = config.design_seed.value_or(config.seed);

  // Initial design and the fixed held-out test set.
  Rng init_rng = make_rng(derive_seed(design, kInitStream));
  Eigen::MatrixXd train_x = to_natural(sim, maximin_lhs(config.initial_points, d, init_rng, config.lhs_candidates));
  Rng label_rng = make_rng(derive_seed(design, kInitLabelStream));
  Eigen::VectorXd train_y(train_x.rows());
  for (Eigen::Index i = 0; i < train_x.rows(); ++i) train_y(i) = evaluate(sim, train_x.row(i).transpose(), label_rng);
  curve.initial_inputs = train_x;
  curve.initial_targets = train_y;

  Rng test_rng = make_rng(derive_seed(design, kTestStream));
  const Eigen::MatrixXd test_x = to_natural(sim, maximin_lhs(config.test_points, d, test_rng, 1));
  Eigen::VectorXd test_truth(test_x.rows());
  for (Eigen::Index i = 0; i < test_x.rows(); ++i) test_truth(i) = mean_oracle(sim, test_x.row(i).transpose());

  for (int it = 0; it < config.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t iter_seed = derive_seed(config.seed, {kIterationStream, static_cast<std::uint64_t>(it)});

    const StandardizationState state = StandardizationState::fit(sim, train_y);
    const Dataset data{state.standardize_inputs(train_x), state.standardize_targets(train_y)};

    // Posterior draws, with one retry on a fresh stream.
    PosteriorSamples samples;
    SamplerConfig sampler = config.sampler;
    sampler.seed = derive_seed(iter_seed, kMcmcStream);
    try {
      samples = sample_posterior(data, config.prior, sampler);
    } catch (const SamplerFailure&) {
      ++curve.sampler_retries;
      sampler.seed = derive_seed(iter_seed, kRetryStream);
      try {
        samples = sample_posterior(data, config.prior, sampler);
      } catch (const SamplerFailure& e) {
        curve.complete = false;
        curve.failure = "iteration " + std::to_string(it) + ": " + e.what();
        return curve;
      }
    }

    try {
      const Hyperparameters theta_star = best_mode(samples);
      const GpPosterior model(data, theta_star);

      IterationRecord rec;
      rec.train_size = static_cast<int>(train_x.rows());
      rec.theta = theta_star.packed();
      rec.nlml = nlml_of(data, theta_star);
      const Eigen::VectorXd test_mean =
          state.unstandardize_targets(model.predict(state.standardize_inputs(test_x)).latent_mean);
      rec.rmse = std::sqrt((test_mean - test_truth).squaredNorm() / static_cast<double>(test_truth.size()));

      Rng pool_rng = make_rng(derive_seed(iter_seed, kPoolStream));
      const Eigen::MatrixXd grid = grid_pool(sim, pool_rng, config.pool.per_axis, config.pool.cap);
      const Eigen::MatrixXd grid_unit = state.standardize_inputs(grid);
      const auto keep = rows_not_in_training(grid_unit, data.inputs);
      if (keep.empty()) throw std::runtime_error("pool exhausted");
      Eigen::MatrixXd pool_unit(static_cast<Eigen::Index>(keep.size()), d);
      for (std::size_t r = 0; r < keep.size(); ++r) pool_unit.row(static_cast<Eigen::Index>(r)) = grid_unit.row(keep[r]);

      Rng select_rng = make_rng(derive_seed(iter_seed, kSelectStream));
      AcquisitionScores scores;
      switch (config.criterion) {
        case Criterion::ALM: scores = score_alm(model.predict(pool_unit)); break;
        case Criterion::RANDOM: scores = random_baseline_scores(pool_unit, select_rng); break;
        default: scores = score_ensemble(config.criterion, predict_ensemble(data, samples, pool_unit)); break;
      }
      const Eigen::Index pick = select_query(scores, pool_unit, select_rng);

      const Eigen::RowVectorXd query = grid.row(keep[static_cast<std::size_t>(pick)]);
      Rng label = make_rng(derive_seed(iter_seed, kLabelStream));
      rec.query = query.transpose();
      rec.query_value = evaluate(sim, rec.query, label);

      append_row(train_x, query);
      train_y.conservativeResize(train_y.size() + 1);
      train_y(train_y.size() - 1) = rec.query_value;

      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      curve.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      curve.complete = false;
      curve.failure = "iteration " + std::to_string(it) + ": " + e.what();
      return curve;
    }
  }
  return curve;
}

LearningCurve run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, SimulatorRegistry::with_builtins());
}

}  // namespace fbgp
