#pragma once

// Posterior sampling of GP hyperparameters with the no-U-turn sampler.
//
// The sampler is generic over a differentiable log density so it can be
// calibrated against targets with known moments; sample_posterior wires it to
// the GP log marginal likelihood plus independent Normal priors in log space.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbgp/gp.hpp"
#include "fbgp/seeding.hpp"

namespace fbgp {

/// Independent Normal(mean, std^2) on every log-space hyperparameter.
struct PriorSpec {
  double mean = 0.0;
  double std = 3.0;

  void validate() const;
};

struct SamplerConfig {
  int chains = 5;
  int samples_per_chain = 500;  // includes warm-up
  int warmup = 200;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  bool parallel_chains = false;

  [[nodiscard]] int retained_per_chain() const noexcept { return samples_per_chain - warmup; }
  void validate() const;
};

struct ChainDiagnostics {
  double acceptance_rate = 0.0;  // mean accept-stat over retained draws
  int divergences = 0;           // over retained draws
  double step_size = 0.0;
  double mean_leapfrog_steps = 0.0;
  Eigen::VectorXd inverse_metric;
};

struct PosteriorSamples {
  Eigen::MatrixXd draws;  // M x (d+1), log space
  std::vector<int> chain_ids;
  Eigen::VectorXd accept_stats;  // per draw
  std::vector<ChainDiagnostics> diagnostics;

  [[nodiscard]] Eigen::Index size() const noexcept { return draws.rows(); }
  [[nodiscard]] Hyperparameters at(Eigen::Index j) const { return Hyperparameters::unpack(draws.row(j).transpose()); }
};

class SamplerFailure : public std::runtime_error {
 public:
  SamplerFailure(const std::string& what, std::vector<ChainDiagnostics> diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  [[nodiscard]] const std::vector<ChainDiagnostics>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<ChainDiagnostics> diagnostics_;
};

/// Log density with gradient. Must return -infinity (and may leave the gradient
/// untouched) where the density cannot be evaluated.
using LogDensity = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

/// Draws a starting point for one chain.
using ChainInitializer = std::function<Eigen::VectorXd(Rng& rng)>;

/// Multi-chain NUTS. Chain c uses the RNG stream derive_seed(config.seed, c),
/// so results do not depend on whether chains run serially or in parallel.
[[nodiscard]] PosteriorSamples sample_nuts(const LogDensity& target, const ChainInitializer& init,
                                           const SamplerConfig& config);

[[nodiscard]] double log_posterior(const Dataset& data, const Hyperparameters& theta, const PriorSpec& prior);
[[nodiscard]] Eigen::VectorXd log_posterior_gradient(const Dataset& data, const Hyperparameters& theta,
                                                     const PriorSpec& prior);

/// Sum of independent Normal log densities over the packed parameters, and its gradient.
[[nodiscard]] double log_prior(const Eigen::VectorXd& packed, const PriorSpec& prior);
[[nodiscard]] Eigen::VectorXd log_prior_gradient(const Eigen::VectorXd& packed, const PriorSpec& prior);

/// One prior draw per chain.
[[nodiscard]] std::vector<Hyperparameters> initialize_chains(const SamplerConfig& config, const PriorSpec& prior,
                                                             Eigen::Index dim, Rng& rng);

[[nodiscard]] PosteriorSamples sample_posterior(const Dataset& data, const PriorSpec& prior,
                                                const SamplerConfig& config);

/// One JSON object per line: chain, index, theta, accept_stat.
void write_draws_jsonl(std::ostream& out, const PosteriorSamples& samples);

}  // namespace fbgp
