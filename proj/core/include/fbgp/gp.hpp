#pragma once

// Exact Gaussian-process regression with a unit-variance ARD RBF kernel and a
// zero mean. Observation noise is folded into the kernel as sigma^2 on the
// diagonal of the training covariance.

#include <Eigen/Dense>

#include <cstddef>

namespace fbgp {

/// Kernel hyperparameters, stored in log space.
///
/// Packed vector layout (used by the sampler and gradients):
///   [log l_1, ..., log l_d, log sigma_eps]
struct Hyperparameters {
  Eigen::VectorXd log_length_scales;
  double log_noise_std = 0.0;

  [[nodiscard]] Eigen::Index dim() const noexcept { return log_length_scales.size(); }
  [[nodiscard]] double noise_variance() const noexcept;
  [[nodiscard]] Eigen::VectorXd length_scales() const;

  [[nodiscard]] Eigen::VectorXd packed() const;
  [[nodiscard]] static Hyperparameters unpack(const Eigen::Ref<const Eigen::VectorXd>& v);

  /// Throws std::invalid_argument on non-finite entries or a dimension other than `d`.
  void validate(Eigen::Index d) const;
};

/// Training data in unit-cube inputs and standardized targets.
struct Dataset {
  Eigen::MatrixXd inputs;   // n x d
  Eigen::VectorXd targets;  // n

  [[nodiscard]] Eigen::Index size() const noexcept { return inputs.rows(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return inputs.cols(); }

  /// Shape and finiteness checks. The unit-cube range is the caller's
  /// responsibility (active_learning rescales before building a Dataset).
  void validate() const;
};

/// Diagonal of the predictive posterior at a set of query points.
struct PredictiveDistribution {
  Eigen::VectorXd latent_mean;
  Eigen::VectorXd latent_variance;       // var f*, clamped at 0
  Eigen::VectorXd observation_variance;  // latent_variance + sigma_eps^2
};

struct CholeskyResult {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Jitter ladder: 0, then 1e-8 * mean(diag) escalating by 10x up to
/// 1e-2 * mean(diag). Throws NumericalError when every rung fails.
[[nodiscard]] CholeskyResult robust_cholesky(const Eigen::MatrixXd& k);

/// entry(i,j) = exp(-sum_k (a_ik - b_jk)^2 / (2 l_k^2)); with include_noise the
/// noise variance is added to the diagonal, which requires a and b to be the
/// same point set (a square matrix).
[[nodiscard]] Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                            const Eigen::Ref<const Eigen::MatrixXd>& b,
                                            const Hyperparameters& theta, bool include_noise);

[[nodiscard]] double log_marginal_likelihood(const Dataset& data, const Hyperparameters& theta);

/// Gradient of the log marginal likelihood with respect to the packed log-space
/// parameters.
[[nodiscard]] Eigen::VectorXd lml_gradient(const Dataset& data, const Hyperparameters& theta);

/// Value and gradient sharing one factorization; the sampler calls this.
struct LmlWithGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
[[nodiscard]] LmlWithGradient lml_and_gradient(const Dataset& data, const Hyperparameters& theta);

[[nodiscard]] double nlml_of(const Dataset& data, const Hyperparameters& theta);

[[nodiscard]] PredictiveDistribution posterior_predict(const Dataset& data, const Hyperparameters& theta,
                                                       const Eigen::Ref<const Eigen::MatrixXd>& queries);

/// Factorized model for repeated prediction under a single theta.
class GpPosterior {
 public:
  GpPosterior(const Dataset& data, Hyperparameters theta);

  [[nodiscard]] PredictiveDistribution predict(const Eigen::Ref<const Eigen::MatrixXd>& queries) const;
  [[nodiscard]] const Hyperparameters& hyperparameters() const noexcept { return theta_; }
  [[nodiscard]] double jitter() const noexcept { return jitter_; }

 private:
  Eigen::MatrixXd inputs_;
  Hyperparameters theta_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

}  // namespace fbgp
