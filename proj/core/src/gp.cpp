#include "fbgp/gp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fbgp/errors.hpp"

namespace fbgp {

double Hyperparameters::noise_variance() const noexcept { return std::exp(2.0 * log_noise_std); }

Eigen::VectorXd Hyperparameters::length_scales() const { return log_length_scales.array().exp(); }

Eigen::VectorXd Hyperparameters::packed() const {
  Eigen::VectorXd v(dim() + 1);
  v.head(dim()) = log_length_scales;
  v(dim()) = log_noise_std;
  return v;
}

Hyperparameters Hyperparameters::unpack(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() < 2) throw std::invalid_argument("packed hyperparameters need at least 2 entries");
  return Hyperparameters{v.head(v.size() - 1), v(v.size() - 1)};
}

void Hyperparameters::validate(Eigen::Index d) const {
  if (log_length_scales.size() != d) {
    throw std::invalid_argument("hyperparameters have " + std::to_string(log_length_scales.size()) +
                                " length scales, data has dimension " + std::to_string(d));
  }
  if (!log_length_scales.allFinite() || !std::isfinite(log_noise_std)) {
    throw std::invalid_argument("hyperparameters contain non-finite entries");
  }
}

void Dataset::validate() const {
  if (inputs.rows() < 1) throw std::invalid_argument("dataset is empty");
  if (inputs.rows() != targets.size()) throw std::invalid_argument("inputs and targets disagree on n");
  if (!inputs.allFinite() || !targets.allFinite()) throw std::invalid_argument("dataset has non-finite entries");
}

CholeskyResult robust_cholesky(const Eigen::MatrixXd& k) {
  // Scale of the ladder; guarded so a degenerate diagonal still yields positive jitter.
  double mean_diag = std::abs(k.diagonal().mean());
  if (!(mean_diag > 0.0) || !std::isfinite(mean_diag)) mean_diag = 1.0;
  CholeskyResult out;
  out.llt.compute(k);
  if (out.llt.info() == Eigen::Success) return out;

  double jitter = 1e-8 * mean_diag;
  const double max_jitter = 1e-2 * mean_diag * (1.0 + 1e-9);
  Eigen::MatrixXd work = k;
  while (jitter <= max_jitter) {
    work.diagonal() = k.diagonal().array() + jitter;
    out.llt.compute(work);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
    jitter *= 10.0;
  }
  throw NumericalError("Cholesky failed up to jitter " + std::to_string(jitter / 10.0), jitter / 10.0);
}

namespace {

void require_columns(Eigen::Index cols, Eigen::Index d, const char* what) {
  if (cols != d) {
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(cols) + " columns, expected " +
                                std::to_string(d));
  }
}

// Squared distances scaled per dimension: sum_k (a_ik - b_jk)^2 / l_k^2.
Eigen::MatrixXd scaled_sq_dist(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                               const Eigen::VectorXd& inv_ls) {
  const Eigen::MatrixXd as = a * inv_ls.asDiagonal();
  const Eigen::MatrixXd bs = b * inv_ls.asDiagonal();
  Eigen::MatrixXd d2(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      d2(i, j) = (as.row(i) - bs.row(j)).squaredNorm();
    }
  }
  return d2;
}

struct Factorization {
  Eigen::MatrixXd k_noisy;
  CholeskyResult chol;
  Eigen::VectorXd alpha;
};

Factorization factorize(const Dataset& data, const Hyperparameters& theta) {
  data.validate();
  theta.validate(data.dim());
  Factorization f;
  f.k_noisy = kernel_matrix(data.inputs, data.inputs, theta, true);
  f.chol = robust_cholesky(f.k_noisy);
  f.alpha = f.chol.llt.solve(data.targets);
  return f;
}

double lml_from(const Dataset& data, const Factorization& f) {
  const auto& l = f.chol.llt.matrixLLT();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double n = static_cast<double>(data.size());
  return -0.5 * data.targets.dot(f.alpha) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const Hyperparameters& theta, bool include_noise) {
  const Eigen::Index d = theta.dim();
  require_columns(a.cols(), d, "first point set");
  require_columns(b.cols(), d, "second point set");
  if (include_noise && (a.rows() != b.rows() || a != b)) {
    throw std::invalid_argument("noise term requires both arguments to be the same point set");
  }
  const Eigen::VectorXd inv_ls = (-theta.log_length_scales).array().exp();
  Eigen::MatrixXd k = (-0.5 * scaled_sq_dist(a, b, inv_ls)).array().exp();
  if (include_noise) k.diagonal().array() += theta.noise_variance();
  return k;
}

double log_marginal_likelihood(const Dataset& data, const Hyperparameters& theta) {
  return lml_from(data, factorize(data, theta));
}

LmlWithGradient lml_and_gradient(const Dataset& data, const Hyperparameters& theta) {
  const Factorization f = factorize(data, theta);
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();

  // W = alpha alpha^T - K^{-1}; dLML/dp = 0.5 tr(W dK/dp).
  Eigen::MatrixXd w = f.chol.llt.solve(Eigen::MatrixXd::Identity(n, n));
  w = f.alpha * f.alpha.transpose() - w;

  LmlWithGradient out;
  out.value = lml_from(data, f);
  out.gradient.resize(d + 1);

  // Noise-free part of K: dK/dlog(l_k) = K_f .* (x_ik - x_jk)^2 / l_k^2.
  Eigen::MatrixXd k_f = f.k_noisy;
  k_f.diagonal().array() -= theta.noise_variance();
  const Eigen::MatrixXd wk = w.cwiseProduct(k_f);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double inv_l2 = std::exp(-2.0 * theta.log_length_scales(k));
    const auto col = data.inputs.col(k);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = col(i) - col(j);
        acc += wk(i, j) * diff * diff;
      }
    }
    out.gradient(k) = 0.5 * acc * inv_l2;
  }
  // dK/dlog(sigma) = 2 sigma^2 I.
  out.gradient(d) = theta.noise_variance() * w.trace();
  return out;
}

Eigen::VectorXd lml_gradient(const Dataset& data, const Hyperparameters& theta) {
  return lml_and_gradient(data, theta).gradient;
}

double nlml_of(const Dataset& data, const Hyperparameters& theta) { return -log_marginal_likelihood(data, theta); }

GpPosterior::GpPosterior(const Dataset& data, Hyperparameters theta) : inputs_(data.inputs), theta_(std::move(theta)) {
  Factorization f = factorize(data, theta_);
  llt_ = std::move(f.chol.llt);
  alpha_ = std::move(f.alpha);
  jitter_ = f.chol.jitter;
}

PredictiveDistribution GpPosterior::predict(const Eigen::Ref<const Eigen::MatrixXd>& queries) const {
  require_columns(queries.cols(), theta_.dim(), "query set");
  const Eigen::MatrixXd k_star = kernel_matrix(inputs_, queries, theta_, false);  // n x m
  PredictiveDistribution out;
  out.latent_mean = k_star.transpose() * alpha_;
  const Eigen::MatrixXd v = llt_.matrixL().solve(k_star);
  out.latent_variance = (1.0 - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  out.observation_variance = out.latent_variance.array() + theta_.noise_variance();
  return out;
}

PredictiveDistribution posterior_predict(const Dataset& data, const Hyperparameters& theta,
                                         const Eigen::Ref<const Eigen::MatrixXd>& queries) {
  return GpPosterior(data, theta).predict(queries);
}

}  // namespace fbgp
