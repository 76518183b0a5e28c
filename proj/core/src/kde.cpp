#include <cmath>
#include <stdexcept>

#include "fbgp/active_learning.hpp"

namespace fbgp {

Eigen::VectorXd kde_bandwidths(const Eigen::Ref<const Eigen::MatrixXd>& draws) {
  const auto m = static_cast<double>(draws.rows());
  const auto dims = static_cast<double>(draws.cols());
  const double scott = std::pow(m, -1.0 / (dims + 4.0));
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::VectorXd sd =
      ((draws.rowwise() - mean).array().square().colwise().sum() / std::max(m - 1.0, 1.0)).sqrt().transpose();
  return (scott * sd.array()).max(1e-6).matrix();
}

Eigen::Index best_mode_index(const Eigen::Ref<const Eigen::MatrixXd>& draws) {
  if (draws.rows() < 1) throw std::invalid_argument("no draws to estimate a mode from");
  const Eigen::Index m = draws.rows();
  const Eigen::VectorXd inv_h = kde_bandwidths(draws).cwiseInverse();
  const Eigen::MatrixXd scaled = inv_h.asDiagonal() * draws.transpose();  // D x M, columns contiguous

  Eigen::Index best = 0;
  double best_density = -1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double density = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) density += std::exp(-0.5 * (scaled.col(i) - scaled.col(j)).squaredNorm());
    if (density > best_density) {
      best_density = density;
      best = i;
    }
  }
  return best;
}

Hyperparameters best_mode(const PosteriorSamples& samples) {
  return samples.at(best_mode_index(samples.draws));
}

}  // namespace fbgp
