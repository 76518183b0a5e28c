#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "fbgp/simulators.hpp"

namespace fbgp {

namespace {

Eigen::MatrixXd random_lhs(int n, int d, Rng& rng) {
  Eigen::MatrixXd x(n, d);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      const int stratum = perm[static_cast<std::size_t>(i)];
      double v = (stratum + unif(rng)) / n;
      // Keep floor(v * n) == stratum under rounding.
      while (v > 0.0 && static_cast<int>(std::floor(v * n)) > stratum) v = std::nextafter(v, 0.0);
      x(i, k) = v;
    }
  }
  return x;
}

double min_pairwise_distance(const Eigen::MatrixXd& x) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) best = std::min(best, (x.row(i) - x.row(j)).norm());
  }
  return best;
}

double grid_coordinate(const Interval& iv, int i, int per_axis) {
  if (per_axis == 1) return 0.5 * (iv.lo + iv.hi);
  if (i == per_axis - 1) return iv.hi;
  return iv.lo + iv.width() * static_cast<double>(i) / static_cast<double>(per_axis - 1);
}

}  // namespace

Eigen::MatrixXd maximin_lhs(int n, int d, Rng& rng, int candidates) {
  if (n < 1 || d < 1) throw std::invalid_argument("maximin_lhs needs n >= 1 and d >= 1");
  if (candidates < 1) throw std::invalid_argument("maximin_lhs needs at least one candidate");
  Eigen::MatrixXd best = random_lhs(n, d, rng);
  if (n < 2) return best;
  double best_dist = min_pairwise_distance(best);
  for (int c = 1; c < candidates; ++c) {
    Eigen::MatrixXd trial = random_lhs(n, d, rng);
    const double dist = min_pairwise_distance(trial);
    if (dist > best_dist) {
      best = std::move(trial);
      best_dist = dist;
    }
  }
  return best;
}

Eigen::MatrixXd grid_pool(const SimulatorSpec& sim, Rng& rng, int per_axis, int cap) {
  if (per_axis < 1 || cap < 1) throw std::invalid_argument("grid_pool needs per_axis >= 1 and cap >= 1");
  const int d = sim.dim();
  const double total = std::pow(static_cast<double>(per_axis), d);

  auto point_at = [&](std::uint64_t linear, Eigen::Index row, Eigen::MatrixXd& out) {
    for (int k = 0; k < d; ++k) {
      const int i = static_cast<int>(linear % static_cast<std::uint64_t>(per_axis));
      linear /= static_cast<std::uint64_t>(per_axis);
      out(row, k) = grid_coordinate(sim.domain[static_cast<std::size_t>(k)], i, per_axis);
    }
  };

  if (total <= static_cast<double>(cap)) {
    const auto count = static_cast<std::uint64_t>(total);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), d);
    for (std::uint64_t r = 0; r < count; ++r) point_at(r, static_cast<Eigen::Index>(r), out);
    return out;
  }

  if (total > 1.8e19) throw std::invalid_argument("grid too large to index");
  const auto count = static_cast<std::uint64_t>(total);
  std::uniform_int_distribution<std::uint64_t> pick(0, count - 1);
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(cap));
  while (chosen.size() < static_cast<std::size_t>(cap)) {
    const std::uint64_t idx = pick(rng);
    if (seen.insert(idx).second) chosen.push_back(idx);
  }
  std::sort(chosen.begin(), chosen.end());
  Eigen::MatrixXd out(cap, d);
  for (Eigen::Index r = 0; r < cap; ++r) point_at(chosen[static_cast<std::size_t>(r)], r, out);
  return out;
}

Eigen::MatrixXd to_natural(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::MatrixXd>& unit) {
  if (unit.cols() != sim.dim()) throw std::invalid_argument("point dimension does not match simulator");
  Eigen::MatrixXd out(unit.rows(), unit.cols());
  for (int k = 0; k < sim.dim(); ++k) {
    const auto& iv = sim.domain[static_cast<std::size_t>(k)];
    out.col(k) = (unit.col(k).array() * iv.width() + iv.lo).min(iv.hi).max(iv.lo).matrix();
  }
  return out;
}

Eigen::MatrixXd to_unit(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::MatrixXd>& natural) {
  if (natural.cols() != sim.dim()) throw std::invalid_argument("point dimension does not match simulator");
  Eigen::MatrixXd out(natural.rows(), natural.cols());
  for (int k = 0; k < sim.dim(); ++k) {
    const auto& iv = sim.domain[static_cast<std::size_t>(k)];
    out.col(k) = (natural.col(k).array() - iv.lo) / iv.width();
  }
  return out;
}

}  // namespace fbgp
