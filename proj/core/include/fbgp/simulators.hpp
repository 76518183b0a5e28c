#pragma once

// Stochastic benchmark simulators and space-filling design utilities.

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fbgp/seeding.hpp"

namespace fbgp {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  [[nodiscard]] double width() const noexcept { return hi - lo; }
};

/// Mean and standard deviation tabulated on equidistant knots over a 1-D
/// domain, linearly interpolated between knots.
class InterpolatedTable {
 public:
  InterpolatedTable(Interval domain, std::vector<double> mean, std::vector<double> stddev);

  [[nodiscard]] double mean(double x) const;
  [[nodiscard]] double stddev(double x) const;
  [[nodiscard]] std::size_t knots() const noexcept { return mean_.size(); }
  [[nodiscard]] double knot(std::size_t i) const;
  [[nodiscard]] const std::vector<double>& mean_values() const noexcept { return mean_; }
  [[nodiscard]] const std::vector<double>& stddev_values() const noexcept { return stddev_; }

 private:
  [[nodiscard]] double interpolate(const std::vector<double>& values, double x) const;

  Interval domain_;
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

/// Values of the 101-knot Motorcycle simulator, verbatim.
struct MotorcycleTable {
  static const std::array<double, 101> mean;
  static const std::array<double, 101> stddev;
};

using MeanFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;
using NoiseFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// A named stochastic ground truth y = mean(x) + N(0, sigma(x)^2).
/// Exactly one of homoscedastic noise_std or a heteroscedastic noise function is set.
struct SimulatorSpec {
  std::string name;
  std::vector<Interval> domain;
  MeanFunction mean_fn;
  std::optional<double> noise_std;
  NoiseFunction noise_fn;

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(domain.size()); }
  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  [[nodiscard]] double noise_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void validate() const;
};

/// mean_fn(x) plus a Normal draw with the simulator's noise at x.
[[nodiscard]] double evaluate(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::VectorXd>& x, Rng& rng);

/// Noise-free mean; throws std::invalid_argument outside the domain.
[[nodiscard]] double mean_oracle(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::VectorXd>& x);

// Closed forms follow the Virtual Library of Simulation Experiments
// (Surjanovic & Bingham, https://www.sfu.ca/~ssurjano/).
[[nodiscard]] SimulatorSpec make_gramacy1d();
[[nodiscard]] SimulatorSpec make_higdon();
[[nodiscard]] SimulatorSpec make_gramacy2d();
[[nodiscard]] SimulatorSpec make_branin();
[[nodiscard]] SimulatorSpec make_ishigami();
[[nodiscard]] SimulatorSpec make_hartmann6();
[[nodiscard]] SimulatorSpec make_motorcycle();

/// Name-addressable set of simulators (built-ins plus anything loaded from file).
class SimulatorRegistry {
 public:
  /// Registry pre-populated with the seven built-in simulators.
  [[nodiscard]] static SimulatorRegistry with_builtins();

  void add(SimulatorSpec spec);
  /// Loads a table simulator from JSON; returns its registered name.
  std::string load_table_file(const std::filesystem::path& path);

  [[nodiscard]] const SimulatorSpec* find(std::string_view name) const;
  [[nodiscard]] const SimulatorSpec& at(std::string_view name) const;
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::vector<SimulatorSpec> specs_;
};

/// Parses a table simulator:
///   {"name": "...", "domain": [lo, hi], "mean": [...],
///    "stddev": [...]}            (heteroscedastic)  or
///    "noise_std": 0.1}           (homoscedastic)
[[nodiscard]] SimulatorSpec table_simulator_from_json(const std::string& text);

/// Best of `candidates` random Latin hypercube designs by minimum pairwise
/// distance, in [0,1]^d.
[[nodiscard]] Eigen::MatrixXd maximin_lhs(int n, int d, Rng& rng, int candidates = 100);

/// Equidistant grid with `per_axis` points per dimension in natural units; a
/// uniformly random subset of `cap` grid points when the grid is larger.
[[nodiscard]] Eigen::MatrixXd grid_pool(const SimulatorSpec& sim, Rng& rng, int per_axis = 100, int cap = 10000);

/// Maps unit-cube points to natural units and back.
[[nodiscard]] Eigen::MatrixXd to_natural(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::MatrixXd>& unit);
[[nodiscard]] Eigen::MatrixXd to_unit(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::MatrixXd>& natural);

}  // namespace fbgp
