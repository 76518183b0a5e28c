#pragma once

// Learning-curve aggregation and the relative decrease in area under the loss
// curve (RD-AUC) with ratio-estimator mean and variance.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbgp {

enum class Metric { NLML, RMSE };

[[nodiscard]] std::string_view to_string(Metric m) noexcept;
[[nodiscard]] std::optional<Metric> metric_from_string(std::string_view name);

/// R runs x T iterations of one metric for one criterion.
struct CurveSet {
  Metric metric = Metric::RMSE;
  Eigen::MatrixXd curves;
  std::string criterion;

  [[nodiscard]] Eigen::Index runs() const noexcept { return curves.rows(); }
  [[nodiscard]] Eigen::Index length() const noexcept { return curves.cols(); }
};

struct RDAUCResult {
  double mean = 0.0;      // fraction; positive means the candidate has less area
  double variance = 0.0;  // >= 0
  double lower_bound_used = 0.0;
  std::string baseline;
  std::string criterion;
};

/// Trapezoidal area over the iteration index.
[[nodiscard]] double auc(const Eigen::Ref<const Eigen::VectorXd>& curve);

/// RMSE is bounded by 0; NLML uses the smallest value seen in any curve of any criterion.
[[nodiscard]] double lower_bound(Metric metric, const std::vector<CurveSet>& all_criteria);

/// Ratio statistics over every (baseline run, candidate run) pair:
/// n = AUC_b - AUC_c, d = AUC_b - AUC_best; mean = mu_n / mu_d and
/// variance = (1/R)(s_n^2/mu_d^2 + mu_n^2 s_d^2/mu_d^4 - 2 mu_n s_nd/mu_d^3),
/// with population moments over the pair lists and R the number of runs per
/// criterion. Throws std::domain_error when mu_d <= 0.
[[nodiscard]] RDAUCResult rd_auc_from_aucs(const std::vector<double>& baseline_aucs,
                                           const std::vector<double>& candidate_aucs, double auc_best);

/// Curve-level entry point. `bound` is a metric value; it enters as the AUC
/// of a constant curve of the same length.
[[nodiscard]] RDAUCResult rd_auc(const CurveSet& baseline, const CurveSet& candidate, double bound);

/// Per-iteration mean and population std across runs.
struct CurveSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};
[[nodiscard]] CurveSummary summarize_curves(const CurveSet& set);

struct CampaignCell {
  std::string simulator;
  std::string criterion;
  CurveSet curves;
};

struct ReportRow {
  std::string criterion;
  std::vector<std::optional<RDAUCResult>> cells;  // one per simulator column
  std::optional<double> overall_mean;             // mean of available cell means
  std::optional<double> overall_median;
  std::optional<double> overall_std;  // population std of the cell means
};

struct ReportTable {
  Metric metric = Metric::RMSE;
  std::string baseline;
  std::vector<std::string> simulators;
  std::vector<ReportRow> rows;
};

/// One RD-AUC per simulator x criterion against `baseline`; missing inputs
/// leave an empty cell rather than failing.
[[nodiscard]] ReportTable summarize(const std::vector<CampaignCell>& cells, Metric metric,
                                    const std::string& baseline);

/// Aligned plain-text table in percent, "mean +- std".
[[nodiscard]] std::string render_text(const ReportTable& table);

}  // namespace fbgp
