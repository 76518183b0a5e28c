#include "fbgp/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fbgp {

std::string_view to_string(Metric m) noexcept { return m == Metric::NLML ? "nlml" : "rmse"; }

std::optional<Metric> metric_from_string(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "nlml") return Metric::NLML;
  if (key == "rmse") return Metric::RMSE;
  return std::nullopt;
}

double auc(const Eigen::Ref<const Eigen::VectorXd>& curve) {
  double area = 0.0;
  for (Eigen::Index t = 0; t + 1 < curve.size(); ++t) area += 0.5 * (curve(t) + curve(t + 1));
  return area;
}

double lower_bound(Metric metric, const std::vector<CurveSet>& all_criteria) {
  if (metric == Metric::RMSE) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& set : all_criteria) {
    if (set.curves.size() > 0) best = std::min(best, set.curves.minCoeff());
  }
  if (!std::isfinite(best)) throw std::invalid_argument("no NLML values to bound");
  return best;
}

RDAUCResult rd_auc_from_aucs(const std::vector<double>& baseline_aucs, const std::vector<double>& candidate_aucs,
                             double auc_best) {
  const std::size_t rb = baseline_aucs.size();
  const std::size_t rc = candidate_aucs.size();
  if (rb == 0 || rc == 0) throw std::invalid_argument("rd_auc needs at least one run per criterion");

  std::vector<double> n;
  std::vector<double> d;
  n.reserve(rb * rc);
  d.reserve(rb * rc);
  for (const double b : baseline_aucs) {
    for (const double c : candidate_aucs) {
      n.push_back(b - c);
      d.push_back(b - auc_best);
    }
  }
  const auto count = static_cast<double>(n.size());

  // Mirror pairs (r,s) and (s,r) are summed together so a self-comparison
  // cancels exactly.
  auto at = [&](std::size_t r, std::size_t s) { return n[r * rc + s]; };
  double sum_n = 0.0;
  for (std::size_t r = 0; r < rb; ++r) {
    for (std::size_t s = 0; s < rc; ++s) {
      const bool mirrored = s < rb && r < rc;
      if (mirrored && s < r) continue;
      double term = at(r, s);
      if (mirrored && s > r) term += at(s, r);
      sum_n += term;
    }
  }
  double sum_d = 0.0;
  for (const double v : d) sum_d += v;
  const double mu_n = sum_n / count;
  const double mu_d = sum_d / count;
  if (!(mu_d > 0.0)) throw std::domain_error("RD-AUC denominator is not positive: baseline matches the bound");

  double var_n = 0.0;
  double var_d = 0.0;
  double cov_nd = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    const double en = n[k] - mu_n;
    const double ed = d[k] - mu_d;
    var_n += en * en;
    var_d += ed * ed;
    cov_nd += en * ed;
  }
  var_n /= count;
  var_d /= count;
  cov_nd /= count;

  const double runs = static_cast<double>(std::min(rb, rc));
  const double variance = (var_n / (mu_d * mu_d) + mu_n * mu_n * var_d / std::pow(mu_d, 4) -
                           2.0 * mu_n * cov_nd / std::pow(mu_d, 3)) /
                          runs;
  RDAUCResult out;
  out.mean = mu_n / mu_d;
  out.variance = std::max(variance, 0.0);
  return out;
}

RDAUCResult rd_auc(const CurveSet& baseline, const CurveSet& candidate, double bound) {
  if (baseline.length() != candidate.length()) throw std::invalid_argument("curve sets differ in length");
  if (baseline.length() < 2) throw std::invalid_argument("curves need at least two iterations for an area");
  std::vector<double> b;
  std::vector<double> c;
  for (Eigen::Index r = 0; r < baseline.runs(); ++r) b.push_back(auc(baseline.curves.row(r).transpose()));
  for (Eigen::Index r = 0; r < candidate.runs(); ++r) c.push_back(auc(candidate.curves.row(r).transpose()));
  const double auc_best = bound * static_cast<double>(baseline.length() - 1);
  RDAUCResult out = rd_auc_from_aucs(b, c, auc_best);
  out.lower_bound_used = bound;
  out.baseline = baseline.criterion;
  out.criterion = candidate.criterion;
  return out;
}

CurveSummary summarize_curves(const CurveSet& set) {
  CurveSummary s;
  s.mean = set.curves.colwise().mean().transpose();
  s.std = ((set.curves.rowwise() - s.mean.transpose()).array().square().colwise().mean().sqrt()).transpose();
  return s;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace

ReportTable summarize(const std::vector<CampaignCell>& cells, Metric metric, const std::string& baseline) {
  ReportTable table;
  table.metric = metric;
  table.baseline = baseline;

  std::vector<std::string> criteria;
  for (const auto& c : cells) {
    if (std::find(table.simulators.begin(), table.simulators.end(), c.simulator) == table.simulators.end()) {
      table.simulators.push_back(c.simulator);
    }
    if (std::find(criteria.begin(), criteria.end(), c.criterion) == criteria.end()) criteria.push_back(c.criterion);
  }
  // Baseline first, otherwise first-seen order.
  std::stable_partition(criteria.begin(), criteria.end(), [&](const std::string& c) { return c == baseline; });

  auto find_cell = [&](const std::string& sim, const std::string& crit) -> const CampaignCell* {
    for (const auto& c : cells) {
      if (c.simulator == sim && c.criterion == crit && c.curves.metric == metric) return &c;
    }
    return nullptr;
  };

  for (const auto& crit : criteria) {
    ReportRow row;
    row.criterion = crit;
    std::vector<double> means;
    for (const auto& sim : table.simulators) {
      const CampaignCell* base = find_cell(sim, baseline);
      const CampaignCell* cand = find_cell(sim, crit);
      std::optional<RDAUCResult> cell;
      if (base != nullptr && cand != nullptr && base->curves.runs() > 0 && cand->curves.runs() > 0) {
        std::vector<CurveSet> all;
        for (const auto& c : cells) {
          if (c.simulator == sim && c.curves.metric == metric) all.push_back(c.curves);
        }
        try {
          cell = rd_auc(base->curves, cand->curves, lower_bound(metric, all));
          means.push_back(cell->mean);
        } catch (const std::exception&) {
          cell.reset();
        }
      }
      row.cells.push_back(cell);
    }
    if (!means.empty()) {
      double sum = 0.0;
      for (const double m : means) sum += m;
      const double mean = sum / static_cast<double>(means.size());
      double ss = 0.0;
      for (const double m : means) ss += (m - mean) * (m - mean);
      row.overall_mean = mean;
      row.overall_median = median(means);
      row.overall_std = std::sqrt(ss / static_cast<double>(means.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string render_text(const ReportTable& table) {
  auto cell_text = [](std::optional<double> mean, std::optional<double> sd) -> std::string {
    if (!mean) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << 100.0 * *mean << " +-" << 100.0 * sd.value_or(0.0);
    return os.str();
  };

  std::vector<std::string> header{"criterion"};
  for (const auto& s : table.simulators) header.push_back(s);
  header.emplace_back("mean");
  header.emplace_back("median");

  std::vector<std::vector<std::string>> grid{header};
  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.criterion};
    for (const auto& c : row.cells) {
      line.push_back(c ? cell_text(c->mean, std::sqrt(c->variance)) : cell_text(std::nullopt, std::nullopt));
    }
    line.push_back(cell_text(row.overall_mean, row.overall_std));
    line.push_back(cell_text(row.overall_median, row.overall_std));
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], line[k].size());
  }
  std::ostringstream os;
  os << to_string(table.metric) << ": relative decrease in AUC (%) vs " << table.baseline << '\n';
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k == 0) {
        os << std::left << std::setw(static_cast<int>(width[k])) << line[k];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[k])) << line[k];
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fbgp
