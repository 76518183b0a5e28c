#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fbgp/campaign.hpp"
#include "fbgp/errors.hpp"

namespace fbgp {

using json = nlohmann::json;

std::vector<CampaignCell> cells_from_records(const std::vector<ResultRecord>& records, Metric metric) {
  // Keyed by (simulator, criterion) in first-seen order; runs ordered by index.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::map<int, const ResultRecord*>> groups;
  for (const auto& r : records) {
    if (!r.curve.complete || r.curve.records.empty()) continue;
    const std::pair<std::string, std::string> key{r.simulator, std::string(to_string(r.criterion))};
    if (!groups.count(key)) order.push_back(key);
    groups[key][r.run] = &r;
  }

  std::vector<CampaignCell> cells;
  for (const auto& key : order) {
    const auto& runs = groups.at(key);
    std::size_t length = 0;
    for (const auto& [idx, rec] : runs) length = std::max(length, rec->curve.records.size());
    std::vector<const ResultRecord*> kept;
    for (const auto& [idx, rec] : runs) {
      if (rec->curve.records.size() == length) kept.push_back(rec);
    }
    CampaignCell cell;
    cell.simulator = key.first;
    cell.criterion = key.second;
    cell.curves.metric = metric;
    cell.curves.criterion = key.second;
    cell.curves.curves.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(length));
    for (std::size_t r = 0; r < kept.size(); ++r) {
      for (std::size_t t = 0; t < length; ++t) {
        const auto& it = kept[r]->curve.records[t];
        cell.curves.curves(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
            metric == Metric::NLML ? it.nlml : it.rmse;
      }
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json table_json(const ReportTable& table) {
  json j;
  j["metric"] = std::string(to_string(table.metric));
  j["baseline"] = table.baseline;
  j["simulators"] = table.simulators;
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r;
    r["criterion"] = row.criterion;
    json cells = json::array();
    for (std::size_t k = 0; k < row.cells.size(); ++k) {
      const auto& c = row.cells[k];
      if (!c) {
        cells.push_back({{"simulator", table.simulators[k]}, {"status", "missing"}});
        continue;
      }
      cells.push_back({{"simulator", table.simulators[k]},
                       {"status", "ok"},
                       {"mean", c->mean},
                       {"variance", c->variance},
                       {"std", std::sqrt(c->variance)},
                       {"lower_bound", c->lower_bound_used}});
    }
    r["cells"] = cells;
    r["overall"] = {{"mean", optional_json(row.overall_mean)},
                    {"median", optional_json(row.overall_median)},
                    {"std", optional_json(row.overall_std)}};
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j;
}

std::string curves_csv(const std::vector<CampaignCell>& cells) {
  std::ostringstream os;
  os.precision(17);
  os << "simulator,criterion,metric,iteration,runs,mean,std\n";
  for (const auto& c : cells) {
    if (c.curves.runs() == 0) continue;
    const CurveSummary s = summarize_curves(c.curves);
    for (Eigen::Index t = 0; t < s.mean.size(); ++t) {
      os << c.simulator << ',' << c.criterion << ',' << to_string(c.curves.metric) << ',' << t << ','
         << c.curves.runs() << ',' << s.mean(t) << ',' << s.std(t) << '\n';
    }
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

ReportFiles generate_report(const std::filesystem::path& campaign_dir, const std::string& baseline,
                            std::optional<Metric> metric, const std::filesystem::path& out_dir) {
  const auto base = criterion_from_string(baseline);
  if (!base) throw ConfigError("unknown baseline criterion '" + baseline + "'");
  const std::string base_name(to_string(*base));

  const auto records = load_records(campaign_dir);
  if (records.empty()) throw ConfigError("no result records under " + campaign_dir.string());

  std::vector<Metric> metrics;
  if (metric) {
    metrics.push_back(*metric);
  } else {
    metrics = {Metric::NLML, Metric::RMSE};
  }

  std::filesystem::create_directories(out_dir);
  ReportFiles files;
  for (const Metric m : metrics) {
    auto cells = cells_from_records(records, m);
    // Simulators and criteria with records that all failed still get a column or row.
    for (const auto& r : records) {
      const std::string crit(to_string(r.criterion));
      const bool present = std::any_of(cells.begin(), cells.end(), [&](const CampaignCell& c) {
        return c.simulator == r.simulator && c.criterion == crit;
      });
      if (!present) {
        CampaignCell empty;
        empty.simulator = r.simulator;
        empty.criterion = crit;
        empty.curves.metric = m;
        empty.curves.criterion = crit;
        cells.push_back(std::move(empty));
      }
    }

    ReportTable table = summarize(cells, m, base_name);
    const std::string stem(to_string(m));
    const auto json_path = out_dir / ("report_" + stem + ".json");
    const auto txt_path = out_dir / ("report_" + stem + ".txt");
    const auto csv_path = out_dir / ("curves_" + stem + ".csv");
    const std::string text = render_text(table);
    write_text(json_path, table_json(table).dump(1) + "\n");
    write_text(txt_path, text);
    write_text(csv_path, curves_csv(cells));
    files.written.insert(files.written.end(), {json_path, txt_path, csv_path});
    files.text += text;
    files.tables.push_back(std::move(table));
  }
  return files;
}

}  // namespace fbgp
