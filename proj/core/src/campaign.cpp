#include "fbgp/campaign.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fbgp/errors.hpp"

#ifndef FBGP_VERSION
#define FBGP_VERSION "0.0.0"
#endif

namespace fbgp {

using json = nlohmann::json;

std::string_view software_version() noexcept { return FBGP_VERSION; }

namespace {

const std::vector<std::string>& default_simulators() {
  static const std::vector<std::string> names{"gramacy1d", "higdon", "gramacy2d", "branin",
                                              "ishigami",  "hartmann", "motorcycle"};
  return names;
}

std::vector<Criterion> default_criteria() {
  return {Criterion::ALM, Criterion::B_ALM, Criterion::BALD, Criterion::B_QBC, Criterion::QB_MGP};
}

void apply_desk_preset(CampaignConfig& c) {
  c.runs = 5;
  c.experiment.iterations = 30;
  c.experiment.sampler.chains = 2;
  c.experiment.sampler.samples_per_chain = 200;
  c.experiment.sampler.warmup = 100;
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

Criterion parse_criterion(const std::string& name) {
  const auto c = criterion_from_string(name);
  if (!c) throw ConfigError("unknown criterion '" + name + "'");
  return *c;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd json_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json curve_json(const LearningCurve& curve) {
  json c;
  c["complete"] = curve.complete;
  c["failure"] = curve.failure;
  c["sampler_retries"] = curve.sampler_retries;
  json xs = json::array();
  for (Eigen::Index i = 0; i < curve.initial_inputs.rows(); ++i) xs.push_back(vec_json(curve.initial_inputs.row(i).transpose()));
  c["initial_inputs"] = xs;
  c["initial_targets"] = vec_json(curve.initial_targets);
  json its = json::array();
  for (const auto& r : curve.records) {
    its.push_back({{"train_size", r.train_size},
                   {"nlml", r.nlml},
                   {"rmse", r.rmse},
                   {"theta", vec_json(r.theta)},
                   {"query", vec_json(r.query)},
                   {"query_value", r.query_value}});
  }
  c["iterations"] = its;
  return c;
}

LearningCurve curve_from_json(const json& c, const json& wall) {
  LearningCurve curve;
  curve.complete = c.at("complete").get<bool>();
  curve.failure = c.at("failure").get<std::string>();
  curve.sampler_retries = c.at("sampler_retries").get<int>();
  const json& xs = c.at("initial_inputs");
  const Eigen::Index d = xs.empty() ? 0 : static_cast<Eigen::Index>(xs[0].size());
  curve.initial_inputs.resize(static_cast<Eigen::Index>(xs.size()), d);
  for (std::size_t i = 0; i < xs.size(); ++i) curve.initial_inputs.row(static_cast<Eigen::Index>(i)) = json_vec(xs[i]).transpose();
  curve.initial_targets = json_vec(c.at("initial_targets"));
  std::size_t k = 0;
  for (const auto& it : c.at("iterations")) {
    IterationRecord r;
    r.train_size = it.at("train_size").get<int>();
    r.nlml = it.at("nlml").get<double>();
    r.rmse = it.at("rmse").get<double>();
    r.theta = json_vec(it.at("theta"));
    r.query = json_vec(it.at("query"));
    r.query_value = it.at("query_value").get<double>();
    if (wall.is_array() && k < wall.size()) r.wall_seconds = wall[k].get<double>();
    curve.records.push_back(std::move(r));
    ++k;
  }
  return curve;
}

json config_json(const CampaignConfig& c) {
  json j;
  j["campaign"] = c.campaign;
  j["simulators"] = c.simulators;
  json crits = json::array();
  for (const auto cr : c.criteria) crits.push_back(std::string(to_string(cr)));
  j["criteria"] = crits;
  j["runs"] = c.runs;
  j["iterations"] = c.experiment.iterations;
  j["initial_points"] = c.experiment.initial_points;
  j["test_points"] = c.experiment.test_points;
  j["lhs_candidates"] = c.experiment.lhs_candidates;
  j["seed"] = c.master_seed;
  j["sampler"] = {{"chains", c.experiment.sampler.chains},
                  {"samples", c.experiment.sampler.samples_per_chain},
                  {"warmup", c.experiment.sampler.warmup},
                  {"target_accept", c.experiment.sampler.target_accept},
                  {"max_tree_depth", c.experiment.sampler.max_tree_depth}};
  j["prior"] = {{"mean", c.experiment.prior.mean}, {"std", c.experiment.prior.std}};
  j["pool"] = {{"per_axis", c.experiment.pool.per_axis}, {"cap", c.experiment.pool.cap}};
  json files = json::array();
  for (const auto& f : c.simulator_files) files.push_back(f.string());
  j["simulator_files"] = files;
  return j;
}

}  // namespace

void CampaignConfig::validate(const SimulatorRegistry& registry) const {
  if (campaign.empty() || campaign.find('/') != std::string::npos) throw ConfigError("campaign id must be a plain name");
  if (simulators.empty()) throw ConfigError("simulator list is empty");
  if (criteria.empty()) throw ConfigError("criterion list is empty");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  for (const auto& s : simulators) {
    if (registry.find(s) == nullptr) throw ConfigError("unknown simulator '" + s + "'");
  }
  experiment.validate();
}

CampaignConfig parse_campaign_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text.empty() ? std::string("{}") : json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"campaign", "preset", "simulators", "criteria", "runs", "iterations", "initial_points", "test_points",
                  "lhs_candidates", "seed", "output_dir", "workers", "simulator_files", "sampler", "prior", "pool"},
                 "config");

  CampaignConfig c;
  c.simulators = default_simulators();
  c.criteria = default_criteria();

  if (j.contains("preset")) {
    const auto preset = get_as<std::string>(j, "preset");
    if (preset == "desk") {
      apply_desk_preset(c);
    } else if (preset != "full") {
      throw ConfigError("unknown preset '" + preset + "'");
    }
  }
  if (j.contains("campaign")) c.campaign = get_as<std::string>(j, "campaign");
  if (j.contains("simulator_files")) {
    for (const auto& f : get_as<std::vector<std::string>>(j, "simulator_files")) {
      std::filesystem::path p(f);
      c.simulator_files.push_back(p.is_relative() && !base_dir.empty() ? base_dir / p : p);
    }
  }
  if (j.contains("simulators")) c.simulators = get_as<std::vector<std::string>>(j, "simulators");
  if (j.contains("criteria")) {
    c.criteria.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "criteria")) c.criteria.push_back(parse_criterion(name));
  }
  if (j.contains("runs")) c.runs = get_as<int>(j, "runs");
  if (j.contains("iterations")) c.experiment.iterations = get_as<int>(j, "iterations");
  if (j.contains("initial_points")) c.experiment.initial_points = get_as<int>(j, "initial_points");
  if (j.contains("test_points")) c.experiment.test_points = get_as<int>(j, "test_points");
  if (j.contains("lhs_candidates")) c.experiment.lhs_candidates = get_as<int>(j, "lhs_candidates");
  if (j.contains("seed")) c.master_seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("output_dir")) {
    std::filesystem::path p(get_as<std::string>(j, "output_dir"));
    c.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (j.contains("workers")) c.workers = get_as<int>(j, "workers");
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    if (!s.is_object()) throw ConfigError("'sampler' must be an object");
    reject_unknown(s, {"chains", "samples", "warmup", "target_accept", "max_tree_depth"}, "sampler");
    auto& sc = c.experiment.sampler;
    if (s.contains("chains")) sc.chains = get_as<int>(s, "chains");
    if (s.contains("samples")) sc.samples_per_chain = get_as<int>(s, "samples");
    if (s.contains("warmup")) sc.warmup = get_as<int>(s, "warmup");
    if (s.contains("target_accept")) sc.target_accept = get_as<double>(s, "target_accept");
    if (s.contains("max_tree_depth")) sc.max_tree_depth = get_as<int>(s, "max_tree_depth");
  }
  if (j.contains("prior")) {
    const json& p = j.at("prior");
    if (!p.is_object()) throw ConfigError("'prior' must be an object");
    reject_unknown(p, {"mean", "std"}, "prior");
    if (p.contains("mean")) c.experiment.prior.mean = get_as<double>(p, "mean");
    if (p.contains("std")) c.experiment.prior.std = get_as<double>(p, "std");
  }
  if (j.contains("pool")) {
    const json& p = j.at("pool");
    if (!p.is_object()) throw ConfigError("'pool' must be an object");
    reject_unknown(p, {"per_axis", "cap"}, "pool");
    if (p.contains("per_axis")) c.experiment.pool.per_axis = get_as<int>(p, "per_axis");
    if (p.contains("cap")) c.experiment.pool.cap = get_as<int>(p, "cap");
  }
  return c;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_campaign_config(ss.str(), path.parent_path());
}

std::string campaign_config_json(const CampaignConfig& config) { return config_json(config).dump(); }

SimulatorRegistry registry_for(const CampaignConfig& config) {
  SimulatorRegistry reg = SimulatorRegistry::with_builtins();
  for (const auto& f : config.simulator_files) {
    try {
      (void)reg.load_table_file(f);
    } catch (const std::exception& e) {
      throw ConfigError("simulator file " + f.string() + ": " + e.what());
    }
  }
  return reg;
}

std::uint64_t run_seed(std::uint64_t master_seed, std::string_view simulator, Criterion criterion, int run) {
  std::string sim(simulator);
  std::transform(sim.begin(), sim.end(), sim.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return derive_seed(master_seed, {hash_label(sim), hash_label(to_string(criterion)), static_cast<std::uint64_t>(run)});
}

std::uint64_t design_seed(std::uint64_t master_seed, std::string_view simulator, int run) {
  std::string sim(simulator);
  std::transform(sim.begin(), sim.end(), sim.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return derive_seed(master_seed, {hash_label("design"), hash_label(sim), static_cast<std::uint64_t>(run)});
}

std::filesystem::path record_path(const std::filesystem::path& dir, std::string_view simulator, Criterion criterion,
                                  int run) {
  std::string name(simulator);
  name += "__";
  name += to_string(criterion);
  name += "__run";
  name += std::to_string(run);
  name += ".json";
  return dir / "records" / name;
}

std::string curve_payload_json(const LearningCurve& curve) { return curve_json(curve).dump(); }

void write_record(const std::filesystem::path& path, const ResultRecord& record) {
  json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["software_version"] = record.version;
  j["campaign"] = record.campaign;
  j["cell"] = {{"simulator", record.simulator}, {"criterion", std::string(to_string(record.criterion))}, {"run", record.run}};
  j["seed"] = record.seed;
  j["design_seed"] = record.design_seed;
  j["config"] = record.config_snapshot.empty() ? json::object() : json::parse(record.config_snapshot);
  j["complete"] = record.curve.complete;
  j["curve"] = curve_json(record.curve);
  json wall = json::array();
  for (const auto& r : record.curve.records) wall.push_back(r.wall_seconds);
  j["timing"] = {{"started_at", record.started_at}, {"finished_at", record.finished_at}, {"wall_seconds", wall}};

  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(1) << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ResultRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
    if (j.at("schema_version").get<int>() != kRecordSchemaVersion) {
      throw std::runtime_error("unsupported schema version in " + path.string());
    }
    ResultRecord r;
    r.version = j.at("software_version").get<std::string>();
    r.campaign = j.at("campaign").get<std::string>();
    const json& cell = j.at("cell");
    r.simulator = cell.at("simulator").get<std::string>();
    const auto crit = criterion_from_string(cell.at("criterion").get<std::string>());
    if (!crit) throw std::runtime_error("unknown criterion in " + path.string());
    r.criterion = *crit;
    r.run = cell.at("run").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.design_seed = j.at("design_seed").get<std::uint64_t>();
    r.config_snapshot = j.at("config").dump();
    const json& timing = j.at("timing");
    r.started_at = timing.at("started_at").get<std::string>();
    r.finished_at = timing.at("finished_at").get<std::string>();
    r.curve = curve_from_json(j.at("curve"), timing.at("wall_seconds"));
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed record " + path.string() + ": " + e.what());
  }
}

std::vector<ResultRecord> load_records(const std::filesystem::path& dir) {
  std::vector<ResultRecord> out;
  const auto records_dir = dir / "records";
  if (!std::filesystem::is_directory(records_dir)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(records_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(read_record(f));
  return out;
}

CampaignOutcome run_campaign(const CampaignConfig& config, bool force, const ProgressCallback& progress) {
  const SimulatorRegistry registry = registry_for(config);
  config.validate(registry);

  const auto dir = config.output_dir / config.campaign;
  const std::string snapshot = campaign_config_json(config);

  struct Cell {
    std::string simulator;
    Criterion criterion;
    int run;
  };
  std::vector<Cell> todo;
  CampaignOutcome outcome;
  for (const auto& sim_name : config.simulators) {
    const std::string sim = registry.at(sim_name).name;
    for (const auto crit : config.criteria) {
      for (int r = 0; r < config.runs; ++r) {
        const auto path = record_path(dir, sim, crit, r);
        if (!force && std::filesystem::exists(path)) {
          try {
            if (read_record(path).curve.complete) {
              ++outcome.skipped;
              continue;
            }
          } catch (const std::exception&) {
            // unreadable record: run again
          }
        }
        todo.push_back({sim, crit, r});
      }
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const Cell& cell = todo[k];
      const std::string label =
          cell.simulator + "/" + std::string(to_string(cell.criterion)) + "/run" + std::to_string(cell.run);

      ResultRecord rec;
      rec.campaign = config.campaign;
      rec.simulator = cell.simulator;
      rec.criterion = cell.criterion;
      rec.run = cell.run;
      rec.seed = run_seed(config.master_seed, cell.simulator, cell.criterion, cell.run);
      rec.design_seed = design_seed(config.master_seed, cell.simulator, cell.run);
      rec.config_snapshot = snapshot;
      rec.version = std::string(software_version());
      rec.started_at = utc_now();

      ExperimentConfig ex = config.experiment;
      ex.simulator = cell.simulator;
      ex.criterion = cell.criterion;
      ex.seed = rec.seed;
      ex.design_seed = rec.design_seed;
      std::string error;
      try {
        rec.curve = run_experiment(ex, registry);
      } catch (const std::exception& e) {
        rec.curve.complete = false;
        rec.curve.failure = e.what();
      }
      rec.finished_at = utc_now();
      try {
        write_record(record_path(dir, cell.simulator, cell.criterion, cell.run), rec);
      } catch (const std::exception& e) {
        error = e.what();
      }

      std::lock_guard<std::mutex> lock(mu);
      ++outcome.executed;
      if (!rec.curve.complete || !error.empty()) {
        ++outcome.failed;
        outcome.failures.push_back(label + ": " + (error.empty() ? rec.curve.failure : error));
      }
      if (progress) {
        progress("[" + std::to_string(outcome.executed) + "/" + std::to_string(todo.size()) + "] " + label +
                 (rec.curve.complete ? " done" : " FAILED"));
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(todo.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(outcome.failures.begin(), outcome.failures.end());
  return outcome;
}

}  // namespace fbgp
