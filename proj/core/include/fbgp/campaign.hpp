#pragma once

// Batch campaign driver: configuration, per-run seed derivation, persisted
// result records, reports rebuilt from records, and the validation suites.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fbgp/active_learning.hpp"
#include "fbgp/evaluation.hpp"
#include "fbgp/simulators.hpp"

namespace fbgp {

[[nodiscard]] std::string_view software_version() noexcept;

inline constexpr int kRecordSchemaVersion = 1;

struct CampaignConfig {
  std::string campaign = "campaign";
  std::vector<std::string> simulators;
  std::vector<Criterion> criteria;
  int runs = 10;
  ExperimentConfig experiment;  // simulator, criterion and seed are filled per cell
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "results";
  int workers = 1;
  std::vector<std::filesystem::path> simulator_files;

  void validate(const SimulatorRegistry& registry) const;
};

/// Parses a JSON campaign file. Every key is optional; an empty object
/// describes the full-scale protocol (seven simulators, five criteria, ten
/// runs, 5 chains x 500 draws with 200 warm-up). `"preset": "desk"` shrinks
/// to 2 chains x 200 draws with 100 warm-up, 30 iterations and 5 runs before
/// explicit keys are applied. Relative simulator file paths resolve against
/// `base_dir`. Throws ConfigError.
[[nodiscard]] CampaignConfig parse_campaign_config(const std::string& json_text,
                                                   const std::filesystem::path& base_dir = {});
[[nodiscard]] CampaignConfig load_campaign_config(const std::filesystem::path& path);

/// Canonical JSON rendering of a campaign config (the snapshot embedded in records).
[[nodiscard]] std::string campaign_config_json(const CampaignConfig& config);

/// Builds the registry for a config: built-ins plus the config's table files.
[[nodiscard]] SimulatorRegistry registry_for(const CampaignConfig& config);

/// Seed of one run; depends only on (master seed, simulator, criterion, run),
/// so extending the grid never changes existing cells.
[[nodiscard]] std::uint64_t run_seed(std::uint64_t master_seed, std::string_view simulator, Criterion criterion,
                                     int run);

/// Seed of the initial design and test set of one run; shared by every
/// criterion so runs with the same index are paired.
[[nodiscard]] std::uint64_t design_seed(std::uint64_t master_seed, std::string_view simulator, int run);

struct ResultRecord {
  std::string campaign;
  std::string simulator;
  Criterion criterion = Criterion::ALM;
  int run = 0;
  std::uint64_t seed = 0;
  std::uint64_t design_seed = 0;
  LearningCurve curve;
  std::string config_snapshot;  // JSON
  std::string version;
  std::string started_at;
  std::string finished_at;
};

[[nodiscard]] std::filesystem::path record_path(const std::filesystem::path& dir, std::string_view simulator,
                                                Criterion criterion, int run);

/// Deterministic JSON of the learning curve: everything except wall times.
[[nodiscard]] std::string curve_payload_json(const LearningCurve& curve);

/// Writes to a temporary sibling and renames over the target.
void write_record(const std::filesystem::path& path, const ResultRecord& record);
[[nodiscard]] ResultRecord read_record(const std::filesystem::path& path);
[[nodiscard]] std::vector<ResultRecord> load_records(const std::filesystem::path& dir);

struct CampaignOutcome {
  int executed = 0;
  int skipped = 0;
  int failed = 0;  // incomplete curves or exceptions
  std::vector<std::string> failures;
};

using ProgressCallback = std::function<void(const std::string& line)>;

/// Runs every (simulator, criterion, run) cell not already on disk (all cells
/// when `force`) over a bounded worker pool.
CampaignOutcome run_campaign(const CampaignConfig& config, bool force, const ProgressCallback& progress = {});

struct ReportFiles {
  std::vector<ReportTable> tables;
  std::vector<std::filesystem::path> written;
  std::string text;
};

/// Rebuilds report tables and per-iteration curve summaries purely from the
/// records under `campaign_dir`. Writes report_<metric>.{json,txt} and
/// curves_<metric>.csv into `out_dir`. Both metrics when `metric` is empty.
ReportFiles generate_report(const std::filesystem::path& campaign_dir, const std::string& baseline,
                            std::optional<Metric> metric, const std::filesystem::path& out_dir);

/// Loads records into per-cell curve sets for one metric; incomplete runs and
/// runs shorter than the longest are skipped.
[[nodiscard]] std::vector<CampaignCell> cells_from_records(const std::vector<ResultRecord>& records, Metric metric);

// Validation suites -------------------------------------------------------

using LmlFunction = std::function<double(const Dataset&, const Hyperparameters&)>;

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Analytic gradients against central differences of `lml` (default: the
/// library's log marginal likelihood). Passing a deliberately broken `lml`
/// makes the suite fail.
[[nodiscard]] SuiteResult validate_gradients(std::uint64_t seed, const LmlFunction& lml = {});
[[nodiscard]] SuiteResult validate_gp_oracle(std::uint64_t seed);
[[nodiscard]] SuiteResult validate_mixture(std::uint64_t seed);
[[nodiscard]] SuiteResult validate_sampler(std::uint64_t seed);
[[nodiscard]] SuiteResult validate_rdauc(std::uint64_t seed);

[[nodiscard]] std::vector<std::string> validation_suite_names();

/// Runs the named suite ("all" runs every one) and logs one line per suite.
/// Throws std::invalid_argument on an unknown name.
[[nodiscard]] std::vector<SuiteResult> run_validation(std::string_view suite, std::uint64_t seed, std::ostream& log);

}  // namespace fbgp
