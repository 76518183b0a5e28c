// fbgp: run, report and validate active-learning campaigns.
//
// Exit codes: 0 success, 1 configuration error, 2 partial failure,
// 3 validation failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fbgp/campaign.hpp"
#include "fbgp/errors.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kPartial = 2, kValidation = 3 };

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> workers,
            bool force, const std::string& out) {
  fbgp::CampaignConfig config = config_path.empty() ? fbgp::parse_campaign_config("{}")
                                                    : fbgp::load_campaign_config(config_path);
  if (seed) config.master_seed = *seed;
  if (workers) config.workers = *workers;
  if (!out.empty()) config.output_dir = out;

  const auto outcome = fbgp::run_campaign(config, force, [](const std::string& line) { std::cerr << line << '\n'; });
  std::cout << "campaign " << config.campaign << ": " << outcome.executed << " executed, " << outcome.skipped
            << " skipped, " << outcome.failed << " failed\n";
  for (const auto& f : outcome.failures) std::cout << "  failed " << f << '\n';
  std::cout << "records in " << (config.output_dir / config.campaign / "records").string() << '\n';
  return outcome.failed > 0 ? kPartial : kOk;
}

int cmd_report(const std::string& dir, const std::string& baseline, const std::string& metric,
               const std::string& out) {
  std::optional<fbgp::Metric> m;
  if (!metric.empty()) {
    m = fbgp::metric_from_string(metric);
    if (!m) throw fbgp::ConfigError("unknown metric '" + metric + "'");
  }
  const std::filesystem::path out_dir = out.empty() ? std::filesystem::path(dir) : std::filesystem::path(out);
  const auto files = fbgp::generate_report(dir, baseline, m, out_dir);
  std::cout << files.text;
  for (const auto& p : files.written) std::cout << "wrote " << p.string() << '\n';
  return kOk;
}

int cmd_validate(const std::string& suite, std::uint64_t seed) {
  const auto results = fbgp::run_validation(suite, seed, std::cout);
  for (const auto& r : results) {
    if (!r.passed) return kValidation;
  }
  return kOk;
}

int cmd_list(const std::string& config_path) {
  fbgp::SimulatorRegistry reg = config_path.empty()
                                    ? fbgp::SimulatorRegistry::with_builtins()
                                    : fbgp::registry_for(fbgp::load_campaign_config(config_path));
  for (const auto& name : reg.names()) {
    const auto& sim = reg.at(name);
    std::cout << name << "  d=" << sim.dim() << "  domain=";
    for (const auto& iv : sim.domain) std::cout << '[' << iv.lo << ',' << iv.hi << ']';
    if (sim.noise_std) {
      std::cout << "  noise_std=" << *sim.noise_std;
    } else {
      std::cout << "  noise=heteroscedastic";
    }
    std::cout << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fully Bayesian GP active learning: campaign runner and evaluation"};
  app.set_version_flag("--version", std::string(fbgp::software_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool force = false;
  std::string out;
  auto* run = app.add_subcommand("run", "Run every cell of a campaign and write one record per run");
  run->add_option("--config", config_path, "Campaign config (JSON); defaults reproduce the full protocol")
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);
  run->add_flag("--force", force, "Re-run cells that already have a record");
  run->add_option("--out", out, "Override the output directory");

  std::string campaign_dir;
  std::string baseline = "ALM";
  std::string metric;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Summarize records into RD-AUC tables and curve data");
  report->add_option("campaign_dir", campaign_dir, "Directory holding records/")->required()->check(CLI::ExistingDirectory);
  report->add_option("--baseline", baseline, "Baseline criterion")->capture_default_str();
  report->add_option("--metric", metric, "nlml or rmse (both when omitted)")
      ->check(CLI::IsMember({"nlml", "rmse"}, CLI::ignore_case));
  report->add_option("--out", report_out, "Output directory (default: the campaign directory)");

  std::string suite = "all";
  std::uint64_t validate_seed = 0;
  auto* validate = app.add_subcommand("validate", "Run oracle and property suites");
  validate->add_option("suite", suite, "gp, gradient, mixture, sampler, rdauc or all")->capture_default_str();
  validate->add_option("--seed", validate_seed, "Suite seed")->capture_default_str();

  std::string list_config;
  auto* list = app.add_subcommand("list-simulators", "List built-in and configured simulators");
  list->add_option("--config", list_config, "Also load the config's table simulators")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seed, workers, force, out);
    if (*report) return cmd_report(campaign_dir, baseline, metric, report_out);
    if (*validate) return cmd_validate(suite, validate_seed);
    if (*list) return cmd_list(list_config);
  } catch (const fbgp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kOk;
}
