#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbgp/campaign.hpp"
#include "fbgp/errors.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fbgp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fbgp::CampaignConfig small(const fs::path& out, std::vector<std::string> sims, std::vector<fbgp::Criterion> crits,
                           int runs) {
  auto c = fbgp::parse_campaign_config(R"({"campaign": "t", "iterations": 2, "test_points": 50,
      "lhs_candidates": 5, "sampler": {"chains": 2, "samples": 40, "warmup": 20}})");
  c.output_dir = out;
  c.simulators = std::move(sims);
  c.criteria = std::move(crits);
  c.runs = runs;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, EmptyIsFullProtocol) {
  const auto c = fbgp::parse_campaign_config("{}");
  EXPECT_EQ(c.simulators.size(), 7u);
  EXPECT_EQ(c.criteria.size(), 5u);
  EXPECT_EQ(c.runs, 10);
  EXPECT_EQ(c.experiment.sampler.chains, 5);
  EXPECT_EQ(c.experiment.sampler.samples_per_chain, 500);
  EXPECT_EQ(c.experiment.sampler.warmup, 200);
  EXPECT_EQ(c.experiment.initial_points, 3);
  EXPECT_EQ(c.experiment.pool.per_axis, 100);
  EXPECT_EQ(c.experiment.pool.cap, 10000);
  EXPECT_EQ(c.experiment.prior.std, 3.0);
  EXPECT_NO_THROW(c.validate(fbgp::SimulatorRegistry::with_builtins()));
}

TEST(Config, DeskPreset) {
  const auto c = fbgp::parse_campaign_config(R"({"preset": "desk", "runs": 3})");
  EXPECT_EQ(c.experiment.sampler.chains, 2);
  EXPECT_EQ(c.experiment.sampler.samples_per_chain, 200);
  EXPECT_EQ(c.experiment.sampler.warmup, 100);
  EXPECT_EQ(c.experiment.iterations, 30);
  EXPECT_EQ(c.runs, 3);
}

TEST(Config, Errors) {
  EXPECT_THROW((void)fbgp::parse_campaign_config(R"({"criteria": ["EI"]})"), fbgp::ConfigError);
  EXPECT_THROW((void)fbgp::parse_campaign_config(R"({"bogus": 1})"), fbgp::ConfigError);
  EXPECT_THROW((void)fbgp::parse_campaign_config(R"({"runs": "many"})"), fbgp::ConfigError);
  EXPECT_THROW((void)fbgp::parse_campaign_config("{"), fbgp::ConfigError);
  const auto reg = fbgp::SimulatorRegistry::with_builtins();
  EXPECT_THROW(fbgp::parse_campaign_config(R"({"simulators": ["nope"]})").validate(reg), fbgp::ConfigError);
  EXPECT_THROW(fbgp::parse_campaign_config(R"({"simulators": []})").validate(reg), fbgp::ConfigError);
  EXPECT_THROW(fbgp::parse_campaign_config(R"({"runs": 0})").validate(reg), fbgp::ConfigError);
}

TEST(Config, UnknownSimulatorStopsBeforeWork) {
  const auto dir = scratch("unknown");
  auto c = small(dir, {"gramacy1d", "nope"}, {fbgp::Criterion::ALM}, 1);
  EXPECT_THROW((void)fbgp::run_campaign(c, false), fbgp::ConfigError);
  EXPECT_FALSE(fs::exists(dir / "t" / "records"));
}

TEST(Seeds, StableUnderGridChanges) {
  const auto s = fbgp::run_seed(42, "higdon", fbgp::Criterion::BALD, 3);
  EXPECT_EQ(s, fbgp::run_seed(42, "Higdon", fbgp::Criterion::BALD, 3));
  EXPECT_NE(s, fbgp::run_seed(42, "higdon", fbgp::Criterion::BALD, 4));
  EXPECT_NE(s, fbgp::run_seed(42, "higdon", fbgp::Criterion::ALM, 3));
  EXPECT_NE(s, fbgp::run_seed(43, "higdon", fbgp::Criterion::BALD, 3));
  // Pure function of its arguments: a compile-time constant.
  static_assert(fbgp::derive_seed(1, "a") == fbgp::derive_seed(1, "a"));
}

TEST(Run, SingleCellThenSkipThenForce) {
  const auto dir = scratch("single");
  const auto c = small(dir, {"gramacy1d"}, {fbgp::Criterion::ALM}, 1);
  const auto first = fbgp::run_campaign(c, false);
  EXPECT_EQ(first.executed, 1);
  EXPECT_EQ(first.failed, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "t" / "records")) files += e.path().extension() == ".json";
  EXPECT_EQ(files, 1u);

  const auto path = fbgp::record_path(dir / "t", "gramacy1d", fbgp::Criterion::ALM, 0);
  const auto before = fs::last_write_time(path);
  const auto again = fbgp::run_campaign(c, false);
  EXPECT_EQ(again.executed, 0);
  EXPECT_EQ(again.skipped, 1);
  EXPECT_EQ(fs::last_write_time(path), before);

  const auto forced = fbgp::run_campaign(c, true);
  EXPECT_EQ(forced.executed, 1);
}

TEST(Run, RecordsRoundTrip) {
  const auto dir = scratch("roundtrip");
  const auto c = small(dir, {"higdon"}, {fbgp::Criterion::BALD}, 1);
  (void)fbgp::run_campaign(c, false);
  const auto rec = fbgp::read_record(fbgp::record_path(dir / "t", "higdon", fbgp::Criterion::BALD, 0));
  EXPECT_EQ(rec.campaign, "t");
  EXPECT_EQ(rec.simulator, "higdon");
  EXPECT_EQ(rec.criterion, fbgp::Criterion::BALD);
  EXPECT_EQ(rec.seed, fbgp::run_seed(c.master_seed, "higdon", fbgp::Criterion::BALD, 0));
  EXPECT_EQ(rec.curve.records.size(), 2u);
  EXPECT_FALSE(rec.started_at.empty());
  EXPECT_NE(rec.config_snapshot.find("\"iterations\":2"), std::string::npos);

  fbgp::ExperimentConfig ex = c.experiment;
  ex.simulator = "higdon";
  ex.criterion = fbgp::Criterion::BALD;
  ex.seed = rec.seed;
  ex.design_seed = rec.design_seed;
  EXPECT_EQ(fbgp::curve_payload_json(rec.curve), fbgp::curve_payload_json(fbgp::run_experiment(ex)));
}

TEST(Run, ByteIdenticalAcrossWorkerCounts) {
  const auto d1 = scratch("w1");
  const auto d2 = scratch("w2");
  auto c1 = small(d1, {"gramacy1d", "higdon"}, {fbgp::Criterion::QB_MGP, fbgp::Criterion::RANDOM}, 2);
  auto c2 = c1;
  c2.output_dir = d2;
  c2.workers = 3;
  (void)fbgp::run_campaign(c1, false);
  (void)fbgp::run_campaign(c2, false);
  const auto r1 = fbgp::load_records(d1 / "t");
  const auto r2 = fbgp::load_records(d2 / "t");
  ASSERT_EQ(r1.size(), 8u);
  ASSERT_EQ(r2.size(), 8u);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(fbgp::curve_payload_json(r1[i].curve), fbgp::curve_payload_json(r2[i].curve));
  }
}

TEST(Report, FromRecordsWithGap) {
  const auto dir = scratch("report");
  auto c = small(dir, {"gramacy1d"}, {fbgp::Criterion::ALM, fbgp::Criterion::B_QBC}, 2);
  (void)fbgp::run_campaign(c, false);
  c.simulators = {"higdon"};
  c.criteria = {fbgp::Criterion::B_QBC};
  (void)fbgp::run_campaign(c, false);

  const auto out = dir / "out";
  const auto files = fbgp::generate_report(dir / "t", "alm", fbgp::Metric::RMSE, out);
  ASSERT_EQ(files.tables.size(), 1u);
  const auto& table = files.tables[0];
  EXPECT_EQ(table.rows[0].criterion, "ALM");
  EXPECT_EQ(table.rows[0].cells[0]->mean, 0.0);
  EXPECT_FALSE(table.rows[1].cells[1].has_value());
  EXPECT_NE(read_file(out / "report_rmse.txt").find("n/a"), std::string::npos);
  EXPECT_NE(read_file(out / "report_rmse.json").find("\"missing\""), std::string::npos);
  const std::string csv = read_file(out / "curves_rmse.csv");
  EXPECT_EQ(csv.rfind("simulator,criterion,metric,iteration,runs,mean,std", 0), 0u);

  // Pure function of records: regenerating gives identical bytes.
  const auto again = dir / "again";
  (void)fbgp::generate_report(dir / "t", "ALM", fbgp::Metric::RMSE, again);
  EXPECT_EQ(read_file(out / "report_rmse.json"), read_file(again / "report_rmse.json"));
  EXPECT_EQ(read_file(out / "curves_rmse.csv"), read_file(again / "curves_rmse.csv"));

  EXPECT_THROW((void)fbgp::generate_report(dir / "t", "EI", std::nullopt, out), fbgp::ConfigError);
  EXPECT_THROW((void)fbgp::generate_report(scratch("empty"), "ALM", std::nullopt, out), fbgp::ConfigError);
}

TEST(Validate, CleanSuitesPass) {
  std::ostringstream log;
  for (const std::string s : {"gp", "gradient", "rdauc"}) {
    const auto r = fbgp::run_validation(s, 0, log);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(r[0].passed) << r[0].detail;
  }
  EXPECT_THROW((void)fbgp::run_validation("nope", 0, log), std::invalid_argument);
}

TEST(Validate, FlippedKernelSignFailsGradientSuite) {
  // Kernel with exp(+d^2 / 2l^2) in place of exp(-d^2 / 2l^2).
  const fbgp::LmlFunction mutant = [](const fbgp::Dataset& d, const fbgp::Hyperparameters& t) {
    const Eigen::Index n = d.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Eigen::Index q = 0; q < d.dim(); ++q) {
          s += std::pow(d.inputs(i, q) - d.inputs(j, q), 2) / (2.0 * std::exp(2.0 * t.log_length_scales(q)));
        }
        k(i, j) = std::exp(s);
      }
      k(i, i) += t.noise_variance();
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    return -0.5 * d.targets.dot(lu.solve(d.targets)) - 0.5 * std::log(std::abs(lu.determinant())) -
           0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
  };
  EXPECT_FALSE(fbgp::validate_gradients(0, mutant).passed);
  EXPECT_TRUE(fbgp::validate_gradients(0).passed);
}

TEST(Validate, SeedPinnedReproducible) {
  EXPECT_EQ(fbgp::validate_rdauc(5).detail, fbgp::validate_rdauc(5).detail);
  EXPECT_EQ(fbgp::validate_gradients(5).detail, fbgp::validate_gradients(5).detail);
}
