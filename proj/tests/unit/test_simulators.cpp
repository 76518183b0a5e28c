#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fbgp/simulators.hpp"

namespace {

double at(const fbgp::SimulatorSpec& s, std::initializer_list<double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  Eigen::Index k = 0;
  for (double e : x) v(k++) = e;
  return fbgp::mean_oracle(s, v);
}

double sample_std(const fbgp::SimulatorSpec& s, const Eigen::VectorXd& x, int n, std::uint64_t seed) {
  fbgp::Rng rng(seed);
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = fbgp::evaluate(s, x, rng);
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n;
  return std::sqrt((sq - n * mean * mean) / (n - 1));
}

}  // namespace

TEST(Formulas, PointValues) {
  EXPECT_NEAR(at(fbgp::make_gramacy1d(), {0.5}), std::sin(5 * M_PI) + 0.0625, 1e-12);
  EXPECT_NEAR(at(fbgp::make_gramacy1d(), {1.0}), std::sin(10 * M_PI) / 2.0, 1e-12);
  EXPECT_NEAR(at(fbgp::make_higdon(), {5.0}), 0.2, 1e-12);
  EXPECT_NEAR(at(fbgp::make_higdon(), {15.0}), 0.5, 1e-12);
  EXPECT_NEAR(at(fbgp::make_gramacy2d(), {1.0, 0.0}), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(at(fbgp::make_branin(), {-M_PI, 12.275}), 0.397887, 1e-6);
  EXPECT_NEAR(at(fbgp::make_branin(), {M_PI, 2.275}), 0.397887, 1e-6);
  EXPECT_NEAR(at(fbgp::make_ishigami(), {M_PI / 2, M_PI / 2, 0.0}), 8.0, 1e-12);
  EXPECT_NEAR(at(fbgp::make_ishigami(), {0.0, 0.0, 1.0}), 0.0, 1e-12);
  EXPECT_NEAR(at(fbgp::make_hartmann6(), {0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573}), -3.32237, 1e-4);
}

TEST(Formulas, Domains) {
  const auto reg = fbgp::SimulatorRegistry::with_builtins();
  EXPECT_EQ(reg.names().size(), 7u);
  EXPECT_EQ(reg.at("gramacy1d").domain[0].lo, 0.5);
  EXPECT_EQ(reg.at("gramacy1d").domain[0].hi, 2.5);
  EXPECT_EQ(reg.at("higdon").domain[0].hi, 20.0);
  EXPECT_EQ(reg.at("gramacy2d").dim(), 2);
  EXPECT_EQ(reg.at("branin").domain[1].hi, 15.0);
  EXPECT_EQ(reg.at("ishigami").dim(), 3);
  EXPECT_EQ(reg.at("hartmann").dim(), 6);
  EXPECT_EQ(reg.at("motorcycle").dim(), 1);
  EXPECT_EQ(*reg.at("branin").noise_std, 11.32);
  EXPECT_EQ(*reg.at("ishigami").noise_std, 0.187);
  EXPECT_EQ(*reg.at("hartmann").noise_std, 0.0192);
  EXPECT_EQ(*reg.at("gramacy2d").noise_std, 0.05);
  EXPECT_EQ(*reg.at("gramacy1d").noise_std, 0.1);
  EXPECT_EQ(*reg.at("higdon").noise_std, 0.1);
  EXPECT_FALSE(reg.at("motorcycle").noise_std.has_value());
  EXPECT_NE(reg.find("Branin"), nullptr);
  EXPECT_EQ(reg.find("nope"), nullptr);
}

TEST(Noise, BraninAndIshigamiStd) {
  EXPECT_NEAR(sample_std(fbgp::make_branin(), Eigen::Vector2d{1.0, 5.0}, 10000, 1) / 11.32, 1.0, 0.03);
  EXPECT_NEAR(sample_std(fbgp::make_ishigami(), Eigen::Vector3d{0.5, -1.0, 2.0}, 10000, 2) / 0.187, 1.0, 0.03);
}

TEST(Noise, ZeroNoiseReturnsMean) {
  auto s = fbgp::make_gramacy1d();
  s.noise_std = 0.0;
  fbgp::Rng rng(1);
  const Eigen::VectorXd x{{1.3}};
  EXPECT_EQ(fbgp::evaluate(s, x, rng), fbgp::mean_oracle(s, x));
}

TEST(Noise, OutOfDomainThrows) {
  fbgp::Rng rng(1);
  EXPECT_THROW((void)fbgp::evaluate(fbgp::make_gramacy1d(), Eigen::VectorXd{{0.1}}, rng), std::invalid_argument);
  EXPECT_THROW((void)fbgp::mean_oracle(fbgp::make_branin(), Eigen::Vector2d{11.0, 0.0}), std::invalid_argument);
}

TEST(Noise, SeededStreamsReproducible) {
  const auto s = fbgp::make_higdon();
  fbgp::Rng a(4);
  fbgp::Rng b(4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(fbgp::evaluate(s, Eigen::VectorXd{{3.0}}, a), fbgp::evaluate(s, Eigen::VectorXd{{3.0}}, b));
}

TEST(Motorcycle, KnotsExact) {
  const auto s = fbgp::make_motorcycle();
  for (std::size_t i = 0; i < 101; ++i) {
    const Eigen::VectorXd x{{static_cast<double>(i) / 100.0}};
    ASSERT_EQ(fbgp::mean_oracle(s, x), fbgp::MotorcycleTable::mean[i]) << i;
    ASSERT_EQ(s.noise_at(x), fbgp::MotorcycleTable::stddev[i]) << i;
  }
}

TEST(Motorcycle, PaperValuesSpotCheck) {
  EXPECT_EQ(fbgp::MotorcycleTable::mean.size(), 101u);
  EXPECT_EQ(fbgp::MotorcycleTable::stddev.size(), 101u);
  for (const double v : fbgp::MotorcycleTable::stddev) EXPECT_GE(v, 0.0);
}

TEST(Motorcycle, LinearBetweenKnots) {
  const auto s = fbgp::make_motorcycle();
  for (std::size_t i = 0; i < 100; ++i) {
    const double mid = (static_cast<double>(i) + 0.5) / 100.0;
    const double expected = 0.5 * (fbgp::MotorcycleTable::mean[i] + fbgp::MotorcycleTable::mean[i + 1]);
    EXPECT_NEAR(fbgp::mean_oracle(s, Eigen::VectorXd{{mid}}), expected, 1e-12);
    EXPECT_GE(s.noise_at(Eigen::VectorXd{{mid}}), 0.0);
  }
}

TEST(Registry, FiniteMeansOverDomain) {
  const auto reg = fbgp::SimulatorRegistry::with_builtins();
  for (const auto& name : reg.names()) {
    const auto& s = reg.at(name);
    fbgp::Rng rng(fbgp::hash_label(name));
    const Eigen::MatrixXd pts = fbgp::to_natural(s, fbgp::maximin_lhs(10000, s.dim(), rng, 1));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) ASSERT_TRUE(std::isfinite(fbgp::mean_oracle(s, pts.row(i).transpose())));
  }
}

TEST(Registry, TableFileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "fbgp_table_sim.json";
  {
    std::ofstream out(path);
    out << R"({"name": "ramp", "domain": [0, 2], "mean": [0, 1, 4], "noise_std": 0.0})";
  }
  auto reg = fbgp::SimulatorRegistry::with_builtins();
  EXPECT_EQ(reg.load_table_file(path), "ramp");
  EXPECT_NEAR(fbgp::mean_oracle(reg.at("ramp"), Eigen::VectorXd{{1.5}}), 2.5, 1e-12);
  std::filesystem::remove(path);
  EXPECT_THROW((void)fbgp::table_simulator_from_json(R"({"name": "x", "domain": [0, 1], "mean": [0, 1]})"),
               std::exception);
}

TEST(Design, LatinHypercubeStratification) {
  fbgp::Rng rng(1);
  for (const auto& [n, d] : std::vector<std::pair<int, int>>{{3, 1}, {10, 2}, {17, 6}, {50, 3}}) {
    const Eigen::MatrixXd x = fbgp::maximin_lhs(n, d, rng, 20);
    for (int k = 0; k < d; ++k) {
      std::vector<int> strata;
      for (int i = 0; i < n; ++i) strata.push_back(static_cast<int>(std::floor(x(i, k) * n)));
      std::sort(strata.begin(), strata.end());
      for (int i = 0; i < n; ++i) ASSERT_EQ(strata[static_cast<std::size_t>(i)], i);
    }
  }
}

TEST(Design, MaximinTwoPoints) {
  fbgp::Rng rng(2);
  const Eigen::MatrixXd x = fbgp::maximin_lhs(2, 1, rng, 64);
  EXPECT_GE(std::abs(x(0, 0) - x(1, 0)), 0.5);
}

TEST(Design, SingleAndSeeded) {
  fbgp::Rng a(3);
  fbgp::Rng b(3);
  EXPECT_EQ(fbgp::maximin_lhs(1, 3, a, 10).rows(), 1);
  fbgp::Rng c(4);
  fbgp::Rng e(4);
  EXPECT_EQ(fbgp::maximin_lhs(8, 2, c), fbgp::maximin_lhs(8, 2, e));
}

TEST(Design, GridPools) {
  fbgp::Rng rng(5);
  const auto g1 = fbgp::grid_pool(fbgp::make_gramacy1d(), rng);
  ASSERT_EQ(g1.rows(), 100);
  EXPECT_EQ(g1(0, 0), 0.5);
  EXPECT_EQ(g1(99, 0), 2.5);
  for (Eigen::Index i = 1; i < 100; ++i) EXPECT_NEAR(g1(i, 0) - g1(i - 1, 0), 2.0 / 99.0, 1e-12);

  EXPECT_EQ(fbgp::grid_pool(fbgp::make_branin(), rng).rows(), 10000);

  const auto s3 = fbgp::make_ishigami();
  const auto g3 = fbgp::grid_pool(s3, rng);
  ASSERT_EQ(g3.rows(), 10000);
  std::set<std::vector<long>> seen;
  for (Eigen::Index i = 0; i < g3.rows(); ++i) {
    std::vector<long> idx;
    for (int k = 0; k < 3; ++k) {
      const double t = (g3(i, k) - s3.domain[static_cast<std::size_t>(k)].lo) / s3.domain[static_cast<std::size_t>(k)].width() * 99.0;
      ASSERT_NEAR(t, std::round(t), 1e-9);
      idx.push_back(std::lround(t));
    }
    seen.insert(idx);
  }
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(fbgp::grid_pool(s3, rng), g3);
}

TEST(Design, UnitMapsRoundTrip) {
  const auto s = fbgp::make_branin();
  fbgp::Rng rng(6);
  const Eigen::MatrixXd u = fbgp::maximin_lhs(20, 2, rng, 5);
  EXPECT_LT((fbgp::to_unit(s, fbgp::to_natural(s, u)) - u).cwiseAbs().maxCoeff(), 1e-15);
}
