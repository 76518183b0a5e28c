#include "fbgp/simulators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fbgp {

InterpolatedTable::InterpolatedTable(Interval domain, std::vector<double> mean, std::vector<double> stddev)
    : domain_(domain), mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() < 2) throw std::invalid_argument("table needs at least two knots");
  if (stddev_.size() != mean_.size()) throw std::invalid_argument("mean and stddev tables differ in length");
  if (!(domain_.hi > domain_.lo)) throw std::invalid_argument("table domain is empty");
  for (const double s : stddev_) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("stddev table must be finite and >= 0");
  }
  for (const double m : mean_) {
    if (!std::isfinite(m)) throw std::invalid_argument("mean table must be finite");
  }
}

double InterpolatedTable::knot(std::size_t i) const {
  return domain_.lo + domain_.width() * static_cast<double>(i) / static_cast<double>(mean_.size() - 1);
}

double InterpolatedTable::interpolate(const std::vector<double>& values, double x) const {
  const double segments = static_cast<double>(values.size() - 1);
  const double t = std::clamp((x - domain_.lo) / domain_.width(), 0.0, 1.0) * segments;
  // Knots return the tabulated value exactly.
  const double nearest = std::round(t);
  if (std::abs(t - nearest) < 1e-9) return values[static_cast<std::size_t>(nearest)];
  const auto i = static_cast<std::size_t>(std::floor(t));
  const double frac = t - static_cast<double>(i);
  return (1.0 - frac) * values[i] + frac * values[i + 1];
}

double InterpolatedTable::mean(double x) const { return interpolate(mean_, x); }
double InterpolatedTable::stddev(double x) const { return interpolate(stddev_, x); }

bool SimulatorSpec::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    const auto& iv = domain[static_cast<std::size_t>(k)];
    if (!(x(k) >= iv.lo && x(k) <= iv.hi)) return false;
  }
  return true;
}

double SimulatorSpec::noise_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return noise_std ? *noise_std : noise_fn(x);
}

void SimulatorSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("simulator needs a name");
  if (domain.empty()) throw std::invalid_argument("simulator " + name + " has no input dimensions");
  for (const auto& iv : domain) {
    if (!(iv.hi > iv.lo)) throw std::invalid_argument("simulator " + name + " has an empty interval");
  }
  if (!mean_fn) throw std::invalid_argument("simulator " + name + " has no mean function");
  if (noise_std.has_value() == static_cast<bool>(noise_fn)) {
    throw std::invalid_argument("simulator " + name + " must set exactly one of noise_std / noise_fn");
  }
  if (noise_std && !(*noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
}

double mean_oracle(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!sim.contains(x)) throw std::invalid_argument("point outside the domain of " + sim.name);
  return sim.mean_fn(x);
}

double evaluate(const SimulatorSpec& sim, const Eigen::Ref<const Eigen::VectorXd>& x, Rng& rng) {
  const double mu = mean_oracle(sim, x);
  const double sigma = sim.noise_at(x);
  if (sigma == 0.0) return mu;
  std::normal_distribution<double> normal(0.0, sigma);
  return mu + normal(rng);
}

namespace {

using Vec = Eigen::Ref<const Eigen::VectorXd>;

}  // namespace

// Gramacy & Lee (2012): f(x) = sin(10 pi x) / (2x) + (x - 1)^4.
SimulatorSpec make_gramacy1d() {
  SimulatorSpec s;
  s.name = "gramacy1d";
  s.domain = {{0.5, 2.5}};
  s.mean_fn = [](const Vec& x) {
    return std::sin(10.0 * std::numbers::pi * x(0)) / (2.0 * x(0)) + std::pow(x(0) - 1.0, 4);
  };
  s.noise_std = 0.1;
  return s;
}

// Higdon (2002) as extended by Gramacy & Lee (2008):
// sin(pi x / 5) + cos(4 pi x / 5) / 5 for x < 10, x / 10 - 1 otherwise.
SimulatorSpec make_higdon() {
  SimulatorSpec s;
  s.name = "higdon";
  s.domain = {{0.0, 20.0}};
  s.mean_fn = [](const Vec& x) {
    const double v = x(0);
    if (v < 10.0) return std::sin(std::numbers::pi * v / 5.0) + 0.2 * std::cos(4.0 * std::numbers::pi * v / 5.0);
    return v / 10.0 - 1.0;
  };
  s.noise_std = 0.1;
  return s;
}

// Gramacy & Lee (2008): f(x) = x1 exp(-x1^2 - x2^2).
SimulatorSpec make_gramacy2d() {
  SimulatorSpec s;
  s.name = "gramacy2d";
  s.domain = {{-2.0, 6.0}, {-2.0, 6.0}};
  s.mean_fn = [](const Vec& x) { return x(0) * std::exp(-x(0) * x(0) - x(1) * x(1)); };
  s.noise_std = 0.05;
  return s;
}

// Branin-Hoo with a=1, b=5.1/(4 pi^2), c=5/pi, r=6, s=10, t=1/(8 pi).
SimulatorSpec make_branin() {
  SimulatorSpec s;
  s.name = "branin";
  s.domain = {{-5.0, 10.0}, {0.0, 15.0}};
  s.mean_fn = [](const Vec& x) {
    constexpr double pi = std::numbers::pi;
    constexpr double b = 5.1 / (4.0 * pi * pi);
    constexpr double c = 5.0 / pi;
    constexpr double t = 1.0 / (8.0 * pi);
    const double u = x(1) - b * x(0) * x(0) + c * x(0) - 6.0;
    return u * u + 10.0 * (1.0 - t) * std::cos(x(0)) + 10.0;
  };
  s.noise_std = 11.32;
  return s;
}

// Ishigami with a = 7, b = 0.1.
SimulatorSpec make_ishigami() {
  SimulatorSpec s;
  s.name = "ishigami";
  constexpr double pi = std::numbers::pi;
  s.domain = {{-pi, pi}, {-pi, pi}, {-pi, pi}};
  s.mean_fn = [](const Vec& x) {
    const double s2 = std::sin(x(1));
    return std::sin(x(0)) + 7.0 * s2 * s2 + 0.1 * std::pow(x(2), 4) * std::sin(x(0));
  };
  s.noise_std = 0.187;
  return s;
}

// Hartmann 6-D: -sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2).
SimulatorSpec make_hartmann6() {
  SimulatorSpec s;
  s.name = "hartmann";
  s.domain.assign(6, Interval{0.0, 1.0});
  s.mean_fn = [](const Vec& x) {
    static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static constexpr double a[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                       {0.05, 10, 17, 0.1, 8, 14},
                                       {3, 3.5, 1.7, 10, 17, 8},
                                       {17, 8, 0.05, 10, 0.1, 14}};
    static constexpr double p[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                       {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                       {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                       {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      double inner = 0.0;
      for (int j = 0; j < 6; ++j) inner += a[i][j] * (x(j) - p[i][j]) * (x(j) - p[i][j]);
      total += alpha[i] * std::exp(-inner);
    }
    return -total;
  };
  s.noise_std = 0.0192;
  return s;
}

namespace {

SimulatorSpec table_spec(std::string name, const InterpolatedTable& table_in, Interval domain,
                         std::optional<double> homoscedastic) {
  auto table = std::make_shared<const InterpolatedTable>(table_in);
  SimulatorSpec s;
  s.name = std::move(name);
  s.domain = {domain};
  s.mean_fn = [table](const Vec& x) { return table->mean(x(0)); };
  if (homoscedastic) {
    s.noise_std = homoscedastic;
  } else {
    s.noise_fn = [table](const Vec& x) { return table->stddev(x(0)); };
  }
  return s;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

// Knots are equidistant over [0, 1].
SimulatorSpec make_motorcycle() {
  const Interval domain{0.0, 1.0};
  InterpolatedTable table(domain, {MotorcycleTable::mean.begin(), MotorcycleTable::mean.end()},
                          {MotorcycleTable::stddev.begin(), MotorcycleTable::stddev.end()});
  return table_spec("motorcycle", table, domain, std::nullopt);
}

SimulatorSpec table_simulator_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const std::string name = j.at("name").get<std::string>();
  const auto dom = j.at("domain").get<std::vector<double>>();
  if (dom.size() != 2) throw std::invalid_argument("table simulator domain must be [lo, hi]");
  const Interval domain{dom[0], dom[1]};
  auto mean = j.at("mean").get<std::vector<double>>();
  const bool hetero = j.contains("stddev");
  const bool homo = j.contains("noise_std");
  if (hetero == homo) throw std::invalid_argument("table simulator needs exactly one of stddev / noise_std");
  std::vector<double> stddev = hetero ? j.at("stddev").get<std::vector<double>>() : std::vector<double>(mean.size(), 0.0);
  std::optional<double> noise;
  if (homo) noise = j.at("noise_std").get<double>();
  InterpolatedTable table(domain, std::move(mean), std::move(stddev));
  auto spec = table_spec(lowercase(name), table, domain, noise);
  spec.validate();
  return spec;
}

SimulatorRegistry SimulatorRegistry::with_builtins() {
  SimulatorRegistry r;
  r.add(make_gramacy1d());
  r.add(make_higdon());
  r.add(make_gramacy2d());
  r.add(make_branin());
  r.add(make_ishigami());
  r.add(make_hartmann6());
  r.add(make_motorcycle());
  return r;
}

void SimulatorRegistry::add(SimulatorSpec spec) {
  spec.validate();
  spec.name = lowercase(spec.name);
  if (find(spec.name) != nullptr) throw std::invalid_argument("simulator " + spec.name + " already registered");
  specs_.push_back(std::move(spec));
}

std::string SimulatorRegistry::load_table_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open simulator file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto spec = table_simulator_from_json(buf.str());
  std::string name = spec.name;
  add(std::move(spec));
  return name;
}

const SimulatorSpec* SimulatorRegistry::find(std::string_view name) const {
  const std::string key = lowercase(name);
  for (const auto& s : specs_) {
    if (s.name == key) return &s;
  }
  return nullptr;
}

const SimulatorSpec& SimulatorRegistry::at(std::string_view name) const {
  const auto* s = find(name);
  if (s == nullptr) throw std::invalid_argument("unknown simulator '" + std::string(name) + "'");
  return *s;
}

std::vector<std::string> SimulatorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& s : specs_) out.push_back(s.name);
  return out;
}

}  // namespace fbgp
