// No-U-turn sampler with multinomial trajectory sampling, dual-averaging step
// size adaptation and a windowed diagonal metric estimate. The trajectory
// recursion and the extra U-turn checks across subtree boundaries follow the
// formulation used by Stan's base_nuts.

#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fbgp/mcmc.hpp"

namespace fbgp {

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("chains must be positive");
  if (samples_per_chain < 1) throw std::invalid_argument("samples_per_chain must be positive");
  if (warmup < 0 || warmup >= samples_per_chain) {
    throw std::invalid_argument("warmup must be in [0, samples_per_chain)");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw std::invalid_argument("target_accept must be in (0,1)");
  if (max_tree_depth < 1) throw std::invalid_argument("max_tree_depth must be positive");
}

namespace {

constexpr double kMaxEnergyError = 1000.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double logp = kNegInf;
};

// Dual averaging of log step size toward a target acceptance statistic.
class StepSizeAdapter {
 public:
  explicit StepSizeAdapter(double delta) : delta_(delta) {}

  void restart(double step_size) {
    mu_ = std::log(10.0 * step_size);
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    counter_ = 0;
  }

  double learn(double adapt_stat) {
    ++counter_;
    adapt_stat = adapt_stat > 1.0 ? 1.0 : adapt_stat;
    const double eta = 1.0 / (counter_ + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - adapt_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
    const double x_eta = std::pow(counter_, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  [[nodiscard]] double final_step_size() const { return std::exp(x_bar_); }

 private:
  double delta_;
  double mu_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double counter_ = 0.0;
  static constexpr double gamma_ = 0.05;
  static constexpr double t0_ = 10.0;
  static constexpr double kappa_ = 0.75;
};

// Warm-up schedule: a fast initial buffer, doubling slow windows that
// estimate the metric, then a fast terminal buffer.
class WarmupSchedule {
 public:
  explicit WarmupSchedule(int warmup) : warmup_(warmup) {
    if (warmup < 20) {
      adapt_metric_ = false;
      return;
    }
    init_buffer_ = 75;
    term_buffer_ = 50;
    base_window_ = 25;
    if (init_buffer_ + base_window_ + term_buffer_ > warmup) {
      init_buffer_ = static_cast<int>(0.15 * warmup);
      term_buffer_ = static_cast<int>(0.1 * warmup);
      base_window_ = warmup - (init_buffer_ + term_buffer_);
    }
    int start = init_buffer_;
    int size = base_window_;
    const int slow_end = warmup - term_buffer_;
    while (start < slow_end) {
      int end = start + size;
      if (end + 2 * size > slow_end) end = slow_end;
      window_ends_.push_back(end - 1);
      start = end;
      size *= 2;
    }
  }

  [[nodiscard]] bool in_slow_window(int iter) const {
    return adapt_metric_ && iter >= init_buffer_ && iter < warmup_ - term_buffer_;
  }
  [[nodiscard]] bool is_window_end(int iter) const {
    if (!adapt_metric_) return false;
    for (const int e : window_ends_) {
      if (e == iter) return true;
    }
    return false;
  }

 private:
  int warmup_;
  bool adapt_metric_ = true;
  int init_buffer_ = 0;
  int term_buffer_ = 0;
  int base_window_ = 0;
  std::vector<int> window_ends_;
};

class WelfordVariance {
 public:
  explicit WelfordVariance(Eigen::Index dim) : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  // Shrunk toward 1e-3 as in Stan's regularized diagonal estimator.
  [[nodiscard]] Eigen::VectorXd regularized() const {
    const double n = static_cast<double>(n_);
    const Eigen::VectorXd var = m2_ / std::max(n - 1.0, 1.0);
    return (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }

  void reset() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

 private:
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct TransitionResult {
  double accept_stat = 0.0;
  bool divergent = false;
  int leapfrog_steps = 0;
};

class NutsChain {
 public:
  NutsChain(const LogDensity& target, const SamplerConfig& config, Rng rng)
      : target_(target), config_(config), rng_(std::move(rng)) {}

  void set_position(const Eigen::VectorXd& q) {
    z_.q = q;
    z_.grad.resize(q.size());
    z_.logp = evaluate(z_.q, z_.grad);
    z_.p = Eigen::VectorXd::Zero(q.size());
    inv_metric_ = Eigen::VectorXd::Ones(q.size());
  }

  [[nodiscard]] const PhasePoint& state() const { return z_; }
  [[nodiscard]] double step_size() const { return step_size_; }
  [[nodiscard]] const Eigen::VectorXd& inverse_metric() const { return inv_metric_; }
  void set_step_size(double eps) { step_size_ = eps; }
  void set_inverse_metric(Eigen::VectorXd m) { inv_metric_ = std::move(m); }

  // Doubles or halves the step size until one leapfrog step crosses an
  // acceptance probability of 0.8.
  void init_step_size() {
    const PhasePoint saved = z_;
    sample_momentum();
    double h0 = hamiltonian(z_);
    leapfrog(z_, step_size_);
    double delta_h = h0 - hamiltonian(z_);
    const int direction = delta_h > std::log(0.8) ? 1 : -1;
    for (int it = 0; it < 100; ++it) {
      z_ = saved;
      sample_momentum();
      h0 = hamiltonian(z_);
      leapfrog(z_, step_size_);
      delta_h = h0 - hamiltonian(z_);
      if (std::isnan(delta_h)) delta_h = kNegInf;
      if (direction == 1 && !(delta_h > std::log(0.8))) break;
      if (direction == -1 && !(delta_h < std::log(0.8))) break;
      step_size_ = direction == 1 ? 2.0 * step_size_ : 0.5 * step_size_;
      if (step_size_ > 1e7 || step_size_ < 1e-12) break;
    }
    z_ = saved;
  }

  TransitionResult transition() {
    sample_momentum();
    const Eigen::VectorXd p0 = z_.p;
    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;

    Eigen::VectorXd p_sharp0 = inv_metric_.cwiseProduct(p0);
    Eigen::VectorXd p_fwd_fwd = p0, p_sharp_fwd_fwd = p_sharp0;
    Eigen::VectorXd p_fwd_bck = p0, p_sharp_fwd_bck = p_sharp0;
    Eigen::VectorXd p_bck_fwd = p0, p_sharp_bck_fwd = p_sharp0;
    Eigen::VectorXd p_bck_bck = p0, p_sharp_bck_bck = p_sharp0;
    Eigen::VectorXd rho = p0;

    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    divergent_ = false;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int depth = 0; depth < config_.max_tree_depth; ++depth) {
      const Eigen::Index dim = p0.size();
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(dim);
      double log_sum_weight_subtree = kNegInf;
      bool valid_subtree = false;

      if (unif(rng_) > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        PhasePoint edge = z_fwd;
        valid_subtree = build_tree(depth, edge, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                                   p_fwd_fwd, h0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_fwd = std::move(edge);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        PhasePoint edge = z_bck;
        valid_subtree = build_tree(depth, edge, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                                   p_bck_bck, h0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_bck = std::move(edge);
      }
      if (!valid_subtree) break;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (unif(rng_) < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    z_ = std::move(z_sample);
    TransitionResult r;
    r.leapfrog_steps = n_leapfrog;
    r.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
    r.divergent = divergent_;
    return r;
  }

 private:
  double evaluate(const Eigen::VectorXd& q, Eigen::VectorXd& grad) const {
    double lp = kNegInf;
    try {
      lp = target_(q, grad);
    } catch (const std::exception&) {
      lp = kNegInf;
    }
    if (!std::isfinite(lp) || !grad.allFinite()) return kNegInf;
    return lp;
  }

  void sample_momentum() {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < z_.p.size(); ++i) z_.p(i) = normal(rng_) / std::sqrt(inv_metric_(i));
  }

  double hamiltonian(const PhasePoint& z) const {
    if (z.logp == kNegInf) return std::numeric_limits<double>::infinity();
    return -z.logp + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
  }

  void leapfrog(PhasePoint& z, double eps) const {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    z.logp = evaluate(z.q, z.grad);
    if (z.logp == kNegInf) return;
    z.p += 0.5 * eps * z.grad;
  }

  static bool no_u_turn(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg, Eigen::VectorXd& p_end,
                  double h0, double sign, int& n_leapfrog, double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z, sign * step_size_);
      ++n_leapfrog;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > kMaxEnergyError) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = inv_metric_.cwiseProduct(z.p);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Eigen::Index dim = z.q.size();

    // Initial subtree.
    Eigen::VectorXd p_init_end(dim), p_sharp_init_end(dim);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(dim);
    double log_sum_weight_init = kNegInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, h0, sign,
                    n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    // Final subtree.
    PhasePoint z_propose_final = z;
    Eigen::VectorXd p_final_beg(dim), p_sharp_final_beg(dim);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(dim);
    double log_sum_weight_final = kNegInf;
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end, h0,
                    sign, n_leapfrog, log_sum_weight_final, sum_metro_prob)) {
      return false;
    }

    // Multinomial sample from the right subtree.
    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      if (unif(rng_) < std::exp(log_sum_weight_final - log_sum_weight_subtree)) z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;

    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  const LogDensity& target_;
  const SamplerConfig& config_;
  Rng rng_;
  PhasePoint z_;
  Eigen::VectorXd inv_metric_;
  double step_size_ = 1.0;
  bool divergent_ = false;
};

struct ChainOutput {
  Eigen::MatrixXd draws;
  Eigen::VectorXd accept_stats;
  ChainDiagnostics diagnostics;
};

ChainOutput run_chain(const LogDensity& target, const ChainInitializer& init, const SamplerConfig& config, int chain) {
  Rng rng = make_rng(derive_seed(config.seed, static_cast<std::uint64_t>(chain)));
  NutsChain sampler(target, config, Rng{derive_seed(config.seed, {static_cast<std::uint64_t>(chain), 1ULL})});

  // Redraw starting points until the density is finite there.
  for (int attempt = 0;; ++attempt) {
    sampler.set_position(init(rng));
    if (sampler.state().logp != kNegInf) break;
    if (attempt >= 100) throw SamplerFailure("no finite starting point after 100 draws", {});
  }

  const Eigen::Index dim = sampler.state().q.size();
  const int retained = config.retained_per_chain();
  ChainOutput out;
  out.draws.resize(retained, dim);
  out.accept_stats.resize(retained);

  StepSizeAdapter step_adapter(config.target_accept);
  WarmupSchedule schedule(config.warmup);
  WelfordVariance metric_estimator(dim);

  sampler.init_step_size();
  step_adapter.restart(sampler.step_size());

  long leapfrogs = 0;
  for (int iter = 0; iter < config.samples_per_chain; ++iter) {
    const TransitionResult t = sampler.transition();
    if (iter < config.warmup) {
      sampler.set_step_size(step_adapter.learn(t.accept_stat));
      if (schedule.in_slow_window(iter)) metric_estimator.add(sampler.state().q);
      if (schedule.is_window_end(iter)) {
        sampler.set_inverse_metric(metric_estimator.regularized());
        metric_estimator.reset();
        sampler.init_step_size();
        step_adapter.restart(sampler.step_size());
      }
      if (iter == config.warmup - 1) sampler.set_step_size(step_adapter.final_step_size());
      continue;
    }
    const int k = iter - config.warmup;
    out.draws.row(k) = sampler.state().q.transpose();
    out.accept_stats(k) = t.accept_stat;
    out.diagnostics.divergences += t.divergent ? 1 : 0;
    leapfrogs += t.leapfrog_steps;
  }
  out.diagnostics.acceptance_rate = out.accept_stats.mean();
  out.diagnostics.step_size = sampler.step_size();
  out.diagnostics.mean_leapfrog_steps = static_cast<double>(leapfrogs) / retained;
  out.diagnostics.inverse_metric = sampler.inverse_metric();
  return out;
}

}  // namespace

PosteriorSamples sample_nuts(const LogDensity& target, const ChainInitializer& init, const SamplerConfig& config) {
  config.validate();
  std::vector<ChainOutput> outputs(static_cast<std::size_t>(config.chains));
  if (config.parallel_chains && config.chains > 1) {
    std::vector<std::future<ChainOutput>> futures;
    futures.reserve(outputs.size());
    for (int c = 0; c < config.chains; ++c) {
      futures.push_back(std::async(std::launch::async, run_chain, std::cref(target), std::cref(init),
                                   std::cref(config), c));
    }
    for (std::size_t c = 0; c < futures.size(); ++c) outputs[c] = futures[c].get();
  } else {
    for (int c = 0; c < config.chains; ++c) outputs[static_cast<std::size_t>(c)] = run_chain(target, init, config, c);
  }

  const int retained = config.retained_per_chain();
  const Eigen::Index dim = outputs.front().draws.cols();
  PosteriorSamples s;
  s.draws.resize(static_cast<Eigen::Index>(config.chains) * retained, dim);
  s.accept_stats.resize(s.draws.rows());
  s.chain_ids.reserve(static_cast<std::size_t>(s.draws.rows()));
  bool all_diverged = true;
  for (int c = 0; c < config.chains; ++c) {
    const auto& o = outputs[static_cast<std::size_t>(c)];
    s.draws.middleRows(static_cast<Eigen::Index>(c) * retained, retained) = o.draws;
    s.accept_stats.segment(static_cast<Eigen::Index>(c) * retained, retained) = o.accept_stats;
    s.chain_ids.insert(s.chain_ids.end(), static_cast<std::size_t>(retained), c);
    s.diagnostics.push_back(o.diagnostics);
    if (2 * o.diagnostics.divergences <= retained) all_diverged = false;
  }
  if (all_diverged) {
    throw SamplerFailure("every chain had more than half of its transitions diverge", s.diagnostics);
  }
  if (!s.draws.allFinite()) throw SamplerFailure("non-finite draws", s.diagnostics);
  return s;
}

}  // namespace fbgp
