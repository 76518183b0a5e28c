#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "fbgp/errors.hpp"
#include "fbgp/mcmc.hpp"

namespace fbgp {

void PriorSpec::validate() const {
  if (!(std::isfinite(mean) && std::isfinite(std) && std > 0.0)) {
    throw std::invalid_argument("prior std must be positive and finite");
  }
}

double log_prior(const Eigen::VectorXd& packed, const PriorSpec& prior) {
  const double log_norm = -std::log(prior.std) - 0.5 * std::log(2.0 * std::numbers::pi);
  const double var = prior.std * prior.std;
  return static_cast<double>(packed.size()) * log_norm - 0.5 * (packed.array() - prior.mean).square().sum() / var;
}

Eigen::VectorXd log_prior_gradient(const Eigen::VectorXd& packed, const PriorSpec& prior) {
  return -(packed.array() - prior.mean) / (prior.std * prior.std);
}

double log_posterior(const Dataset& data, const Hyperparameters& theta, const PriorSpec& prior) {
  return log_marginal_likelihood(data, theta) + log_prior(theta.packed(), prior);
}

Eigen::VectorXd log_posterior_gradient(const Dataset& data, const Hyperparameters& theta, const PriorSpec& prior) {
  return lml_gradient(data, theta) + log_prior_gradient(theta.packed(), prior);
}

std::vector<Hyperparameters> initialize_chains(const SamplerConfig& config, const PriorSpec& prior, Eigen::Index dim,
                                               Rng& rng) {
  prior.validate();
  std::normal_distribution<double> normal(prior.mean, prior.std);
  std::vector<Hyperparameters> starts;
  starts.reserve(static_cast<std::size_t>(config.chains));
  for (int c = 0; c < config.chains; ++c) {
    Eigen::VectorXd v(dim + 1);
    for (Eigen::Index i = 0; i <= dim; ++i) v(i) = normal(rng);
    starts.push_back(Hyperparameters::unpack(v));
  }
  return starts;
}

PosteriorSamples sample_posterior(const Dataset& data, const PriorSpec& prior, const SamplerConfig& config) {
  data.validate();
  prior.validate();
  const Eigen::Index dim = data.dim();

  const LogDensity target = [&data, &prior](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
    try {
      const auto theta = Hyperparameters::unpack(q);
      auto lml = lml_and_gradient(data, theta);
      grad = lml.gradient + log_prior_gradient(q, prior);
      return lml.value + log_prior(q, prior);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  // Each chain draws its start from its own stream; the prior draw is the
  // single-chain case of initialize_chains.
  SamplerConfig one = config;
  one.chains = 1;
  const ChainInitializer init = [one, &prior, dim](Rng& rng) {
    return initialize_chains(one, prior, dim, rng).front().packed();
  };
  return sample_nuts(target, init, config);
}

void write_draws_jsonl(std::ostream& out, const PosteriorSamples& samples) {
  int prev = -1;
  int counter = 0;
  for (Eigen::Index j = 0; j < samples.size(); ++j) {
    const int chain = samples.chain_ids[static_cast<std::size_t>(j)];
    counter = chain == prev ? counter + 1 : 0;
    prev = chain;
    nlohmann::json rec;
    rec["chain"] = chain;
    rec["index"] = counter;
    std::vector<double> theta;
    for (Eigen::Index k = 0; k < samples.draws.cols(); ++k) theta.push_back(samples.draws(j, k));
    rec["theta"] = theta;
    rec["accept_stat"] = samples.accept_stats(j);
    out << rec.dump() << '\n';
  }
}

}  // namespace fbgp
