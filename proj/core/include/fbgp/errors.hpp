#pragma once

#include <stdexcept>
#include <string>

namespace fbgp {

/// Cholesky factorization failed even at the largest jitter on the ladder.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double attempted_jitter)
      : std::runtime_error(what), jitter_(attempted_jitter) {}

  [[nodiscard]] double attempted_jitter() const noexcept { return jitter_; }

 private:
  double jitter_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fbgp
