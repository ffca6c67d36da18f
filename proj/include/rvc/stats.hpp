#pragma once

#include <cstdint>
#include <random>

namespace rvc {

/// Inverse standard-normal CDF, Phi^-1(p) for p in (0,1).
/// Rational approximation polished with one Halley step; accurate to ~1e-15.
double normal_quantile(double p);

/// Two-sided Gaussian quantile z such that P(|Z| <= z) = alpha.
/// z(0.99) = 2.5758293...
double two_sided_gauss_quantile(double alpha);

/// Deterministic standard-normal sampler (Box-Muller over mt19937_64).
/// Same seed, same stream, on every platform with IEEE doubles.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  double operator()();

  /// Uniform in [0,1) from the top 53 bits of the engine.
  double uniform();

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rvc
