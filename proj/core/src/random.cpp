#include "pairsim/random.hpp"

#include <cmath>
#include <limits>

#include "pairsim/errors.hpp"

namespace pairsim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // u1 in (0,1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * M_PI * u2);
}

namespace {

// Inverse-CDF walk starting from `k0` with pmf seeded via lgamma; the pmf
// recurrence p_{k+1} = p_k * mean / (k+1) keeps the loop in plain arithmetic.
std::uint64_t poisson_inverse_cdf(double u, double mean, std::uint64_t k0) {
  double k = static_cast<double>(k0);
  double logp = k * std::log(mean) - mean - std::lgamma(k + 1.0);
  double pmf = std::exp(logp);
  double cdf = pmf;
  // The walk is bounded well past the right tail; 64 sigma cannot be reached
  // by any 53-bit uniform but terminates the loop if pmf underflows to 0.
  const double kmax = mean + 64.0 * std::sqrt(mean) + 64.0;
  while (cdf <= u && k < kmax) {
    k += 1.0;
    pmf *= mean / k;
    cdf += pmf;
  }
  return static_cast<std::uint64_t>(k);
}

}  // namespace

std::uint64_t Rng::poisson(double mean) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw InvalidArgument("poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) {
    return 0;
  }
  if (mean >= kPoissonNormalThreshold) {
    const double z = normal();
    const double v = std::round(mean + std::sqrt(mean) * z);
    return v <= 0.0 ? 0 : static_cast<std::uint64_t>(v);
  }
  const double u = uniform();
  if (mean <= 30.0) {
    return poisson_inverse_cdf(u, mean, 0);
  }
  const double left = mean - 12.0 * std::sqrt(mean);
  const std::uint64_t k0 = left <= 0.0 ? 0 : static_cast<std::uint64_t>(left);
  return poisson_inverse_cdf(u, mean, k0);
}

}  // namespace pairsim
