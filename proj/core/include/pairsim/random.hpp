#pragma once

#include <cstdint>
#include <random>

namespace pairsim {

// SplitMix64 step; used as a seed mixer.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for stream `index` of a run with the given master seed.
//
// Scheme (stable, part of the on-disk format since per-record seeds are
// written into count CSVs): seed_k = splitmix64(master ^ splitmix64(k + 1)).
// One stream per record, indexed in file order; the simulation functions
// document how records are ordered.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Deterministic RNG. Distributions are implemented here instead of on top of
// std:: distribution objects so that output is identical across standard
// library vendors; mt19937_64 itself is pinned by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  // Poisson sample. Inverse-CDF search below kPoissonNormalThreshold (the
  // search starts 12 sigma left of the mean, far below the resolution of a
  // 53-bit uniform, so the truncation is unobservable); above the threshold a
  // rounded normal approximation is used. mean 0 returns 0; negative or
  // non-finite means throw InvalidArgument.
  std::uint64_t poisson(double mean);

  static constexpr double kPoissonNormalThreshold = 1e6;

 private:
  std::mt19937_64 eng_;
};

}  // namespace pairsim
