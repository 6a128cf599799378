#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pairsim/detection.hpp"
#include "pairsim/qstate.hpp"

namespace pairsim {

// The 16 reconstruction settings: every pair from {H, V, D, R} on each arm,
// arm A major, arm B minor. Single-arm analyzer angles (QWP, HWP) in degrees:
//   H: (0, 0)    projects onto |H>
//   V: (0, 45)   projects onto |V>
//   D: (45, 22.5)   projects onto (|H> + |V>)/sqrt(2)
//   R: (135, 0)  projects onto (|H> - i|V>)/sqrt(2)
std::array<std::pair<AnalyzerSetting, AnalyzerSetting>, 16>
tomography_settings();

struct TomographyOptions {
  int restarts = 3;           // restart 0 is the unperturbed seed
  std::uint64_t seed = 0x746f6d6fULL;  // drives restart perturbations only
  int max_iterations = 100000;
  double relative_tolerance = 1e-10;  // on objective improvement
};

struct TomographyResult {
  DensityMatrix rho;
  // Profiled Poisson deviance at the optimum: the negative log-likelihood
  // minus the saturated model's, so a perfect fit scores 0. Using the
  // deviance rather than the raw log-likelihood keeps the objective free of
  // the large data-only offset that would otherwise swamp relative
  // convergence tests.
  double deviance = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  int best_restart = 0;
  bool converged = false;
  // Deviance after each accepted step of the winning restart; non-increasing.
  std::vector<double> objective_trace;
};

// Direct inversion of count frequencies onto the two-qubit Pauli basis,
// projected back to a strictly positive physical state. Used to seed the
// likelihood optimization and exposed for diagnostics.
DensityMatrix linear_inversion(std::span<const CountRecord> records);

// Maximum-likelihood state reconstruction from 16 records taken at
// tomography_settings() (any order, equal durations). The state is
// parameterized as rho = T^dagger T / tr(T^dagger T) with T lower-triangular
// (16 real parameters) and the Poisson deviance, with a shared intensity
// profiled out in closed form, is minimized by BFGS with Armijo
// backtracking. Deterministic for fixed options.
TomographyResult mle_tomography(std::span<const CountRecord> records,
                                const TomographyOptions& opts = {});

namespace detail {
using TomoParams = Eigen::Matrix<double, 16, 1>;
// rho(t) before normalization checks; exposed for gradient tests.
Mat4 cholesky_to_density(const TomoParams& t);
double tomo_deviance(const TomoParams& t, std::span<const Mat4> projectors,
                     std::span<const double> counts, TomoParams* grad);
}  // namespace detail

}  // namespace pairsim
