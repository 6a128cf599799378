#pragma once

#include <vector>

#include "pairsim/qstate.hpp"

namespace pairsim {

struct TuningCurvePoint {
  double temperature_c = 0.0;
  double signal_wavelength_nm = 0.0;
};

// Degenerate-signal wavelength versus crystal temperature, interpolated
// piecewise-linearly between calibration points. Lookups are accepted up to
// 5 C beyond either end (linear extrapolation with the edge segment slope);
// anything further throws OutOfRange.
class TuningCurve {
 public:
  // Requires >= 2 points with strictly ascending temperatures.
  explicit TuningCurve(std::vector<TuningCurvePoint> points);

  // Measured calibration table of the periodically poled crystal used here.
  static TuningCurve default_curve();

  double signal_wavelength_nm(double temperature_c) const;

  double min_temperature_c() const { return points_.front().temperature_c; }
  double max_temperature_c() const { return points_.back().temperature_c; }
  const std::vector<TuningCurvePoint>& points() const { return points_; }

  static constexpr double kExtrapolationMarginC = 5.0;

 private:
  std::vector<TuningCurvePoint> points_;
};

// Energy conservation: 1/lambda_i = 1/lambda_p - 1/lambda_s.
double idler_wavelength_nm(double signal_nm, double pump_nm);

// Pair source parameters. The emitted two-photon state is
//   p |psi><psi| + (1-p) I/4,  |psi> = (|HV> + r e^{i theta} |VH>) / sqrt(1+r^2)
// with p = noise_p and r = balance. pair_rate_coeff is the generated-pair
// rate per mW of pump before fiber coupling; alpha1/alpha2 are the collection
// efficiencies of the two output ports.
struct SourceConfig {
  double pump_power_mw = 60.0;
  double pump_wavelength_nm = 775.04;
  double crystal_temperature_c = 32.0;
  double theta_rad = 0.0;
  double balance = 0.6631;
  double noise_p = 0.964;
  double pair_rate_coeff = 67238.4;
  double alpha1 = 0.82;
  double alpha2 = 0.32;
  double coherence_length_mm = 0.44;

  // Throws InvalidArgument naming the offending field.
  void validate() const;

  // Values for the setup this simulator models. noise_p reproduces the
  // measured 45-degree-basis fringe visibility; balance additionally
  // reproduces the reconstructed-state fidelity; pair_rate_coeff is
  // calibrated so the coincidence rate at a fringe maximum is 150 cps.
  static SourceConfig defaults();
};

// Emitted polarization state for the configured phase, balance and noise.
DensityMatrix output_state(const SourceConfig& cfg);

// Coupled pair rate at the fiber outputs in pairs/s:
//   pair_rate_coeff * pump_power_mw * (alpha1 * alpha2)^2
double pair_rate(const SourceConfig& cfg);

}  // namespace pairsim
