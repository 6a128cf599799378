#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "pairsim/detection.hpp"

namespace pairsim {

// Least-squares fit of c(phi) = A + B cos(4 (phi - phi0)) to a coincidence
// fringe scanned in half-wave-plate angle phi (degrees; one period is 90).
// Linear in (A, B cos 4phi0, B sin 4phi0), so the weighted solve is exact.
// Weights are Poisson: w = 1 / max(count, 1).
struct FringeFit {
  double offset = 0.0;     // A
  double amplitude = 0.0;  // B >= 0
  double phase_deg = 0.0;  // phi0, reduced to [0, 90)
  double c_max = 0.0;      // A + B
  double c_min = 0.0;      // A - B, clamped at 0
  double visibility = 0.0; // (c_max - c_min) / (c_max + c_min)
  double residual_rms = 0.0;
  bool c_min_clamped = false;  // set when the fitted minimum was negative
};

// Requires >= 6 points spanning at least one period; otherwise FitError.
FringeFit fit_sinusoid(std::span<const double> hwp_deg,
                       std::span<const double> counts);

// Two-photon interference dip versus path-length offset x (mm):
//   c(x) = baseline * (1 - V * max(0, 1 - |x - center| / l_c))
double hom_coincidence_curve(double x_mm, double center_mm, double lc_mm,
                             double visibility, double baseline);

struct HomFit {
  double baseline = 0.0;
  double visibility = 0.0;          // (c_max - c_min) / c_max of the model
  double coherence_length_mm = 0.0;
  double center_mm = 0.0;
  double residual_rms = 0.0;
};

// Least-squares fit of the dip model. Needs >= 8 points covering the dip and
// both shoulders; data without a dip (min/max > 0.9) raises FitError. When
// the minimum sits on a flat plateau the center search starts from the
// plateau midpoint.
HomFit fit_triangle(std::span<const double> position_mm,
                    std::span<const double> counts);

namespace detail {
// Initial dip-center estimate: midpoint of the plateau of minimal counts.
double dip_plateau_center(std::span<const double> position_mm,
                          std::span<const double> counts);
}  // namespace detail

// Spectral width from a triangular-dip coherence length and vice versa:
//   dlambda = 1.39 lambda^2 / (pi l_c), lengths mm, wavelengths nm, width nm.
double bandwidth_from_coherence_length(double lc_mm, double lambda_nm);
double coherence_length_from_bandwidth(double dlambda_nm, double lambda_nm);

// Correlation settings for the Bell parameter: polarization analyzer angles
// a = 0, a' = 45, b = 22.5, b' = 67.5 degrees (half-wave plate angles are
// half of these). Each of the four (a,b) pairs is measured in the four
// complement combinations (a,b), (a,b+90), (a+90,b), (a+90,b+90).
//
// S = -E(a,b) + E(a,b') + E(a',b) + E(a',b'), the sign pattern fixed once by
// maximizing |S| on the ideal phi+ state (kChshSigns below); the ideal value
// is 2 sqrt(2).
inline constexpr std::array<double, 4> kChshSigns = {-1.0, 1.0, 1.0, 1.0};

// The 16 analyzer-pair settings in record order: pair major in the order
// (a,b), (a,b'), (a',b), (a',b'); within a pair (0,0), (0,90), (90,0),
// (90,90) complement offsets.
std::array<std::pair<AnalyzerSetting, AnalyzerSetting>, 16> chsh_settings();

struct ChshResult {
  double S = 0.0;
  double sigma_S = 0.0;  // Poisson propagation through each E
  std::array<double, 4> E{};
  std::array<double, 4> sigma_E{};
};

// Requires exactly 16 records matching chsh_settings() (any order; angles
// compared modulo 180 within 1e-6). Each basis needs a positive total count.
ChshResult chsh(std::span<const CountRecord> records);

// Pairs/s per mW per nm recovered from a coincidence rate:
//   detected: 2 Nc / (P dlambda)
//   inferred: 2 Nc / (alpha1^2 alpha2^2 d eta1 eta2 P dlambda)
double brightness_detected(double coincidence_cps, double pump_mw,
                           double bandwidth_nm);
double brightness_inferred(double coincidence_cps, double alpha1, double alpha2,
                           double duty_cycle, double eta1, double eta2,
                           double pump_mw, double bandwidth_nm);

// Visibility of the 45-degree correlation basis evaluated from exact outcome
// probabilities: (C(45,45) - C(45,135)) / (C(45,45) + C(45,135)) with both
// analyzers HWP-only. For the source model at theta = 0 this equals
// noise_p * 2 r / (1 + r^2).
double visibility_45basis(const DensityMatrix& rho);

}  // namespace pairsim
