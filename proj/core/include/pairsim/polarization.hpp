#pragma once

#include <Eigen/Dense>
#include <optional>

#include "pairsim/qstate.hpp"

namespace pairsim {

using Mat2 = Eigen::Matrix2cd;

// One analyzer arm: optional quarter-wave plate, then a half-wave plate, then
// a fixed horizontal polarizer (in the order light traverses them). Waveplate
// fast-axis angles are in degrees from horizontal and are stored modulo 180.
struct AnalyzerSetting {
  std::optional<double> qwp_deg;
  double hwp_deg = 0.0;

  AnalyzerSetting() = default;
  AnalyzerSetting(std::optional<double> qwp, double hwp);

  bool has_qwp() const { return qwp_deg.has_value(); }
};

// Half-wave plate at angle theta (degrees):
//   [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
Mat2 hwp_jones(double theta_deg);

// Quarter-wave plate at angle theta (degrees), e^{-i pi/4} global-phase
// convention: e^{-i pi/4} R(t) diag(1, i) R(-t).
Mat2 qwp_jones(double theta_deg);

// Rank-1 single-photon measurement operator.
struct Projector2 {
  Mat2 m;
};

// Projector realized by the analyzer chain: |phi><phi| with
// |phi> = qwp(q)^dagger hwp(h)^dagger |H>. With no QWP this is linear
// polarization at angle 2*hwp_deg.
Projector2 analyzer_projector(const AnalyzerSetting& s);

// I - P; the complementary outcome of the same analyzer basis.
Projector2 orthogonal_complement(const Projector2& p);

// tr(rho (Pa x Pb)), clamped to [0,1]. rho must be hermitian with unit trace
// (cheap checks only; positivity is the caller's contract).
double joint_probability(const DensityMatrix& rho, const AnalyzerSetting& a,
                         const AnalyzerSetting& b);

enum class Arm { a, b };

// tr(rho (P x I)) or tr(rho (I x P)).
double marginal_probability(const DensityMatrix& rho, const AnalyzerSetting& s,
                            Arm arm);

}  // namespace pairsim
