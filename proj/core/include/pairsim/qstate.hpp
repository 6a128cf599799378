#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>

namespace pairsim {

using complexd = std::complex<double>;
using Ket4 = Eigen::Vector4cd;
using Mat4 = Eigen::Matrix4cd;

// Two-qubit computational basis order is (HH, HV, VH, VV) everywhere:
// amplitude vectors, density matrices, serialized reports. The first letter
// is arm A, the second arm B. Single-qubit basis: H = (1,0), V = (0,1).
inline constexpr std::array<const char*, 4> kBasisLabels = {"HH", "HV", "VH",
                                                            "VV"};

// Normalized two-qubit pure state.
class KetState {
 public:
  // Normalizes; throws InvalidArgument on a zero or non-finite vector.
  explicit KetState(const Ket4& amplitudes);

  const Ket4& amplitudes() const { return amps_; }

  // (|HV> + e^{i theta}|VH>) / sqrt(2)
  static KetState bell(double theta_rad);
  // bell(0)
  static KetState phi_plus();

 private:
  Ket4 amps_;
};

// <a|b>; states equal up to global phase have |overlap| == 1.
complexd overlap(const KetState& a, const KetState& b);

// Two-qubit density operator in the fixed basis order. Construction does not
// validate; is_physical reports violations instead so that diagnostic paths
// can hold non-physical matrices.
class DensityMatrix {
 public:
  DensityMatrix() : m_(Mat4::Zero()) {}
  explicit DensityMatrix(const Mat4& m) : m_(m) {}

  static DensityMatrix pure(const KetState& psi);
  static DensityMatrix maximally_mixed();

  const Mat4& matrix() const { return m_; }

 private:
  Mat4 m_;
};

struct PhysicalityReport {
  bool hermitian = false;
  bool unit_trace = false;
  bool positive = false;
  double hermiticity_error = 0.0;  // max |m - m^dagger| entry
  double trace_error = 0.0;        // |tr - 1|
  double min_eigenvalue = 0.0;

  bool ok() const { return hermitian && unit_trace && positive; }
  // Names the violated properties, e.g. "trace (error 1.0e-01)".
  std::string describe() const;
};

PhysicalityReport is_physical(const DensityMatrix& rho, double tol = 1e-9);

// p * rho + (1-p) * I/4; p outside [0,1] throws InvalidArgument.
DensityMatrix mix_with_white_noise(const DensityMatrix& rho, double p);

// <psi|rho|psi>; throws InvalidState if rho is not physical.
double fidelity(const DensityMatrix& rho, const KetState& psi);

// tr(rho^2); throws InvalidState if rho is not physical.
double purity(const DensityMatrix& rho);

// Clips eigenvalues in [-clip_floor, 0) to zero and renormalizes the trace.
// Values below -clip_floor throw InvalidState. Used to absorb eigensolver
// jitter on states that are physical up to rounding.
DensityMatrix clip_to_physical(const DensityMatrix& rho,
                               double clip_floor = 1e-9);

}  // namespace pairsim
