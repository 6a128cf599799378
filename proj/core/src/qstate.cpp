#include "pairsim/qstate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pairsim/errors.hpp"

namespace pairsim {

KetState::KetState(const Ket4& amplitudes) : amps_(amplitudes) {
  if (!amps_.allFinite()) {
    throw InvalidArgument("ket amplitudes must be finite");
  }
  const double n = amps_.norm();
  if (n < 1e-12) {
    throw InvalidArgument("ket amplitudes must not all vanish");
  }
  amps_ /= n;
}

KetState KetState::bell(double theta_rad) {
  if (!std::isfinite(theta_rad)) {
    throw InvalidArgument("bell phase must be finite");
  }
  Ket4 v = Ket4::Zero();
  const double s = 1.0 / std::sqrt(2.0);
  v(1) = complexd(s, 0.0);
  v(2) = std::polar(s, theta_rad);
  return KetState(v);
}

KetState KetState::phi_plus() { return bell(0.0); }

complexd overlap(const KetState& a, const KetState& b) {
  return a.amplitudes().dot(b.amplitudes());
}

DensityMatrix DensityMatrix::pure(const KetState& psi) {
  const Ket4& v = psi.amplitudes();
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(Mat4::Identity() * 0.25);
}

std::string PhysicalityReport::describe() const {
  std::ostringstream os;
  auto add = [&os](const char* what, double err) {
    if (os.tellp() > 0) os << ", ";
    os << what << " (error " << err << ")";
  };
  if (!hermitian) add("hermiticity", hermiticity_error);
  if (!unit_trace) add("trace", trace_error);
  if (!positive) add("positivity", min_eigenvalue);
  if (os.tellp() == 0) return "physical";
  return os.str();
}

PhysicalityReport is_physical(const DensityMatrix& rho, double tol) {
  PhysicalityReport r;
  const Mat4& m = rho.matrix();
  if (!m.allFinite()) {
    r.hermiticity_error = std::numeric_limits<double>::infinity();
    r.trace_error = std::numeric_limits<double>::infinity();
    return r;
  }
  r.hermiticity_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
  r.hermitian = r.hermiticity_error <= tol;
  r.trace_error = std::abs(m.trace() - complexd(1.0, 0.0));
  r.unit_trace = r.trace_error <= tol;
  Eigen::SelfAdjointEigenSolver<Mat4> es((m + m.adjoint()) / 2.0);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.positive = r.min_eigenvalue >= -tol;
  return r;
}

DensityMatrix mix_with_white_noise(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument("mixing weight must lie in [0,1]");
  }
  return DensityMatrix(p * rho.matrix() +
                       (1.0 - p) * 0.25 * Mat4::Identity());
}

namespace {

void require_physical(const DensityMatrix& rho, const char* op) {
  const PhysicalityReport r = is_physical(rho);
  if (!r.ok()) {
    throw InvalidState(std::string(op) +
                       ": density matrix is not physical: " + r.describe());
  }
}

}  // namespace

double fidelity(const DensityMatrix& rho, const KetState& psi) {
  require_physical(rho, "fidelity");
  const Ket4& v = psi.amplitudes();
  const complexd f = (v.adjoint() * rho.matrix() * v)(0, 0);
  return std::real(f);
}

double purity(const DensityMatrix& rho) {
  require_physical(rho, "purity");
  return std::real((rho.matrix() * rho.matrix()).trace());
}

DensityMatrix clip_to_physical(const DensityMatrix& rho, double clip_floor) {
  const Mat4 herm = (rho.matrix() + rho.matrix().adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat4> es(herm);
  Eigen::Vector4d evals = es.eigenvalues();
  for (int i = 0; i < 4; ++i) {
    if (evals(i) < -clip_floor) {
      throw InvalidState("clip_to_physical: eigenvalue below clip floor");
    }
    if (evals(i) < 0.0) evals(i) = 0.0;
  }
  const double tr = evals.sum();
  if (tr <= 0.0) {
    throw InvalidState("clip_to_physical: zero trace after clipping");
  }
  evals /= tr;
  const Mat4 out = es.eigenvectors() * evals.asDiagonal() *
                   es.eigenvectors().adjoint();
  return DensityMatrix(out);
}

}  // namespace pairsim
