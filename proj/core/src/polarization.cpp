#include "pairsim/polarization.hpp"

#include <algorithm>
#include <cmath>

#include "pairsim/errors.hpp"

namespace pairsim {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

double normalize_mod180(double deg) {
  double v = std::fmod(deg, 180.0);
  if (v < 0.0) v += 180.0;
  return v;
}

Mat2 rotation(double theta_rad) {
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat4 kron2(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
  }
  return out;
}

void require_finite_angle(double deg, const char* what) {
  if (!std::isfinite(deg)) {
    throw InvalidArgument(std::string(what) + " angle must be finite");
  }
}

}  // namespace

AnalyzerSetting::AnalyzerSetting(std::optional<double> qwp, double hwp) {
  if (qwp) {
    require_finite_angle(*qwp, "qwp");
    qwp_deg = normalize_mod180(*qwp);
  }
  require_finite_angle(hwp, "hwp");
  hwp_deg = normalize_mod180(hwp);
}

Mat2 hwp_jones(double theta_deg) {
  require_finite_angle(theta_deg, "hwp");
  const double t = 2.0 * theta_deg * kDegToRad;
  Mat2 m;
  m << std::cos(t), std::sin(t), std::sin(t), -std::cos(t);
  return m;
}

Mat2 qwp_jones(double theta_deg) {
  require_finite_angle(theta_deg, "qwp");
  const double t = theta_deg * kDegToRad;
  Mat2 d = Mat2::Zero();
  d(0, 0) = complexd(1.0, 0.0);
  d(1, 1) = complexd(0.0, 1.0);
  const Mat2 m = rotation(t) * d * rotation(-t);
  return std::polar(1.0, -M_PI / 4.0) * m;
}

Projector2 analyzer_projector(const AnalyzerSetting& s) {
  Eigen::Vector2cd h;
  h << complexd(1.0, 0.0), complexd(0.0, 0.0);
  Eigen::Vector2cd phi = hwp_jones(s.hwp_deg).adjoint() * h;
  if (s.qwp_deg) {
    phi = qwp_jones(*s.qwp_deg).adjoint() * phi;
  }
  Projector2 p;
  p.m = phi * phi.adjoint();
  return p;
}

Projector2 orthogonal_complement(const Projector2& p) {
  Projector2 q;
  q.m = Mat2::Identity() - p.m;
  return q;
}

namespace {

void require_trace_one_hermitian(const DensityMatrix& rho) {
  const Mat4& m = rho.matrix();
  if (!m.allFinite() ||
      (m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(m.trace() - complexd(1.0, 0.0)) > 1e-9) {
    throw InvalidArgument(
        "joint_probability: density matrix must be hermitian with unit trace");
  }
}

}  // namespace

double joint_probability(const DensityMatrix& rho, const AnalyzerSetting& a,
                         const AnalyzerSetting& b) {
  require_trace_one_hermitian(rho);
  const Mat4 op = kron2(analyzer_projector(a).m, analyzer_projector(b).m);
  const double p = std::real((rho.matrix() * op).trace());
  return std::clamp(p, 0.0, 1.0);
}

double marginal_probability(const DensityMatrix& rho, const AnalyzerSetting& s,
                            Arm arm) {
  require_trace_one_hermitian(rho);
  const Mat2 proj = analyzer_projector(s).m;
  const Mat4 op = arm == Arm::a ? kron2(proj, Mat2::Identity())
                                : kron2(Mat2::Identity(), proj);
  const double p = std::real((rho.matrix() * op).trace());
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace pairsim
