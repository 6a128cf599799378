#include "pairsim/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pairsim/errors.hpp"
#include "pairsim/polarization.hpp"
#include "pairsim/random.hpp"

namespace pairsim {

std::array<std::pair<AnalyzerSetting, AnalyzerSetting>, 16>
tomography_settings() {
  const std::array<AnalyzerSetting, 4> arm = {
      AnalyzerSetting(0.0, 0.0),     // H
      AnalyzerSetting(0.0, 45.0),    // V
      AnalyzerSetting(45.0, 22.5),   // D
      AnalyzerSetting(135.0, 0.0),   // R
  };
  std::array<std::pair<AnalyzerSetting, AnalyzerSetting>, 16> out;
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 4; ++j) {
      out[4 * i + j] = {arm[i], arm[j]};
    }
  }
  return out;
}

namespace {

Mat4 kron2(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
  }
  return out;
}

bool same_angle_mod180(double a, double b) {
  double d = std::abs(std::fmod(a - b, 180.0));
  if (d > 90.0) d = 180.0 - d;
  return d < 1e-6;
}

bool same_setting(const AnalyzerSetting& x, const AnalyzerSetting& y) {
  if (x.has_qwp() != y.has_qwp()) return false;
  if (x.has_qwp() && !same_angle_mod180(*x.qwp_deg, *y.qwp_deg)) return false;
  return same_angle_mod180(x.hwp_deg, y.hwp_deg);
}

// Reorders records into tomography_settings() order; rejects mismatches.
std::array<const CountRecord*, 16> canonical_order(
    std::span<const CountRecord> records) {
  if (records.size() != 16) {
    throw InvalidArgument("tomography: expected exactly 16 records");
  }
  const auto settings = tomography_settings();
  std::array<const CountRecord*, 16> out{};
  for (const CountRecord& rec : records) {
    bool placed = false;
    for (size_t k = 0; k < 16; ++k) {
      if (!out[k] && same_setting(rec.setting_a, settings[k].first) &&
          same_setting(rec.setting_b, settings[k].second)) {
        out[k] = &rec;
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw InvalidArgument(
          "tomography: record does not match the documented settings");
    }
    if (!(rec.coincidences >= 0.0) || !std::isfinite(rec.coincidences)) {
      throw InvalidArgument("tomography: counts must be finite and >= 0");
    }
  }
  const double d0 = out[0]->duration_s;
  for (const CountRecord* rec : out) {
    if (std::abs(rec->duration_s - d0) > 1e-9 * std::max(1.0, d0)) {
      throw InvalidArgument("tomography: records must share one duration");
    }
  }
  return out;
}

std::array<Mat4, 16> setting_projectors() {
  const auto settings = tomography_settings();
  std::array<Mat4, 16> ops;
  for (size_t k = 0; k < 16; ++k) {
    ops[k] = kron2(analyzer_projector(settings[k].first).m,
                   analyzer_projector(settings[k].second).m);
  }
  return ops;
}

std::array<Mat4, 16> pauli_basis() {
  Mat2 id = Mat2::Identity();
  Mat2 sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << complexd(0, 0), complexd(0, -1), complexd(0, 1), complexd(0, 0);
  sz << 1, 0, 0, -1;
  const std::array<Mat2, 4> s = {id, sx, sy, sz};
  std::array<Mat4, 16> basis;
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 4; ++j) {
      basis[4 * i + j] = 0.5 * kron2(s[i], s[j]);
    }
  }
  return basis;
}

// Lower-triangular T from the 16-parameter vector: diagonal first (real),
// then the six sub-diagonal entries row by row (re, im pairs).
Mat4 params_to_t(const detail::TomoParams& t) {
  Mat4 m = Mat4::Zero();
  m(0, 0) = t(0);
  m(1, 1) = t(1);
  m(2, 2) = t(2);
  m(3, 3) = t(3);
  m(1, 0) = complexd(t(4), t(5));
  m(2, 0) = complexd(t(6), t(7));
  m(2, 1) = complexd(t(8), t(9));
  m(3, 0) = complexd(t(10), t(11));
  m(3, 1) = complexd(t(12), t(13));
  m(3, 2) = complexd(t(14), t(15));
  return m;
}

detail::TomoParams t_to_params(const Mat4& m) {
  detail::TomoParams t;
  t(0) = std::real(m(0, 0));
  t(1) = std::real(m(1, 1));
  t(2) = std::real(m(2, 2));
  t(3) = std::real(m(3, 3));
  t(4) = std::real(m(1, 0));
  t(5) = std::imag(m(1, 0));
  t(6) = std::real(m(2, 0));
  t(7) = std::imag(m(2, 0));
  t(8) = std::real(m(2, 1));
  t(9) = std::imag(m(2, 1));
  t(10) = std::real(m(3, 0));
  t(11) = std::imag(m(3, 0));
  t(12) = std::real(m(3, 1));
  t(13) = std::imag(m(3, 1));
  t(14) = std::real(m(3, 2));
  t(15) = std::imag(m(3, 2));
  return t;
}

// Index map of each parameter to its (row, col, imag?) slot in T.
struct ParamSlot {
  int row, col;
  bool imag;
};
constexpr std::array<ParamSlot, 16> kSlots = {{{0, 0, false},
                                               {1, 1, false},
                                               {2, 2, false},
                                               {3, 3, false},
                                               {1, 0, false},
                                               {1, 0, true},
                                               {2, 0, false},
                                               {2, 0, true},
                                               {2, 1, false},
                                               {2, 1, true},
                                               {3, 0, false},
                                               {3, 0, true},
                                               {3, 1, false},
                                               {3, 1, true},
                                               {3, 2, false},
                                               {3, 2, true}}};

constexpr double kProbFloor = 1e-15;

}  // namespace

namespace detail {

Mat4 cholesky_to_density(const TomoParams& t) {
  const Mat4 T = params_to_t(t);
  const Mat4 a = T.adjoint() * T;
  const double tr = std::real(a.trace());
  if (!(tr > 0.0)) {
    throw InvalidState("cholesky_to_density: zero-trace parameter point");
  }
  return a / tr;
}

// Poisson deviance with the shared intensity profiled out: I* = sum(n) /
// sum(p), mu_s = I p_s, and
//   D = sum_s [(mu_s - n_s) - n_s ln(mu_s / n_s)]  (n_s = 0 terms are mu_s).
// This equals the negative log-likelihood up to a counts-only constant, so
// the minimizer and gradient are those of the NLL, but each term is O(1)
// near the optimum instead of rounding against a huge additive offset. The
// envelope theorem makes dI*/dt drop out of the gradient.
double tomo_deviance(const TomoParams& t, std::span<const Mat4> projectors,
                     std::span<const double> counts, TomoParams* grad) {
  const size_t ns = projectors.size();
  const Mat4 T = params_to_t(t);
  const Mat4 a = T.adjoint() * T;
  const double tau = std::real(a.trace());
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    if (grad) grad->setZero();
    return std::numeric_limits<double>::infinity();
  }

  std::vector<double> p(ns);
  std::vector<bool> clamped(ns);
  double sum_p = 0.0, sum_n = 0.0;
  for (size_t s = 0; s < ns; ++s) {
    const double raw = std::real((a * projectors[s]).trace()) / tau;
    clamped[s] = raw < kProbFloor;
    p[s] = clamped[s] ? kProbFloor : raw;
    sum_p += p[s];
    sum_n += counts[s];
  }
  if (sum_n <= 0.0) {
    if (grad) grad->setZero();
    return 0.0;
  }
  const double intensity = sum_n / sum_p;
  double dev = 0.0;
  for (size_t s = 0; s < ns; ++s) {
    const double mu = intensity * p[s];
    if (counts[s] > 0.0) {
      // log1p keeps the term accurate when mu is within rounding of n.
      dev += (mu - counts[s]) -
             counts[s] * std::log1p((mu - counts[s]) / counts[s]);
    } else {
      dev += mu;
    }
  }

  if (grad) {
    grad->setZero();
    // d tr(A P)/dt_k for dT = E_ij is 2 Re[(T P)_ij]; for dT = i E_ij it is
    // 2 Im[(T P)_ij]. tau uses P = I, i.e. (T)_ij itself.
    std::vector<Mat4> tp(ns);
    for (size_t s = 0; s < ns; ++s) tp[s] = T * projectors[s];
    for (int k = 0; k < 16; ++k) {
      const ParamSlot slot = kSlots[static_cast<size_t>(k)];
      const complexd t_entry = T(slot.row, slot.col);
      const double d_tau =
          2.0 * (slot.imag ? std::imag(t_entry) : std::real(t_entry));
      double g = 0.0;
      for (size_t s = 0; s < ns; ++s) {
        if (clamped[s]) continue;
        const complexd z = tp[s](slot.row, slot.col);
        const double d_num = 2.0 * (slot.imag ? std::imag(z) : std::real(z));
        const double dp = (d_num - p[s] * d_tau) / tau;
        g += (intensity - counts[s] / p[s]) * dp;
      }
      (*grad)(k) = g;
    }
  }
  return dev;
}

}  // namespace detail

DensityMatrix linear_inversion(std::span<const CountRecord> records) {
  const auto ordered = canonical_order(records);
  const auto projectors = setting_projectors();
  const auto basis = pauli_basis();

  Eigen::Matrix<double, 16, 16> design;
  Eigen::Matrix<double, 16, 1> rhs;
  for (size_t s = 0; s < 16; ++s) {
    for (size_t k = 0; k < 16; ++k) {
      design(s, k) = std::real((projectors[s] * basis[k]).trace());
    }
    rhs(s) = ordered[s]->coincidences;
  }
  const Eigen::Matrix<double, 16, 1> coeff =
      design.colPivHouseholderQr().solve(rhs);
  Mat4 x = Mat4::Zero();
  for (size_t k = 0; k < 16; ++k) {
    x += coeff(k) * basis[k];
  }
  const double tr = std::real(x.trace());
  if (!(tr > 0.0)) {
    return DensityMatrix::maximally_mixed();
  }
  x /= tr;

  // Strictly positive floor so the Cholesky seed has full rank.
  Eigen::SelfAdjointEigenSolver<Mat4> es((x + x.adjoint()) / 2.0);
  Eigen::Vector4d evals = es.eigenvalues().cwiseMax(1e-6);
  evals /= evals.sum();
  return DensityMatrix(es.eigenvectors() *
                       evals.cast<complexd>().asDiagonal() *
                       es.eigenvectors().adjoint());
}

namespace {

// Lower-triangular T with T^dagger T = rho, via the antidiagonal-reversal of
// the standard Cholesky factorization.
Mat4 reverse_cholesky(const Mat4& rho) {
  Mat4 j = Mat4::Zero();
  for (int i = 0; i < 4; ++i) j(i, 3 - i) = 1.0;
  const Mat4 flipped = j * rho * j;
  Eigen::LLT<Mat4> llt(flipped);
  if (llt.info() != Eigen::Success) {
    throw InvalidState("reverse_cholesky: matrix not positive definite");
  }
  const Mat4 l = llt.matrixL();
  return j * l.adjoint() * j;
}

struct BfgsOutcome {
  detail::TomoParams x;
  double f = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

BfgsOutcome bfgs_minimize(const detail::TomoParams& x0,
                          std::span<const Mat4> projectors,
                          std::span<const double> counts,
                          const TomographyOptions& opts) {
  using detail::TomoParams;
  using Mat16 = Eigen::Matrix<double, 16, 16>;
  BfgsOutcome out;
  TomoParams x = x0;
  TomoParams g;
  double f = detail::tomo_deviance(x, projectors, counts, &g);
  Mat16 h = Mat16::Identity();
  out.trace.push_back(f);
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    TomoParams d = -(h * g);
    double gd = g.dot(d);
    if (!(gd < 0.0) || !d.allFinite()) {
      h = Mat16::Identity();
      d = -g;
      gd = -g.squaredNorm();
      if (!(gd < 0.0)) {
        out.converged = true;  // zero gradient
        break;
      }
    }
    double step = 1.0;
    TomoParams x_new;
    TomoParams g_new;
    double f_new = f;
    bool accepted = false;
    while (step > 1e-18) {
      x_new = x + step * d;
      f_new = detail::tomo_deviance(x_new, projectors, counts, &g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease along a descent direction: at numerical resolution.
      out.converged = true;
      break;
    }
    const TomoParams s = x_new - x;
    const TomoParams y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho_ = 1.0 / sy;
      const Mat16 id = Mat16::Identity();
      h = (id - rho_ * s * y.transpose()) * h *
              (id - rho_ * y * s.transpose()) +
          rho_ * s * s.transpose();
    }
    const double improvement = f - f_new;
    x = x_new;
    f = f_new;
    g = g_new;
    out.trace.push_back(f);
    if (improvement <= opts.relative_tolerance * std::max(1.0, std::abs(f))) {
      out.converged = true;
      ++iter;
      break;
    }
  }
  out.x = x;
  out.f = f;
  out.grad_norm = g.norm();
  out.iterations = iter;
  return out;
}

}  // namespace

TomographyResult mle_tomography(std::span<const CountRecord> records,
                                const TomographyOptions& opts) {
  if (opts.restarts < 1) {
    throw InvalidArgument("tomography: restarts must be >= 1");
  }
  const auto ordered = canonical_order(records);
  const auto projectors = setting_projectors();
  std::vector<double> counts(16);
  for (size_t s = 0; s < 16; ++s) counts[s] = ordered[s]->coincidences;

  const DensityMatrix seed_state = linear_inversion(records);
  const detail::TomoParams t0 = t_to_params(reverse_cholesky(
      seed_state.matrix() / std::real(seed_state.matrix().trace())));

  BfgsOutcome best;
  int best_restart = -1;
  for (int r = 0; r < opts.restarts; ++r) {
    detail::TomoParams start = t0;
    if (r > 0) {
      Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
      const double scale = 0.05 * t0.norm() / 4.0;
      for (int k = 0; k < 16; ++k) {
        start(k) += scale * rng.normal();
      }
    }
    BfgsOutcome run = bfgs_minimize(start, projectors, counts, opts);
    if (best_restart < 0 || run.f < best.f) {
      best = std::move(run);
      best_restart = r;
    }
  }

  if (!best.converged) {
    throw ReconstructionError(
        "tomography: optimizer did not converge (gradient norm " +
        std::to_string(best.grad_norm) + " after " +
        std::to_string(best.iterations) + " iterations)");
  }

  TomographyResult res;
  res.rho = DensityMatrix(detail::cholesky_to_density(best.x));
  res.deviance = best.f;
  res.iterations = best.iterations;
  res.gradient_norm = best.grad_norm;
  res.best_restart = best_restart;
  res.converged = best.converged;
  res.objective_trace = std::move(best.trace);
  return res;
}

}  // namespace pairsim
