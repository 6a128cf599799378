#include "pairsim/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "pairsim/errors.hpp"

namespace pairsim {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

void require_same_size_finite(std::span<const double> x,
                              std::span<const double> y, const char* op) {
  if (x.size() != y.size()) {
    throw InvalidArgument(std::string(op) + ": input arrays differ in length");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw InvalidArgument(std::string(op) + ": non-finite abscissa");
    }
  }
  for (double v : y) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(op) +
                            ": counts must be finite and >= 0");
    }
  }
}

double poisson_weight(double count) { return 1.0 / std::max(count, 1.0); }

}  // namespace

FringeFit fit_sinusoid(std::span<const double> hwp_deg,
                       std::span<const double> counts) {
  require_same_size_finite(hwp_deg, counts, "fit_sinusoid");
  const size_t n = hwp_deg.size();
  if (n < 6) {
    throw FitError("fit_sinusoid: need at least 6 points");
  }
  const auto [mn, mx] = std::minmax_element(hwp_deg.begin(), hwp_deg.end());
  if (*mx - *mn < 90.0 - 1e-9) {
    throw FitError("fit_sinusoid: scan must span at least one 90 degree period");
  }

  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = 4.0 * hwp_deg[i] * kDegToRad;
    const double sw = std::sqrt(poisson_weight(counts[i]));
    design(i, 0) = sw;
    design(i, 1) = sw * std::cos(x);
    design(i, 2) = sw * std::sin(x);
    rhs(i) = sw * counts[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) {
    throw FitError("fit_sinusoid: degenerate angle grid");
  }
  const Eigen::Vector3d sol = qr.solve(rhs);
  const double a = sol(0);
  const double p = sol(1);
  const double q = sol(2);

  FringeFit fit;
  fit.offset = a;
  fit.amplitude = std::hypot(p, q);
  double phase = std::atan2(q, p) / (4.0 * kDegToRad);
  phase = std::fmod(phase, 90.0);
  if (phase < 0.0) phase += 90.0;
  fit.phase_deg = phase;
  fit.c_max = a + fit.amplitude;
  fit.c_min = a - fit.amplitude;
  if (fit.c_min < 0.0) {
    fit.c_min = 0.0;
    fit.c_min_clamped = true;
  }
  const double denom = fit.c_max + fit.c_min;
  fit.visibility = denom > 0.0 ? (fit.c_max - fit.c_min) / denom : 0.0;

  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double x = 4.0 * hwp_deg[i] * kDegToRad;
    const double model = a + p * std::cos(x) + q * std::sin(x);
    ss += (counts[i] - model) * (counts[i] - model);
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

double hom_coincidence_curve(double x_mm, double center_mm, double lc_mm,
                             double visibility, double baseline) {
  if (!(lc_mm > 0.0)) {
    throw InvalidArgument("hom_coincidence_curve: l_c must be > 0");
  }
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw InvalidArgument("hom_coincidence_curve: visibility must lie in [0,1]");
  }
  if (!(baseline >= 0.0)) {
    throw InvalidArgument("hom_coincidence_curve: baseline must be >= 0");
  }
  const double tri = std::max(0.0, 1.0 - std::abs(x_mm - center_mm) / lc_mm);
  return baseline * (1.0 - visibility * tri);
}

namespace detail {

double dip_plateau_center(std::span<const double> position_mm,
                          std::span<const double> counts) {
  const double cmin = *std::min_element(counts.begin(), counts.end());
  // Longest contiguous run of minimal counts; its midpoint seeds the fit.
  size_t best_lo = 0, best_hi = 0, lo = 0;
  bool in_run = false;
  for (size_t i = 0; i <= counts.size(); ++i) {
    if (i < counts.size() && counts[i] == cmin) {
      if (!in_run) {
        lo = i;
        in_run = true;
      }
    } else if (in_run) {
      if (i - 1 - lo >= best_hi - best_lo) {
        best_lo = lo;
        best_hi = i - 1;
      }
      in_run = false;
    }
  }
  return 0.5 * (position_mm[best_lo] + position_mm[best_hi]);
}

}  // namespace detail

namespace {

struct TriangleProfile {
  double baseline = 0.0;
  double amplitude = 0.0;  // baseline * visibility
  double chi2 = std::numeric_limits<double>::infinity();
};

// Weighted least squares of c = b - a * g(x; center, lc) with (b, a) linear.
TriangleProfile profile_triangle(std::span<const double> x,
                                 std::span<const double> c, double center,
                                 double lc) {
  const size_t n = x.size();
  double s_ww = 0.0, s_wg = 0.0, s_gg = 0.0, s_wc = 0.0, s_gc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double g = std::max(0.0, 1.0 - std::abs(x[i] - center) / lc);
    const double w = poisson_weight(c[i]);
    s_ww += w;
    s_wg += w * g;
    s_gg += w * g * g;
    s_wc += w * c[i];
    s_gc += w * g * c[i];
  }
  TriangleProfile out;
  const double det = s_ww * s_gg - s_wg * s_wg;
  if (std::abs(det) < 1e-12 * std::max(1.0, s_ww * s_gg)) {
    // Dip outside the data: constant model.
    out.baseline = s_wc / s_ww;
    out.amplitude = 0.0;
  } else {
    // Normal equations for (b, a) with design [1, -g].
    out.baseline = (s_gg * s_wc - s_wg * s_gc) / det;
    out.amplitude = (s_wg * s_wc - s_ww * s_gc) / det;
  }
  double chi2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double g = std::max(0.0, 1.0 - std::abs(x[i] - center) / lc);
    const double r = c[i] - (out.baseline - out.amplitude * g);
    chi2 += poisson_weight(c[i]) * r * r;
  }
  out.chi2 = chi2;
  return out;
}

// Nelder-Mead over (center, log lc) with the linear pair profiled out.
std::pair<double, double> nelder_mead_triangle(std::span<const double> x,
                                               std::span<const double> c,
                                               double center0, double lc0,
                                               double step) {
  using Point = std::array<double, 2>;
  auto eval = [&](const Point& p) {
    return profile_triangle(x, c, p[0], std::exp(p[1])).chi2;
  };
  std::array<Point, 3> simplex = {
      Point{center0, std::log(lc0)},
      Point{center0 + std::max(lc0 / 4.0, step), std::log(lc0)},
      Point{center0, std::log(lc0 * 1.4)}};
  std::array<double, 3> f = {eval(simplex[0]), eval(simplex[1]),
                             eval(simplex[2])};
  for (int iter = 0; iter < 800; ++iter) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return f[i] < f[j]; });
    const Point& best = simplex[idx[0]];
    const Point& worst = simplex[idx[2]];
    const double spread = std::max(
        std::abs(best[0] - worst[0]), std::abs(best[1] - worst[1]));
    if (spread < 1e-13 * std::max(1.0, std::abs(best[0])) &&
        f[idx[2]] - f[idx[0]] < 1e-15 * std::max(1.0, f[idx[0]])) {
      break;
    }
    Point centroid = {0.5 * (simplex[idx[0]][0] + simplex[idx[1]][0]),
                      0.5 * (simplex[idx[0]][1] + simplex[idx[1]][1])};
    auto blend = [&](double t) {
      return Point{centroid[0] + t * (centroid[0] - worst[0]),
                   centroid[1] + t * (centroid[1] - worst[1])};
    };
    const Point refl = blend(1.0);
    const double f_refl = eval(refl);
    if (f_refl < f[idx[0]]) {
      const Point exp_p = blend(2.0);
      const double f_exp = eval(exp_p);
      if (f_exp < f_refl) {
        simplex[idx[2]] = exp_p;
        f[idx[2]] = f_exp;
      } else {
        simplex[idx[2]] = refl;
        f[idx[2]] = f_refl;
      }
    } else if (f_refl < f[idx[1]]) {
      simplex[idx[2]] = refl;
      f[idx[2]] = f_refl;
    } else {
      const Point contr = blend(-0.5);
      const double f_contr = eval(contr);
      if (f_contr < f[idx[2]]) {
        simplex[idx[2]] = contr;
        f[idx[2]] = f_contr;
      } else {
        for (int k : {idx[1], idx[2]}) {
          simplex[k] = {0.5 * (simplex[k][0] + simplex[idx[0]][0]),
                        0.5 * (simplex[k][1] + simplex[idx[0]][1])};
          f[k] = eval(simplex[k]);
        }
      }
    }
  }
  const int best =
      static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  return {simplex[best][0], std::exp(simplex[best][1])};
}

struct TriangleParams {
  double baseline, amplitude, center, lc, chi2;
};

// Exact weighted LS within a fixed active set: inside the dip the model is
// linear in (b, a, q = a/lc, t = q * center), outside it is the constant b.
bool active_set_polish(std::span<const double> x, std::span<const double> c,
                       TriangleParams& p) {
  const size_t n = x.size();
  Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
  Eigen::Vector4d atb = Eigen::Vector4d::Zero();
  int inside = 0, left = 0, right = 0;
  for (size_t i = 0; i < n; ++i) {
    const double d = x[i] - p.center;
    Eigen::Vector4d row = Eigen::Vector4d::Zero();
    row(0) = 1.0;
    if (std::abs(d) < p.lc) {
      const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      row(1) = -1.0;
      row(2) = s * x[i];
      row(3) = -s;
      ++inside;
      if (s < 0.0) ++left;
      if (s > 0.0) ++right;
    }
    const double w = poisson_weight(c[i]);
    ata += w * row * row.transpose();
    atb += w * row * c[i];
  }
  if (inside < 3 || left == 0 || right == 0) {
    return false;
  }
  Eigen::FullPivLU<Eigen::Matrix4d> lu(ata);
  if (!lu.isInvertible()) {
    return false;
  }
  const Eigen::Vector4d u = lu.solve(atb);
  const double b = u(0), a = u(1), q = u(2), t = u(3);
  if (!(q > 0.0) || !std::isfinite(q)) {
    return false;
  }
  TriangleParams cand;
  cand.baseline = b;
  cand.amplitude = a;
  cand.lc = a / q;
  cand.center = t / q;
  if (!(cand.lc > 0.0) || !std::isfinite(cand.center)) {
    return false;
  }
  const TriangleProfile prof = profile_triangle(x, c, cand.center, cand.lc);
  cand.baseline = prof.baseline;
  cand.amplitude = prof.amplitude;
  cand.chi2 = prof.chi2;
  if (cand.chi2 <= p.chi2) {
    p = cand;
    return true;
  }
  return false;
}

}  // namespace

HomFit fit_triangle(std::span<const double> position_mm,
                    std::span<const double> counts) {
  require_same_size_finite(position_mm, counts, "fit_triangle");
  const size_t n = position_mm.size();
  if (n < 8) {
    throw FitError("fit_triangle: need at least 8 points");
  }
  for (size_t i = 1; i < n; ++i) {
    if (position_mm[i] <= position_mm[i - 1]) {
      throw FitError("fit_triangle: positions must be strictly increasing");
    }
  }
  const double cmin = *std::min_element(counts.begin(), counts.end());
  const double cmax = *std::max_element(counts.begin(), counts.end());
  if (cmax <= 0.0 || cmin / cmax > 0.9) {
    throw FitError("fit_triangle: no dip detected (min/max > 0.9)");
  }

  const double center0 = detail::dip_plateau_center(position_mm, counts);
  // Baseline estimate from the upper half of the samples.
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  double b0 = 0.0;
  const size_t half = n / 2;
  for (size_t i = half; i < n; ++i) b0 += sorted[i];
  b0 /= static_cast<double>(n - half);
  // Width estimate: distance between half-depth crossings around the dip.
  const double target = b0 - 0.5 * (b0 - cmin);
  const double step = (position_mm[n - 1] - position_mm[0]) /
                      static_cast<double>(n - 1);
  size_t imin = static_cast<size_t>(
      std::min_element(counts.begin(), counts.end()) - counts.begin());
  double xl = position_mm[0], xr = position_mm[n - 1];
  for (size_t i = imin; i-- > 0;) {
    if (counts[i] >= target) {
      xl = position_mm[i];
      break;
    }
  }
  for (size_t i = imin + 1; i < n; ++i) {
    if (counts[i] >= target) {
      xr = position_mm[i];
      break;
    }
  }
  double lc0 = std::max(xr - xl, 2.0 * step);

  auto [center, lc] =
      nelder_mead_triangle(position_mm, counts, center0, lc0, step);
  TriangleProfile prof = profile_triangle(position_mm, counts, center, lc);
  TriangleParams params{prof.baseline, prof.amplitude, center, lc, prof.chi2};
  for (int round = 0; round < 3; ++round) {
    if (!active_set_polish(position_mm, counts, params)) break;
  }

  if (!(params.baseline > 0.0)) {
    throw FitError("fit_triangle: non-positive fitted baseline");
  }
  HomFit fit;
  fit.baseline = params.baseline;
  fit.visibility =
      std::clamp(params.amplitude / params.baseline, 0.0, 1.0);
  fit.coherence_length_mm = params.lc;
  fit.center_mm = params.center;
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double model = hom_coincidence_curve(
        position_mm[i], fit.center_mm, fit.coherence_length_mm,
        fit.visibility, fit.baseline);
    ss += (counts[i] - model) * (counts[i] - model);
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be > 0");
  }
}

}  // namespace

double bandwidth_from_coherence_length(double lc_mm, double lambda_nm) {
  require_positive(lc_mm, "coherence length");
  require_positive(lambda_nm, "wavelength");
  // nm^2 / mm = 1e-6 nm.
  return 1.39 * lambda_nm * lambda_nm / (M_PI * lc_mm) * 1e-6;
}

double coherence_length_from_bandwidth(double dlambda_nm, double lambda_nm) {
  require_positive(dlambda_nm, "bandwidth");
  require_positive(lambda_nm, "wavelength");
  return 1.39 * lambda_nm * lambda_nm / (M_PI * dlambda_nm) * 1e-6;
}

std::array<std::pair<AnalyzerSetting, AnalyzerSetting>, 16> chsh_settings() {
  // Polarization angles; analyzer HWP angles are half of these.
  constexpr std::array<double, 2> as = {0.0, 45.0};
  constexpr std::array<double, 2> bs = {22.5, 67.5};
  std::array<std::pair<AnalyzerSetting, AnalyzerSetting>, 16> out;
  size_t k = 0;
  for (double a : as) {
    for (double b : bs) {
      for (double da : {0.0, 90.0}) {
        for (double db : {0.0, 90.0}) {
          out[k++] = {AnalyzerSetting(std::nullopt, (a + da) / 2.0),
                      AnalyzerSetting(std::nullopt, (b + db) / 2.0)};
        }
      }
    }
  }
  return out;
}

namespace {

bool same_angle_mod180(double a, double b) {
  double d = std::abs(std::fmod(a - b, 180.0));
  if (d > 90.0) d = 180.0 - d;
  return d < 1e-6;
}

bool matches_setting(const CountRecord& rec,
                     const std::pair<AnalyzerSetting, AnalyzerSetting>& s) {
  return !rec.setting_a.has_qwp() && !rec.setting_b.has_qwp() &&
         same_angle_mod180(rec.setting_a.hwp_deg, s.first.hwp_deg) &&
         same_angle_mod180(rec.setting_b.hwp_deg, s.second.hwp_deg);
}

}  // namespace

ChshResult chsh(std::span<const CountRecord> records) {
  if (records.size() != 16) {
    throw InvalidArgument("chsh: expected exactly 16 records");
  }
  const auto settings = chsh_settings();
  std::array<double, 16> counts;
  std::array<bool, 16> filled{};
  for (const CountRecord& rec : records) {
    bool placed = false;
    for (size_t k = 0; k < 16; ++k) {
      if (!filled[k] && matches_setting(rec, settings[k])) {
        if (!(rec.coincidences >= 0.0) || !std::isfinite(rec.coincidences)) {
          throw InvalidArgument("chsh: counts must be finite and >= 0");
        }
        counts[k] = rec.coincidences;
        filled[k] = true;
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw InvalidArgument(
          "chsh: record does not match the documented analyzer settings");
    }
  }

  ChshResult res;
  double var_s = 0.0;
  for (size_t pair = 0; pair < 4; ++pair) {
    const double c00 = counts[4 * pair + 0];
    const double c01 = counts[4 * pair + 1];
    const double c10 = counts[4 * pair + 2];
    const double c11 = counts[4 * pair + 3];
    const double total = c00 + c01 + c10 + c11;
    if (!(total > 0.0)) {
      throw FitError("chsh: zero total count in a basis");
    }
    const double num = c00 + c11 - c01 - c10;
    const double e = num / total;
    // Poisson propagation, var(C) = C.
    const double var_e = ((total - num) * (total - num) * (c00 + c11) +
                          (total + num) * (total + num) * (c01 + c10)) /
                         (total * total * total * total);
    res.E[pair] = e;
    res.sigma_E[pair] = std::sqrt(var_e);
    res.S += kChshSigns[pair] * e;
    var_s += var_e;
  }
  res.sigma_S = std::sqrt(var_s);
  return res;
}

double brightness_detected(double coincidence_cps, double pump_mw,
                           double bandwidth_nm) {
  require_positive(coincidence_cps, "coincidence rate");
  require_positive(pump_mw, "pump power");
  require_positive(bandwidth_nm, "bandwidth");
  return 2.0 * coincidence_cps / (pump_mw * bandwidth_nm);
}

double brightness_inferred(double coincidence_cps, double alpha1, double alpha2,
                           double duty_cycle, double eta1, double eta2,
                           double pump_mw, double bandwidth_nm) {
  require_positive(coincidence_cps, "coincidence rate");
  require_positive(pump_mw, "pump power");
  require_positive(bandwidth_nm, "bandwidth");
  for (auto [v, name] :
       {std::pair{alpha1, "alpha1"}, {alpha2, "alpha2"},
        {duty_cycle, "duty cycle"}, {eta1, "eta1"}, {eta2, "eta2"}}) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string("brightness_inferred: ") + name +
                            " must lie in (0,1]");
    }
  }
  return 2.0 * coincidence_cps /
         (alpha1 * alpha1 * alpha2 * alpha2 * duty_cycle * eta1 * eta2 *
          pump_mw * bandwidth_nm);
}

double visibility_45basis(const DensityMatrix& rho) {
  const AnalyzerSetting diag(std::nullopt, 22.5);
  const AnalyzerSetting anti(std::nullopt, 67.5);
  const double c_par = joint_probability(rho, diag, diag);
  const double c_perp = joint_probability(rho, diag, anti);
  const double denom = c_par + c_perp;
  return denom > 0.0 ? (c_par - c_perp) / denom : 0.0;
}

}  // namespace pairsim
