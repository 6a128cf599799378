#include "pairsim/source.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "pairsim/errors.hpp"

namespace pairsim {

TuningCurve::TuningCurve(std::vector<TuningCurvePoint> points)
    : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw InvalidArgument("tuning curve needs at least two points");
  }
  for (size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].temperature_c) ||
        !std::isfinite(points_[i].signal_wavelength_nm) ||
        points_[i].signal_wavelength_nm <= 0.0) {
      throw InvalidArgument("tuning curve points must be finite with positive wavelength");
    }
    if (i > 0 && points_[i].temperature_c <= points_[i - 1].temperature_c) {
      throw InvalidArgument("tuning curve temperatures must be strictly ascending");
    }
  }
}

TuningCurve TuningCurve::default_curve() {
  return TuningCurve({{17.5, 1560.31},
                      {27.0, 1554.72},
                      {32.0, 1550.09},
                      {41.0, 1545.47},
                      {51.0, 1539.90}});
}

double TuningCurve::signal_wavelength_nm(double temperature_c) const {
  if (!std::isfinite(temperature_c)) {
    throw InvalidArgument("temperature must be finite");
  }
  const double lo = min_temperature_c() - kExtrapolationMarginC;
  const double hi = max_temperature_c() + kExtrapolationMarginC;
  if (temperature_c < lo || temperature_c > hi) {
    throw OutOfRange("temperature " + std::to_string(temperature_c) +
                     " C outside calibrated range [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  }
  // Segment selection; edge segments also serve the extrapolation margins.
  size_t k = 0;
  while (k + 2 < points_.size() &&
         temperature_c > points_[k + 1].temperature_c) {
    ++k;
  }
  const TuningCurvePoint& p0 = points_[k];
  const TuningCurvePoint& p1 = points_[k + 1];
  const double t = (temperature_c - p0.temperature_c) /
                   (p1.temperature_c - p0.temperature_c);
  return p0.signal_wavelength_nm +
         t * (p1.signal_wavelength_nm - p0.signal_wavelength_nm);
}

double idler_wavelength_nm(double signal_nm, double pump_nm) {
  if (!(signal_nm > 0.0) || !(pump_nm > 0.0)) {
    throw InvalidArgument("wavelengths must be positive");
  }
  const double inv = 1.0 / pump_nm - 1.0 / signal_nm;
  if (inv <= 0.0) {
    throw InvalidArgument("signal wavelength must exceed the pump wavelength");
  }
  return 1.0 / inv;
}

void SourceConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("source.") + name + " must be > 0");
    }
  };
  positive(pump_power_mw, "pump_power_mw");
  positive(pump_wavelength_nm, "pump_wavelength_nm");
  positive(pair_rate_coeff, "pair_rate_coeff");
  positive(coherence_length_mm, "coherence_length_mm");
  if (!std::isfinite(crystal_temperature_c)) {
    throw InvalidArgument("source.crystal_temperature_c must be finite");
  }
  if (!std::isfinite(theta_rad)) {
    throw InvalidArgument("source.theta_rad must be finite");
  }
  if (!(balance >= 0.0) || !std::isfinite(balance)) {
    throw InvalidArgument("source.balance must be >= 0");
  }
  if (!(noise_p >= 0.0 && noise_p <= 1.0)) {
    throw InvalidArgument("source.noise_p must lie in [0,1]");
  }
  for (auto [v, name] : {std::pair{alpha1, "alpha1"}, {alpha2, "alpha2"}}) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string("source.") + name +
                            " must lie in (0,1]");
    }
  }
}

SourceConfig SourceConfig::defaults() { return SourceConfig{}; }

DensityMatrix output_state(const SourceConfig& cfg) {
  cfg.validate();
  Ket4 v = Ket4::Zero();
  const double norm = std::sqrt(1.0 + cfg.balance * cfg.balance);
  v(1) = complexd(1.0 / norm, 0.0);
  v(2) = std::polar(cfg.balance / norm, cfg.theta_rad);
  // balance == 0 leaves a valid |HV> ket.
  return mix_with_white_noise(DensityMatrix::pure(KetState(v)), cfg.noise_p);
}

double pair_rate(const SourceConfig& cfg) {
  cfg.validate();
  const double a = cfg.alpha1 * cfg.alpha2;
  return cfg.pair_rate_coeff * cfg.pump_power_mw * a * a;
}

}  // namespace pairsim
