#include "pairsim/detection.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "pairsim/errors.hpp"
#include "pairsim/random.hpp"

namespace pairsim {

void DetectorConfig::validate() const {
  auto in_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string("detector.") + name +
                            " must lie in (0,1]");
    }
  };
  in_unit(efficiency, "efficiency");
  in_unit(duty_cycle, "duty_cycle");
  if (!(gate_window_ns > 0.0) || !std::isfinite(gate_window_ns)) {
    throw InvalidArgument("detector.gate_window_ns must be > 0");
  }
  if (!(dark_prob_per_gate >= 0.0 && dark_prob_per_gate <= 1.0)) {
    throw InvalidArgument("detector.dark_prob_per_gate must lie in [0,1]");
  }
  if (!(trigger_rate_hz >= 0.0) || !std::isfinite(trigger_rate_hz)) {
    throw InvalidArgument("detector.trigger_rate_hz must be >= 0");
  }
}

DetectorConfig DetectorConfig::apd_signal() { return DetectorConfig{}; }

DetectorConfig DetectorConfig::apd_idler() {
  DetectorConfig d;
  d.efficiency = 0.08;
  d.gate_window_ns = 2.5;
  d.dark_prob_per_gate = 2.0e-5;
  d.trigger_rate_hz = 90e6;
  d.duty_cycle = 0.09;
  return d;
}

JointProbability outcome_probabilities(const DensityMatrix& rho,
                                       const AnalyzerSetting& a,
                                       const AnalyzerSetting& b) {
  JointProbability jp;
  jp.joint = joint_probability(rho, a, b);
  jp.marginal_a = marginal_probability(rho, a, Arm::a);
  jp.marginal_b = marginal_probability(rho, b, Arm::b);
  return jp;
}

ExpectedRates expected_rates(const JointProbability& jp,
                             const SourceConfig& src, const DetectorConfig& da,
                             const DetectorConfig& db) {
  da.validate();
  db.validate();
  for (auto [v, name] :
       {std::pair{jp.joint, "joint"}, {jp.marginal_a, "marginal_a"},
        {jp.marginal_b, "marginal_b"}}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string("expected_rates: ") + name +
                            " must lie in [0,1]");
    }
  }
  const double pairs = pair_rate(src);
  ExpectedRates r;
  r.singles_a = pairs * jp.marginal_a * da.efficiency * da.duty_cycle +
                da.dark_prob_per_gate * da.trigger_rate_hz;
  r.singles_b = pairs * jp.marginal_b * db.efficiency * db.duty_cycle +
                db.dark_prob_per_gate * db.trigger_rate_hz;
  r.true_coinc = pairs * jp.joint * da.efficiency * db.efficiency *
                 std::min(da.duty_cycle, db.duty_cycle);
  r.coincidence_window_s =
      std::max(da.gate_window_ns, db.gate_window_ns) * 1e-9;
  r.accidental_coinc = r.singles_a * r.singles_b * r.coincidence_window_s;
  return r;
}

CountRecord simulate_counts(const JointProbability& jp, const SourceConfig& src,
                            const DetectorConfig& da, const DetectorConfig& db,
                            const AnalyzerSetting& sa, const AnalyzerSetting& sb,
                            double duration_s, std::uint64_t seed) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw InvalidArgument("duration_s must be >= 0");
  }
  const ExpectedRates rates = expected_rates(jp, src, da, db);
  CountRecord rec;
  rec.setting_a = sa;
  rec.setting_b = sb;
  rec.duration_s = duration_s;
  rec.rng_seed = seed;
  Rng rng(seed);
  const double sa_counts = static_cast<double>(rng.poisson(rates.singles_a * duration_s));
  const double sb_counts = static_cast<double>(rng.poisson(rates.singles_b * duration_s));
  const double true_c = static_cast<double>(rng.poisson(rates.true_coinc * duration_s));
  const double acc_c = static_cast<double>(rng.poisson(rates.accidental_coinc * duration_s));
  rec.singles_a = sa_counts;
  rec.singles_b = sb_counts;
  rec.coincidences = std::min(true_c + acc_c, std::min(sa_counts, sb_counts));
  return rec;
}

}  // namespace pairsim
