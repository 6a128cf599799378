#pragma once

#include <cstdint>

#include "pairsim/polarization.hpp"
#include "pairsim/source.hpp"

namespace pairsim {

// Gated InGaAs single-photon detector. dark_prob_per_gate is the dark-count
// probability per gate; the dark rate is dark_prob_per_gate * trigger_rate_hz.
// duty_cycle is the fraction of time the detector is live for CW arrivals
// (trigger rate times gate width for a free-running gate). The
// trigger-via-delayed-partner gating used for the second detector in the
// modeled setup is absorbed into these effective numbers.
struct DetectorConfig {
  double efficiency = 0.15;
  double gate_window_ns = 1.0;
  double dark_prob_per_gate = 5.6e-6;
  double trigger_rate_hz = 90e6;
  double duty_cycle = 0.09;

  void validate() const;

  // 90 MHz gate, 1 ns window detector on the signal port.
  static DetectorConfig apd_signal();
  // 2.5 ns window detector on the idler port.
  static DetectorConfig apd_idler();
};

// Outcome probabilities of one analyzer-pair setting against a given state.
struct JointProbability {
  double joint = 0.0;       // tr(rho (Pa x Pb))
  double marginal_a = 0.0;  // tr(rho (Pa x I))
  double marginal_b = 0.0;  // tr(rho (I x Pb))
};

JointProbability outcome_probabilities(const DensityMatrix& rho,
                                       const AnalyzerSetting& a,
                                       const AnalyzerSetting& b);

// Mean rates in counts/s for one setting:
//   singles_x   = pair_rate * marginal_x * efficiency_x * duty_x + dark_x
//   true_coinc  = pair_rate * joint * eff_a * eff_b * min(duty_a, duty_b)
//   accidental  = singles_a * singles_b * window,  window = max(gate_a, gate_b)
// Dark counts enter singles and accidentals but never true coincidences.
struct ExpectedRates {
  double singles_a = 0.0;
  double singles_b = 0.0;
  double true_coinc = 0.0;
  double accidental_coinc = 0.0;
  double coincidence_window_s = 0.0;
};

ExpectedRates expected_rates(const JointProbability& jp,
                             const SourceConfig& src, const DetectorConfig& da,
                             const DetectorConfig& db);

// One timed counting interval at one analyzer-pair setting. Counts are stored
// as doubles: simulation always writes whole numbers, but analysis operations
// accept real-valued counts so that exact-probability data can flow through.
struct CountRecord {
  AnalyzerSetting setting_a;
  AnalyzerSetting setting_b;
  double duration_s = 0.0;
  double singles_a = 0.0;
  double singles_b = 0.0;
  double coincidences = 0.0;
  std::uint64_t rng_seed = 0;
};

// Poisson draw of one record. Draw order is fixed: singles_a, singles_b, true
// coincidences, accidental coincidences. Reported coincidences are
// true + accidental, clamped to min(singles_a, singles_b). duration 0 gives
// all-zero counts. Deterministic for a given seed.
CountRecord simulate_counts(const JointProbability& jp, const SourceConfig& src,
                            const DetectorConfig& da, const DetectorConfig& db,
                            const AnalyzerSetting& sa, const AnalyzerSetting& sb,
                            double duration_s, std::uint64_t seed);

}  // namespace pairsim
