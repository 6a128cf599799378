#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairsim/detection.hpp"
#include "pairsim/polarization.hpp"
#include "pairsim/source.hpp"

namespace pairsim {

enum class ExperimentKind {
  fringe,
  hom,
  chsh,
  tomography,
  sweep_power,
  sweep_temperature,
};

// Hyphenated names as used in config files and on the command line
// ("sweep-power", "sweep-temperature").
const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

// Coincidence-fringe scan: one arm's HWP fixed, the other swept over an
// inclusive [start, stop] grid. The QWPs stay out of the beam.
struct FringeConfig {
  Arm fixed_arm = Arm::a;
  double fixed_hwp_deg = 22.5;
  double scan_start_deg = 0.0;
  double scan_stop_deg = 90.0;
  double scan_step_deg = 5.0;

  std::vector<double> scan_angles() const;
};

// Interference-dip scan over delay-arm gap positions. The dip parameters are
// configured, not derived from a spectral model; coherence length comes from
// the source section.
struct HomConfig {
  double visibility = 0.953;
  double center_mm = 0.0;
  double scan_start_mm = -1.0;
  double scan_stop_mm = 1.0;
  double scan_step_mm = 0.01;

  std::vector<double> scan_positions() const;
};

// Sweep grids for the robustness experiments.
struct SweepConfig {
  std::vector<double> powers_mw = {15.0, 30.0, 60.0, 90.0, 120.0};
  std::vector<double> temperatures_c = {15.0, 25.0, 35.0, 45.0, 55.0};
};

// Optional override of the built-in temperature-to-wavelength calibration.
// Both lists must be given together, same length, temperatures ascending.
struct TuningConfig {
  std::vector<double> temperatures_c;
  std::vector<double> signal_wavelengths_nm;

  bool overridden() const { return !temperatures_c.empty(); }
  TuningCurve curve() const;  // default_curve() when not overridden
};

// Everything one run needs. Default construction IS the paper-calibrated
// configuration; a config file only has to name what it changes.
struct ExperimentConfig {
  int schema = 1;
  ExperimentKind experiment = ExperimentKind::fringe;
  std::uint64_t master_seed = 12345;
  double duration_s = 10.0;  // per scan point
  int repeats = 10;          // full scan passes averaged by the analysis

  SourceConfig source;
  TuningConfig tuning;
  DetectorConfig detector_a = DetectorConfig::apd_signal();
  DetectorConfig detector_b = DetectorConfig::apd_idler();
  FringeConfig fringe;
  HomConfig hom;
  SweepConfig sweep;

  // Throws ConfigError naming the offending field ("source.noise_p ...").
  void validate() const;

  static ExperimentConfig paper_defaults() { return ExperimentConfig{}; }
};

// Key-value text with [section] headers, '#' or ';' comments, and
// comma-separated lists. Unknown sections or keys are errors, as are
// duplicates and malformed values; omitted keys keep their defaults.
// The result is validated before being returned. experiment_was_set, when
// non-null, reports whether the text named the experiment explicitly (the
// CLI uses this to flag contradictory invocations).
ExperimentConfig parse_config(const std::string& text,
                              bool* experiment_was_set = nullptr);
ExperimentConfig parse_config_file(const std::string& path,
                                   bool* experiment_was_set = nullptr);

// Canonical form: every key in a fixed order, shortest round-trip number
// formatting. parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical form, as a 16-digit hex string. Embedded in
// reports so results can be traced to the exact configuration.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace pairsim
