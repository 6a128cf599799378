#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairsim/analysis.hpp"
#include "pairsim/config.hpp"
#include "pairsim/detection.hpp"
#include "pairsim/tomography.hpp"

namespace pairsim {

// Written into every report for provenance.
inline constexpr const char* kGeneratorTag = "pairsim 0.1.0";

// One interference-dip point: delay-arm gap position and coincidences
// accumulated over the configured duration.
struct HomSample {
  double gap_mm = 0.0;
  double coincidences = 0.0;
};

// Simulations produce records in file order; record k draws its counts from
// seed derive_seed(master_seed, k). Sweep runs concatenate their per-point
// scans and keep the same global numbering, so any record is reproducible
// from the master seed and its row index alone.
std::vector<CountRecord> simulate_fringe_records(const ExperimentConfig& cfg);
std::vector<HomSample> simulate_hom_samples(const ExperimentConfig& cfg);
std::vector<CountRecord> simulate_chsh_records(const ExperimentConfig& cfg);
std::vector<CountRecord> simulate_tomography_records(
    const ExperimentConfig& cfg);

// CSV round trip. Numbers use shortest round-trip formatting, so
// parse(serialize(x)) reproduces every value bit-exactly. Parsers throw
// ParseError naming the offending line.
std::string count_records_to_csv(std::span<const CountRecord> records);
std::vector<CountRecord> count_records_from_csv(const std::string& text);
std::string hom_samples_to_csv(std::span<const HomSample> samples);
std::vector<HomSample> hom_samples_from_csv(const std::string& text);

// Fringe analysis over one or more scan passes. The swept arm is the one
// whose HWP angle varies; a new pass starts wherever the scan angle stops
// increasing. Reported visibility is the mean of the per-pass fits with the
// sample standard deviation as its spread; the pooled fit over all passes
// drives plots and derived rates.
struct FringeAnalysis {
  Arm scan_arm = Arm::b;
  std::vector<double> scan_deg;  // swept-arm HWP angle, one per record
  std::vector<double> counts;
  std::vector<FringeFit> passes;
  FringeFit pooled;
  double visibility = 0.0;
  double visibility_sigma = 0.0;
};
FringeAnalysis analyze_fringe_records(std::span<const CountRecord> records);

struct TomographyAnalysis {
  TomographyResult result;
  double fidelity_phi_plus = 0.0;
  double purity = 0.0;
};
TomographyAnalysis analyze_tomography_records(
    std::span<const CountRecord> records);

struct RunResult {
  std::string counts_path;
  std::string report_path;
};

// Simulates the configured experiment, writes "<kind>_counts.csv" and
// "<kind>_report.json" under out_dir (write-then-rename; no partial files),
// and returns both paths. Identical config + master_seed give byte-identical
// files.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::string& out_dir);

// Re-analyzes an existing counts CSV of the given kind and writes
// "<kind>_analysis.json" under out_dir. The report's "analysis" object is a
// pure function of the CSV records: re-analyzing a generated CSV reproduces
// the generating report's analysis byte for byte. Sweep kinds have no
// counts-only analysis.
std::string analyze_file(ExperimentKind kind, const std::string& csv_path,
                         const std::string& out_dir);

// Writes "<kind>_plot.txt": a plain-text column table (x, observed, fitted
// for fringe/hom; value, visibility, sigma for sweeps) extracted from a
// report file. expected_kind, when given, must match the report's kind.
// CHSH and tomography reports have no curve to plot.
std::string emit_plot_data(const std::string& report_path,
                           const std::string& out_dir,
                           std::optional<ExperimentKind> expected_kind = {});

}  // namespace pairsim
