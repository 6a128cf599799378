#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/experiment.hpp"
#include "pairsim/random.hpp"

using namespace pairsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

ExperimentConfig small_fringe_config() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::fringe;
  cfg.repeats = 3;
  cfg.duration_s = 2.0;
  return cfg;
}

}  // namespace

TEST_CASE("fringe simulation orders records pass-major with derived seeds") {
  const ExperimentConfig cfg = small_fringe_config();
  const auto records = simulate_fringe_records(cfg);
  const auto angles = cfg.fringe.scan_angles();
  REQUIRE(records.size() == angles.size() * 3);
  for (size_t k = 0; k < records.size(); ++k) {
    // Record k draws from stream k of the master seed.
    CHECK(records[k].rng_seed == derive_seed(cfg.master_seed, k));
    // Fixed arm A holds its angle; arm B steps through the grid per pass.
    CHECK(records[k].setting_a.hwp_deg == cfg.fringe.fixed_hwp_deg);
    CHECK(records[k].setting_b.hwp_deg ==
          doctest::Approx(angles[k % angles.size()]));
    CHECK_FALSE(records[k].setting_a.has_qwp());
    CHECK(records[k].duration_s == 2.0);
  }
}

TEST_CASE("simulations are deterministic functions of the config") {
  const ExperimentConfig cfg = small_fringe_config();
  const auto a = simulate_fringe_records(cfg);
  const auto b = simulate_fringe_records(cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].singles_a == b[i].singles_a);
    CHECK(a[i].singles_b == b[i].singles_b);
    CHECK(a[i].coincidences == b[i].coincidences);
  }
  ExperimentConfig other = cfg;
  other.master_seed = cfg.master_seed + 1;
  const auto c = simulate_fringe_records(other);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    differs = differs || (a[i].coincidences != c[i].coincidences);
  }
  CHECK(differs);
}

TEST_CASE("count records survive a CSV round trip bit-exactly") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::tomography;
  const auto records = simulate_tomography_records(cfg);
  const std::string csv = count_records_to_csv(records);
  const auto back = count_records_from_csv(csv);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].setting_a.has_qwp() == records[i].setting_a.has_qwp());
    CHECK(*back[i].setting_a.qwp_deg == *records[i].setting_a.qwp_deg);
    CHECK(back[i].setting_a.hwp_deg == records[i].setting_a.hwp_deg);
    CHECK(back[i].setting_b.hwp_deg == records[i].setting_b.hwp_deg);
    CHECK(back[i].duration_s == records[i].duration_s);
    CHECK(back[i].singles_a == records[i].singles_a);
    CHECK(back[i].singles_b == records[i].singles_b);
    CHECK(back[i].coincidences == records[i].coincidences);
    CHECK(back[i].rng_seed == records[i].rng_seed);
  }
  // Serialize-parse-serialize is the identity on the text too.
  CHECK(count_records_to_csv(back) == csv);
}

TEST_CASE("hwp-only records leave the qwp columns empty") {
  const auto records = simulate_fringe_records(small_fringe_config());
  const std::string csv = count_records_to_csv(records);
  std::istringstream in(csv);
  std::string header, first;
  std::getline(in, header);
  CHECK(header ==
        "setting_a_qwp,setting_a_hwp,setting_b_qwp,setting_b_hwp,duration_s,"
        "singles_a,singles_b,coincidences,seed");
  std::getline(in, first);
  CHECK(first.rfind(",", 0) == 0);  // empty first field
  const auto back = count_records_from_csv(csv);
  CHECK_FALSE(back.front().setting_a.has_qwp());
  CHECK_FALSE(back.front().setting_b.has_qwp());
  CHECK(count_records_to_csv(back) == csv);
}

TEST_CASE("count CSV parse errors carry line numbers") {
  const std::string header =
      "setting_a_qwp,setting_a_hwp,setting_b_qwp,setting_b_hwp,duration_s,"
      "singles_a,singles_b,coincidences,seed";
  CHECK_THROWS_WITH_AS(count_records_from_csv("nope\n"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(count_records_from_csv(header + "\n1,2,3\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(
      count_records_from_csv(header + "\n,0,,0,10,1,1,abc,7\n"),
      doctest::Contains("coincidences"), ParseError);
  CHECK_THROWS_WITH_AS(
      count_records_from_csv(header + "\n,0,,0,0,1,1,1,7\n"),
      doctest::Contains("duration_s"), ParseError);
  CHECK_THROWS_WITH_AS(
      count_records_from_csv(header + "\n,0,,0,10,-1,1,1,7\n"),
      doctest::Contains("singles_a"), ParseError);
  CHECK_THROWS_WITH_AS(
      count_records_from_csv(header + "\n,0,,0,10,1,1,1,-7\n"),
      doctest::Contains("seed"), ParseError);
  // Blank lines are fine.
  CHECK(count_records_from_csv(header + "\n\n,0,,0,10,1,1,1,7\n\n").size() ==
        1);
}

TEST_CASE("hom samples round trip and validate") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::hom;
  const auto samples = simulate_hom_samples(cfg);
  REQUIRE(samples.size() == cfg.hom.scan_positions().size());
  const std::string csv = hom_samples_to_csv(samples);
  const auto back = hom_samples_from_csv(csv);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].gap_mm == samples[i].gap_mm);
    CHECK(back[i].coincidences == samples[i].coincidences);
  }
  CHECK(hom_samples_to_csv(back) == csv);

  CHECK_THROWS_WITH_AS(hom_samples_from_csv("x,y\n"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(hom_samples_from_csv("gap_mm,coincidences\n0.1\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(hom_samples_from_csv("gap_mm,coincidences\n0.1,-4\n"),
                       doctest::Contains("coincidences"), ParseError);
}

TEST_CASE("hom dip is carved out of the configured baseline") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::hom;
  const auto samples = simulate_hom_samples(cfg);
  // Shoulder samples scatter around baseline = true-coincidence rate at the
  // shoulder times the dwell time; dip center drops by the visibility.
  double shoulder = 0.0, center = 1e18;
  int n_shoulder = 0;
  for (const HomSample& s : samples) {
    if (std::abs(s.gap_mm) > 0.6) {
      shoulder += s.coincidences;
      ++n_shoulder;
    }
    if (std::abs(s.gap_mm) < 0.005) center = s.coincidences;
  }
  shoulder /= n_shoulder;
  CHECK(shoulder == doctest::Approx(1499.9957966684156).epsilon(0.05));
  CHECK(center < 0.15 * shoulder);  // 0.953 visibility leaves ~7 percent
}

TEST_CASE("fringe analysis infers the swept arm and splits passes") {
  const ExperimentConfig cfg = small_fringe_config();
  const auto records = simulate_fringe_records(cfg);
  const FringeAnalysis fa = analyze_fringe_records(records);
  CHECK(fa.scan_arm == Arm::b);
  CHECK(fa.passes.size() == 3);
  CHECK(fa.scan_deg.size() == records.size());
  CHECK(fa.visibility > 0.9);
  CHECK(fa.visibility < 1.0);
  CHECK(fa.visibility_sigma >= 0.0);
  CHECK(fa.visibility_sigma < 0.05);
  // Pooled fit sees every record.
  CHECK(fa.pooled.offset > 0.0);

  // Fixing arm B instead sweeps arm A.
  ExperimentConfig swapped = cfg;
  swapped.fringe.fixed_arm = Arm::b;
  const FringeAnalysis fb = analyze_fringe_records(
      simulate_fringe_records(swapped));
  CHECK(fb.scan_arm == Arm::a);
}

TEST_CASE("fringe analysis rejects unusable record sets") {
  const ExperimentConfig cfg = small_fringe_config();
  auto records = simulate_fringe_records(cfg);
  // Both arms varying.
  auto both = records;
  both[0].setting_a = AnalyzerSetting(std::nullopt, 1.0);
  both[1].setting_a = AnalyzerSetting(std::nullopt, 2.0);
  CHECK_THROWS_AS(analyze_fringe_records(both), FitError);
  // A quarter-wave plate left in the beam.
  auto qwp = records;
  qwp[0].setting_b =
      AnalyzerSetting(std::optional<double>(0.0), qwp[0].setting_b.hwp_deg);
  CHECK_THROWS_AS(analyze_fringe_records(qwp), InvalidArgument);
  // No records at all.
  CHECK_THROWS_AS(analyze_fringe_records(std::vector<CountRecord>{}),
                  FitError);
}

TEST_CASE("analysis of records equals analysis of their CSV image") {
  const ExperimentConfig cfg = small_fringe_config();
  const auto records = simulate_fringe_records(cfg);
  const auto reparsed = count_records_from_csv(count_records_to_csv(records));
  const FringeAnalysis fa = analyze_fringe_records(records);
  const FringeAnalysis fb = analyze_fringe_records(reparsed);
  CHECK(fa.visibility == fb.visibility);
  CHECK(fa.visibility_sigma == fb.visibility_sigma);
  CHECK(fa.pooled.offset == fb.pooled.offset);
  CHECK(fa.pooled.amplitude == fb.pooled.amplitude);
}

TEST_CASE("run_experiment writes counts and report deterministically") {
  TempDir dir_a("pairsim_test_run_a");
  TempDir dir_b("pairsim_test_run_b");
  ExperimentConfig cfg = small_fringe_config();
  const RunResult ra = run_experiment(cfg, dir_a.str());
  const RunResult rb = run_experiment(cfg, dir_b.str());
  CHECK(fs::path(ra.counts_path).filename() == "fringe_counts.csv");
  CHECK(fs::path(ra.report_path).filename() == "fringe_report.json");
  CHECK(slurp(ra.counts_path) == slurp(rb.counts_path));
  CHECK(slurp(ra.report_path) == slurp(rb.report_path));

  const auto j = nlohmann::ordered_json::parse(slurp(ra.report_path));
  CHECK(j.at("schema").get<int>() == 1);
  CHECK(j.at("kind").get<std::string>() == "fringe");
  CHECK(j.at("generator").get<std::string>() == kGeneratorTag);
  CHECK(j.at("config_digest").get<std::string>() == config_digest(cfg));
  CHECK(j.at("master_seed").get<std::uint64_t>() == cfg.master_seed);
  CHECK(j.at("analysis").contains("visibility"));
  CHECK(j.at("derived").contains("brightness_detected"));
  CHECK(j.at("data").at("scan_hwp_deg").size() ==
        cfg.fringe.scan_angles().size() * 3);
}

TEST_CASE("re-analysis of a generated CSV reproduces the analysis object") {
  TempDir dir("pairsim_test_reanalysis");
  for (ExperimentKind kind :
       {ExperimentKind::fringe, ExperimentKind::hom, ExperimentKind::chsh,
        ExperimentKind::tomography}) {
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.repeats = 2;
    cfg.duration_s = kind == ExperimentKind::chsh ? 10.0 : 2.0;
    const RunResult run = run_experiment(cfg, dir.str());
    const std::string analysis_path =
        analyze_file(kind, run.counts_path, dir.str());
    const auto report = nlohmann::ordered_json::parse(slurp(run.report_path));
    const auto reanalysis = nlohmann::ordered_json::parse(slurp(analysis_path));
    // The analysis object is a pure function of the counts.
    CHECK(report.at("analysis").dump(2) == reanalysis.at("analysis").dump(2));
    CHECK(reanalysis.at("kind").get<std::string>() ==
          std::string(to_string(kind)));
    // Re-analysis is traceable to the input bytes, not a config.
    CHECK(reanalysis.contains("input_digest"));
    CHECK_FALSE(reanalysis.contains("config_digest"));
    CHECK(reanalysis.at("input_digest").get<std::string>().size() == 16);
  }
}

TEST_CASE("sweep runs produce per-point visibilities and a flatness figure") {
  TempDir dir("pairsim_test_sweep");
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::sweep_temperature;
  cfg.repeats = 2;
  cfg.duration_s = 2.0;
  const RunResult run = run_experiment(cfg, dir.str());
  const auto j = nlohmann::ordered_json::parse(slurp(run.report_path));
  const auto& points = j.at("analysis").at("points");
  REQUIRE(points.size() == cfg.sweep.temperatures_c.size());
  for (const auto& pt : points) {
    CHECK(pt.contains("signal_wavelength_nm"));
    CHECK(pt.contains("idler_wavelength_nm"));
    CHECK(pt.at("visibility").get<double>() > 0.85);
  }
  CHECK(j.at("analysis").at("visibility_range").get<double>() < 0.1);
  CHECK(j.at("analysis").at("sweep").get<std::string>() == "temperature_c");

  // The concatenated CSV keeps global record numbering: the first record of
  // point 1 uses stream n_angles * repeats.
  const auto records = count_records_from_csv(slurp(run.counts_path));
  const size_t per_point = cfg.fringe.scan_angles().size() * 2;
  REQUIRE(records.size() == per_point * cfg.sweep.temperatures_c.size());
  CHECK(records[per_point].rng_seed ==
        derive_seed(cfg.master_seed, per_point));

  // Sweeps have no counts-only analysis.
  CHECK_THROWS_AS(analyze_file(ExperimentKind::sweep_temperature,
                               run.counts_path, dir.str()),
                  InvalidArgument);
}

TEST_CASE("power sweep tags points by pump power") {
  TempDir dir("pairsim_test_sweep_p");
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::sweep_power;
  cfg.repeats = 2;
  cfg.duration_s = 2.0;
  cfg.sweep.powers_mw = {30.0, 60.0};
  const RunResult run = run_experiment(cfg, dir.str());
  const auto j = nlohmann::ordered_json::parse(slurp(run.report_path));
  CHECK(j.at("analysis").at("sweep").get<std::string>() == "power_mw");
  const auto& points = j.at("analysis").at("points");
  REQUIRE(points.size() == 2);
  CHECK(points[0].at("value").get<double>() == 30.0);
  CHECK_FALSE(points[0].contains("signal_wavelength_nm"));
  CHECK(j.at("data").at("sweep_value").get<std::vector<double>>() ==
        std::vector<double>{30.0, 60.0});
}

TEST_CASE("plot tables are emitted for curve-bearing kinds only") {
  TempDir dir("pairsim_test_plot");
  ExperimentConfig cfg = small_fringe_config();
  const RunResult run = run_experiment(cfg, dir.str());
  const std::string plot =
      emit_plot_data(run.report_path, dir.str(), ExperimentKind::fringe);
  CHECK(fs::path(plot).filename() == "fringe_plot.txt");
  const std::string table = slurp(plot);
  CHECK(table.rfind("# hwp_deg coincidences fit", 0) == 0);
  // One data line per record plus the header.
  const size_t lines = std::count(table.begin(), table.end(), '\n');
  CHECK(lines == cfg.fringe.scan_angles().size() * 3 + 1);

  // Kind mismatch is refused.
  CHECK_THROWS_AS(
      emit_plot_data(run.report_path, dir.str(), ExperimentKind::hom),
      InvalidArgument);
  // Unstated kind is inferred from the report.
  CHECK_NOTHROW(emit_plot_data(run.report_path, dir.str()));

  // CHSH reports carry no curve.
  ExperimentConfig chsh_cfg;
  chsh_cfg.experiment = ExperimentKind::chsh;
  const RunResult chsh_run = run_experiment(chsh_cfg, dir.str());
  CHECK_THROWS_AS(emit_plot_data(chsh_run.report_path, dir.str()),
                  InvalidArgument);

  // Garbage report files are parse errors.
  const std::string bad = (fs::path(dir.str()) / "bad.json").string();
  {
    std::ofstream out(bad);
    out << "{not json";
  }
  CHECK_THROWS_AS(emit_plot_data(bad, dir.str()), ParseError);
  CHECK_THROWS_AS(emit_plot_data("missing.json", dir.str()), IoError);
}

TEST_CASE("hom plot table evaluates the fitted dip model") {
  TempDir dir("pairsim_test_plot_hom");
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::hom;
  const RunResult run = run_experiment(cfg, dir.str());
  const std::string plot = emit_plot_data(run.report_path, dir.str());
  const std::string table = slurp(plot);
  CHECK(table.rfind("# gap_mm coincidences fit", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') ==
        static_cast<long>(cfg.hom.scan_positions().size()) + 1);

  // Sweep plots list visibility against the swept value.
  ExperimentConfig sweep_cfg;
  sweep_cfg.experiment = ExperimentKind::sweep_power;
  sweep_cfg.repeats = 2;
  sweep_cfg.duration_s = 2.0;
  const RunResult sweep_run = run_experiment(sweep_cfg, dir.str());
  const std::string sweep_plot = emit_plot_data(sweep_run.report_path,
                                                dir.str());
  const std::string sweep_table = slurp(sweep_plot);
  CHECK(sweep_table.rfind("# sweep_value visibility sigma", 0) == 0);
  CHECK(std::count(sweep_table.begin(), sweep_table.end(), '\n') ==
        static_cast<long>(sweep_cfg.sweep.powers_mw.size()) + 1);
}
