#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "pairsim/config.hpp"
#include "pairsim/errors.hpp"

using namespace pairsim;

TEST_CASE("experiment kinds map to their hyphenated names and back") {
  const std::vector<std::pair<ExperimentKind, std::string>> table = {
      {ExperimentKind::fringe, "fringe"},
      {ExperimentKind::hom, "hom"},
      {ExperimentKind::chsh, "chsh"},
      {ExperimentKind::tomography, "tomography"},
      {ExperimentKind::sweep_power, "sweep-power"},
      {ExperimentKind::sweep_temperature, "sweep-temperature"},
  };
  for (const auto& [kind, name] : table) {
    CHECK(std::string(to_string(kind)) == name);
    CHECK(experiment_kind_from_string(name) == kind);
  }
  CHECK_THROWS_AS(experiment_kind_from_string("bell"), ConfigError);
  try {
    experiment_kind_from_string("bell");
  } catch (const ConfigError& e) {
    // The message lists the accepted names.
    CHECK(std::string(e.what()).find("sweep-temperature") !=
          std::string::npos);
  }
}

TEST_CASE("defaults validate and round-trip through the canonical form") {
  const ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(config_digest(back) == config_digest(cfg));

  // The named preset is the default construction.
  CHECK(serialize_config(ExperimentConfig::paper_defaults()) == text);
}

TEST_CASE("digest is 16 hex characters and tracks content") {
  const ExperimentConfig cfg;
  const std::string d = config_digest(cfg);
  REQUIRE(d.size() == 16);
  for (char c : d) {
    CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  }
  CHECK(config_digest(cfg) == d);
  ExperimentConfig other;
  other.master_seed = 54321;
  CHECK(config_digest(other) != d);
}

TEST_CASE("non-default values in every section survive a round trip") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::sweep_temperature;
  cfg.master_seed = 18446744073709551615ull;  // uint64 max
  cfg.duration_s = 2.5;
  cfg.repeats = 3;
  cfg.source.pump_power_mw = 90.0;
  cfg.source.theta_rad = 0.125;
  cfg.source.balance = 1.0;
  cfg.tuning.temperatures_c = {20.0, 30.0, 40.0};
  cfg.tuning.signal_wavelengths_nm = {1556.5, 1550.5, 1545.25};
  cfg.detector_a.efficiency = 0.2;
  cfg.detector_b.gate_window_ns = 1.25;
  cfg.fringe.fixed_arm = Arm::b;
  cfg.fringe.scan_step_deg = 7.5;
  cfg.hom.visibility = 0.875;
  cfg.hom.scan_step_mm = 0.02;
  cfg.sweep.powers_mw = {10.0, 20.0};
  cfg.sweep.temperatures_c = {20.0, 30.0};

  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.experiment == ExperimentKind::sweep_temperature);
  CHECK(back.tuning.overridden());
  CHECK(back.fringe.fixed_arm == Arm::b);
  // The tuning section only appears when overridden.
  CHECK(text.find("[tuning]") != std::string::npos);
  CHECK(serialize_config(ExperimentConfig{}).find("[tuning]") ==
        std::string::npos);
}

TEST_CASE("an empty config is the default experiment") {
  bool was_set = true;
  const ExperimentConfig cfg = parse_config("", &was_set);
  CHECK_FALSE(was_set);
  CHECK(cfg.experiment == ExperimentKind::fringe);
  CHECK(serialize_config(cfg) == serialize_config(ExperimentConfig{}));
}

TEST_CASE("comments, blank lines and spacing are tolerated") {
  const std::string text =
      "# leading comment\n"
      "\n"
      "  experiment =   chsh   ; trailing comment\n"
      "; full-line comment\n"
      "  [source]  \n"
      "  pump_power_mw=120 # watts? no, milliwatts\n";
  bool was_set = false;
  const ExperimentConfig cfg = parse_config(text, &was_set);
  CHECK(was_set);
  CHECK(cfg.experiment == ExperimentKind::chsh);
  CHECK(cfg.source.pump_power_mw == 120.0);
}

TEST_CASE("parser errors carry the line number and full key path") {
  CHECK_THROWS_WITH_AS(parse_config("bogus = 1\n"),
                       "config line 1: unknown key bogus", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[source]\nflux = 1\n"),
                       "config line 2: unknown key source.flux", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[widget]\n"),
                       "config line 1: unknown section [widget]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("duration_s = 5\nduration_s = 6\n"),
                       "config line 2: duplicate key duration_s", ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config("[source]\nnoise_p = warm\n"),
      "config line 2: source.noise_p: expected a number, got \"warm\"",
      ConfigError);
  CHECK_THROWS_AS(parse_config("[hom]\nvisibility\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[hom\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("= 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("master_seed = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("repeats = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\npowers_mw = 10, x\n"), ConfigError);
}

TEST_CASE("validation failures name the offending field path") {
  CHECK_THROWS_WITH_AS(parse_config("schema = 2\n"),
                       "schema: unsupported value 2 (this build reads schema 1)",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("duration_s = 0\n"),
                       "duration_s: must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("repeats = 0\n"), "repeats: must be >= 1",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[source]\nnoise_p = 1.5\n"),
                       "source.noise_p must lie in [0,1]", ConfigError);
  // Detector messages are rewritten to the concrete section name.
  CHECK_THROWS_WITH_AS(parse_config("[detector_b]\nefficiency = 0\n"),
                       "detector_b.efficiency must lie in (0,1]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[detector_a]\nduty_cycle = 2\n"),
                       "detector_a.duty_cycle must lie in (0,1]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[fringe]\nscan_step_deg = 0\n"),
                       "fringe.scan_step: must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config("[fringe]\nscan_start_deg = 50\nscan_stop_deg = 10\n"),
      "fringe: scan_stop must exceed scan_start", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[hom]\nscan_step_mm = 1e-9\n"),
                       "hom: scan grid has more than 1e6 points", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[hom]\nvisibility = 1.25\n"),
                       "hom.visibility: must lie in [0,1]", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[sweep]\npowers_mw = -5\n"),
                       "sweep.powers_mw: values must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[sweep]\npowers_mw = 10, 5\n"),
                       "sweep.powers_mw: values must be strictly increasing",
                       ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config("[sweep]\ntemperatures_c = 30, 20\n"),
      "sweep.temperatures_c: values must be strictly increasing", ConfigError);
}

TEST_CASE("tuning overrides are validated as a pair") {
  const std::string good =
      "[tuning]\n"
      "temperatures_c = 20, 30, 40\n"
      "signal_wavelengths_nm = 1556.5, 1550.5, 1545.25\n";
  const ExperimentConfig cfg = parse_config(good);
  CHECK(cfg.tuning.overridden());
  CHECK(cfg.tuning.curve().signal_wavelength_nm(30.0) == 1550.5);

  CHECK_THROWS_WITH_AS(
      parse_config("[tuning]\ntemperatures_c = 20, 30\n"
                   "signal_wavelengths_nm = 1556\n"),
      "tuning: temperatures_c and signal_wavelengths_nm must have the same "
      "length",
      ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config("[tuning]\ntemperatures_c = 30, 20\n"
                   "signal_wavelengths_nm = 1550, 1556\n"),
      "tuning.temperatures_c: values must be strictly increasing", ConfigError);
  // A single point cannot define a curve.
  CHECK_THROWS_AS(parse_config("[tuning]\ntemperatures_c = 30\n"
                               "signal_wavelengths_nm = 1550\n"),
                  ConfigError);
  // Defaults fall back to the built-in calibration.
  CHECK(ExperimentConfig{}.tuning.curve().signal_wavelength_nm(32.0) ==
        1550.09);
}

TEST_CASE("scan grids are inclusive and robust to binary rounding") {
  const ExperimentConfig cfg;
  const std::vector<double> angles = cfg.fringe.scan_angles();
  REQUIRE(angles.size() == 19);
  CHECK(angles.front() == 0.0);
  CHECK(angles.back() == 90.0);

  const std::vector<double> positions = cfg.hom.scan_positions();
  REQUIRE(positions.size() == 201);
  CHECK(positions.front() == -1.0);
  CHECK(positions.back() == doctest::Approx(1.0).epsilon(1e-12));

  // A step that does not divide the span truncates to the last full step.
  FringeConfig f;
  f.scan_step_deg = 4.0;
  const std::vector<double> coarse = f.scan_angles();
  REQUIRE(coarse.size() == 23);
  CHECK(coarse.back() == 88.0);
}

TEST_CASE("config files parse like in-memory text") {
  const std::string path = "test_config_roundtrip.ini";
  {
    std::ofstream out(path);
    out << "experiment = hom\nmaster_seed = 99\n";
  }
  bool was_set = false;
  const ExperimentConfig cfg = parse_config_file(path, &was_set);
  CHECK(was_set);
  CHECK(cfg.experiment == ExperimentKind::hom);
  CHECK(cfg.master_seed == 99);
  std::remove(path.c_str());

  CHECK_THROWS_AS(parse_config_file("no_such_file_here.ini"), IoError);
}
