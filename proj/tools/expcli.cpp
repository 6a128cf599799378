// Command-line front end: runs the virtual experiments, re-analyzes count
// files, extracts plot tables from reports, and validates configurations.
//
// Exit codes: 0 success; 2 configuration, argument, or input-format error;
// 3 fit or state-reconstruction failure; 4 file-system error.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pairsim/config.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/experiment.hpp"

namespace {

struct Options {
  std::string config_path;
  bool paper_defaults = false;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;

  std::string experiment;  // simulate
  std::string kind;        // analyze
  std::string input_path;  // analyze
  std::string report_path; // plot-data
  std::string plot_kind;   // plot-data
};

// Loads --config when given, otherwise the built-in calibrated defaults.
pairsim::ExperimentConfig load_config(const Options& opt,
                                      bool* experiment_was_set) {
  *experiment_was_set = false;
  if (!opt.config_path.empty()) {
    return pairsim::parse_config_file(opt.config_path, experiment_was_set);
  }
  return pairsim::ExperimentConfig::paper_defaults();
}

void reject_simulation_flags(const Options& opt, const char* command) {
  if (opt.seed) {
    throw pairsim::ConfigError(std::string("--seed does not apply to ") +
                               command);
  }
  if (opt.repeats) {
    throw pairsim::ConfigError(std::string("--repeats does not apply to ") +
                               command);
  }
}

int run_simulate(const Options& opt) {
  bool experiment_was_set = false;
  pairsim::ExperimentConfig cfg = load_config(opt, &experiment_was_set);
  const pairsim::ExperimentKind want =
      pairsim::experiment_kind_from_string(opt.experiment);
  if (experiment_was_set && cfg.experiment != want) {
    throw pairsim::ConfigError(
        std::string("config file sets experiment = ") +
        pairsim::to_string(cfg.experiment) +
        " but the command line asks for " + pairsim::to_string(want));
  }
  cfg.experiment = want;
  if (opt.seed) cfg.master_seed = *opt.seed;
  if (opt.repeats) cfg.repeats = *opt.repeats;
  const pairsim::RunResult res = pairsim::run_experiment(cfg, opt.out_dir);
  std::cout << "counts_csv: " << res.counts_path << "\n"
            << "report_json: " << res.report_path << "\n";
  return 0;
}

int run_analyze(const Options& opt) {
  if (!opt.config_path.empty() || opt.paper_defaults) {
    throw pairsim::ConfigError(
        "analyze reads counts only; it does not take --config or "
        "--paper-defaults");
  }
  reject_simulation_flags(opt, "analyze");
  const pairsim::ExperimentKind kind =
      pairsim::experiment_kind_from_string(opt.kind);
  const std::string path =
      pairsim::analyze_file(kind, opt.input_path, opt.out_dir);
  std::cout << "report_json: " << path << "\n";
  return 0;
}

int run_plot_data(const Options& opt) {
  if (!opt.config_path.empty() || opt.paper_defaults) {
    throw pairsim::ConfigError(
        "plot-data reads a report only; it does not take --config or "
        "--paper-defaults");
  }
  reject_simulation_flags(opt, "plot-data");
  std::optional<pairsim::ExperimentKind> expect;
  if (!opt.plot_kind.empty()) {
    expect = pairsim::experiment_kind_from_string(opt.plot_kind);
  }
  const std::string path =
      pairsim::emit_plot_data(opt.report_path, opt.out_dir, expect);
  std::cout << "plot_txt: " << path << "\n";
  return 0;
}

int run_validate(const Options& opt) {
  reject_simulation_flags(opt, "validate-config");
  if (opt.config_path.empty() && !opt.paper_defaults) {
    throw pairsim::ConfigError(
        "validate-config needs --config <file> or --paper-defaults");
  }
  bool ignored = false;
  const pairsim::ExperimentConfig cfg = load_config(opt, &ignored);
  std::cout << "config ok (digest " << pairsim::config_digest(cfg) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entangled-pair source simulator and analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  auto* config_opt =
      app.add_option("--config", opt.config_path,
                     "experiment configuration file (key = value text)");
  auto* defaults_flag =
      app.add_flag("--paper-defaults", opt.paper_defaults,
                   "use the built-in calibrated configuration");
  config_opt->excludes(defaults_flag);
  app.add_option("--seed", opt.seed, "override master_seed");
  app.add_option("--out-dir", opt.out_dir, "output directory (default .)");
  app.add_option("--repeats", opt.repeats, "override scan repeat count");

  CLI::App* sim = app.add_subcommand(
      "simulate", "simulate one experiment and analyze the result");
  sim->add_option("experiment", opt.experiment,
                  "fringe | hom | chsh | tomography | sweep-power | "
                  "sweep-temperature")
      ->required();

  CLI::App* ana =
      app.add_subcommand("analyze", "analyze an existing counts CSV");
  ana->add_option("kind", opt.kind, "fringe | hom | chsh | tomography")
      ->required();
  ana->add_option("--input", opt.input_path, "counts CSV path")->required();

  CLI::App* plot = app.add_subcommand(
      "plot-data", "write a plain-text plot table from a report");
  plot->add_option("report", opt.report_path, "report JSON path")->required();
  plot->add_option("--kind", opt.plot_kind,
                   "require the report to be of this kind");

  CLI::App* val = app.add_subcommand(
      "validate-config", "parse and validate a configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_simulate(opt);
    if (ana->parsed()) return run_analyze(opt);
    if (plot->parsed()) return run_plot_data(opt);
    if (val->parsed()) return run_validate(opt);
    std::cerr << "error: no command given\n";
    return 2;
  } catch (const pairsim::FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pairsim::ReconstructionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pairsim::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const pairsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pairsim::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pairsim::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
