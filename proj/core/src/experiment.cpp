#include "pairsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/random.hpp"
#include "pairsim/textio.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace pairsim {

namespace {

constexpr const char* kCountHeader =
    "setting_a_qwp,setting_a_hwp,setting_b_qwp,setting_b_hwp,duration_s,"
    "singles_a,singles_b,coincidences,seed";
constexpr const char* kHomHeader = "gap_mm,coincidences";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("cannot read " + path);
  }
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot create " + tmp.string());
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw IoError("cannot move " + tmp.string() + " into place: " +
                  ec.message());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir + ": " +
                  ec.message());
  }
}

// Fixed + swept analyzer settings for one fringe record.
std::pair<AnalyzerSetting, AnalyzerSetting> fringe_settings(
    const FringeConfig& f, double scan_deg) {
  const AnalyzerSetting fixed(std::nullopt, f.fixed_hwp_deg);
  const AnalyzerSetting moving(std::nullopt, scan_deg);
  if (f.fixed_arm == Arm::a) return {fixed, moving};
  return {moving, fixed};
}

void simulate_fringe_into(const ExperimentConfig& cfg,
                          const DensityMatrix& rho, std::uint64_t seed_base,
                          std::vector<CountRecord>& out) {
  const auto angles = cfg.fringe.scan_angles();
  std::uint64_t k = seed_base;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    for (double ang : angles) {
      const auto [sa, sb] = fringe_settings(cfg.fringe, ang);
      const JointProbability jp = outcome_probabilities(rho, sa, sb);
      out.push_back(simulate_counts(jp, cfg.source, cfg.detector_a,
                                    cfg.detector_b, sa, sb, cfg.duration_s,
                                    derive_seed(cfg.master_seed, k)));
      ++k;
    }
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sigma(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---- report JSON pieces ----

ordered_json fit_json(const FringeFit& f) {
  ordered_json j;
  j["offset"] = f.offset;
  j["amplitude"] = f.amplitude;
  j["phase_deg"] = f.phase_deg;
  j["c_max"] = f.c_max;
  j["c_min"] = f.c_min;
  j["visibility"] = f.visibility;
  j["residual_rms"] = f.residual_rms;
  j["c_min_clamped"] = f.c_min_clamped;
  return j;
}

ordered_json fringe_analysis_json(const FringeAnalysis& fa) {
  ordered_json j;
  j["scan_arm"] = fa.scan_arm == Arm::a ? "a" : "b";
  j["visibility"] = fa.visibility;
  j["visibility_sigma"] = fa.visibility_sigma;
  j["pooled"] = fit_json(fa.pooled);
  ordered_json passes = ordered_json::array();
  for (const FringeFit& p : fa.passes) passes.push_back(fit_json(p));
  j["passes"] = std::move(passes);
  return j;
}

ordered_json fringe_data_json(const FringeAnalysis& fa) {
  ordered_json j;
  j["scan_hwp_deg"] = fa.scan_deg;
  j["coincidences"] = fa.counts;
  return j;
}

ordered_json hom_analysis_json(const HomFit& f) {
  ordered_json j;
  j["baseline"] = f.baseline;
  j["visibility"] = f.visibility;
  j["coherence_length_mm"] = f.coherence_length_mm;
  j["center_mm"] = f.center_mm;
  j["residual_rms"] = f.residual_rms;
  return j;
}

ordered_json hom_data_json(std::span<const HomSample> samples) {
  std::vector<double> xs, cs;
  xs.reserve(samples.size());
  cs.reserve(samples.size());
  for (const HomSample& s : samples) {
    xs.push_back(s.gap_mm);
    cs.push_back(s.coincidences);
  }
  ordered_json j;
  j["gap_mm"] = std::move(xs);
  j["coincidences"] = std::move(cs);
  return j;
}

ordered_json chsh_analysis_json(const ChshResult& r) {
  ordered_json j;
  j["S"] = r.S;
  j["sigma_S"] = r.sigma_S;
  j["E"] = r.E;
  j["sigma_E"] = r.sigma_E;
  return j;
}

ordered_json records_data_json(std::span<const CountRecord> records,
                               bool with_qwp) {
  std::vector<double> qa, qb, ha, hb, sa, sb, cc;
  for (const CountRecord& r : records) {
    qa.push_back(r.setting_a.qwp_deg.value_or(0.0));
    qb.push_back(r.setting_b.qwp_deg.value_or(0.0));
    ha.push_back(r.setting_a.hwp_deg);
    hb.push_back(r.setting_b.hwp_deg);
    sa.push_back(r.singles_a);
    sb.push_back(r.singles_b);
    cc.push_back(r.coincidences);
  }
  ordered_json j;
  if (with_qwp) j["qwp_a_deg"] = std::move(qa);
  j["hwp_a_deg"] = std::move(ha);
  if (with_qwp) j["qwp_b_deg"] = std::move(qb);
  j["hwp_b_deg"] = std::move(hb);
  j["singles_a"] = std::move(sa);
  j["singles_b"] = std::move(sb);
  j["coincidences"] = std::move(cc);
  return j;
}

ordered_json rho_json(const Mat4& m) {
  ordered_json re = ordered_json::array();
  ordered_json im = ordered_json::array();
  for (int i = 0; i < 4; ++i) {
    ordered_json re_row = ordered_json::array();
    ordered_json im_row = ordered_json::array();
    for (int k = 0; k < 4; ++k) {
      re_row.push_back(std::real(m(i, k)));
      im_row.push_back(std::imag(m(i, k)));
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  ordered_json j;
  j["basis"] = kBasisLabels;
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

ordered_json tomo_analysis_json(const TomographyAnalysis& ta) {
  ordered_json j;
  j["rho"] = rho_json(ta.result.rho.matrix());
  j["deviance"] = ta.result.deviance;
  j["iterations"] = ta.result.iterations;
  j["gradient_norm"] = ta.result.gradient_norm;
  j["best_restart"] = ta.result.best_restart;
  j["converged"] = ta.result.converged;
  j["fidelity_phi_plus"] = ta.fidelity_phi_plus;
  j["purity"] = ta.purity;
  return j;
}

ordered_json report_base(ExperimentKind kind) {
  ordered_json j;
  j["schema"] = 1;
  j["kind"] = to_string(kind);
  j["generator"] = kGeneratorTag;
  return j;
}

struct Wavelengths {
  double signal_nm = 0.0;
  double idler_nm = 0.0;
};

Wavelengths wavelengths_at(const ExperimentConfig& cfg, double temperature_c) {
  Wavelengths w;
  w.signal_nm = cfg.tuning.curve().signal_wavelength_nm(temperature_c);
  w.idler_nm = idler_wavelength_nm(w.signal_nm, cfg.source.pump_wavelength_nm);
  return w;
}

ordered_json fringe_derived_json(const ExperimentConfig& cfg,
                                 const FringeAnalysis& fa) {
  const Wavelengths w = wavelengths_at(cfg, cfg.source.crystal_temperature_c);
  const double bw =
      bandwidth_from_coherence_length(cfg.source.coherence_length_mm,
                                      w.signal_nm);
  const double nc_cps = fa.pooled.c_max / cfg.duration_s;
  const double duty = std::min(cfg.detector_a.duty_cycle,
                               cfg.detector_b.duty_cycle);
  ordered_json j;
  j["signal_wavelength_nm"] = w.signal_nm;
  j["idler_wavelength_nm"] = w.idler_nm;
  j["bandwidth_nm"] = bw;
  j["coincidence_rate_max_cps"] = nc_cps;
  j["brightness_detected"] =
      brightness_detected(nc_cps, cfg.source.pump_power_mw, bw);
  j["brightness_inferred"] = brightness_inferred(
      nc_cps, cfg.source.alpha1, cfg.source.alpha2, duty,
      cfg.detector_a.efficiency, cfg.detector_b.efficiency,
      cfg.source.pump_power_mw, bw);
  return j;
}

ordered_json hom_derived_json(const ExperimentConfig& cfg, const HomFit& fit,
                              double baseline_counts) {
  const Wavelengths w = wavelengths_at(cfg, cfg.source.crystal_temperature_c);
  ordered_json j;
  j["signal_wavelength_nm"] = w.signal_nm;
  j["idler_wavelength_nm"] = w.idler_nm;
  j["bandwidth_from_fit_nm"] =
      bandwidth_from_coherence_length(fit.coherence_length_mm, w.signal_nm);
  j["bandwidth_configured_nm"] = bandwidth_from_coherence_length(
      cfg.source.coherence_length_mm, w.signal_nm);
  j["baseline_expected"] = baseline_counts;
  return j;
}

std::string dump_report(const ordered_json& j) { return j.dump(2) + "\n"; }

// One fringe sub-run of a sweep; returns its analysis.
FringeAnalysis sweep_point_run(const ExperimentConfig& point_cfg,
                               std::uint64_t seed_base,
                               std::vector<CountRecord>& all_records) {
  const DensityMatrix rho = output_state(point_cfg.source);
  std::vector<CountRecord> recs;
  recs.reserve(static_cast<size_t>(point_cfg.repeats) *
               point_cfg.fringe.scan_angles().size());
  simulate_fringe_into(point_cfg, rho, seed_base, recs);
  FringeAnalysis fa = analyze_fringe_records(recs);
  all_records.insert(all_records.end(), recs.begin(), recs.end());
  return fa;
}

}  // namespace

std::vector<CountRecord> simulate_fringe_records(const ExperimentConfig& cfg) {
  cfg.validate();
  const DensityMatrix rho = output_state(cfg.source);
  std::vector<CountRecord> out;
  out.reserve(static_cast<size_t>(cfg.repeats) *
              cfg.fringe.scan_angles().size());
  simulate_fringe_into(cfg, rho, 0, out);
  return out;
}

std::vector<HomSample> simulate_hom_samples(const ExperimentConfig& cfg) {
  cfg.validate();
  // Dip baseline: the coincidence rate the detection chain yields when half
  // of all pairs land in coincidence, i.e. the interferometer's shoulder
  // level with the configured source and detectors.
  const JointProbability jp{0.5, 0.5, 0.5};
  const ExpectedRates rates =
      expected_rates(jp, cfg.source, cfg.detector_a, cfg.detector_b);
  const double baseline = rates.true_coinc * cfg.duration_s;
  const auto xs = cfg.hom.scan_positions();
  std::vector<HomSample> out;
  out.reserve(xs.size());
  for (size_t k = 0; k < xs.size(); ++k) {
    const double mean = hom_coincidence_curve(
        xs[k], cfg.hom.center_mm, cfg.source.coherence_length_mm,
        cfg.hom.visibility, baseline);
    Rng rng(derive_seed(cfg.master_seed, k));
    out.push_back({xs[k], static_cast<double>(rng.poisson(mean))});
  }
  return out;
}

std::vector<CountRecord> simulate_chsh_records(const ExperimentConfig& cfg) {
  cfg.validate();
  const DensityMatrix rho = output_state(cfg.source);
  const auto settings = chsh_settings();
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (size_t k = 0; k < settings.size(); ++k) {
    const auto& [sa, sb] = settings[k];
    const JointProbability jp = outcome_probabilities(rho, sa, sb);
    out.push_back(simulate_counts(jp, cfg.source, cfg.detector_a,
                                  cfg.detector_b, sa, sb, cfg.duration_s,
                                  derive_seed(cfg.master_seed, k)));
  }
  return out;
}

std::vector<CountRecord> simulate_tomography_records(
    const ExperimentConfig& cfg) {
  cfg.validate();
  const DensityMatrix rho = output_state(cfg.source);
  const auto settings = tomography_settings();
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (size_t k = 0; k < settings.size(); ++k) {
    const auto& [sa, sb] = settings[k];
    const JointProbability jp = outcome_probabilities(rho, sa, sb);
    out.push_back(simulate_counts(jp, cfg.source, cfg.detector_a,
                                  cfg.detector_b, sa, sb, cfg.duration_s,
                                  derive_seed(cfg.master_seed, k)));
  }
  return out;
}

std::string count_records_to_csv(std::span<const CountRecord> records) {
  std::string out = kCountHeader;
  out += '\n';
  for (const CountRecord& r : records) {
    if (r.setting_a.has_qwp()) out += textio::format_double(*r.setting_a.qwp_deg);
    out += ',';
    out += textio::format_double(r.setting_a.hwp_deg);
    out += ',';
    if (r.setting_b.has_qwp()) out += textio::format_double(*r.setting_b.qwp_deg);
    out += ',';
    out += textio::format_double(r.setting_b.hwp_deg);
    out += ',';
    out += textio::format_double(r.duration_s);
    out += ',';
    out += textio::format_double(r.singles_a);
    out += ',';
    out += textio::format_double(r.singles_b);
    out += ',';
    out += textio::format_double(r.coincidences);
    out += ',';
    out += std::to_string(r.rng_seed);
    out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

double field_double(int line, std::string_view raw, const char* name,
                    bool require_nonneg) {
  const auto v = textio::parse_double(textio::trim(raw));
  if (!v || !std::isfinite(*v)) {
    parse_fail(line, std::string("bad value for ") + name + ": \"" +
                         std::string(textio::trim(raw)) + "\"");
  }
  if (require_nonneg && *v < 0.0) {
    parse_fail(line, std::string(name) + " must be >= 0");
  }
  return *v;
}

}  // namespace

std::vector<CountRecord> count_records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  if (!std::getline(in, raw) || textio::trim(raw) != kCountHeader) {
    parse_fail(1, std::string("expected header \"") + kCountHeader + "\"");
  }
  line = 1;
  std::vector<CountRecord> out;
  while (std::getline(in, raw)) {
    ++line;
    if (textio::trim(raw).empty()) continue;
    const auto fields = textio::split(raw, ',');
    if (fields.size() != 9) {
      parse_fail(line, "expected 9 comma-separated fields, got " +
                           std::to_string(fields.size()));
    }
    CountRecord r;
    std::optional<double> qa, qb;
    if (!textio::trim(fields[0]).empty()) {
      qa = field_double(line, fields[0], "setting_a_qwp", false);
    }
    const double ha = field_double(line, fields[1], "setting_a_hwp", false);
    if (!textio::trim(fields[2]).empty()) {
      qb = field_double(line, fields[2], "setting_b_qwp", false);
    }
    const double hb = field_double(line, fields[3], "setting_b_hwp", false);
    try {
      r.setting_a = AnalyzerSetting(qa, ha);
      r.setting_b = AnalyzerSetting(qb, hb);
    } catch (const InvalidArgument& e) {
      parse_fail(line, e.what());
    }
    r.duration_s = field_double(line, fields[4], "duration_s", true);
    if (r.duration_s <= 0.0) parse_fail(line, "duration_s must be > 0");
    r.singles_a = field_double(line, fields[5], "singles_a", true);
    r.singles_b = field_double(line, fields[6], "singles_b", true);
    r.coincidences = field_double(line, fields[7], "coincidences", true);
    const auto seed = textio::parse_uint(textio::trim(fields[8]));
    if (!seed) {
      parse_fail(line, "bad value for seed: \"" +
                           std::string(textio::trim(fields[8])) + "\"");
    }
    r.rng_seed = *seed;
    out.push_back(r);
  }
  return out;
}

std::string hom_samples_to_csv(std::span<const HomSample> samples) {
  std::string out = kHomHeader;
  out += '\n';
  for (const HomSample& s : samples) {
    out += textio::format_double(s.gap_mm);
    out += ',';
    out += textio::format_double(s.coincidences);
    out += '\n';
  }
  return out;
}

std::vector<HomSample> hom_samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  if (!std::getline(in, raw) || textio::trim(raw) != kHomHeader) {
    parse_fail(1, std::string("expected header \"") + kHomHeader + "\"");
  }
  int line = 1;
  std::vector<HomSample> out;
  while (std::getline(in, raw)) {
    ++line;
    if (textio::trim(raw).empty()) continue;
    const auto fields = textio::split(raw, ',');
    if (fields.size() != 2) {
      parse_fail(line, "expected 2 comma-separated fields, got " +
                           std::to_string(fields.size()));
    }
    HomSample s;
    s.gap_mm = field_double(line, fields[0], "gap_mm", false);
    s.coincidences = field_double(line, fields[1], "coincidences", true);
    out.push_back(s);
  }
  return out;
}

FringeAnalysis analyze_fringe_records(std::span<const CountRecord> records) {
  if (records.empty()) {
    throw FitError("fringe: no records to analyze");
  }
  for (const CountRecord& r : records) {
    if (r.setting_a.has_qwp() || r.setting_b.has_qwp()) {
      throw InvalidArgument(
          "fringe: analyzer quarter-wave plates must be out of the beam");
    }
  }
  const auto arm_constant = [&](auto pick) {
    const double first = pick(records.front());
    for (const CountRecord& r : records) {
      if (pick(r) != first) return false;
    }
    return true;
  };
  const bool a_const =
      arm_constant([](const CountRecord& r) { return r.setting_a.hwp_deg; });
  const bool b_const =
      arm_constant([](const CountRecord& r) { return r.setting_b.hwp_deg; });

  FringeAnalysis fa;
  if (a_const) {
    fa.scan_arm = Arm::b;
  } else if (b_const) {
    fa.scan_arm = Arm::a;
  } else {
    throw FitError("fringe: cannot identify the swept arm (both vary)");
  }
  fa.scan_deg.reserve(records.size());
  fa.counts.reserve(records.size());
  for (const CountRecord& r : records) {
    fa.scan_deg.push_back(fa.scan_arm == Arm::b ? r.setting_b.hwp_deg
                                                : r.setting_a.hwp_deg);
    fa.counts.push_back(r.coincidences);
  }

  // Pass boundaries: the scan angle stops increasing.
  std::vector<size_t> starts = {0};
  for (size_t i = 1; i < fa.scan_deg.size(); ++i) {
    if (fa.scan_deg[i] <= fa.scan_deg[i - 1]) starts.push_back(i);
  }
  starts.push_back(fa.scan_deg.size());
  std::vector<double> vis;
  for (size_t p = 0; p + 1 < starts.size(); ++p) {
    const size_t b = starts[p], e = starts[p + 1];
    const FringeFit f =
        fit_sinusoid(std::span(fa.scan_deg).subspan(b, e - b),
                     std::span(fa.counts).subspan(b, e - b));
    vis.push_back(f.visibility);
    fa.passes.push_back(f);
  }
  fa.pooled = fit_sinusoid(fa.scan_deg, fa.counts);
  fa.visibility = mean_of(vis);
  fa.visibility_sigma = sample_sigma(vis, fa.visibility);
  return fa;
}

TomographyAnalysis analyze_tomography_records(
    std::span<const CountRecord> records) {
  TomographyAnalysis ta;
  ta.result = mle_tomography(records);
  ta.fidelity_phi_plus = fidelity(ta.result.rho, KetState::phi_plus());
  ta.purity = purity(ta.result.rho);
  return ta;
}

RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const std::string kind = to_string(cfg.experiment);
  const fs::path counts_path = fs::path(out_dir) / (kind + "_counts.csv");
  const fs::path report_path = fs::path(out_dir) / (kind + "_report.json");

  ordered_json report = report_base(cfg.experiment);
  report["config_digest"] = config_digest(cfg);
  report["master_seed"] = cfg.master_seed;
  std::string csv;

  switch (cfg.experiment) {
    case ExperimentKind::fringe: {
      const auto records = simulate_fringe_records(cfg);
      csv = count_records_to_csv(records);
      const FringeAnalysis fa = analyze_fringe_records(records);
      report["analysis"] = fringe_analysis_json(fa);
      report["data"] = fringe_data_json(fa);
      report["derived"] = fringe_derived_json(cfg, fa);
      break;
    }
    case ExperimentKind::hom: {
      const auto samples = simulate_hom_samples(cfg);
      csv = hom_samples_to_csv(samples);
      std::vector<double> xs, cs;
      for (const HomSample& s : samples) {
        xs.push_back(s.gap_mm);
        cs.push_back(s.coincidences);
      }
      const HomFit fit = fit_triangle(xs, cs);
      const JointProbability jp{0.5, 0.5, 0.5};
      const double baseline =
          expected_rates(jp, cfg.source, cfg.detector_a, cfg.detector_b)
              .true_coinc *
          cfg.duration_s;
      report["analysis"] = hom_analysis_json(fit);
      report["data"] = hom_data_json(samples);
      report["derived"] = hom_derived_json(cfg, fit, baseline);
      break;
    }
    case ExperimentKind::chsh: {
      const auto records = simulate_chsh_records(cfg);
      csv = count_records_to_csv(records);
      report["analysis"] = chsh_analysis_json(chsh(records));
      report["data"] = records_data_json(records, false);
      break;
    }
    case ExperimentKind::tomography: {
      const auto records = simulate_tomography_records(cfg);
      csv = count_records_to_csv(records);
      report["analysis"] = tomo_analysis_json(analyze_tomography_records(records));
      report["data"] = records_data_json(records, true);
      break;
    }
    case ExperimentKind::sweep_power:
    case ExperimentKind::sweep_temperature: {
      const bool by_power = cfg.experiment == ExperimentKind::sweep_power;
      const std::vector<double>& values =
          by_power ? cfg.sweep.powers_mw : cfg.sweep.temperatures_c;
      const std::uint64_t per_point =
          static_cast<std::uint64_t>(cfg.repeats) *
          cfg.fringe.scan_angles().size();
      std::vector<CountRecord> all_records;
      ordered_json points = ordered_json::array();
      std::vector<double> vis, sig;
      for (size_t j = 0; j < values.size(); ++j) {
        ExperimentConfig pc = cfg;
        if (by_power) {
          pc.source.pump_power_mw = values[j];
        } else {
          pc.source.crystal_temperature_c = values[j];
        }
        const FringeAnalysis fa =
            sweep_point_run(pc, per_point * j, all_records);
        ordered_json pt;
        pt["value"] = values[j];
        if (!by_power) {
          const Wavelengths w = wavelengths_at(cfg, values[j]);
          pt["signal_wavelength_nm"] = w.signal_nm;
          pt["idler_wavelength_nm"] = w.idler_nm;
        }
        pt["visibility"] = fa.visibility;
        pt["visibility_sigma"] = fa.visibility_sigma;
        points.push_back(std::move(pt));
        vis.push_back(fa.visibility);
        sig.push_back(fa.visibility_sigma);
      }
      csv = count_records_to_csv(all_records);
      ordered_json analysis;
      analysis["sweep"] = by_power ? "power_mw" : "temperature_c";
      analysis["points"] = std::move(points);
      analysis["visibility_range"] =
          *std::max_element(vis.begin(), vis.end()) -
          *std::min_element(vis.begin(), vis.end());
      report["analysis"] = std::move(analysis);
      ordered_json data;
      data["sweep_value"] = values;
      data["visibility"] = std::move(vis);
      data["sigma"] = std::move(sig);
      report["data"] = std::move(data);
      break;
    }
  }

  write_file_atomic(counts_path, csv);
  write_file_atomic(report_path, dump_report(report));
  return {counts_path.string(), report_path.string()};
}

std::string analyze_file(ExperimentKind kind, const std::string& csv_path,
                         const std::string& out_dir) {
  if (kind == ExperimentKind::sweep_power ||
      kind == ExperimentKind::sweep_temperature) {
    throw InvalidArgument(
        "analyze accepts fringe, hom, chsh, or tomography counts");
  }
  const std::string text = read_file(csv_path);
  ensure_dir(out_dir);

  ordered_json report = report_base(kind);
  char digest[17];
  {
    const std::uint64_t h = textio::fnv1a64(text);
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) digest[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    digest[16] = '\0';
  }
  report["input_digest"] = digest;

  switch (kind) {
    case ExperimentKind::fringe: {
      const auto records = count_records_from_csv(text);
      const FringeAnalysis fa = analyze_fringe_records(records);
      report["analysis"] = fringe_analysis_json(fa);
      report["data"] = fringe_data_json(fa);
      break;
    }
    case ExperimentKind::hom: {
      const auto samples = hom_samples_from_csv(text);
      std::vector<double> xs, cs;
      for (const HomSample& s : samples) {
        xs.push_back(s.gap_mm);
        cs.push_back(s.coincidences);
      }
      report["analysis"] = hom_analysis_json(fit_triangle(xs, cs));
      report["data"] = hom_data_json(samples);
      break;
    }
    case ExperimentKind::chsh: {
      const auto records = count_records_from_csv(text);
      report["analysis"] = chsh_analysis_json(chsh(records));
      report["data"] = records_data_json(records, false);
      break;
    }
    case ExperimentKind::tomography: {
      const auto records = count_records_from_csv(text);
      report["analysis"] =
          tomo_analysis_json(analyze_tomography_records(records));
      report["data"] = records_data_json(records, true);
      break;
    }
    default:
      break;  // unreachable; sweeps rejected above
  }

  const fs::path out_path =
      fs::path(out_dir) / (std::string(to_string(kind)) + "_analysis.json");
  write_file_atomic(out_path, dump_report(report));
  return out_path.string();
}

std::string emit_plot_data(const std::string& report_path,
                           const std::string& out_dir,
                           std::optional<ExperimentKind> expected_kind) {
  const std::string text = read_file(report_path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }

  std::string table;
  ExperimentKind kind = ExperimentKind::fringe;
  try {
    const std::string kind_str = j.at("kind").get<std::string>();
    try {
      kind = experiment_kind_from_string(kind_str);
    } catch (const ConfigError&) {
      throw ParseError("report has unknown kind \"" + kind_str + "\"");
    }
    if (expected_kind && *expected_kind != kind) {
      throw InvalidArgument(std::string("report kind is ") +
                            to_string(kind) + ", expected " +
                            to_string(*expected_kind));
    }

    if (kind == ExperimentKind::fringe) {
      const auto xs = j.at("data").at("scan_hwp_deg").get<std::vector<double>>();
      const auto cs = j.at("data").at("coincidences").get<std::vector<double>>();
      const auto& pooled = j.at("analysis").at("pooled");
      const double a = pooled.at("offset").get<double>();
      const double b = pooled.at("amplitude").get<double>();
      const double phi0 = pooled.at("phase_deg").get<double>();
      table = "# hwp_deg coincidences fit\n";
      for (size_t i = 0; i < xs.size() && i < cs.size(); ++i) {
        const double fit =
            a + b * std::cos(4.0 * (xs[i] - phi0) * std::numbers::pi / 180.0);
        table += textio::format_double(xs[i]);
        table += ' ';
        table += textio::format_double(cs[i]);
        table += ' ';
        table += textio::format_double(fit);
        table += '\n';
      }
    } else if (kind == ExperimentKind::hom) {
      const auto xs = j.at("data").at("gap_mm").get<std::vector<double>>();
      const auto cs = j.at("data").at("coincidences").get<std::vector<double>>();
      const auto& fit = j.at("analysis");
      const double baseline = fit.at("baseline").get<double>();
      const double v = fit.at("visibility").get<double>();
      const double lc = fit.at("coherence_length_mm").get<double>();
      const double center = fit.at("center_mm").get<double>();
      table = "# gap_mm coincidences fit\n";
      for (size_t i = 0; i < xs.size() && i < cs.size(); ++i) {
        const double f = hom_coincidence_curve(xs[i], center, lc, v, baseline);
        table += textio::format_double(xs[i]);
        table += ' ';
        table += textio::format_double(cs[i]);
        table += ' ';
        table += textio::format_double(f);
        table += '\n';
      }
    } else if (kind == ExperimentKind::sweep_power ||
               kind == ExperimentKind::sweep_temperature) {
      const auto xs = j.at("data").at("sweep_value").get<std::vector<double>>();
      const auto vs = j.at("data").at("visibility").get<std::vector<double>>();
      const auto ss = j.at("data").at("sigma").get<std::vector<double>>();
      table = "# sweep_value visibility sigma\n";
      for (size_t i = 0; i < xs.size() && i < vs.size() && i < ss.size();
           ++i) {
        table += textio::format_double(xs[i]);
        table += ' ';
        table += textio::format_double(vs[i]);
        table += ' ';
        table += textio::format_double(ss[i]);
        table += '\n';
      }
    } else {
      throw InvalidArgument(std::string("reports of kind ") +
                            to_string(kind) + " have no curve to plot");
    }
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("report is missing expected fields: ") +
                     e.what());
  }

  ensure_dir(out_dir);
  const fs::path out_path =
      fs::path(out_dir) / (std::string(to_string(kind)) + "_plot.txt");
  write_file_atomic(out_path, table);
  return out_path.string();
}

}  // namespace pairsim
