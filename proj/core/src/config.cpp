#include "pairsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "pairsim/errors.hpp"
#include "pairsim/textio.hpp"

namespace pairsim {

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::fringe: return "fringe";
    case ExperimentKind::hom: return "hom";
    case ExperimentKind::chsh: return "chsh";
    case ExperimentKind::tomography: return "tomography";
    case ExperimentKind::sweep_power: return "sweep-power";
    case ExperimentKind::sweep_temperature: return "sweep-temperature";
  }
  throw InvalidArgument("unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "fringe") return ExperimentKind::fringe;
  if (s == "hom") return ExperimentKind::hom;
  if (s == "chsh") return ExperimentKind::chsh;
  if (s == "tomography") return ExperimentKind::tomography;
  if (s == "sweep-power") return ExperimentKind::sweep_power;
  if (s == "sweep-temperature") return ExperimentKind::sweep_temperature;
  throw ConfigError("experiment: unknown value \"" + s +
                    "\" (expected fringe, hom, chsh, tomography, "
                    "sweep-power, or sweep-temperature)");
}

namespace {

// Inclusive [start, stop] grid; the small slack keeps a stop value that is a
// whole number of steps away on the grid despite binary rounding.
std::vector<double> make_grid(double start, double stop, double step) {
  const double span = (stop - start) / step;
  const int n = static_cast<int>(std::floor(span + 1e-6)) + 1;
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = start + i * step;
  return out;
}

void check_grid(const char* section, double start, double stop, double step) {
  const std::string p(section);
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    throw ConfigError(p + ": scan bounds must be finite");
  }
  if (!(step > 0.0)) {
    throw ConfigError(p + ".scan_step: must be > 0");
  }
  if (!(stop > start)) {
    throw ConfigError(p + ": scan_stop must exceed scan_start");
  }
  if ((stop - start) / step > 1e6) {
    throw ConfigError(p + ": scan grid has more than 1e6 points");
  }
}

void check_list(const char* path, const std::vector<double>& v,
                bool ascending) {
  if (v.empty()) {
    throw ConfigError(std::string(path) + ": list must not be empty");
  }
  for (size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw ConfigError(std::string(path) + ": values must be finite");
    }
    if (ascending && i > 0 && v[i] <= v[i - 1]) {
      throw ConfigError(std::string(path) +
                        ": values must be strictly increasing");
    }
  }
}

}  // namespace

std::vector<double> FringeConfig::scan_angles() const {
  return make_grid(scan_start_deg, scan_stop_deg, scan_step_deg);
}

std::vector<double> HomConfig::scan_positions() const {
  return make_grid(scan_start_mm, scan_stop_mm, scan_step_mm);
}

TuningCurve TuningConfig::curve() const {
  if (!overridden()) return TuningCurve::default_curve();
  std::vector<TuningCurvePoint> pts(temperatures_c.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    pts[i] = {temperatures_c[i], signal_wavelengths_nm[i]};
  }
  return TuningCurve(std::move(pts));
}

void ExperimentConfig::validate() const {
  if (schema != 1) {
    throw ConfigError("schema: unsupported value " + std::to_string(schema) +
                      " (this build reads schema 1)");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw ConfigError("duration_s: must be > 0");
  }
  if (repeats < 1) {
    throw ConfigError("repeats: must be >= 1");
  }
  try {
    source.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());  // messages already carry "source." paths
  }
  auto check_detector = [](const DetectorConfig& d, const char* name) {
    try {
      d.validate();
    } catch (const InvalidArgument& e) {
      std::string msg = e.what();
      // "detector.<field>" -> "detector_a.<field>"
      if (msg.rfind("detector.", 0) == 0) {
        msg = std::string(name) + msg.substr(std::string_view("detector").size());
      }
      throw ConfigError(msg);
    }
  };
  check_detector(detector_a, "detector_a");
  check_detector(detector_b, "detector_b");

  if (tuning.temperatures_c.size() != tuning.signal_wavelengths_nm.size()) {
    throw ConfigError(
        "tuning: temperatures_c and signal_wavelengths_nm must have the "
        "same length");
  }
  if (tuning.overridden()) {
    check_list("tuning.temperatures_c", tuning.temperatures_c, true);
    check_list("tuning.signal_wavelengths_nm", tuning.signal_wavelengths_nm,
               false);
    try {
      (void)tuning.curve();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("tuning: ") + e.what());
    }
  }

  check_grid("fringe", fringe.scan_start_deg, fringe.scan_stop_deg,
             fringe.scan_step_deg);
  if (!std::isfinite(fringe.fixed_hwp_deg)) {
    throw ConfigError("fringe.fixed_hwp_deg: must be finite");
  }
  check_grid("hom", hom.scan_start_mm, hom.scan_stop_mm, hom.scan_step_mm);
  if (!(hom.visibility >= 0.0 && hom.visibility <= 1.0)) {
    throw ConfigError("hom.visibility: must lie in [0,1]");
  }
  if (!std::isfinite(hom.center_mm)) {
    throw ConfigError("hom.center_mm: must be finite");
  }
  check_list("sweep.powers_mw", sweep.powers_mw, true);
  for (double p : sweep.powers_mw) {
    if (!(p > 0.0)) {
      throw ConfigError("sweep.powers_mw: values must be > 0");
    }
  }
  check_list("sweep.temperatures_c", sweep.temperatures_c, true);
}

namespace {

struct ParserState {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  int line = 0;
  bool experiment_set = false;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  std::string path(std::string_view key) const {
    return section.empty() ? std::string(key) : section + "." + std::string(key);
  }

  double as_double(std::string_view key, std::string_view value) {
    const auto v = textio::parse_double(textio::trim(value));
    if (!v) fail(path(key) + ": expected a number, got \"" +
                 std::string(textio::trim(value)) + "\"");
    return *v;
  }

  std::vector<double> as_list(std::string_view key, std::string_view value) {
    std::vector<double> out;
    for (std::string_view part : textio::split(value, ',')) {
      const auto v = textio::parse_double(textio::trim(part));
      if (!v) fail(path(key) + ": expected comma-separated numbers, got \"" +
                   std::string(textio::trim(part)) + "\"");
      out.push_back(*v);
    }
    return out;
  }

  void apply(std::string_view key, std::string_view value) {
    const std::string full = path(key);
    if (!seen.insert(full).second) {
      fail("duplicate key " + full);
    }
    ExperimentConfig& c = cfg;
    const std::string val(textio::trim(value));

    if (section.empty()) {
      if (key == "schema") {
        const auto v = textio::parse_int(val);
        if (!v) fail("schema: expected an integer");
        c.schema = static_cast<int>(*v);
      } else if (key == "experiment") {
        c.experiment = experiment_kind_from_string(val);
        experiment_set = true;
      } else if (key == "master_seed") {
        const auto v = textio::parse_uint(val);
        if (!v) fail("master_seed: expected a non-negative integer");
        c.master_seed = *v;
      } else if (key == "duration_s") {
        c.duration_s = as_double(key, val);
      } else if (key == "repeats") {
        const auto v = textio::parse_int(val);
        if (!v) fail("repeats: expected an integer");
        c.repeats = static_cast<int>(*v);
      } else {
        fail("unknown key " + full);
      }
      return;
    }

    if (section == "source") {
      SourceConfig& s = c.source;
      if (key == "pump_power_mw") s.pump_power_mw = as_double(key, val);
      else if (key == "pump_wavelength_nm") s.pump_wavelength_nm = as_double(key, val);
      else if (key == "crystal_temperature_c") s.crystal_temperature_c = as_double(key, val);
      else if (key == "theta_rad") s.theta_rad = as_double(key, val);
      else if (key == "balance") s.balance = as_double(key, val);
      else if (key == "noise_p") s.noise_p = as_double(key, val);
      else if (key == "pair_rate_coeff") s.pair_rate_coeff = as_double(key, val);
      else if (key == "alpha1") s.alpha1 = as_double(key, val);
      else if (key == "alpha2") s.alpha2 = as_double(key, val);
      else if (key == "coherence_length_mm") s.coherence_length_mm = as_double(key, val);
      else fail("unknown key " + full);
      return;
    }
    if (section == "tuning") {
      if (key == "temperatures_c") c.tuning.temperatures_c = as_list(key, val);
      else if (key == "signal_wavelengths_nm") c.tuning.signal_wavelengths_nm = as_list(key, val);
      else fail("unknown key " + full);
      return;
    }
    if (section == "detector_a" || section == "detector_b") {
      DetectorConfig& d = section == "detector_a" ? c.detector_a : c.detector_b;
      if (key == "efficiency") d.efficiency = as_double(key, val);
      else if (key == "gate_window_ns") d.gate_window_ns = as_double(key, val);
      else if (key == "dark_prob_per_gate") d.dark_prob_per_gate = as_double(key, val);
      else if (key == "trigger_rate_hz") d.trigger_rate_hz = as_double(key, val);
      else if (key == "duty_cycle") d.duty_cycle = as_double(key, val);
      else fail("unknown key " + full);
      return;
    }
    if (section == "fringe") {
      FringeConfig& f = c.fringe;
      if (key == "fixed_arm") {
        if (val == "a") f.fixed_arm = Arm::a;
        else if (val == "b") f.fixed_arm = Arm::b;
        else fail("fringe.fixed_arm: expected \"a\" or \"b\"");
      }
      else if (key == "fixed_hwp_deg") f.fixed_hwp_deg = as_double(key, val);
      else if (key == "scan_start_deg") f.scan_start_deg = as_double(key, val);
      else if (key == "scan_stop_deg") f.scan_stop_deg = as_double(key, val);
      else if (key == "scan_step_deg") f.scan_step_deg = as_double(key, val);
      else fail("unknown key " + full);
      return;
    }
    if (section == "hom") {
      HomConfig& h = c.hom;
      if (key == "visibility") h.visibility = as_double(key, val);
      else if (key == "center_mm") h.center_mm = as_double(key, val);
      else if (key == "scan_start_mm") h.scan_start_mm = as_double(key, val);
      else if (key == "scan_stop_mm") h.scan_stop_mm = as_double(key, val);
      else if (key == "scan_step_mm") h.scan_step_mm = as_double(key, val);
      else fail("unknown key " + full);
      return;
    }
    if (section == "sweep") {
      if (key == "powers_mw") c.sweep.powers_mw = as_list(key, val);
      else if (key == "temperatures_c") c.sweep.temperatures_c = as_list(key, val);
      else fail("unknown key " + full);
      return;
    }
    fail("unknown section [" + section + "]");
  }
};

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              bool* experiment_was_set) {
  static const std::set<std::string> kSections = {
      "source", "tuning", "detector_a", "detector_b",
      "fringe", "hom",    "sweep"};
  ParserState st;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++st.line;
    std::string_view line(raw);
    if (const size_t h = line.find_first_of("#;"); h != std::string_view::npos) {
      line = line.substr(0, h);
    }
    line = textio::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') st.fail("unterminated section header");
      const std::string name(textio::trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(name)) st.fail("unknown section [" + name + "]");
      st.section = name;
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      st.fail("expected key = value, got \"" + std::string(line) + "\"");
    }
    const std::string_view key = textio::trim(line.substr(0, eq));
    if (key.empty()) st.fail("empty key");
    st.apply(key, line.substr(eq + 1));
  }
  st.cfg.validate();
  if (experiment_was_set) *experiment_was_set = st.experiment_set;
  return st.cfg;
}

ExperimentConfig parse_config_file(const std::string& path,
                                   bool* experiment_was_set) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("cannot read config file: " + path);
  }
  return parse_config(buf.str(), experiment_was_set);
}

namespace {

void emit(std::string& out, const char* key, double v) {
  out += key;
  out += " = ";
  out += textio::format_double(v);
  out += '\n';
}

void emit_list(std::string& out, const char* key,
               const std::vector<double>& v) {
  out += key;
  out += " = ";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += textio::format_double(v[i]);
  }
  out += '\n';
}

void emit_detector(std::string& out, const char* name,
                   const DetectorConfig& d) {
  out += '\n';
  out += '[';
  out += name;
  out += "]\n";
  emit(out, "efficiency", d.efficiency);
  emit(out, "gate_window_ns", d.gate_window_ns);
  emit(out, "dark_prob_per_gate", d.dark_prob_per_gate);
  emit(out, "trigger_rate_hz", d.trigger_rate_hz);
  emit(out, "duty_cycle", d.duty_cycle);
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  out += "schema = " + std::to_string(cfg.schema) + '\n';
  out += "experiment = " + std::string(to_string(cfg.experiment)) + '\n';
  out += "master_seed = " + std::to_string(cfg.master_seed) + '\n';
  emit(out, "duration_s", cfg.duration_s);
  out += "repeats = " + std::to_string(cfg.repeats) + '\n';

  out += "\n[source]\n";
  emit(out, "pump_power_mw", cfg.source.pump_power_mw);
  emit(out, "pump_wavelength_nm", cfg.source.pump_wavelength_nm);
  emit(out, "crystal_temperature_c", cfg.source.crystal_temperature_c);
  emit(out, "theta_rad", cfg.source.theta_rad);
  emit(out, "balance", cfg.source.balance);
  emit(out, "noise_p", cfg.source.noise_p);
  emit(out, "pair_rate_coeff", cfg.source.pair_rate_coeff);
  emit(out, "alpha1", cfg.source.alpha1);
  emit(out, "alpha2", cfg.source.alpha2);
  emit(out, "coherence_length_mm", cfg.source.coherence_length_mm);

  if (cfg.tuning.overridden()) {
    out += "\n[tuning]\n";
    emit_list(out, "temperatures_c", cfg.tuning.temperatures_c);
    emit_list(out, "signal_wavelengths_nm", cfg.tuning.signal_wavelengths_nm);
  }

  emit_detector(out, "detector_a", cfg.detector_a);
  emit_detector(out, "detector_b", cfg.detector_b);

  out += "\n[fringe]\n";
  out += "fixed_arm = ";
  out += cfg.fringe.fixed_arm == Arm::a ? 'a' : 'b';
  out += '\n';
  emit(out, "fixed_hwp_deg", cfg.fringe.fixed_hwp_deg);
  emit(out, "scan_start_deg", cfg.fringe.scan_start_deg);
  emit(out, "scan_stop_deg", cfg.fringe.scan_stop_deg);
  emit(out, "scan_step_deg", cfg.fringe.scan_step_deg);

  out += "\n[hom]\n";
  emit(out, "visibility", cfg.hom.visibility);
  emit(out, "center_mm", cfg.hom.center_mm);
  emit(out, "scan_start_mm", cfg.hom.scan_start_mm);
  emit(out, "scan_stop_mm", cfg.hom.scan_stop_mm);
  emit(out, "scan_step_mm", cfg.hom.scan_step_mm);

  out += "\n[sweep]\n";
  emit_list(out, "powers_mw", cfg.sweep.powers_mw);
  emit_list(out, "temperatures_c", cfg.sweep.temperatures_c);
  return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
  const std::uint64_t h = textio::fnv1a64(serialize_config(cfg));
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) {
    buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace pairsim
