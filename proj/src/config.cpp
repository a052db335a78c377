#include "dnss/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "dnss/csv.hpp"
#include "dnss/errors.hpp"

namespace dnss {

std::vector<double> GridSpec::values() const {
  if (points < 2) throw ConfigError("grid needs at least 2 points");
  if (!(start < stop)) throw ConfigError("grid start must be below stop");
  std::vector<double> v(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i)
    v[static_cast<size_t>(i)] =
        start + (stop - start) * (static_cast<double>(i) / (points - 1));
  return v;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& known) {
  std::string best;
  size_t best_d = std::string::npos;
  for (const auto& k : known) {
    size_t d = levenshtein(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (best_d <= std::max<size_t>(2, key.size() / 3)) return best;
  return "";
}

struct KeyCtx {
  std::vector<Diagnostic>& diags;
  std::string where;
  bool ok = true;

  void fail(const std::string& msg) {
    diags.push_back({where, msg});
    ok = false;
  }
};

bool parse_double(const std::string& v, double& out) {
  const char* s = v.c_str();
  char* end = nullptr;
  double x = std::strtod(s, &end);
  if (end == s || *end != '\0' || !std::isfinite(x)) return false;
  out = x;
  return true;
}

bool parse_int(const std::string& v, int& out) {
  double x = 0;
  if (!parse_double(v, x)) return false;
  if (x != std::floor(x) || std::fabs(x) > 2.0e9) return false;
  out = static_cast<int>(x);
  return true;
}

bool parse_bool(const std::string& v, bool& out) {
  std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::vector<std::string> kSystemKeys = {
    "larmor_hz",   "a_perp_hz", "a_par_hz",      "detuning_hz",
    "rabi_hz",     "pulse_width_s", "bz_gauss",  "species",
    "gamma_hz_per_gauss", "frequency_convention"};
const std::vector<std::string> kSequenceKeys = {"preset", "file", "np", "timing"};
const std::vector<std::string> kExperimentKeys = {
    "kind",       "n_pulses", "electron_init", "nuclear_init", "harmonic",
    "dip",        "tau_s",    "n_max",         "tp_list_s",    "spectrum"};
const std::vector<std::string> kGridKeys = {"tau_start_s",    "tau_stop_s",
                                            "tau_points",     "delta_start_hz",
                                            "delta_stop_hz",  "delta_points"};
const std::vector<std::string> kOutputKeys = {"dir", "label", "emit_plot_script"};
const std::vector<std::string> kSections = {"system", "sequence", "experiment",
                                            "grids", "output"};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& filename,
                            std::vector<Diagnostic>& diags) {
  RunConfig cfg;
  bool preset_seen = false, file_seen = false;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string where = filename + ":" + std::to_string(lineno);
    std::string line = trim(raw);
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        diags.push_back({where, "unterminated section header"});
        continue;
      }
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        std::string hint = nearest_key(section, kSections);
        std::string msg = "unknown section [" + section + "]";
        if (!hint.empty()) msg += "; did you mean [" + hint + "]?";
        diags.push_back({where, msg});
        section.clear();
      }
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      diags.push_back({where, "expected key = value"});
      continue;
    }
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      diags.push_back({where, "empty key"});
      continue;
    }
    if (section.empty()) {
      diags.push_back({where, "key '" + key + "' outside any [section]"});
      continue;
    }

    KeyCtx ctx{diags, where};
    auto unknown = [&](const std::vector<std::string>& known) {
      std::string hint = nearest_key(key, known);
      std::string msg = "unknown key '" + key + "' in [" + section + "]";
      if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
      ctx.fail(msg);
    };
    auto want_double = [&](double& slot) {
      double x;
      if (parse_double(value, x))
        slot = x;
      else
        ctx.fail("'" + key + "' expects a number, got '" + value + "'");
    };
    auto want_opt_double = [&](std::optional<double>& slot) {
      double x;
      if (parse_double(value, x))
        slot = x;
      else
        ctx.fail("'" + key + "' expects a number, got '" + value + "'");
    };
    auto want_int = [&](int& slot) {
      int x;
      if (parse_int(value, x))
        slot = x;
      else
        ctx.fail("'" + key + "' expects an integer, got '" + value + "'");
    };

    if (section == "system") {
      if (key == "larmor_hz") want_opt_double(cfg.system.larmor_hz);
      else if (key == "a_perp_hz") want_double(cfg.system.a_perp_hz);
      else if (key == "a_par_hz") want_double(cfg.system.a_par_hz);
      else if (key == "detuning_hz") want_double(cfg.system.detuning_hz);
      else if (key == "rabi_hz") want_opt_double(cfg.system.rabi_hz);
      else if (key == "pulse_width_s") want_double(cfg.system.pulse_width_s);
      else if (key == "bz_gauss") want_opt_double(cfg.system.bz_gauss);
      else if (key == "species") {
        try {
          cfg.system.species = species_from_string(value);
        } catch (const Error& e) {
          ctx.fail(e.what());
        }
      } else if (key == "gamma_hz_per_gauss") want_double(cfg.system.custom_gamma_hz_per_gauss);
      else if (key == "frequency_convention") {
        try {
          cfg.system.frequency_convention = frequency_from_string(lower(value));
        } catch (const Error& e) {
          ctx.fail(e.what());
        }
      } else unknown(kSystemKeys);
    } else if (section == "sequence") {
      if (key == "preset") {
        cfg.sequence_preset = value;
        preset_seen = true;
      } else if (key == "file") {
        cfg.sequence_file = value;
        file_seen = true;
      } else if (key == "np") want_int(cfg.np);
      else if (key == "timing") {
        try {
          cfg.timing = timing_from_string(value);
        } catch (const Error& e) {
          ctx.fail(e.what());
        }
      } else if (key.rfind("binding.", 0) == 0) {
        std::string name = key.substr(8);
        double x;
        if (name.empty())
          ctx.fail("binding key needs a name, e.g. binding.eps");
        else if (parse_double(value, x))
          cfg.bindings[name] = x;
        else
          ctx.fail("'" + key + "' expects a number, got '" + value + "'");
      } else unknown(kSequenceKeys);
    } else if (section == "experiment") {
      if (key == "kind") cfg.experiment = lower(value);
      else if (key == "n_pulses") want_int(cfg.n_pulses);
      else if (key == "electron_init") cfg.electron_init = lower(value);
      else if (key == "nuclear_init") cfg.nuclear_inits = split_list(lower(value));
      else if (key == "harmonic") want_int(cfg.harmonic);
      else if (key == "dip") cfg.dip_choice = lower(value);
      else if (key == "tau_s") want_double(cfg.tau_s);
      else if (key == "n_max") want_int(cfg.n_max);
      else if (key == "tp_list_s") {
        cfg.tp_list_s.clear();
        for (const auto& item : split_list(value)) {
          double x;
          if (parse_double(item, x))
            cfg.tp_list_s.push_back(x);
          else
            ctx.fail("tp_list_s entry '" + item + "' is not a number");
        }
      } else if (key == "spectrum") cfg.spectrum_kind = lower(value);
      else unknown(kExperimentKeys);
    } else if (section == "grids") {
      if (key == "tau_start_s") want_double(cfg.tau_grid.start);
      else if (key == "tau_stop_s") want_double(cfg.tau_grid.stop);
      else if (key == "tau_points") want_int(cfg.tau_grid.points);
      else if (key == "delta_start_hz") want_double(cfg.delta_grid.start);
      else if (key == "delta_stop_hz") want_double(cfg.delta_grid.stop);
      else if (key == "delta_points") want_int(cfg.delta_grid.points);
      else unknown(kGridKeys);
    } else if (section == "output") {
      if (key == "dir") cfg.out_dir = value;
      else if (key == "label") cfg.label = value;
      else if (key == "emit_plot_script") {
        bool b;
        if (parse_bool(value, b))
          cfg.emit_plot_script = b;
        else
          ctx.fail("'" + key + "' expects true/false, got '" + value + "'");
      } else unknown(kOutputKeys);
    }
  }
  if (preset_seen && file_seen)
    diags.push_back({filename, "[sequence] sets both 'preset' and 'file'; pick one"});
  return cfg;
}

RunConfig parse_config_file(const std::string& path, std::vector<Diagnostic>& diags) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    diags.push_back({path, e.what()});
    return RunConfig{};
  }
  return parse_config_text(text, path, diags);
}

SequenceSpec sequence_from_config(const RunConfig& cfg) {
  SequenceSpec spec;
  if (!cfg.sequence_file.empty()) {
    spec.program = parse_sequence(read_text_file(cfg.sequence_file));
    spec.name = cfg.sequence_file;
    if (cfg.np > 1) {
      Stmt rep;
      rep.kind = Stmt::Kind::Repeat;
      rep.count = cfg.np;
      rep.block = spec.program.body;
      spec.program.body = {rep};
    }
  } else {
    spec = preset_spec(cfg.sequence_preset, cfg.np);
  }
  spec.timing = cfg.timing;
  spec.bindings = cfg.bindings;
  return spec;
}

void validate_run_config(const RunConfig& cfg, std::vector<Diagnostic>& diags) {
  auto sys = cfg.system;
  try {
    sys.validate();
    sys.resolved_larmor();
  } catch (const Error& e) {
    diags.push_back({"system", e.what()});
  }

  if (cfg.np < 1) diags.push_back({"sequence.np", "np must be >= 1"});
  SequenceSpec spec;
  bool have_spec = false;
  try {
    spec = sequence_from_config(cfg);
    have_spec = true;
  } catch (const SyntaxError& e) {
    diags.push_back({cfg.sequence_file, e.what()});
  } catch (const Error& e) {
    diags.push_back({"sequence", e.what()});
  }

  static const std::vector<std::string> kinds = {"trace", "sweep", "spectrum",
                                                 "theta", "dips", "polarize"};
  if (std::find(kinds.begin(), kinds.end(), cfg.experiment) == kinds.end()) {
    std::string hint = nearest_key(cfg.experiment, kinds);
    std::string msg = "unknown experiment kind '" + cfg.experiment + "'";
    if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
    diags.push_back({"experiment.kind", msg});
  }

  try {
    electron_init_from_string(cfg.electron_init);
  } catch (const Error& e) {
    diags.push_back({"experiment.electron_init", e.what()});
  }
  if (cfg.nuclear_inits.empty())
    diags.push_back({"experiment.nuclear_init", "needs at least one state"});
  for (const auto& ni : cfg.nuclear_inits) {
    try {
      nuclear_init_from_string(ni);
    } catch (const Error& e) {
      diags.push_back({"experiment.nuclear_init", e.what()});
    }
  }
  if (cfg.n_pulses < 1) diags.push_back({"experiment.n_pulses", "n_pulses must be >= 1"});
  if (cfg.harmonic < 1) diags.push_back({"experiment.harmonic", "harmonic must be >= 1"});
  if (cfg.n_max < 2) diags.push_back({"experiment.n_max", "n_max must be >= 2"});
  if (cfg.dip_choice != "plus" && cfg.dip_choice != "minus")
    diags.push_back({"experiment.dip", "dip must be 'plus' or 'minus'"});
  if (cfg.spectrum_kind != "full" && cfg.spectrum_kind != "unperturbed")
    diags.push_back({"experiment.spectrum", "spectrum must be 'full' or 'unperturbed'"});
  for (double tp : cfg.tp_list_s)
    if (tp < 0) diags.push_back({"experiment.tp_list_s", "pulse widths must be >= 0"});

  bool needs_tau_grid = cfg.experiment == "trace" || cfg.experiment == "sweep" ||
                        cfg.experiment == "spectrum" || cfg.experiment == "theta";
  if (needs_tau_grid) {
    if (!cfg.tau_grid.present()) {
      diags.push_back({"grids", "experiment '" + cfg.experiment + "' needs a tau grid"});
    } else {
      try {
        cfg.tau_grid.values();
      } catch (const Error& e) {
        diags.push_back({"grids.tau", e.what()});
      }
      if (cfg.tau_grid.start <= 0)
        diags.push_back({"grids.tau_start_s", "tau must be positive"});
    }
  }
  if (cfg.experiment == "sweep") {
    if (!cfg.delta_grid.present()) {
      diags.push_back({"grids", "experiment 'sweep' needs a delta grid"});
    } else {
      try {
        cfg.delta_grid.values();
      } catch (const Error& e) {
        diags.push_back({"grids.delta", e.what()});
      }
    }
  }

  // Dry-run compile at a representative tau so binding and width problems
  // surface here rather than mid-run.
  if (have_spec && diags.empty()) {
    double tau = cfg.tau_s > 0 ? cfg.tau_s : 0.0;
    if (cfg.tau_grid.present()) tau = cfg.tau_grid.start;
    if (tau <= 0) {
      try {
        tau = kPi / sys.omega_larmor();
      } catch (const Error&) {
        tau = 0;
      }
    }
    if (tau > 0) {
      try {
        spec.compile_at(tau, sys);
      } catch (const Error& e) {
        diags.push_back({"sequence", std::string("compile at tau=") +
                                         format_sci(tau) + " failed: " + e.what()});
      }
    }
  }
}

RunConfig figure_preset(const std::string& name) {
  RunConfig cfg;
  std::string n = lower(name);
  if (n == "fig2c") {
    cfg.system.larmor_hz = 2.1e6;
    cfg.system.a_perp_hz = 44.0e3;
    cfg.system.a_par_hz = 0.0;
    cfg.sequence_preset = "dnss_detuned";
    cfg.experiment = "sweep";
    cfg.n_pulses = 336;
    cfg.electron_init = "xplus";
    cfg.nuclear_inits = {"mixed"};
    cfg.tp_list_s = {0.0, 20.0e-9, 40.0e-9};
    cfg.tau_grid = {200.0e-9, 280.0e-9, 1601};
    cfg.delta_grid = {0.0, 4.0e6, 17};
    cfg.label = "fig2c";
    return cfg;
  }
  if (n == "fig3a") {
    cfg.system.larmor_hz = 2.1e6;
    cfg.system.a_perp_hz = 44.0e3;
    cfg.system.a_par_hz = 0.0;
    cfg.system.detuning_hz = 1.0e6;
    cfg.system.pulse_width_s = 40.0e-9;
    cfg.sequence_preset = "dnss_detuned";
    cfg.experiment = "trace";
    cfg.n_pulses = 336;
    cfg.electron_init = "xplus";
    cfg.nuclear_inits = {"mixed", "up", "down"};
    double tau0 = 0.5 / 2.1e6;  // pi / omega_larmor
    cfg.tau_grid = {0.8 * tau0, 3.4 * tau0, 3251};
    cfg.label = "fig3a";
    return cfg;
  }
  if (n == "fig3c") {
    // 13C at 400 G. Detuning and width picked by a coarse scan maximizing
    // single-gate flip fidelity at n_max pulses; see README.
    cfg.system.bz_gauss = 400.0;
    cfg.system.species = Species::C13;
    cfg.system.a_perp_hz = 10.0e3;
    cfg.system.a_par_hz = 0.0;
    cfg.system.detuning_hz = 410.0e3;
    cfg.system.pulse_width_s = 200.0e-9;
    cfg.sequence_preset = "dnss_detuned";
    cfg.experiment = "polarize";
    cfg.electron_init = "xplus";
    cfg.nuclear_inits = {"mixed"};
    cfg.harmonic = 1;
    cfg.dip_choice = "plus";
    cfg.n_max = 300;
    cfg.label = "fig3c";
    return cfg;
  }
  throw InvalidPreset("unknown figure preset '" + name +
                      "' (try fig2c, fig3a, fig3c)");
}

}  // namespace dnss
