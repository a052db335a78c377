// Command-line front end: runs configured experiments, validates config
// files, and exposes the dip predictor, theta curve and eigenphase spectrum
// directly.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dnss/config.hpp"
#include "dnss/errors.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset_name;
  std::optional<double> larmor_hz;
  std::optional<double> bz_gauss;
  std::string species;
  double gamma_hz_per_gauss = 0.0;
  std::optional<double> a_perp_hz;
  std::optional<double> a_par_hz;
  std::optional<double> detuning_hz;
  std::optional<double> rabi_hz;
  std::optional<double> pulse_width_s;
  std::string frequency_convention;
  std::string timing_convention;
  std::string sequence;
  std::optional<int> np;
  std::vector<std::string> bindings;
  std::optional<int> jobs;
  std::string out_dir;
  std::string label;
  bool emit_plot_script = false;
};

void add_system_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--larmor-hz", f.larmor_hz, "Nuclear Larmor frequency");
  cmd->add_option("--bz-gauss", f.bz_gauss, "Static field (G)");
  cmd->add_option("--species", f.species, "Nuclear species (h1, c13, custom)");
  cmd->add_option("--gamma-hz-per-gauss", f.gamma_hz_per_gauss,
                  "Gyromagnetic ratio for custom species");
  cmd->add_option("--a-perp-hz", f.a_perp_hz, "Transverse hyperfine coupling");
  cmd->add_option("--a-par-hz", f.a_par_hz, "Parallel hyperfine coupling");
  cmd->add_option("--detuning-hz", f.detuning_hz, "Drive detuning");
  cmd->add_option("--rabi-hz", f.rabi_hz, "Drive strength (default pi/tp)");
  cmd->add_option("--pulse-width-s", f.pulse_width_s, "Pulse width; 0 = delta");
  cmd->add_option("--frequency-convention", f.frequency_convention,
                  "ordinary (Hz) or angular (rad/s)");
}

void add_sequence_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--sequence", f.sequence,
                  "Preset name (cpmg, dnss_detuned, dnss_flip, xy8) or .seq file");
  cmd->add_option("--np", f.np, "Periods per compiled block");
  cmd->add_option("--binding", f.bindings, "Parameter binding name=value")
      ->expected(-1);
  cmd->add_option("--timing-convention", f.timing_convention,
                  "center (center-to-center) or edge (edge-to-edge)");
}

bool looks_like_file(const std::string& s) {
  return s.find('/') != std::string::npos || s.find(".seq") != std::string::npos;
}

// Flags override whatever the config file or figure preset set.
void apply_flags(dnss::RunConfig& cfg, const CommonFlags& f) {
  if (f.larmor_hz) cfg.system.larmor_hz = f.larmor_hz;
  if (f.bz_gauss) cfg.system.bz_gauss = f.bz_gauss;
  if (!f.species.empty()) cfg.system.species = dnss::species_from_string(f.species);
  if (f.gamma_hz_per_gauss > 0) cfg.system.custom_gamma_hz_per_gauss = f.gamma_hz_per_gauss;
  if (f.a_perp_hz) cfg.system.a_perp_hz = *f.a_perp_hz;
  if (f.a_par_hz) cfg.system.a_par_hz = *f.a_par_hz;
  if (f.detuning_hz) cfg.system.detuning_hz = *f.detuning_hz;
  if (f.rabi_hz) cfg.system.rabi_hz = f.rabi_hz;
  if (f.pulse_width_s) cfg.system.pulse_width_s = *f.pulse_width_s;
  if (!f.frequency_convention.empty())
    cfg.system.frequency_convention = dnss::frequency_from_string(f.frequency_convention);
  if (!f.timing_convention.empty())
    cfg.timing = dnss::timing_from_string(f.timing_convention);
  if (!f.sequence.empty()) {
    if (looks_like_file(f.sequence)) {
      cfg.sequence_file = f.sequence;
    } else {
      cfg.sequence_preset = f.sequence;
      cfg.sequence_file.clear();
    }
  }
  if (f.np) cfg.np = *f.np;
  for (const auto& b : f.bindings) {
    size_t eq = b.find('=');
    if (eq == std::string::npos)
      throw dnss::ConfigError("binding '" + b + "' is not name=value");
    std::string name = b.substr(0, eq);
    try {
      cfg.bindings[name] = std::stod(b.substr(eq + 1));
    } catch (const std::exception&) {
      throw dnss::ConfigError("binding '" + b + "' has a non-numeric value");
    }
  }
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.label.empty()) cfg.label = f.label;
  if (f.emit_plot_script) cfg.emit_plot_script = true;
}

dnss::RunConfig load_base_config(const CommonFlags& f, bool allow_empty) {
  if (!f.config_path.empty()) {
    std::vector<dnss::Diagnostic> diags;
    dnss::RunConfig cfg = dnss::parse_config_file(f.config_path, diags);
    if (!diags.empty()) {
      std::string msg;
      for (const auto& d : diags) msg += d.where + ": " + d.message + "\n";
      throw dnss::ConfigError(msg);
    }
    return cfg;
  }
  if (!f.preset_name.empty()) return dnss::figure_preset(f.preset_name);
  if (!allow_empty)
    throw dnss::ConfigError("needs --config FILE or --preset NAME");
  return dnss::RunConfig{};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Floquet analysis and dynamics of pulsed electron-nuclear spin control"};
  app.require_subcommand(1);

  CommonFlags run_f, val_f, dips_f, theta_f, spec_f;

  CLI::App* run = app.add_subcommand("run", "Execute a configured experiment");
  run->add_option("--config", run_f.config_path, "Config file");
  run->add_option("--preset", run_f.preset_name, "Figure preset (fig2c, fig3a, fig3c)");
  run->add_option("--out", run_f.out_dir, "Output directory");
  run->add_option("--label", run_f.label, "Output file prefix");
  run->add_option("--jobs", run_f.jobs, "Worker threads");
  run->add_flag("--emit-plot-script", run_f.emit_plot_script, "Write a gnuplot script");
  run->add_option("--timing-convention", run_f.timing_convention,
                  "center (center-to-center) or edge (edge-to-edge)");
  run->add_option("--frequency-convention", run_f.frequency_convention,
                  "ordinary (Hz) or angular (rad/s)");

  CLI::App* val = app.add_subcommand("validate", "Check a config and report all problems");
  val->add_option("--config", val_f.config_path, "Config file");
  val->add_option("--preset", val_f.preset_name, "Figure preset");

  CLI::App* dips = app.add_subcommand("dips", "Predict dip positions tau+/tau-");
  add_system_flags(dips, dips_f);
  add_sequence_flags(dips, dips_f);
  int harmonic = 1;
  dips->add_option("--harmonic", harmonic, "Harmonic index k >= 1");

  CLI::App* theta = app.add_subcommand("theta", "Residual-rotation curve over tau");
  add_system_flags(theta, theta_f);
  add_sequence_flags(theta, theta_f);
  double th_start = 0, th_stop = 0;
  int th_points = 0;
  theta->add_option("--tau-start-s", th_start)->required();
  theta->add_option("--tau-stop-s", th_stop)->required();
  theta->add_option("--tau-points", th_points)->required();
  theta->add_option("--out", theta_f.out_dir, "Output directory");
  theta->add_option("--label", theta_f.label, "Output file prefix");

  CLI::App* spec = app.add_subcommand("spectrum", "Branch-tracked eigenphase spectrum");
  add_system_flags(spec, spec_f);
  add_sequence_flags(spec, spec_f);
  double sp_start = 0, sp_stop = 0;
  int sp_points = 0;
  std::string sp_kind = "full";
  spec->add_option("--tau-start-s", sp_start)->required();
  spec->add_option("--tau-stop-s", sp_stop)->required();
  spec->add_option("--tau-points", sp_points)->required();
  spec->add_option("--kind", sp_kind, "full or unperturbed");
  spec->add_option("--out", spec_f.out_dir, "Output directory");
  spec->add_option("--label", spec_f.label, "Output file prefix");
  spec->add_option("--jobs", spec_f.jobs, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      dnss::RunConfig cfg = load_base_config(run_f, false);
      apply_flags(cfg, run_f);
      return dnss::run_config(cfg, std::cout);
    }
    if (val->parsed()) {
      std::vector<dnss::Diagnostic> diags;
      dnss::RunConfig cfg;
      if (!val_f.config_path.empty()) {
        cfg = dnss::parse_config_file(val_f.config_path, diags);
      } else if (!val_f.preset_name.empty()) {
        cfg = dnss::figure_preset(val_f.preset_name);
      } else {
        std::cerr << "error: needs --config FILE or --preset NAME\n";
        return 2;
      }
      dnss::validate_run_config(cfg, diags);
      if (diags.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& d : diags) std::cout << d.where << ": " << d.message << "\n";
      return 2;
    }
    if (dips->parsed()) {
      dnss::RunConfig cfg;
      cfg.sequence_preset = "cpmg";
      apply_flags(cfg, dips_f);
      cfg.experiment = "dips";
      cfg.harmonic = harmonic;
      return dnss::run_config(cfg, std::cout);
    }
    if (theta->parsed()) {
      dnss::RunConfig cfg;
      cfg.sequence_preset = "cpmg";
      apply_flags(cfg, theta_f);
      cfg.experiment = "theta";
      cfg.tau_grid = {th_start, th_stop, th_points};
      if (theta_f.label.empty()) cfg.label = "theta";
      return dnss::run_config(cfg, std::cout);
    }
    if (spec->parsed()) {
      dnss::RunConfig cfg;
      cfg.sequence_preset = "cpmg";
      apply_flags(cfg, spec_f);
      cfg.experiment = "spectrum";
      cfg.spectrum_kind = sp_kind;
      cfg.tau_grid = {sp_start, sp_stop, sp_points};
      if (spec_f.label.empty()) cfg.label = "spectrum";
      return dnss::run_config(cfg, std::cout);
    }
  } catch (const dnss::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
