#pragma once

#include <iosfwd>

#include "dnss/dynamics.hpp"

namespace dnss {

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int points = 0;

  bool present() const { return points != 0; }
  std::vector<double> values() const;  // throws ConfigError on bad spec
};

struct Diagnostic {
  std::string where;  // "file:line" or "section.key"
  std::string message;
};

// Everything one run needs; filled from a config file, a figure preset, or
// CLI flags.
struct RunConfig {
  SpinSystemParams system;
  std::string sequence_preset = "cpmg";  // ignored when sequence_file is set
  std::string sequence_file;
  int np = 1;
  Bindings bindings;
  TimingConvention timing = TimingConvention::CenterToCenter;

  std::string experiment = "trace";  // trace|sweep|spectrum|theta|dips|polarize
  int n_pulses = 2;
  std::string electron_init = "xplus";
  std::vector<std::string> nuclear_inits = {"mixed"};
  int harmonic = 1;
  std::string dip_choice = "plus";  // polarize: which predicted dip fixes tau
  double tau_s = 0.0;               // polarize: explicit tau override when > 0
  int n_max = 300;
  std::vector<double> tp_list_s;    // sweep pulse widths
  std::string spectrum_kind = "full";  // full|unperturbed

  GridSpec tau_grid;
  GridSpec delta_grid;

  std::string out_dir = ".";
  std::string label = "run";
  bool emit_plot_script = false;
  int jobs = 1;
};

// Parse the strict key=value config; every problem (unknown key, bad value,
// broken invariant) is appended to diags instead of stopping at the first.
RunConfig parse_config_text(const std::string& text, const std::string& filename,
                            std::vector<Diagnostic>& diags);
RunConfig parse_config_file(const std::string& path, std::vector<Diagnostic>& diags);

// Semantic checks beyond syntax: parameter consistency, grid invariants,
// sequence parse/compile dry-run. Appends to diags.
void validate_run_config(const RunConfig& cfg, std::vector<Diagnostic>& diags);

// Built-in experiment configurations reproducing the shipped figure data
// sets: fig2c (detuning sweep maps), fig3a (state-selective traces),
// fig3c (polarization scan). Throws InvalidPreset.
RunConfig figure_preset(const std::string& name);

// Build the sequence spec a config describes (loads .seq files).
SequenceSpec sequence_from_config(const RunConfig& cfg);

// Execute and write outputs. Returns a process exit code; diagnostics and
// progress go to log.
int run_config(const RunConfig& cfg, std::ostream& log);

}  // namespace dnss
