#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "dnss/config.hpp"
#include "dnss/errors.hpp"

namespace dnss {

namespace {

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::string tp_tag(double tp_s) {
  // Width tag in ns; %g keeps 0, 20, 40 short and stable.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", tp_s * 1e9);
  return std::string("tp") + buf + "ns";
}

void add_grid_meta(Metadata& m, const char* name, const GridSpec& g) {
  m.add(std::string(name) + "_start", g.start);
  m.add(std::string(name) + "_stop", g.stop);
  m.add(std::string(name) + "_points", g.points);
}

struct PlotScript {
  std::ostringstream body;
  bool any = false;

  void add_trace(const std::string& csv, const std::string& title) {
    body << (any ? "replot" : "plot") << " '" << csv
         << "' using 1:2 with lines title '" << title << "'\n";
    any = true;
  }
};

void emit_plot(const RunConfig& cfg, const std::vector<std::string>& files,
               const std::vector<std::string>& titles, int ycol) {
  std::ostringstream s;
  s << "set datafile separator comma\n"
    << "set key outside\n"
    << "set xlabel 'tau (s)'\n";
  for (size_t i = 0; i < files.size(); ++i) {
    s << (i == 0 ? "plot" : "replot") << " '" << files[i] << "' using 1:" << ycol
      << " with lines title '" << titles[i] << "'\n";
  }
  s << "pause -1\n";
  write_text_file(join_path(cfg.out_dir, cfg.label + ".gnuplot"), s.str());
}

int run_trace(const RunConfig& cfg, const SpinSystemParams& sys,
              const SequenceSpec& seq, std::ostream& log) {
  auto taus = cfg.tau_grid.values();
  auto einit = electron_init_from_string(cfg.electron_init);
  std::vector<std::string> files, titles;
  for (const auto& ni_name : cfg.nuclear_inits) {
    auto ninit = nuclear_init_from_string(ni_name);
    TraceResult tr =
        coherence_trace(sys, seq, taus, cfg.n_pulses, einit, ninit, cfg.jobs);
    CsvTable t;
    t.metadata = tr.metadata;  // already carries n_pulses and both inits
    t.metadata.add("experiment", "trace");
    add_grid_meta(t.metadata, "tau", cfg.tau_grid);
    t.columns = {"tau_s", "coherence"};
    for (size_t i = 0; i < taus.size(); ++i)
      t.rows.push_back({format_sci(tr.tau_s[i]), format_sci(tr.coherence[i])});
    std::string file = cfg.label + "_" + to_string(ninit) + ".csv";
    write_text_file(join_path(cfg.out_dir, file), t.to_string());
    log << "wrote " << join_path(cfg.out_dir, file) << " (" << taus.size()
        << " points)\n";
    files.push_back(file);
    titles.push_back(to_string(ninit));
  }
  if (cfg.emit_plot_script) emit_plot(cfg, files, titles, 2);
  return 0;
}

int run_sweep(const RunConfig& cfg, const SpinSystemParams& sys,
              const SequenceSpec& seq, std::ostream& log) {
  auto taus = cfg.tau_grid.values();
  auto deltas = cfg.delta_grid.values();
  auto einit = electron_init_from_string(cfg.electron_init);
  auto ninit = nuclear_init_from_string(cfg.nuclear_inits.front());
  std::vector<double> tps = cfg.tp_list_s;
  if (tps.empty()) tps.push_back(sys.pulse_width_s);
  auto maps = detuning_sweep(sys, seq, taus, deltas, cfg.n_pulses, tps, einit,
                             ninit, cfg.jobs);
  std::vector<std::string> files, titles;
  for (size_t m = 0; m < maps.size(); ++m) {
    CsvTable t;
    t.metadata = maps[m].metadata;  // already carries n_pulses and both inits
    t.metadata.add("experiment", "sweep");
    add_grid_meta(t.metadata, "tau", cfg.tau_grid);
    add_grid_meta(t.metadata, "delta", cfg.delta_grid);
    t.columns = {"detuning_hz", "tau_s", "coherence"};
    const auto& tr = maps[m];
    for (size_t d = 0; d < deltas.size(); ++d)
      for (size_t i = 0; i < taus.size(); ++i) {
        size_t k = d * taus.size() + i;
        t.rows.push_back({format_sci(tr.detuning_hz[d]), format_sci(tr.tau_s[i]),
                          format_sci(tr.coherence[k])});
      }
    std::string file = cfg.label + "_" + tp_tag(tps[m]) + ".csv";
    write_text_file(join_path(cfg.out_dir, file), t.to_string());
    log << "wrote " << join_path(cfg.out_dir, file) << " (" << t.rows.size()
        << " rows)\n";
    files.push_back(file);
    titles.push_back(tp_tag(tps[m]));
  }
  if (cfg.emit_plot_script) emit_plot(cfg, files, titles, 3);
  return 0;
}

int run_spectrum(const RunConfig& cfg, const SpinSystemParams& sys,
                 const SequenceSpec& seq, std::ostream& log) {
  auto taus = cfg.tau_grid.values();
  FloquetSpectrum spec = cfg.spectrum_kind == "unperturbed"
                             ? unperturbed_spectrum(sys, seq, taus, cfg.jobs)
                             : full_spectrum(sys, seq, taus, cfg.jobs);
  CsvTable t;
  t.metadata.add("experiment", "spectrum");
  t.metadata.add("spectrum", cfg.spectrum_kind);
  t.metadata.add("sequence", seq.name);
  add_grid_meta(t.metadata, "tau", cfg.tau_grid);
  t.columns = {"tau_s"};
  for (int b = 0; b < 4; ++b) {
    std::string sb = std::to_string(b);
    t.columns.push_back("phase_" + sb);
    t.columns.push_back("winding_" + sb);
    t.columns.push_back("label_" + sb);
  }
  for (size_t i = 0; i < taus.size(); ++i) {
    std::vector<std::string> row = {format_sci(taus[i])};
    for (int b = 0; b < 4; ++b) {
      const auto& br = spec.branches[static_cast<size_t>(b)];
      row.push_back(format_sci(br.phase_rad[i]));
      row.push_back(std::to_string(br.winding[i]));
      row.push_back(to_string(br.label[i]));
    }
    t.rows.push_back(row);
  }
  std::string file = cfg.label + "_spectrum.csv";
  write_text_file(join_path(cfg.out_dir, file), t.to_string());
  log << "wrote " << join_path(cfg.out_dir, file) << "\n";

  auto crossings = find_crossings(sys, seq, spec);
  CsvTable c;
  c.metadata.add("experiment", "crossings");
  c.metadata.add("sequence", seq.name);
  c.columns = {"branch_a", "branch_b", "tau_s", "gap_rad", "same_electron_symmetry"};
  for (const auto& x : crossings)
    c.rows.push_back({std::to_string(x.branch_a), std::to_string(x.branch_b),
                      format_sci(x.tau_s), format_sci(x.gap_rad),
                      x.same_electron_symmetry ? "1" : "0"});
  std::string cfile = cfg.label + "_crossings.csv";
  write_text_file(join_path(cfg.out_dir, cfile), c.to_string());
  log << "wrote " << join_path(cfg.out_dir, cfile) << " (" << crossings.size()
      << " crossings)\n";
  if (cfg.emit_plot_script) {
    std::ostringstream s;
    s << "set datafile separator comma\nset xlabel 'tau (s)'\nset ylabel "
         "'eigenphase (rad)'\nplot ";
    for (int b = 0; b < 4; ++b)
      s << "'" << file << "' using 1:" << (2 + 3 * b) << " with lines title 'branch "
        << b << "'" << (b < 3 ? ", " : "\n");
    s << "pause -1\n";
    write_text_file(join_path(cfg.out_dir, cfg.label + ".gnuplot"), s.str());
  }
  return 0;
}

int run_theta(const RunConfig& cfg, const SpinSystemParams& sys,
              const SequenceSpec& seq, std::ostream& log) {
  auto taus = cfg.tau_grid.values();
  ThetaCurve curve = theta_curve(sys, seq, taus);
  CsvTable t;
  t.metadata.add("experiment", "theta");
  t.metadata.add("sequence", seq.name);
  t.metadata.add("detuning_hz", curve.detuning_hz);
  t.metadata.add("pulse_width_s", curve.pulse_width_s);
  add_grid_meta(t.metadata, "tau", cfg.tau_grid);
  t.columns = {"tau_s", "theta_rad", "in_regime"};
  for (size_t i = 0; i < taus.size(); ++i)
    t.rows.push_back({format_sci(curve.tau_s[i]), format_sci(curve.theta_rad[i]),
                      curve.in_regime[i] ? "1" : "0"});
  std::string file = cfg.label + "_theta.csv";
  write_text_file(join_path(cfg.out_dir, file), t.to_string());
  log << "wrote " << join_path(cfg.out_dir, file) << "\n";
  if (cfg.emit_plot_script) emit_plot(cfg, {file}, {"theta"}, 2);
  return 0;
}

std::string dip_line(const DipPrediction& d, double larmor_hz) {
  std::ostringstream s;
  s << "harmonic=" << d.harmonic_k << " larmor_hz=" << format_sci(larmor_hz)
    << " tau_plus_s=" << format_sci(d.tau_plus_s)
    << " tau_minus_s=" << format_sci(d.tau_minus_s)
    << " theta_rad=" << format_sci(d.theta_at_dip_rad)
    << " iterations=" << d.iterations << " converged=" << (d.converged ? 1 : 0);
  return s.str();
}

int run_dips(const RunConfig& cfg, const SpinSystemParams& sys,
             const SequenceSpec& seq, std::ostream& log) {
  DipPrediction d = predict_dips(sys, seq, cfg.harmonic);
  log << dip_line(d, sys.resolved_larmor()) << "\n";
  return d.converged ? 0 : 1;
}

int run_polarize(const RunConfig& cfg, const SpinSystemParams& sys,
                 const SequenceSpec& seq, std::ostream& log) {
  double tau = cfg.tau_s;
  Metadata extra;
  if (tau <= 0) {
    DipPrediction d = predict_dips(sys, seq, cfg.harmonic);
    if (!d.converged) {
      log << "error: dip prediction did not converge\n";
      return 1;
    }
    tau = cfg.dip_choice == "minus" ? d.tau_minus_s : d.tau_plus_s;
    extra.add("dip", cfg.dip_choice);
    extra.add("predicted_tau_plus_s", d.tau_plus_s);
    extra.add("predicted_tau_minus_s", d.tau_minus_s);
    extra.add("predicted_theta_rad", d.theta_at_dip_rad);
  }
  auto einit = electron_init_from_string(cfg.electron_init);
  auto ninit = nuclear_init_from_string(cfg.nuclear_inits.front());
  PolarizationScan scan = pulse_number_scan(sys, seq, tau, cfg.n_max, einit, ninit);
  CsvTable t;
  t.metadata = scan.metadata;  // already carries tau, inits, n_init, fidelity
  t.metadata.add("experiment", "polarize");
  for (const auto& kv : extra.entries) t.metadata.add(kv.first, kv.second);
  t.columns = {"n_pulses", "coherence", "polarization"};
  for (size_t i = 0; i < scan.pulse_counts.size(); ++i)
    t.rows.push_back({std::to_string(scan.pulse_counts[i]),
                      format_sci(scan.coherence[i]),
                      format_sci(scan.polarization[i])});
  std::string file = cfg.label + "_polarize.csv";
  write_text_file(join_path(cfg.out_dir, file), t.to_string());
  log << "wrote " << join_path(cfg.out_dir, file) << "\n";
  log << "tau_s=" << format_sci(tau) << " n_init=" << scan.n_init
      << " fidelity=" << format_sci(scan.fidelity) << "\n";
  if (cfg.emit_plot_script) {
    std::ostringstream s;
    s << "set datafile separator comma\nset xlabel 'pulse number'\n"
      << "plot '" << file << "' using 1:2 with lines title 'coherence', '" << file
      << "' using 1:3 with lines title 'polarization'\npause -1\n";
    write_text_file(join_path(cfg.out_dir, cfg.label + ".gnuplot"), s.str());
  }
  return 0;
}

}  // namespace

int run_config(const RunConfig& cfg, std::ostream& log) {
  std::vector<Diagnostic> diags;
  validate_run_config(cfg, diags);
  if (!diags.empty()) {
    for (const auto& d : diags) log << d.where << ": " << d.message << "\n";
    return 2;
  }
  std::filesystem::create_directories(cfg.out_dir);
  SpinSystemParams sys = cfg.system;
  SequenceSpec seq = sequence_from_config(cfg);
  if (cfg.experiment == "trace") return run_trace(cfg, sys, seq, log);
  if (cfg.experiment == "sweep") return run_sweep(cfg, sys, seq, log);
  if (cfg.experiment == "spectrum") return run_spectrum(cfg, sys, seq, log);
  if (cfg.experiment == "theta") return run_theta(cfg, sys, seq, log);
  if (cfg.experiment == "dips") return run_dips(cfg, sys, seq, log);
  if (cfg.experiment == "polarize") return run_polarize(cfg, sys, seq, log);
  log << "unknown experiment kind '" << cfg.experiment << "'\n";
  return 2;
}

}  // namespace dnss
