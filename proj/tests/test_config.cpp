// Config layer tests: strict INI parsing with full diagnostics, semantic
// validation, grid construction, and the shipped experiment presets.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "dnss/config.hpp"

using namespace dnss;

namespace {

bool any_diag_contains(const std::vector<Diagnostic>& diags, const std::string& needle) {
  return std::any_of(diags.begin(), diags.end(), [&](const Diagnostic& d) {
    return d.message.find(needle) != std::string::npos ||
           d.where.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("grid values hit both endpoints exactly") {
  const GridSpec g{200e-9, 280e-9, 5};
  const auto v = g.values();
  REQUIRE(v.size() == 5);
  CHECK(v.front() == 200e-9);
  CHECK(v.back() == 280e-9);
  CHECK(v[2] == doctest::Approx(240e-9).epsilon(1e-15));

  // The contract is points >= 2 with start strictly below stop.
  const GridSpec single{1.0, 1.0, 1};
  const GridSpec no_points{0.0, 1.0, 0};
  const GridSpec negative{0.0, 1.0, -3};
  const GridSpec backwards{2.0, 1.0, 5};
  CHECK_THROWS_AS((void)single.values(), ConfigError);
  CHECK_THROWS_AS((void)no_points.values(), ConfigError);
  CHECK_THROWS_AS((void)negative.values(), ConfigError);
  CHECK_THROWS_AS((void)backwards.values(), ConfigError);
  CHECK(!GridSpec{}.present());
  const GridSpec degenerate{0, 0, 2};
  CHECK(degenerate.present());
}

TEST_CASE("a complete config file parses without diagnostics") {
  const std::string text = R"(# comment line
[system]
larmor_hz = 2.1e6
a_perp_hz = 44e3
detuning_hz = 1e6
pulse_width_s = 40e-9

[sequence]
preset = dnss_detuned
np = 1
timing = center

[experiment]
kind = trace
n_pulses = 336
electron_init = xplus
nuclear_init = mixed, up, down

[grids]
tau_start_s = 200e-9
tau_stop_s = 280e-9
tau_points = 801

[output]
dir = out
label = demo
)";
  std::vector<Diagnostic> diags;
  const RunConfig cfg = parse_config_text(text, "demo.ini", diags);
  for (const auto& d : diags) INFO(d.where, ": ", d.message);
  CHECK(diags.empty());
  CHECK(cfg.system.larmor_hz == 2.1e6);
  CHECK(cfg.system.a_perp_hz == 44e3);
  CHECK(cfg.sequence_preset == "dnss_detuned");
  CHECK(cfg.timing == TimingConvention::CenterToCenter);
  CHECK(cfg.experiment == "trace");
  CHECK(cfg.n_pulses == 336);
  REQUIRE(cfg.nuclear_inits.size() == 3);
  CHECK(cfg.nuclear_inits[1] == "up");
  CHECK(cfg.tau_grid.points == 801);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.label == "demo");

  validate_run_config(cfg, diags);
  CHECK(diags.empty());
}

TEST_CASE("unknown keys get a location and a nearest-match suggestion") {
  std::vector<Diagnostic> diags;
  (void)parse_config_text("[system]\nlarmor_hs = 2.1e6\n", "x.ini", diags);
  REQUIRE(!diags.empty());
  CHECK(any_diag_contains(diags, "x.ini:2"));
  CHECK(any_diag_contains(diags, "larmor_hz"));  // suggested correction
}

TEST_CASE("every problem is reported, not just the first") {
  const std::string text =
      "[system]\nlarmor_hz = abc\n[experiment]\nkind = dance\nn_pulses = -4\n"
      "[grids]\ntau_points = 0\n[nowhere]\nx = 1\n";
  std::vector<Diagnostic> diags;
  const RunConfig cfg = parse_config_text(text, "bad.ini", diags);
  CHECK(any_diag_contains(diags, "bad.ini:2"));   // unparsable number
  CHECK(any_diag_contains(diags, "nowhere"));     // unknown section
  // Value-level problems surface in the semantic pass, on top of the
  // syntactic ones already collected.
  validate_run_config(cfg, diags);
  CHECK(diags.size() >= 4);
  CHECK(any_diag_contains(diags, "dance"));       // unknown experiment
  CHECK(any_diag_contains(diags, "n_pulses"));
}

TEST_CASE("validation catches semantic problems syntax cannot") {
  std::vector<Diagnostic> diags;
  RunConfig cfg = parse_config_text(
      "[system]\nlarmor_hz = 2.1e6\npulse_width_s = 40e-9\n"
      "[grids]\ntau_start_s = 10e-9\ntau_stop_s = 30e-9\ntau_points = 5\n",
      "t.ini", diags);
  REQUIRE(diags.empty());
  // tau at or below the pulse width cannot compile under center timing.
  validate_run_config(cfg, diags);
  CHECK(!diags.empty());

  diags.clear();
  RunConfig no_larmor;
  no_larmor.system.a_perp_hz = 44e3;
  validate_run_config(no_larmor, diags);
  CHECK(!diags.empty());
}

TEST_CASE("sequence bindings flow from config to compiled program") {
  std::vector<Diagnostic> diags;
  const RunConfig cfg = parse_config_text(
      "[system]\nlarmor_hz = 2.1e6\n[sequence]\npreset = dnss_flip\nbinding.eps = 0.25\n"
      "[grids]\ntau_start_s = 220e-9\ntau_stop_s = 250e-9\ntau_points = 4\n",
      "b.ini", diags);
  REQUIRE(diags.empty());
  const SequenceSpec spec = sequence_from_config(cfg);
  const SegmentList seg = spec.compile_at(238e-9, cfg.system);
  double pulse_angle = 0.0;
  for (const auto& s : seg.period)
    if (s.kind == SegKind::Pulse) pulse_angle = s.angle_rad;
  CHECK(pulse_angle == doctest::Approx(kPi + 0.25).epsilon(1e-14));
}

TEST_CASE("figure presets validate cleanly and carry the documented shapes") {
  for (const std::string name : {"fig2c", "fig3a", "fig3c"}) {
    const RunConfig cfg = figure_preset(name);
    std::vector<Diagnostic> diags;
    validate_run_config(cfg, diags);
    for (const auto& d : diags) INFO(name, " ", d.where, ": ", d.message);
    CHECK(diags.empty());
  }
  const RunConfig sweep = figure_preset("fig2c");
  CHECK(sweep.experiment == "sweep");
  CHECK(sweep.n_pulses == 336);
  CHECK(sweep.tp_list_s.size() == 3);
  CHECK(sweep.delta_grid.present());

  const RunConfig traces = figure_preset("fig3a");
  CHECK(traces.experiment == "trace");
  CHECK(traces.nuclear_inits.size() == 3);

  const RunConfig pol = figure_preset("fig3c");
  CHECK(pol.experiment == "polarize");
  CHECK(pol.system.species.has_value());
  CHECK(pol.n_max == 300);

  CHECK_THROWS_AS((void)figure_preset("fig9z"), InvalidPreset);
}
