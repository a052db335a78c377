// Eigenphase analysis tests: residual-rotation extraction, branch-tracked
// spectra against closed-form and independently computed values, dip
// prediction, and crossing classification.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dnss/dynamics.hpp"
#include "dnss/floquet.hpp"

using namespace dnss;

namespace {

SpinSystemParams detuned_params(double detuning_hz = 1e6, double a_perp_hz = 44e3) {
  SpinSystemParams p;
  p.larmor_hz = 2.1e6;
  p.a_perp_hz = a_perp_hz;
  p.detuning_hz = detuning_hz;
  p.pulse_width_s = 40e-9;
  return p;
}

SpinSystemParams ideal_params(double a_perp_hz = 44e3) {
  SpinSystemParams p;
  p.larmor_hz = 2.1e6;
  p.a_perp_hz = a_perp_hz;
  return p;
}

// Product of the electron-only segment propagators over one period.
CMat electron_period(const SpinSystemParams& p, const SequenceSpec& seq, double tau) {
  const SegmentList seg = seq.compile_at(tau, p);
  CMat u = CMat::identity(2);
  for (const Segment& s : seg.period) u = electron_segment_propagator(p, s) * u;
  return u;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * double(i) / double(n - 1);
  return v;
}

std::vector<double> sorted_phases_at(const FloquetSpectrum& sp, std::size_t i) {
  std::vector<double> v;
  for (const auto& b : sp.branches) v.push_back(b.phase_rad.at(i));
  std::sort(v.begin(), v.end());
  return v;
}

double wrap_pi(double x) {
  x = std::fmod(x + kPi, kTwoPi);
  if (x <= 0.0) x += kTwoPi;
  return x - kPi;
}

}  // namespace

TEST_CASE("ideal pulse train collapses to minus identity") {
  SpinSystemParams p = ideal_params(0.0);
  const auto seq = preset_spec("cpmg", 1);
  for (double tau : {180e-9, 238.095238095e-9, 300e-9}) {
    const CMat u = electron_period(p, seq, tau);
    CHECK(distance(u, -1.0 * CMat::identity(2)) < 1e-12);
    CHECK(extract_theta(p, seq, tau) == 0.0);
  }
}

TEST_CASE("zero-detuning finite-width pulses also give zero residual rotation") {
  SpinSystemParams p = ideal_params();
  p.pulse_width_s = 40e-9;
  CHECK(std::abs(extract_theta(p, preset_spec("cpmg", 1), 240e-9)) < 1e-12);
}

TEST_CASE("flip-angle preset residual rotation equals the programmed extra angle") {
  for (double eps : {0.05, 0.2, 0.4}) {
    SpinSystemParams p = ideal_params();
    SequenceSpec seq = preset_spec("dnss_flip", 1);
    seq.bindings["eps"] = eps;
    // Up = -exp(-i eps sigma_x) independent of the spacing.
    CHECK(extract_theta(p, seq, 210e-9) == doctest::Approx(eps).epsilon(1e-12));
    CHECK(extract_theta(p, seq, 260e-9) == doctest::Approx(eps).epsilon(1e-12));
  }
}

TEST_CASE("detuned residual rotation matches an independent computation") {
  // Frozen from a dense-matrix computation in a separate environment.
  SpinSystemParams p = detuned_params();
  const auto seq = preset_spec("dnss_detuned", 1);
  CHECK(std::abs(extract_theta(p, seq, 240e-9) - 0.101715349423732) < 1e-9);
  CHECK(std::abs(extract_theta(p, seq, 238.095238095e-9) - 0.100975282608493) < 1e-9);
}

TEST_CASE("xy8 axis alternation cancels the detuning rotation or leaves the regime") {
  SpinSystemParams ideal = ideal_params();
  CHECK(std::abs(extract_theta(ideal, preset_spec("xy8", 1), 240e-9)) < 1e-12);

  // With detuning the xy8 residual rotation is not about x: flagged, not kept.
  SpinSystemParams p = detuned_params();
  CHECK_THROWS_AS((void)extract_theta(p, preset_spec("xy8", 1), 240e-9), OutOfRegime);
  const ThetaCurve tc = theta_curve(p, preset_spec("xy8", 1), linspace(230e-9, 246e-9, 9));
  for (std::size_t i = 0; i < tc.tau_s.size(); ++i) {
    CHECK(!tc.in_regime[i]);
    CHECK(std::isnan(tc.theta_rad[i]));
  }
}

TEST_CASE("theta curve stays in regime across the dip window for moderate detuning") {
  SpinSystemParams p = detuned_params();
  const ThetaCurve tc =
      theta_curve(p, preset_spec("dnss_detuned", 1), linspace(225e-9, 250e-9, 26));
  for (std::size_t i = 0; i < tc.tau_s.size(); ++i) {
    CHECK(tc.in_regime[i]);
    CHECK(tc.theta_rad[i] > 0.08);
    CHECK(tc.theta_rad[i] < 0.13);
  }
  CHECK(tc.detuning_hz == doctest::Approx(1e6));
  CHECK(tc.pulse_width_s == doctest::Approx(40e-9));
}

TEST_CASE("unperturbed spectrum follows the four tilted branches exactly for delta pulses") {
  SpinSystemParams p = ideal_params();
  SequenceSpec seq = preset_spec("dnss_flip", 1);
  seq.bindings["eps"] = 0.3;
  const double wl = p.omega_larmor();
  const auto grid = linspace(200e-9, 280e-9, 41);
  const FloquetSpectrum sp = unperturbed_spectrum(p, seq, grid);
  REQUIRE(sp.tau_s.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> expect;
    for (double se : {-1.0, 1.0})
      for (double sn : {-1.0, 1.0}) expect.push_back(wrap_pi(kPi + se * 0.3 + sn * wl * grid[i]));
    std::sort(expect.begin(), expect.end());
    const auto got = sorted_phases_at(sp, i);
    for (int b = 0; b < 4; ++b) CHECK(std::abs(got[b] - expect[b]) < 1e-12);
  }
}

TEST_CASE("unperturbed spectrum matches the tilted formula for weak detuning") {
  // Finite pulse width: the formula pi + Delta*tau +/- wl*tau +/- theta holds
  // to third order in Delta/Omega, far below 1e-6 rad at 30 kHz.
  SpinSystemParams p = detuned_params(30e3);
  const auto seq = preset_spec("dnss_detuned", 1);
  const double wl = p.omega_larmor();
  const double delta = p.detuning();
  const auto grid = linspace(220e-9, 256e-9, 19);
  const FloquetSpectrum sp = unperturbed_spectrum(p, seq, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double tau = grid[i];
    const double th = extract_theta(p, seq, tau);
    std::vector<double> expect;
    for (double se : {-1.0, 1.0})
      for (double sn : {-1.0, 1.0})
        expect.push_back(wrap_pi(kPi + delta * tau + se * th + sn * wl * tau));
    std::sort(expect.begin(), expect.end());
    const auto got = sorted_phases_at(sp, i);
    for (int b = 0; b < 4; ++b) CHECK(std::abs(got[b] - expect[b]) < 1e-6);
  }
}

TEST_CASE("full spectrum reduces to the unperturbed one without hyperfine coupling") {
  SpinSystemParams p = detuned_params(1e6, 0.0);
  const auto seq = preset_spec("dnss_detuned", 1);
  const auto grid = linspace(228e-9, 248e-9, 11);
  const FloquetSpectrum full = full_spectrum(p, seq, grid);
  const FloquetSpectrum bare = unperturbed_spectrum(p, seq, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto a = sorted_phases_at(full, i);
    const auto b = sorted_phases_at(bare, i);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-10);
  }
}

TEST_CASE("full spectrum matches independently computed eigenphases") {
  // Frozen from a dense-matrix computation in a separate environment.
  SpinSystemParams p = detuned_params();
  const FloquetSpectrum sp = full_spectrum(p, preset_spec("dnss_detuned", 1), {240e-9});
  const auto got = sorted_phases_at(sp, 0);
  const double expect[4] = {1.379365253322014, 1.427937368238024, 1.587905405707176,
                            1.636649867625187};
  for (int b = 0; b < 4; ++b) CHECK(std::abs(got[b] - expect[b]) < 1e-9);
}

TEST_CASE("away from resonance the branches carry pure symmetry labels") {
  SpinSystemParams p = detuned_params();
  const FloquetSpectrum sp = full_spectrum(p, preset_spec("dnss_detuned", 1), {210e-9});
  int pure = 0;
  for (const auto& b : sp.branches)
    if (b.label.at(0) != SymmetryLabel::Mixed) ++pure;
  CHECK(pure == 4);

  // Near resonance the anticrossing pair hybridizes.
  const FloquetSpectrum sp2 = full_spectrum(p, preset_spec("dnss_detuned", 1), {240e-9});
  int mixed = 0;
  for (const auto& b : sp2.branches)
    if (b.label.at(0) == SymmetryLabel::Mixed) ++mixed;
  CHECK(mixed == 2);
}

TEST_CASE("winding keeps unwound branch phases continuous across the seam") {
  SpinSystemParams p = detuned_params();
  const auto grid = linspace(150e-9, 450e-9, 601);
  const FloquetSpectrum sp = full_spectrum(p, preset_spec("dnss_detuned", 1), grid, 2);
  const double step_bound = 0.5;  // max |d phase| per grid step, generous
  int seam_crossings = 0;
  for (const auto& b : sp.branches) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      CHECK(std::abs(b.unwound(i) - b.unwound(i - 1)) < step_bound);
      if (b.winding[i] != b.winding[i - 1]) ++seam_crossings;
      CHECK(b.phase_rad[i] <= kPi);
      CHECK(b.phase_rad[i] > -kPi);
    }
  }
  // The upward branches sweep (wL + Delta) * 300 ns ~ 5.8 rad: they must
  // wrap at least once; the downward ones need not.
  CHECK(seam_crossings >= 2);
}

TEST_CASE("eigenphases are invariant under cyclic shifts of the period") {
  SpinSystemParams p = detuned_params();
  SequenceSpec a;
  a.program = parse_sequence("wait tau/2; pulse pi x; wait tau; pulse pi x; wait tau/2;");
  a.timing = TimingConvention::EdgeToEdge;
  SequenceSpec b;
  b.program = parse_sequence("pulse pi x; wait tau; pulse pi x; wait tau/2; wait tau/2;");
  b.timing = TimingConvention::EdgeToEdge;
  for (double tau : {220e-9, 238e-9, 247e-9}) {
    const auto pa = unitary_phases(period_propagator(p, a.compile_at(tau, p)));
    const auto pb = unitary_phases(period_propagator(p, b.compile_at(tau, p)));
    for (int k = 0; k < 4; ++k) CHECK(std::abs(pa.phases[k] - pb.phases[k]) < 1e-10);
  }
}

TEST_CASE("dip prediction for the ideal sequence sits at the bare resonances") {
  SpinSystemParams p = ideal_params();
  const auto seq = preset_spec("cpmg", 1);
  const double wl = p.omega_larmor();
  const DipPrediction d1 = predict_dips(p, seq, 1);
  CHECK(d1.converged);
  CHECK(d1.tau_plus_s == doctest::Approx(kPi / wl).epsilon(1e-12));
  CHECK(d1.tau_minus_s == doctest::Approx(kPi / wl).epsilon(1e-12));
  CHECK(d1.theta_at_dip_rad == 0.0);
  const DipPrediction d2 = predict_dips(p, seq, 2);
  CHECK(d2.tau_plus_s == doctest::Approx(3.0 * kPi / wl).epsilon(1e-12));
  CHECK(d2.harmonic_k == 2);
}

TEST_CASE("dip prediction splits linearly with the programmed flip-angle error") {
  SpinSystemParams p = ideal_params();
  SequenceSpec seq = preset_spec("dnss_flip", 1);
  seq.bindings["eps"] = 0.2;
  const double wl = p.omega_larmor();
  const DipPrediction d = predict_dips(p, seq, 1);
  CHECK(d.converged);
  CHECK(d.tau_plus_s == doctest::Approx((kPi + 0.2) / wl).epsilon(1e-12));
  CHECK(d.tau_minus_s == doctest::Approx((kPi - 0.2) / wl).epsilon(1e-12));
  CHECK(d.theta_at_dip_rad == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("dip prediction converges self-consistently for the detuned preset") {
  // Frozen fixed points; they satisfy tau = (pi +/- |theta(tau)|) / wl to
  // below 1e-17 s in an independent computation.
  SpinSystemParams p = detuned_params();
  const DipPrediction d = predict_dips(p, preset_spec("dnss_detuned", 1), 1);
  CHECK(d.converged);
  CHECK(d.iterations < 20);
  CHECK(d.tau_plus_s == doctest::Approx(2.459783059775013e-07).epsilon(1e-10));
  CHECK(d.tau_minus_s == doctest::Approx(2.306639114873595e-07).epsilon(1e-10));
  CHECK(d.theta_at_dip_rad == doctest::Approx(0.104014630216005).epsilon(1e-7));

  const DipPrediction d2 = predict_dips(p, preset_spec("dnss_detuned", 1), 2);
  CHECK(d2.converged);
  CHECK(d2.tau_plus_s == doctest::Approx(7.239893044708498e-07).epsilon(1e-10));
  CHECK(d2.tau_minus_s == doctest::Approx(7.041475586563479e-07).epsilon(1e-10));
}

TEST_CASE("crossing search separates true crossings from avoided ones") {
  SpinSystemParams p = detuned_params();
  const auto seq = preset_spec("dnss_detuned", 1);
  const auto grid = linspace(222e-9, 254e-9, 801);
  const FloquetSpectrum sp = full_spectrum(p, seq, grid, 2);
  const auto xs = find_crossings(p, seq, sp);
  REQUIRE(!xs.empty());

  const double tau0 = kPi / p.omega_larmor();
  int true_xs = 0;
  std::vector<const CrossingInfo*> avoided;
  for (const auto& x : xs) {
    if (x.same_electron_symmetry) {
      ++true_xs;
      CHECK(x.gap_rad < 1e-10);
      CHECK(std::abs(x.tau_s - tau0) / tau0 < 1e-3);
    } else if (x.gap_rad > 1e-4) {
      avoided.push_back(&x);
    }
  }
  CHECK(true_xs >= 2);

  // The two smallest avoided gaps sit at the predicted dip positions.
  REQUIRE(avoided.size() >= 2);
  std::sort(avoided.begin(), avoided.end(),
            [](const CrossingInfo* a, const CrossingInfo* b) { return a->gap_rad < b->gap_rad; });
  const DipPrediction d = predict_dips(p, seq, 1);
  const double lo = std::min(avoided[0]->tau_s, avoided[1]->tau_s);
  const double hi = std::max(avoided[0]->tau_s, avoided[1]->tau_s);
  CHECK(std::abs(lo - d.tau_minus_s) / d.tau_minus_s < 0.01);
  CHECK(std::abs(hi - d.tau_plus_s) / d.tau_plus_s < 0.01);
}

TEST_CASE("avoided-crossing gap grows linearly with the hyperfine coupling") {
  const auto seq = preset_spec("dnss_detuned", 1);
  std::vector<double> a_perp = {10e3, 20e3, 40e3};
  std::vector<double> gap;
  for (double a : a_perp) {
    SpinSystemParams p = detuned_params(1e6, a);
    const DipPrediction d = predict_dips(p, seq, 1);
    // Window wide enough that the branch labels at its edges are pure; a
    // too-narrow window sits entirely inside the hybridized region.
    const auto grid = linspace(d.tau_plus_s - 10e-9, d.tau_plus_s + 10e-9, 801);
    const FloquetSpectrum sp = full_spectrum(p, seq, grid, 2);
    double best = 1e9;
    for (const auto& x : find_crossings(p, seq, sp))
      if (!x.same_electron_symmetry && x.gap_rad > 1e-4 &&
          std::abs(x.tau_s - d.tau_plus_s) < 2e-9)
        best = std::min(best, x.gap_rad);
    REQUIRE(best < 1e9);
    gap.push_back(best);
  }
  // Least-squares slope through the origin, then R^2 against the mean.
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    sxy += a_perp[i] * gap[i];
    sxx += a_perp[i] * a_perp[i];
    mean += gap[i] / double(gap.size());
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    ss_res += (gap[i] - slope * a_perp[i]) * (gap[i] - slope * a_perp[i]);
    ss_tot += (gap[i] - mean) * (gap[i] - mean);
  }
  CHECK(1.0 - ss_res / ss_tot > 0.999);
}

TEST_CASE("spectrum jobs parameter does not change results") {
  SpinSystemParams p = detuned_params();
  const auto seq = preset_spec("dnss_detuned", 1);
  const auto grid = linspace(230e-9, 246e-9, 33);
  const FloquetSpectrum s1 = full_spectrum(p, seq, grid, 1);
  const FloquetSpectrum s4 = full_spectrum(p, seq, grid, 4);
  for (int b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(s1.branches[b].phase_rad[i] == s4.branches[b].phase_rad[i]);
      CHECK(s1.branches[b].winding[i] == s4.branches[b].winding[i]);
    }
}
