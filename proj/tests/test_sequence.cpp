#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dnss/sequence.hpp"

using namespace dnss;

TEST_CASE("parser basics and expression arithmetic") {
  auto prog = parse_sequence(
      "# comment line\n"
      "wait tau/2;  # trailing comment\n"
      "pulse pi x;\n"
      "repeat 3 { wait 2e-9 + 1e-9 * 2; pulse pi/2 + 0.1 y; }\n");
  REQUIRE(prog.body.size() == 3);
  CHECK(prog.body[0].kind == Stmt::Kind::Wait);
  CHECK(prog.body[1].kind == Stmt::Kind::Pulse);
  CHECK(prog.body[1].axis == 'x');
  CHECK(prog.body[2].kind == Stmt::Kind::Repeat);
  CHECK(prog.body[2].count == 3);
  REQUIRE(prog.body[2].block.size() == 2);

  Bindings b{{"tau", 100e-9}};
  CHECK(prog.body[0].value.eval(b) == doctest::Approx(50e-9));
  // Precedence: 2e-9 + 1e-9*2 = 4e-9.
  CHECK(prog.body[2].block[0].value.eval({}) == doctest::Approx(4e-9));
  CHECK(prog.body[2].block[1].value.eval({}) == doctest::Approx(kPi / 2 + 0.1));
  CHECK_THROWS_AS(prog.body[0].value.eval({}), UnboundParameter);
}

TEST_CASE("free parameters are collected") {
  auto prog = parse_sequence("wait tau/2; pulse pi + eps x; wait w2;");
  auto f = prog.free_params();
  CHECK(f.count("tau") == 1);
  CHECK(f.count("eps") == 1);
  CHECK(f.count("w2") == 1);
  CHECK(f.size() == 3);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_sequence("wait 1e-9;\npulse pi z;\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 2);
    CHECK(e.col > 1);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_sequence("wait ;"), SyntaxError);
  CHECK_THROWS_AS(parse_sequence("wait 1e-9"), SyntaxError);   // missing ;
  CHECK_THROWS_AS(parse_sequence("repeat n { }"), SyntaxError);  // count not literal
  CHECK_THROWS_AS(parse_sequence("repeat 0 { wait 1; }"), SyntaxError);
  CHECK_THROWS_AS(parse_sequence("repeat -2 { wait 1; }"), SyntaxError);
  CHECK_THROWS_AS(parse_sequence("pulse pi;"), SyntaxError);   // missing axis
  CHECK_THROWS_AS(parse_sequence("wait (1e-9;"), SyntaxError);
}

TEST_CASE("pretty print round-trip is idempotent") {
  const char* sources[] = {
      "wait tau/2; pulse pi x; wait tau; pulse pi x; wait tau/2;",
      "repeat 4 { wait a - b - c; pulse -(pi/8) y; }",
      "wait 1.5e-9 * (2 + tau); pulse pi - eps/2 x;",
      "wait a/(b/c); wait a-(b-c); wait (a*b)/c;",
  };
  for (const char* s : sources) {
    auto p1 = parse_sequence(s);
    std::string printed = pretty_print(p1);
    auto p2 = parse_sequence(printed);
    CHECK(p2 == p1);
    // Fixed point: printing again gives the same text.
    CHECK(pretty_print(p2) == printed);
  }
}

TEST_CASE("presets parse and have the documented shape") {
  auto cpmg = preset("cpmg");
  CHECK(cpmg.body.size() == 5);
  auto flip = preset("dnss_flip");
  CHECK(flip.params.at("eps") == 0.0);
  auto xy8 = preset("xy8", 2);
  REQUIRE(xy8.body.size() == 1);  // wrapped in repeat 2
  CHECK(xy8.body[0].count == 2);
  const char expected_axes[] = {'x', 'y', 'x', 'y', 'y', 'x', 'y', 'x'};
  int pi = 0;
  for (const auto& s : xy8.body[0].block)
    if (s.kind == Stmt::Kind::Pulse) CHECK(s.axis == expected_axes[pi++]);
  CHECK(pi == 8);
  CHECK_THROWS_AS(preset("udd"), InvalidPreset);
}

TEST_CASE("center-to-center compile shaves waits by half pulse widths") {
  // tau = 238 ns, tp = 40 ns: [99, P40, 198, P40, 99] ns, period 476 ns.
  auto prog = preset("cpmg");
  Bindings b{{"tau", 238e-9}, {"tp", 40e-9}};
  auto seg = compile_sequence(prog, b, TimingConvention::CenterToCenter,
                              kPi / 40e-9);
  REQUIRE(seg.period.size() == 5);
  CHECK(seg.pulses_per_period == 2);
  CHECK(seg.period[0].duration_s == doctest::Approx(99e-9).epsilon(1e-15));
  CHECK(seg.period[1].duration_s == doctest::Approx(40e-9).epsilon(1e-15));
  CHECK(seg.period[2].duration_s == doctest::Approx(198e-9).epsilon(1e-15));
  CHECK(seg.period[3].duration_s == doctest::Approx(40e-9).epsilon(1e-15));
  CHECK(seg.period[4].duration_s == doctest::Approx(99e-9).epsilon(1e-15));
  // Pulse centers stay 2*tau apart; the period is exactly 2*tau.
  CHECK(seg.period_duration_s == doctest::Approx(476e-9).epsilon(1e-15));
  CHECK(seg.period[1].angle_rad == doctest::Approx(kPi));
  CHECK(seg.period[1].rabi_rad_s == doctest::Approx(kPi / 40e-9));
}

TEST_CASE("edge-to-edge compile keeps nominal waits") {
  auto prog = preset("cpmg");
  Bindings b{{"tau", 238e-9}, {"tp", 40e-9}};
  auto seg =
      compile_sequence(prog, b, TimingConvention::EdgeToEdge, kPi / 40e-9);
  CHECK(seg.period[0].duration_s == doctest::Approx(119e-9));
  CHECK(seg.period[2].duration_s == doctest::Approx(238e-9));
  CHECK(seg.period_duration_s == doctest::Approx(2 * 238e-9 + 2 * 40e-9));
}

TEST_CASE("delta pulses compile to zero duration with the angle kept") {
  auto prog = preset("dnss_flip");
  Bindings b{{"tau", 200e-9}, {"tp", 0.0}, {"eps", 0.1}};
  auto seg = compile_sequence(prog, b, TimingConvention::CenterToCenter, 0.0);
  CHECK(seg.period[1].duration_s == 0.0);
  CHECK(seg.period[1].angle_rad == doctest::Approx(kPi + 0.1));
  CHECK(seg.period_duration_s == doctest::Approx(400e-9));
}

TEST_CASE("auto drive makes longer rotations last longer") {
  // pi+eps at Omega = pi/tp lasts tp*(1+eps/pi).
  auto prog = preset("dnss_flip");
  Bindings b{{"tau", 400e-9}, {"tp", 40e-9}, {"eps", 0.2}};
  auto seg = compile_sequence(prog, b, TimingConvention::CenterToCenter,
                              kPi / 40e-9);
  CHECK(seg.period[1].duration_s ==
        doctest::Approx(40e-9 * (1.0 + 0.2 / kPi)).epsilon(1e-14));
}

TEST_CASE("negative and degenerate durations are rejected") {
  auto prog = preset("cpmg");
  // tau <= tp: the inter-pulse wait would vanish or go negative.
  CHECK_THROWS_AS(compile_sequence(prog, {{"tau", 40e-9}, {"tp", 40e-9}},
                                   TimingConvention::CenterToCenter, kPi / 40e-9),
                  NegativeDuration);
  CHECK_THROWS_AS(compile_sequence(prog, {{"tau", 30e-9}, {"tp", 40e-9}},
                                   TimingConvention::CenterToCenter, kPi / 40e-9),
                  NegativeDuration);
  // Negative nominal wait.
  auto neg = parse_sequence("wait 0-1e-9;");
  CHECK_THROWS_AS(compile_sequence(neg, {}, TimingConvention::EdgeToEdge, 0.0),
                  NegativeDuration);
  // Negative pulse angle is invalid.
  auto nega = parse_sequence("wait 1e-7; pulse 0-pi x; wait 1e-7;");
  CHECK_THROWS_AS(compile_sequence(nega, {{"tp", 1e-9}},
                                   TimingConvention::EdgeToEdge, kPi / 1e-9),
                  InvalidParams);
  // Unbound parameter surfaces as such.
  CHECK_THROWS_AS(compile_sequence(prog, {{"tp", 0.0}},
                                   TimingConvention::CenterToCenter, 0.0),
                  UnboundParameter);
}

TEST_CASE("adjacent finite pulses need separating waits") {
  auto prog = parse_sequence("wait 1e-7; pulse pi x; pulse pi x; wait 1e-7;");
  CHECK_THROWS_AS(compile_sequence(prog, {{"tp", 1e-8}},
                                   TimingConvention::CenterToCenter, kPi / 1e-8),
                  InvalidParams);
  // With delta pulses the same program is fine.
  CHECK_NOTHROW(compile_sequence(prog, {{"tp", 0.0}},
                                 TimingConvention::CenterToCenter, 0.0));
}

TEST_CASE("repeat expands in order") {
  auto prog = parse_sequence("repeat 2 { wait 1e-9; pulse pi x; wait 1e-9; }");
  auto seg = compile_sequence(prog, {{"tp", 0.0}},
                              TimingConvention::EdgeToEdge, 0.0);
  REQUIRE(seg.period.size() == 6);
  CHECK(seg.pulses_per_period == 2);
  CHECK(seg.period[1].kind == SegKind::Pulse);
  CHECK(seg.period[4].kind == SegKind::Pulse);
  CHECK(seg.period_duration_s == doctest::Approx(4e-9));
}

TEST_CASE("spec compile binds tau and system pulse width") {
  SpinSystemParams p;
  p.larmor_hz = 2.1e6;
  p.pulse_width_s = 40e-9;
  auto spec = preset_spec("cpmg");
  auto seg = spec.compile_at(238e-9, p);
  CHECK(seg.period[0].duration_s == doctest::Approx(99e-9));
  CHECK(seg.period_duration_s == doctest::Approx(476e-9));
  // Caller bindings are preserved alongside.
  auto flip = preset_spec("dnss_flip");
  flip.bindings["eps"] = 0.3;
  SpinSystemParams pd;
  pd.larmor_hz = 2.1e6;
  auto seg2 = flip.compile_at(238e-9, pd);
  CHECK(seg2.period[1].angle_rad == doctest::Approx(kPi + 0.3));
}

TEST_CASE("timing convention parsing") {
  CHECK(timing_from_string("center") == TimingConvention::CenterToCenter);
  CHECK(timing_from_string("center-to-center") == TimingConvention::CenterToCenter);
  CHECK(timing_from_string("edge") == TimingConvention::EdgeToEdge);
  CHECK_THROWS_AS(timing_from_string("middle"), ConfigError);
}
