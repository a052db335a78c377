#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dnss/spin_system.hpp"

namespace dnss {

using Bindings = std::map<std::string, double>;

// Arithmetic expression over numbers, pi and named parameters.
struct Expr {
  enum class Kind { Number, Pi, Param, Binary, Negate };
  Kind kind = Kind::Number;
  double number = 0.0;     // Number
  std::string name;        // Param
  char op = '+';           // Binary: one of + - * /
  std::vector<Expr> kids;  // Binary: {lhs, rhs}; Negate: {operand}

  double eval(const Bindings& b) const;  // throws UnboundParameter
  void collect_params(std::set<std::string>& out) const;
  bool operator==(const Expr&) const = default;
};

// One statement of a sequence program. Pulse phase is fixed by the axis
// keyword: x -> 0, y -> pi/2.
struct Stmt {
  enum class Kind { Wait, Pulse, Repeat };
  Kind kind = Kind::Wait;
  int line = 0;
  int col = 0;
  Expr value;              // Wait: duration (s); Pulse: angle (rad)
  char axis = 'x';         // Pulse
  int count = 0;           // Repeat
  std::vector<Stmt> block; // Repeat

  bool operator==(const Stmt& o) const {
    return kind == o.kind && value == o.value && axis == o.axis &&
           count == o.count && block == o.block;
  }
};

struct SequenceProgram {
  std::vector<Stmt> body;
  Bindings params;  // default bindings; call-site bindings override

  std::set<std::string> free_params() const;
  bool operator==(const SequenceProgram& o) const { return body == o.body; }
};

// Recursive-descent parser. Grammar:
//   program := stmt*
//   stmt    := "wait" expr ";" | "pulse" expr axis ";"
//            | "repeat" INT "{" stmt* "}"
//   axis    := "x" | "y"
//   expr    := term (("+"|"-") term)*
//   term    := factor (("*"|"/") factor)*
//   factor  := NUMBER | "pi" | IDENT | "-" factor | "(" expr ")"
// "#" starts a comment running to end of line. Throws SyntaxError with
// 1-based line/col on malformed input.
SequenceProgram parse_sequence(const std::string& source);

// Canonical source text; parse(pretty_print(parse(s))) == parse(s).
std::string pretty_print(const SequenceProgram& prog);

enum class TimingConvention { CenterToCenter, EdgeToEdge };

std::string to_string(TimingConvention c);
TimingConvention timing_from_string(const std::string& s);  // throws ConfigError

// Compiled one-period schedule.
struct SegmentList {
  std::vector<Segment> period;
  double period_duration_s = 0.0;
  int pulses_per_period = 0;
};

// Evaluate all expressions under the bindings and realize pulse widths.
// The reserved binding "tp" is the pulse width; rabi_rad_s > 0 overrides the
// Auto drive strength Omega = pi/tp, and each pulse lasts angle/Omega (so a
// pi pulse lasts exactly tp under Auto). Under CenterToCenter timing every
// wait adjacent to a pulse (cyclically) is shortened by half that pulse's
// width, which keeps pulse-center spacings equal to the nominal waits.
// Throws UnboundParameter, NegativeDuration, InvalidParams.
SegmentList compile_sequence(const SequenceProgram& prog, const Bindings& bindings,
                             TimingConvention timing, double rabi_rad_s = 0.0);

// Built-in sequence programs, one Floquet period repeated np times:
//   cpmg         wait tau/2; pulse pi x; wait tau; pulse pi x; wait tau/2
//   dnss_detuned same program; detuning and pulse width come from the
//                spin-system parameters
//   dnss_flip    pulse angles pi + eps (binding "eps", default 0)
//   xy8          8 pi pulses, phase pattern x,y,x,y,y,x,y,x
// Throws InvalidPreset.
SequenceProgram preset(const std::string& name, int np = 1);

// A program together with its bindings and timing convention; the parameter
// "tau" is left free so spectra and traces can recompile per grid point.
struct SequenceSpec {
  std::string name;  // for output metadata
  SequenceProgram program;
  Bindings bindings;
  TimingConvention timing = TimingConvention::CenterToCenter;

  SegmentList compile_at(double tau_s, const SpinSystemParams& p) const;
};

// Convenience: preset spec with bindings prefilled.
SequenceSpec preset_spec(const std::string& name, int np = 1);

}  // namespace dnss
