#include "dnss/sequence.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace dnss {

double Expr::eval(const Bindings& b) const {
  switch (kind) {
    case Kind::Number: return number;
    case Kind::Pi: return kPi;
    case Kind::Param: {
      auto it = b.find(name);
      if (it == b.end()) throw UnboundParameter("unbound parameter '" + name + "'");
      return it->second;
    }
    case Kind::Negate: return -kids[0].eval(b);
    case Kind::Binary: {
      const double l = kids[0].eval(b), r = kids[1].eval(b);
      switch (op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        case '/': return l / r;
      }
    }
  }
  throw Error("corrupt expression node");
}

void Expr::collect_params(std::set<std::string>& out) const {
  if (kind == Kind::Param) out.insert(name);
  for (const Expr& k : kids) k.collect_params(out);
}

std::set<std::string> SequenceProgram::free_params() const {
  std::set<std::string> out;
  auto walk = [&](auto&& self, const std::vector<Stmt>& stmts) -> void {
    for (const Stmt& s : stmts) {
      s.value.collect_params(out);
      self(self, s.block);
    }
  };
  walk(walk, body);
  return out;
}

// ---------------------------------------------------------------------------
// parser

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += take();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Token::Kind::Number;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                      src_[pos_] == '.'))
          t.text += take();
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
          size_t save = pos_;
          std::string exp;
          exp += take();
          if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) exp += take();
          if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
              exp += take();
            t.text += exp;
          } else {
            pos_ = save;  // bare 'e' belongs to the next token
          }
        }
        char* end = nullptr;
        t.number = std::strtod(t.text.c_str(), &end);
        if (end != t.text.c_str() + t.text.size())
          throw SyntaxError(t.line, t.col, "malformed number '" + t.text + "'");
      } else if (std::string(";{}()+-*/").find(c) != std::string::npos) {
        t.kind = Token::Kind::Punct;
        t.text = take();
      } else {
        throw SyntaxError(line_, col_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(t);
    }
  }

 private:
  char take() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        return;
      }
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  SequenceProgram run() {
    SequenceProgram prog;
    while (!at_end()) prog.body.push_back(stmt());
    return prog;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  const Token& take() { return toks_[i_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& expected) {
    const std::string got =
        t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.line, t.col, "expected " + expected + ", got " + got);
  }

  void expect_punct(const std::string& p) {
    const Token& t = peek();
    if (t.kind != Token::Kind::Punct || t.text != p) fail(t, "'" + p + "'");
    take();
  }

  Stmt stmt() {
    const Token& t = peek();
    if (t.kind != Token::Kind::Ident) fail(t, "statement (wait, pulse or repeat)");
    Stmt s;
    s.line = t.line;
    s.col = t.col;
    if (t.text == "wait") {
      take();
      s.kind = Stmt::Kind::Wait;
      s.value = expr();
      expect_punct(";");
    } else if (t.text == "pulse") {
      take();
      s.kind = Stmt::Kind::Pulse;
      s.value = expr();
      const Token& ax = peek();
      if (ax.kind != Token::Kind::Ident || (ax.text != "x" && ax.text != "y"))
        fail(ax, "pulse axis 'x' or 'y'");
      s.axis = ax.text[0];
      take();
      expect_punct(";");
    } else if (t.text == "repeat") {
      take();
      s.kind = Stmt::Kind::Repeat;
      const Token& n = peek();
      if (n.kind != Token::Kind::Number || n.number != std::floor(n.number) ||
          n.number < 1.0 || n.number > 1e9)
        fail(n, "positive integer repeat count");
      s.count = static_cast<int>(n.number);
      take();
      expect_punct("{");
      while (!(peek().kind == Token::Kind::Punct && peek().text == "}")) {
        if (at_end()) fail(peek(), "'}'");
        s.block.push_back(stmt());
      }
      take();
    } else {
      fail(t, "statement (wait, pulse or repeat)");
    }
    return s;
  }

  Expr expr() {
    Expr e = term();
    while (peek().kind == Token::Kind::Punct && (peek().text == "+" || peek().text == "-")) {
      const char op = take().text[0];
      Expr r = term();
      Expr b;
      b.kind = Expr::Kind::Binary;
      b.op = op;
      b.kids = {std::move(e), std::move(r)};
      e = std::move(b);
    }
    return e;
  }

  Expr term() {
    Expr e = factor();
    while (peek().kind == Token::Kind::Punct && (peek().text == "*" || peek().text == "/")) {
      const char op = take().text[0];
      Expr r = factor();
      Expr b;
      b.kind = Expr::Kind::Binary;
      b.op = op;
      b.kids = {std::move(e), std::move(r)};
      e = std::move(b);
    }
    return e;
  }

  Expr factor() {
    const Token& t = peek();
    Expr e;
    if (t.kind == Token::Kind::Number) {
      e.kind = Expr::Kind::Number;
      e.number = t.number;
      take();
    } else if (t.kind == Token::Kind::Ident) {
      if (t.text == "pi") {
        e.kind = Expr::Kind::Pi;
      } else {
        e.kind = Expr::Kind::Param;
        e.name = t.text;
      }
      take();
    } else if (t.kind == Token::Kind::Punct && t.text == "-") {
      take();
      e.kind = Expr::Kind::Negate;
      e.kids = {factor()};
    } else if (t.kind == Token::Kind::Punct && t.text == "(") {
      take();
      e = expr();
      expect_punct(")");
    } else {
      fail(t, "expression");
    }
    return e;
  }

  std::vector<Token> toks_;
  size_t i_ = 0;
};

int prec(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Binary: return (e.op == '+' || e.op == '-') ? 1 : 2;
    case Expr::Kind::Negate: return 3;
    default: return 4;
  }
}

void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", e.number);
      out += buf;
      return;
    }
    case Expr::Kind::Pi: out += "pi"; return;
    case Expr::Kind::Param: out += e.name; return;
    case Expr::Kind::Negate: {
      out += '-';
      const bool paren = prec(e.kids[0]) < prec(e);
      if (paren) out += '(';
      print_expr(e.kids[0], out);
      if (paren) out += ')';
      return;
    }
    case Expr::Kind::Binary: {
      const int p = prec(e);
      const bool lp = prec(e.kids[0]) < p;
      const bool rp = prec(e.kids[1]) < p ||
                      (prec(e.kids[1]) == p && (e.op == '-' || e.op == '/'));
      if (lp) out += '(';
      print_expr(e.kids[0], out);
      if (lp) out += ')';
      out += ' ';
      out += e.op;
      out += ' ';
      if (rp) out += '(';
      print_expr(e.kids[1], out);
      if (rp) out += ')';
      return;
    }
  }
}

void print_stmts(const std::vector<Stmt>& stmts, int indent, std::string& out) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  for (const Stmt& s : stmts) {
    out += pad;
    switch (s.kind) {
      case Stmt::Kind::Wait:
        out += "wait ";
        print_expr(s.value, out);
        out += ";\n";
        break;
      case Stmt::Kind::Pulse:
        out += "pulse ";
        print_expr(s.value, out);
        out += ' ';
        out += s.axis;
        out += ";\n";
        break;
      case Stmt::Kind::Repeat:
        out += "repeat " + std::to_string(s.count) + " {\n";
        print_stmts(s.block, indent + 1, out);
        out += pad + "}\n";
        break;
    }
  }
}

}  // namespace

SequenceProgram parse_sequence(const std::string& source) {
  return Parser(Lexer(source).run()).run();
}

std::string pretty_print(const SequenceProgram& prog) {
  std::string out;
  print_stmts(prog.body, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// compiler

std::string to_string(TimingConvention c) {
  return c == TimingConvention::CenterToCenter ? "center-to-center" : "edge-to-edge";
}

TimingConvention timing_from_string(const std::string& s) {
  if (s == "center" || s == "center-to-center") return TimingConvention::CenterToCenter;
  if (s == "edge" || s == "edge-to-edge") return TimingConvention::EdgeToEdge;
  throw ConfigError("unknown timing convention '" + s + "' (want center or edge)");
}

namespace {

void expand(const std::vector<Stmt>& stmts, const Bindings& b, double tp, double omega,
            std::vector<Segment>& out) {
  for (const Stmt& s : stmts) {
    switch (s.kind) {
      case Stmt::Kind::Wait: {
        const double d = s.value.eval(b);
        if (!std::isfinite(d)) throw InvalidParams("wait duration is not finite");
        if (d < 0.0) throw NegativeDuration("wait duration is negative");
        Segment seg;
        seg.kind = SegKind::Free;
        seg.duration_s = d;
        out.push_back(seg);
        break;
      }
      case Stmt::Kind::Pulse: {
        const double angle = s.value.eval(b);
        if (!std::isfinite(angle)) throw InvalidParams("pulse angle is not finite");
        if (angle < 0.0) throw InvalidParams("pulse angle is negative");
        Segment seg;
        seg.kind = SegKind::Pulse;
        seg.phase_rad = s.axis == 'x' ? 0.0 : 0.5 * kPi;
        seg.angle_rad = angle;
        if (tp > 0.0) {
          seg.rabi_rad_s = omega;
          seg.duration_s = angle / omega;
        }
        out.push_back(seg);
        break;
      }
      case Stmt::Kind::Repeat:
        for (int i = 0; i < s.count; ++i) expand(s.block, b, tp, omega, out);
        break;
    }
  }
}

}  // namespace

SegmentList compile_sequence(const SequenceProgram& prog, const Bindings& bindings,
                             TimingConvention timing, double rabi_rad_s) {
  if (prog.body.empty()) throw InvalidParams("sequence period is empty");

  Bindings b = prog.params;
  for (const auto& [k, v] : bindings) b[k] = v;

  double tp = 0.0;
  if (auto it = b.find("tp"); it != b.end()) tp = it->second;
  if (tp < 0.0) throw NegativeDuration("pulse width tp is negative");
  const double omega = rabi_rad_s > 0.0 ? rabi_rad_s : (tp > 0.0 ? kPi / tp : 0.0);

  SegmentList sl;
  expand(prog.body, b, tp, omega, sl.period);

  if (timing == TimingConvention::CenterToCenter) {
    const int n = static_cast<int>(sl.period.size());
    std::vector<double> shave(sl.period.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      const Segment& seg = sl.period[i];
      if (seg.kind != SegKind::Pulse || seg.duration_s <= 0.0) continue;
      for (int nb : {(i + n - 1) % n, (i + 1) % n}) {
        if (sl.period[nb].kind != SegKind::Free)
          throw InvalidParams("finite-width pulses need separating waits");
        shave[nb] += 0.5 * seg.duration_s;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (shave[i] == 0.0) continue;
      Segment& seg = sl.period[i];
      const double adjusted = seg.duration_s - shave[i];
      if (adjusted < 0.0 || (seg.duration_s > 0.0 && adjusted <= 0.0))
        throw NegativeDuration("wait shorter than adjacent pulse widths (tau <= tp)");
      seg.duration_s = adjusted;
    }
  }

  for (const Segment& seg : sl.period) {
    sl.period_duration_s += seg.duration_s;
    if (seg.kind == SegKind::Pulse) ++sl.pulses_per_period;
  }
  return sl;
}

SequenceProgram preset(const std::string& name, int np) {
  if (np < 1) throw InvalidPreset("preset repeat count must be >= 1");
  std::string period;
  if (name == "cpmg" || name == "dnss_detuned") {
    period = "wait tau/2; pulse pi x; wait tau; pulse pi x; wait tau/2;";
  } else if (name == "dnss_flip") {
    period = "wait tau/2; pulse pi+eps x; wait tau; pulse pi+eps x; wait tau/2;";
  } else if (name == "xy8") {
    period =
        "wait tau/2; pulse pi x; wait tau; pulse pi y; wait tau; pulse pi x; "
        "wait tau; pulse pi y; wait tau; pulse pi y; wait tau; pulse pi x; "
        "wait tau; pulse pi y; wait tau; pulse pi x; wait tau/2;";
  } else {
    throw InvalidPreset("unknown preset '" + name + "'");
  }
  SequenceProgram prog = parse_sequence(period);
  if (name == "dnss_flip") prog.params["eps"] = 0.0;
  if (np > 1) {
    Stmt rep;
    rep.kind = Stmt::Kind::Repeat;
    rep.count = np;
    rep.block = std::move(prog.body);
    prog.body = {rep};
  }
  return prog;
}

SegmentList SequenceSpec::compile_at(double tau_s, const SpinSystemParams& p) const {
  Bindings b = bindings;
  b["tau"] = tau_s;
  b["tp"] = p.pulse_width_s;
  const double omega = p.pulse_width_s > 0.0 ? p.rabi() : 0.0;
  return compile_sequence(program, b, timing, omega);
}

SequenceSpec preset_spec(const std::string& name, int np) {
  SequenceSpec spec;
  spec.name = name;
  spec.program = preset(name, np);
  return spec;
}

}  // namespace dnss
