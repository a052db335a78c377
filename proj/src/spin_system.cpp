#include "dnss/spin_system.hpp"

#include <algorithm>
#include <cmath>

namespace dnss {

Species species_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "h1" || t == "1h" || t == "proton") return Species::H1;
  if (t == "c13" || t == "13c" || t == "carbon13") return Species::C13;
  if (t == "custom") return Species::Custom;
  throw UnknownSpecies("unknown nuclear species '" + s + "'");
}

std::string to_string(Species s) {
  switch (s) {
    case Species::H1: return "H1";
    case Species::C13: return "C13";
    case Species::Custom: return "custom";
  }
  throw UnknownSpecies("unknown nuclear species tag");
}

double larmor_from_field(Species species, double bz_gauss,
                         double custom_gamma_hz_per_gauss) {
  switch (species) {
    case Species::H1: return kGammaH1HzPerGauss * bz_gauss;
    case Species::C13: return kGammaC13HzPerGauss * bz_gauss;
    case Species::Custom:
      if (custom_gamma_hz_per_gauss <= 0.0)
        throw UnknownSpecies("custom species requires a positive gamma");
      return custom_gamma_hz_per_gauss * bz_gauss;
  }
  throw UnknownSpecies("unknown nuclear species tag");
}

std::string to_string(FrequencyConvention c) {
  return c == FrequencyConvention::Ordinary ? "ordinary" : "angular";
}

FrequencyConvention frequency_from_string(const std::string& s) {
  if (s == "ordinary" || s == "hz") return FrequencyConvention::Ordinary;
  if (s == "angular" || s == "rad" || s == "rad/s") return FrequencyConvention::Angular;
  throw ConfigError("unknown frequency convention '" + s +
                    "' (expected 'ordinary' or 'angular')");
}

namespace {

double to_angular(double value, FrequencyConvention c) {
  return c == FrequencyConvention::Ordinary ? kTwoPi * value : value;
}

}  // namespace

double SpinSystemParams::resolved_larmor() const {
  std::optional<double> from_field;
  if (species && bz_gauss)
    from_field = larmor_from_field(*species, *bz_gauss, custom_gamma_hz_per_gauss);
  if (larmor_hz) {
    if (from_field) {
      const double scale = std::max({std::abs(*larmor_hz), std::abs(*from_field), 1e-300});
      if (std::abs(*larmor_hz - *from_field) > 1e-6 * scale)
        throw InvalidParams("larmor_hz disagrees with species * bz_gauss");
    }
    return *larmor_hz;
  }
  if (from_field) return *from_field;
  throw InvalidParams("Larmor frequency unresolved: set larmor_hz or species + bz_gauss");
}

double SpinSystemParams::omega_larmor() const {
  return to_angular(resolved_larmor(), frequency_convention);
}

double SpinSystemParams::a_perp() const { return to_angular(a_perp_hz, frequency_convention); }
double SpinSystemParams::a_par() const { return to_angular(a_par_hz, frequency_convention); }
double SpinSystemParams::detuning() const { return to_angular(detuning_hz, frequency_convention); }

double SpinSystemParams::rabi() const {
  if (rabi_hz) return to_angular(*rabi_hz, frequency_convention);
  if (pulse_width_s > 0.0) return kPi / pulse_width_s;
  return 0.0;
}

void SpinSystemParams::validate() const {
  if (pulse_width_s < 0.0) throw InvalidParams("pulse_width_s must be >= 0");
  if (!std::isfinite(pulse_width_s) || !std::isfinite(a_perp_hz) ||
      !std::isfinite(a_par_hz) || !std::isfinite(detuning_hz))
    throw InvalidParams("non-finite spin system parameter");
  if (rabi_hz && (!std::isfinite(*rabi_hz) || *rabi_hz <= 0.0))
    throw InvalidParams("rabi_hz must be positive when given");
  const double fl = resolved_larmor();
  if (!std::isfinite(fl)) throw InvalidParams("non-finite Larmor frequency");
}

CMat sigma_x() {
  CMat m(2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

CMat sigma_y() {
  CMat m(2);
  m(0, 1) = cplx(0.0, -1.0);
  m(1, 0) = cplx(0.0, 1.0);
  return m;
}

CMat sigma_z() {
  CMat m(2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

CMat sx_e() { return 0.5 * sigma_x(); }
CMat sy_e() { return 0.5 * sigma_y(); }

CMat sz_e() {
  CMat m(2);
  m(0, 0) = 1.0;  // (sigma_z + 1)/2 projects onto |u>
  return m;
}

const Operators& ops() {
  static const Operators o = [] {
    Operators t;
    const CMat eye = CMat::identity(2);
    t.sx = kron(sx_e(), eye);
    t.sy = kron(sy_e(), eye);
    t.sz = kron(sz_e(), eye);
    t.ix = kron(eye, 0.5 * sigma_x());
    t.iy = kron(eye, 0.5 * sigma_y());
    t.iz = kron(eye, 0.5 * sigma_z());
    return t;
  }();
  return o;
}

CMat segment_hamiltonian(const SpinSystemParams& p, const Segment& s) {
  const Operators& o = ops();
  CMat h = p.omega_larmor() * o.iz + p.a_perp() * (o.sz * o.ix) +
           p.a_par() * (o.sz * o.iz) + p.detuning() * o.sz;
  if (s.kind == SegKind::Pulse)
    h += s.rabi_rad_s * (std::cos(s.phase_rad) * o.sx + std::sin(s.phase_rad) * o.sy);
  return h;
}

CMat segment_propagator(const SpinSystemParams& p, const Segment& s) {
  if (s.kind == SegKind::Pulse && s.duration_s == 0.0) {
    const CMat gen = std::cos(s.phase_rad) * ops().sx + std::sin(s.phase_rad) * ops().sy;
    return expm_i(s.angle_rad * gen, 1.0);
  }
  return expm_i(segment_hamiltonian(p, s), s.duration_s);
}

CMat electron_segment_hamiltonian(const SpinSystemParams& p, const Segment& s) {
  CMat h = p.detuning() * sz_e();
  if (s.kind == SegKind::Pulse)
    h += s.rabi_rad_s * (std::cos(s.phase_rad) * sx_e() + std::sin(s.phase_rad) * sy_e());
  return h;
}

CMat electron_segment_propagator(const SpinSystemParams& p, const Segment& s) {
  if (s.kind == SegKind::Pulse && s.duration_s == 0.0) {
    const CMat gen = std::cos(s.phase_rad) * sx_e() + std::sin(s.phase_rad) * sy_e();
    return expm_i(s.angle_rad * gen, 1.0);
  }
  return expm_i(electron_segment_hamiltonian(p, s), s.duration_s);
}

}  // namespace dnss
