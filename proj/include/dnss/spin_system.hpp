#pragma once

#include <optional>
#include <string>

#include "dnss/linalg.hpp"

namespace dnss {

// Gyromagnetic ratios, ordinary frequency per field (Hz/G).
inline constexpr double kGammaH1HzPerGauss = 4257.7;
inline constexpr double kGammaC13HzPerGauss = 1070.5;

enum class Species { H1, C13, Custom };

Species species_from_string(const std::string& s);  // throws UnknownSpecies
std::string to_string(Species s);

// fL = gamma * Bz. custom_gamma_hz_per_gauss is used for Species::Custom.
double larmor_from_field(Species species, double bz_gauss,
                         double custom_gamma_hz_per_gauss = 0.0);

// How user-facing frequency fields are interpreted: Ordinary means Hz
// (converted internally to angular via 2*pi), Angular means the values are
// already rad/s.
enum class FrequencyConvention { Ordinary, Angular };

std::string to_string(FrequencyConvention c);
FrequencyConvention frequency_from_string(const std::string& s);  // throws ConfigError

// Physical constants of one electron-nuclear pair. Frequencies are ordinary
// (Hz) under the default convention; conversion to angular happens inside
// the accessors. larmor_hz may be given directly or derived from
// (species, bz_gauss); giving both inconsistently is an error.
struct SpinSystemParams {
  std::optional<double> larmor_hz;
  double a_perp_hz = 0.0;
  double a_par_hz = 0.0;
  double detuning_hz = 0.0;
  std::optional<double> rabi_hz;  // nullopt = Auto: Omega = pi / tp
  double pulse_width_s = 0.0;
  std::optional<double> bz_gauss;
  std::optional<Species> species;
  double custom_gamma_hz_per_gauss = 0.0;
  FrequencyConvention frequency_convention = FrequencyConvention::Ordinary;

  // Larmor frequency in the user-facing unit. Throws InvalidParams when
  // unresolvable or when larmor_hz and species*bz disagree by more than
  // 1e-6 relative.
  double resolved_larmor() const;

  double omega_larmor() const;   // rad/s
  double a_perp() const;         // rad/s
  double a_par() const;          // rad/s
  double detuning() const;       // rad/s
  double rabi() const;           // rad/s; pi/tp when Auto; 0 for delta pulses

  void validate() const;  // throws InvalidParams
};

// Joint-space (4x4) spin operators, basis |u up>, |u down>, |d up>, |d down>.
// Sz uses the projector convention (sigma_z + 1)/2 on the electron factor, so
// the detuning term shifts only the |u> manifold.
struct Operators {
  CMat sx, sy, sz;  // electron x identity
  CMat ix, iy, iz;  // identity x nuclear
};

const Operators& ops();

CMat sigma_x();
CMat sigma_y();
CMat sigma_z();

// Electron-only (2x2) operators in the same convention.
CMat sx_e();
CMat sy_e();
CMat sz_e();

enum class SegKind { Free, Pulse };

// One piecewise-constant slice of the drive schedule. For pulses, angle_rad
// is the rotation angle the pulse realizes; duration_s == 0 marks a delta
// pulse applied instantaneously.
struct Segment {
  SegKind kind = SegKind::Free;
  double duration_s = 0.0;
  double phase_rad = 0.0;   // pulse carrier phase, Pulse only
  double rabi_rad_s = 0.0;  // angular drive strength, Pulse only
  double angle_rad = 0.0;   // nominal rotation angle, Pulse only
};

// Rotating-frame Hamiltonian of the segment (rad/s):
//   Free:  H = wL Iz + Sz (Aperp Ix + Apar Iz) + Delta Sz
//   Pulse: H = the same + Omega (cos(phi) Sx + sin(phi) Sy)
// Larmor, hyperfine and detuning stay active during pulses.
CMat segment_hamiltonian(const SpinSystemParams& p, const Segment& s);

// exp(-i H duration); a delta pulse becomes the instantaneous rotation
// exp(-i angle (cos(phi) Sx + sin(phi) Sy)).
CMat segment_propagator(const SpinSystemParams& p, const Segment& s);

// Electron-only (2x2) versions with the hyperfine coupling dropped; used to
// isolate the pulse-train propagator that acts on the electron alone.
CMat electron_segment_hamiltonian(const SpinSystemParams& p, const Segment& s);
CMat electron_segment_propagator(const SpinSystemParams& p, const Segment& s);

}  // namespace dnss
