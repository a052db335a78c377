#pragma once

#include <vector>

#include "dnss/sequence.hpp"

namespace dnss {

// Signed residual x-rotation per period of the pulse-only propagator,
// sampled over a tau grid. Points where the rotation is not predominantly
// about x are flagged out-of-regime instead of silently kept.
struct ThetaCurve {
  std::vector<double> tau_s;
  std::vector<double> theta_rad;  // NaN where !in_regime
  std::vector<bool> in_regime;
  double detuning_hz = 0.0;
  double pulse_width_s = 0.0;
};

enum class SymmetryLabel { XplusUp, XplusDown, XminusUp, XminusDown, Mixed };

std::string to_string(SymmetryLabel l);

// One tracked eigenphase branch. phase_rad is the principal value in
// (-pi, pi]; winding counts seam crossings so phase_rad + 2*pi*winding is
// continuous in tau.
struct FloquetBranch {
  std::vector<double> phase_rad;
  std::vector<int> winding;
  std::vector<SymmetryLabel> label;
  std::vector<CVec> vec;

  double unwound(std::size_t i) const { return phase_rad[i] + kTwoPi * winding[i]; }
};

struct FloquetSpectrum {
  std::vector<double> tau_s;
  std::array<FloquetBranch, 4> branches;
};

// Dip positions solving tau = ((2k-1)*pi +/- |theta(tau)|) / omega_L by
// fixed-point iteration from the seed (2k-1)*pi/omega_L. converged=false
// (with the last iterate retained) when 200 iterations did not reach
// |dtau| < 1e-15 s.
struct DipPrediction {
  int harmonic_k = 1;
  double tau_plus_s = 0.0;
  double tau_minus_s = 0.0;
  double theta_at_dip_rad = 0.0;  // |theta| at the converged tau_plus
  bool converged = false;
  int iterations = 0;
};

// A located (near-)degeneracy of two branches: tau at the minimal phase gap
// after local refinement. same_electron_symmetry is read off the branch
// labels just outside the crossing; true crossings (gap ~ 0) happen between
// branches sharing the electron label.
struct CrossingInfo {
  int branch_a = 0;
  int branch_b = 0;
  bool same_electron_symmetry = false;
  double tau_s = 0.0;
  double gap_rad = 0.0;
};

// Time-ordered product of segment propagators over one period.
CMat period_propagator(const SpinSystemParams& p, const SegmentList& seg);

// theta from the electron-only pulse propagator at A = 0: decompose
// -Up(T) = exp(-i gp) exp(-i (angle/2) n.sigma) and return (angle/2) * n_x.
// Throws OutOfRegime when n_x^2 < 0.99.
double extract_theta(const SpinSystemParams& p, const SequenceSpec& seq, double tau_s);

ThetaCurve theta_curve(const SpinSystemParams& p, const SequenceSpec& seq,
                       const std::vector<double>& tau_grid);

// Branch-tracked eigenphase spectrum of the full one-period propagator.
// Per-tau diagonalizations run on up to `jobs` threads; tracking is a
// sequential post-pass. Throws BranchTrackingLost when consecutive-point
// eigenvector overlap drops to 0.5 (grid too coarse).
FloquetSpectrum full_spectrum(const SpinSystemParams& p, const SequenceSpec& seq,
                              const std::vector<double>& tau_grid, int jobs = 1);

// Same with the hyperfine coupling set to zero (the unperturbed spectrum
// pi +/- omega_L tau +/- theta(tau) plus the detuning tilt).
FloquetSpectrum unperturbed_spectrum(const SpinSystemParams& p, const SequenceSpec& seq,
                                     const std::vector<double>& tau_grid, int jobs = 1);

DipPrediction predict_dips(const SpinSystemParams& p, const SequenceSpec& seq,
                           int harmonic_k);

// Locate all local minima of pairwise branch gaps below 0.5 rad and refine
// each by ternary search with eigenvector matching against the grid point.
std::vector<CrossingInfo> find_crossings(const SpinSystemParams& p,
                                         const SequenceSpec& seq,
                                         const FloquetSpectrum& spec);

}  // namespace dnss
