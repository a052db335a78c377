#pragma once

#include <limits>

#include "dnss/csv.hpp"
#include "dnss/floquet.hpp"

namespace dnss {

enum class ElectronInit { Xplus, Xminus, ZeroKet };
enum class NuclearInit { MixedHalf, Up, Down };

std::string to_string(ElectronInit e);
std::string to_string(NuclearInit n);
ElectronInit electron_init_from_string(const std::string& s);  // throws ConfigError
NuclearInit nuclear_init_from_string(const std::string& s);    // throws ConfigError

CMat electron_density(ElectronInit e);
CMat nuclear_density(NuclearInit n);

// rho = rho_e (x) rho_n; validates Hermiticity and unit traces.
CMat initial_state(const CMat& rho_e, const CMat& rho_n);
CMat initial_state(ElectronInit e, NuclearInit n);

// rho -> U^n rho U^dag n with U the one-period propagator.
CMat evolve(const CMat& rho0, const SpinSystemParams& p, const SegmentList& seg,
            int n_periods);

// L = Tr(rho 2Sx), P = Tr(rho 2Iz); the imaginary part must vanish to 1e-10.
double coherence(const CMat& rho);
double polarization(const CMat& rho);

// Optical reinitialization: rho -> |d><d| (x) Tr_e rho.
CMat electron_reset(const CMat& rho);

// Independently coded verification path: every segment is subdivided into
// steps of at most dt_max seconds and each step is exponentiated by a
// scaled-and-squared Taylor series, sharing no propagator code with evolve.
CMat oracle_evolve(const CMat& rho0, const SpinSystemParams& p, const SegmentList& seg,
                   int n_periods, double dt_max);

struct TraceResult {
  std::vector<double> tau_s;
  std::vector<double> detuning_hz;  // empty for 1-D traces
  std::vector<double> coherence;    // row-major over (detuning, tau)
  Metadata metadata;
};

// L(N tau) against tau at fixed pulse count; the sequence recompiles per
// grid point. n_pulses must be a multiple of the period's pulse count.
TraceResult coherence_trace(const SpinSystemParams& p, const SequenceSpec& seq,
                            const std::vector<double>& tau_grid, int n_pulses,
                            ElectronInit einit, NuclearInit ninit, int jobs = 1);

// One 2-D (detuning x tau) coherence map per pulse width in tp_list_s.
std::vector<TraceResult> detuning_sweep(const SpinSystemParams& p, const SequenceSpec& seq,
                                        const std::vector<double>& tau_grid,
                                        const std::vector<double>& delta_grid_hz,
                                        int n_pulses, const std::vector<double>& tp_list_s,
                                        ElectronInit einit, NuclearInit ninit,
                                        int jobs = 1);

struct PolarizationScan {
  std::vector<int> pulse_counts;  // even N up to n_max
  std::vector<double> polarization;
  std::vector<double> coherence;
  int n_init = 0;  // smallest even N with |P| >= 0.999 * max |P|; 0 = none
  double fidelity = std::numeric_limits<double>::quiet_NaN();  // flip fidelity at n_init
  Metadata metadata;
};

// L(N) and P(N) at fixed tau for N = ppp, 2*ppp, ... up to n_max (even N
// recorded), with N_I detection.
PolarizationScan pulse_number_scan(const SpinSystemParams& p, const SequenceSpec& seq,
                                   double tau_s, int n_max, ElectronInit einit,
                                   NuclearInit ninit);

enum class GateTarget { Flip, PolarizeUp, PolarizeDown };

GateTarget gate_target_from_string(const std::string& s);  // throws ConfigError

// Flip: the larger of the two transfer populations <down|Tr_e rho|down> from
// |up> input and <up|...|up> from |down> input (a DNSS dip addresses one
// direction only). Polarize: target population from the mixed input after
// electron reset. Electron starts in |X+>.
double nuclear_gate_fidelity(const SpinSystemParams& p, const SequenceSpec& seq,
                             double tau_s, int n_pulses, GateTarget target);

// One coherence dip located on a trace. center_s is the depth-weighted
// centroid of the contiguous below-threshold cluster (robust against the
// multi-lobed substructure deep dips develop at large pulse numbers);
// parabolic_center_s is the three-point parabola vertex at the minimum.
struct Dip {
  double center_s = 0.0;
  double tau_at_min_s = 0.0;
  double parabolic_center_s = 0.0;
  double min_coherence = 0.0;
  double depth = 0.0;
};

// Clusters of points deeper than 10% of the maximal depth below the trace
// baseline (its maximum), deepest first.
std::vector<Dip> find_dips(const std::vector<double>& tau_s,
                           const std::vector<double>& coherence);

// Distance between the centroids of the two deepest dips, counting only
// dips at least half as deep as the deepest (sidelobe rejection); 0 when
// fewer than two qualify.
double measure_splitting(const std::vector<Dip>& dips);

}  // namespace dnss
