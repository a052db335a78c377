#include "dnss/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "dnss/parallel.hpp"

namespace dnss {

std::string to_string(ElectronInit e) {
  switch (e) {
    case ElectronInit::Xplus: return "xplus";
    case ElectronInit::Xminus: return "xminus";
    case ElectronInit::ZeroKet: return "zero";
  }
  return "xplus";
}

std::string to_string(NuclearInit n) {
  switch (n) {
    case NuclearInit::MixedHalf: return "mixed";
    case NuclearInit::Up: return "up";
    case NuclearInit::Down: return "down";
  }
  return "mixed";
}

ElectronInit electron_init_from_string(const std::string& s) {
  if (s == "xplus" || s == "x+") return ElectronInit::Xplus;
  if (s == "xminus" || s == "x-") return ElectronInit::Xminus;
  if (s == "zero" || s == "0") return ElectronInit::ZeroKet;
  throw ConfigError("unknown electron init '" + s + "' (want xplus, xminus or zero)");
}

NuclearInit nuclear_init_from_string(const std::string& s) {
  if (s == "mixed") return NuclearInit::MixedHalf;
  if (s == "up") return NuclearInit::Up;
  if (s == "down") return NuclearInit::Down;
  throw ConfigError("unknown nuclear init '" + s + "' (want mixed, up or down)");
}

CMat electron_density(ElectronInit e) {
  CMat m(2);
  switch (e) {
    case ElectronInit::Xplus:
      m(0, 0) = m(0, 1) = m(1, 0) = m(1, 1) = 0.5;
      break;
    case ElectronInit::Xminus:
      m(0, 0) = m(1, 1) = 0.5;
      m(0, 1) = m(1, 0) = -0.5;
      break;
    case ElectronInit::ZeroKet:
      m(1, 1) = 1.0;  // |d> = |ms=0>
      break;
  }
  return m;
}

CMat nuclear_density(NuclearInit n) {
  CMat m(2);
  switch (n) {
    case NuclearInit::MixedHalf:
      m(0, 0) = m(1, 1) = 0.5;
      break;
    case NuclearInit::Up:
      m(0, 0) = 1.0;
      break;
    case NuclearInit::Down:
      m(1, 1) = 1.0;
      break;
  }
  return m;
}

namespace {

void require_density(const CMat& rho, const char* who) {
  if (distance(rho, rho.adjoint()) > 1e-10 * std::max(rho.norm(), 1e-300))
    throw InvalidParams(std::string(who) + ": density matrix is not Hermitian");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-10)
    throw BadTrace(std::string(who) + ": density matrix trace is not 1");
}

}  // namespace

CMat initial_state(const CMat& rho_e, const CMat& rho_n) {
  require_density(rho_e, "initial_state");
  require_density(rho_n, "initial_state");
  return kron(rho_e, rho_n);
}

CMat initial_state(ElectronInit e, NuclearInit n) {
  return kron(electron_density(e), nuclear_density(n));
}

CMat evolve(const CMat& rho0, const SpinSystemParams& p, const SegmentList& seg,
            int n_periods) {
  if (n_periods < 0) throw InvalidParams("evolve: n_periods must be >= 0");
  const CMat u = period_propagator(p, seg);
  const CMat ud = u.adjoint();
  CMat rho = rho0;
  for (int k = 0; k < n_periods; ++k) rho = u * rho * ud;
  return rho;
}

namespace {

double real_expectation(const CMat& rho, const CMat& op, const char* who) {
  const cplx v = (rho * op).trace();
  if (std::abs(v.imag()) > 1e-10)
    throw Error(std::string(who) + ": expectation value has imaginary part");
  return v.real();
}

}  // namespace

double coherence(const CMat& rho) {
  return real_expectation(rho, cplx(2.0) * ops().sx, "coherence");
}

double polarization(const CMat& rho) {
  return real_expectation(rho, cplx(2.0) * ops().iz, "polarization");
}

CMat electron_reset(const CMat& rho) {
  const CMat rho_n = partial_trace(rho, Keep::Nuclear);
  CMat zero(2);
  zero(1, 1) = 1.0;
  return kron(zero, rho_n);
}

// ---------------------------------------------------------------------------
// oracle path: raw 4x4 arrays, own Hamiltonian entries, own Taylor expm

namespace oracle {

using M4 = std::array<cplx, 16>;

M4 eye() {
  M4 m{};
  m[0] = m[5] = m[10] = m[15] = 1.0;
  return m;
}

M4 mul(const M4& a, const M4& b) {
  M4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      cplx s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[r * 4 + k] * b[k * 4 + c];
      m[r * 4 + c] = s;
    }
  return m;
}

M4 dagger(const M4& a) {
  M4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r * 4 + c] = std::conj(a[c * 4 + r]);
  return m;
}

double norm(const M4& a) {
  double s = 0.0;
  for (const cplx& v : a) s += std::norm(v);
  return std::sqrt(s);
}

// Rotating-frame Hamiltonian entries in the basis u up, u down, d up,
// d down, written out directly from the operator definitions.
M4 hamiltonian(double wl, double aperp, double apar, double delta, double omega,
               double phase) {
  M4 h{};
  // wl * Iz
  h[0] += 0.5 * wl;
  h[5] += -0.5 * wl;
  h[10] += 0.5 * wl;
  h[15] += -0.5 * wl;
  // aperp * Sz Ix: upper electron block only
  h[1] += 0.5 * aperp;
  h[4] += 0.5 * aperp;
  // apar * Sz Iz
  h[0] += 0.5 * apar;
  h[5] += -0.5 * apar;
  // delta * Sz
  h[0] += delta;
  h[5] += delta;
  // omega * (cos(phase) Sx + sin(phase) Sy)
  const cplx du = 0.5 * omega * cplx(std::cos(phase), -std::sin(phase));
  h[2] += du;          // <u up| H |d up>
  h[7] += du;          // <u down| H |d down>
  h[8] += std::conj(du);
  h[13] += std::conj(du);
  return h;
}

// exp(-i h t) by scaling and squaring of a 24-term Taylor series.
M4 expm(const M4& h, double t) {
  M4 m{};
  for (int i = 0; i < 16; ++i) m[i] = cplx(0.0, -t) * h[i];
  int squarings = 0;
  double nm = norm(m);
  while (nm > 0.25 && squarings < 60) {
    for (cplx& v : m) v *= 0.5;
    nm *= 0.5;
    ++squarings;
  }
  M4 sum = eye();
  M4 term = eye();
  for (int k = 1; k <= 24; ++k) {
    term = mul(term, m);
    for (cplx& v : term) v /= static_cast<double>(k);
    for (int i = 0; i < 16; ++i) sum[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s) sum = mul(sum, sum);
  return sum;
}

M4 segment_step(const SpinSystemParams& p, const Segment& s, double dt_max) {
  if (s.kind == SegKind::Pulse && s.duration_s == 0.0) {
    const M4 gen = hamiltonian(0.0, 0.0, 0.0, 0.0, s.angle_rad, s.phase_rad);
    return expm(gen, 1.0);
  }
  const double omega = s.kind == SegKind::Pulse ? s.rabi_rad_s : 0.0;
  const double phase = s.kind == SegKind::Pulse ? s.phase_rad : 0.0;
  const M4 h = hamiltonian(p.omega_larmor(), p.a_perp(), p.a_par(), p.detuning(),
                           omega, phase);
  const int steps = std::max(1, static_cast<int>(std::ceil(s.duration_s / dt_max)));
  const M4 u_step = expm(h, s.duration_s / steps);
  M4 u = eye();
  for (int k = 0; k < steps; ++k) u = mul(u_step, u);
  return u;
}

}  // namespace oracle

CMat oracle_evolve(const CMat& rho0, const SpinSystemParams& p, const SegmentList& seg,
                   int n_periods, double dt_max) {
  if (dt_max <= 0.0) throw InvalidParams("oracle_evolve: dt_max must be > 0");
  if (n_periods < 0) throw InvalidParams("oracle_evolve: n_periods must be >= 0");

  oracle::M4 u = oracle::eye();
  for (const Segment& s : seg.period) u = oracle::mul(oracle::segment_step(p, s, dt_max), u);
  const oracle::M4 ud = oracle::dagger(u);

  oracle::M4 rho{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) rho[r * 4 + c] = rho0(r, c);
  for (int k = 0; k < n_periods; ++k) rho = oracle::mul(oracle::mul(u, rho), ud);

  CMat out(4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = rho[r * 4 + c];
  return out;
}

// ---------------------------------------------------------------------------
// sweeps

namespace {

Metadata base_metadata(const SpinSystemParams& p, const SequenceSpec& seq) {
  Metadata m;
  m.add("sequence", seq.name.empty() ? std::string("custom") : seq.name);
  m.add("timing_convention", to_string(seq.timing));
  m.add("frequency_convention", to_string(p.frequency_convention));
  m.add("larmor_hz", p.resolved_larmor());
  if (p.species) m.add("species", to_string(*p.species));
  if (p.bz_gauss) m.add("bz_gauss", *p.bz_gauss);
  m.add("a_perp_hz", p.a_perp_hz);
  m.add("a_par_hz", p.a_par_hz);
  m.add("detuning_hz", p.detuning_hz);
  if (p.rabi_hz)
    m.add("rabi_hz", *p.rabi_hz);
  else
    m.add("rabi_hz", "auto");
  m.add("pulse_width_s", p.pulse_width_s);
  for (const auto& [k, v] : seq.bindings) m.add("binding_" + k, v);
  return m;
}

int periods_for(const SegmentList& seg, int n_pulses) {
  if (seg.pulses_per_period < 1)
    throw InvalidParams("sequence period contains no pulses");
  if (n_pulses < 1 || n_pulses % seg.pulses_per_period != 0)
    throw InvalidParams("n_pulses must be a positive multiple of the period's pulse count");
  return n_pulses / seg.pulses_per_period;
}

}  // namespace

TraceResult coherence_trace(const SpinSystemParams& p, const SequenceSpec& seq,
                            const std::vector<double>& tau_grid, int n_pulses,
                            ElectronInit einit, NuclearInit ninit, int jobs) {
  p.validate();
  if (tau_grid.empty()) throw InvalidParams("coherence_trace: empty tau grid");
  TraceResult r;
  r.tau_s = tau_grid;
  r.coherence.resize(tau_grid.size());
  const CMat rho0 = initial_state(einit, ninit);
  parallel_for(tau_grid.size(), jobs, [&](std::size_t i) {
    const SegmentList seg = seq.compile_at(tau_grid[i], p);
    const CMat rho = evolve(rho0, p, seg, periods_for(seg, n_pulses));
    r.coherence[i] = coherence(rho);
  });
  r.metadata = base_metadata(p, seq);
  r.metadata.add("n_pulses", n_pulses);
  r.metadata.add("electron_init", to_string(einit));
  r.metadata.add("nuclear_init", to_string(ninit));
  return r;
}

std::vector<TraceResult> detuning_sweep(const SpinSystemParams& p, const SequenceSpec& seq,
                                        const std::vector<double>& tau_grid,
                                        const std::vector<double>& delta_grid_hz,
                                        int n_pulses, const std::vector<double>& tp_list_s,
                                        ElectronInit einit, NuclearInit ninit, int jobs) {
  if (tau_grid.empty() || delta_grid_hz.empty() || tp_list_s.empty())
    throw InvalidParams("detuning_sweep: empty grid");
  std::vector<TraceResult> out;
  const CMat rho0 = initial_state(einit, ninit);
  for (const double tp : tp_list_s) {
    SpinSystemParams q = p;
    q.pulse_width_s = tp;
    q.validate();
    TraceResult r;
    r.tau_s = tau_grid;
    r.detuning_hz = delta_grid_hz;
    r.coherence.resize(tau_grid.size() * delta_grid_hz.size());
    parallel_for(r.coherence.size(), jobs, [&](std::size_t idx) {
      const std::size_t di = idx / tau_grid.size();
      const std::size_t ti = idx % tau_grid.size();
      SpinSystemParams pq = q;
      pq.detuning_hz = delta_grid_hz[di];
      const SegmentList seg = seq.compile_at(tau_grid[ti], pq);
      const CMat rho = evolve(rho0, pq, seg, periods_for(seg, n_pulses));
      r.coherence[idx] = coherence(rho);
    });
    r.metadata = base_metadata(q, seq);
    r.metadata.add("n_pulses", n_pulses);
    r.metadata.add("electron_init", to_string(einit));
    r.metadata.add("nuclear_init", to_string(ninit));
    r.metadata.add("detuning_axis", "rows");
    out.push_back(std::move(r));
  }
  return out;
}

PolarizationScan pulse_number_scan(const SpinSystemParams& p, const SequenceSpec& seq,
                                   double tau_s, int n_max, ElectronInit einit,
                                   NuclearInit ninit) {
  p.validate();
  if (n_max < 2) throw InvalidParams("pulse_number_scan: n_max must be >= 2");
  const SegmentList seg = seq.compile_at(tau_s, p);
  if (seg.pulses_per_period < 1)
    throw InvalidParams("sequence period contains no pulses");

  const CMat u = period_propagator(p, seg);
  const CMat ud = u.adjoint();
  CMat rho = initial_state(einit, ninit);

  PolarizationScan scan;
  int n = 0;
  while (n + seg.pulses_per_period <= n_max) {
    rho = u * rho * ud;
    n += seg.pulses_per_period;
    if (n % 2 != 0) continue;
    scan.pulse_counts.push_back(n);
    scan.coherence.push_back(coherence(rho));
    scan.polarization.push_back(polarization(rho));
  }
  if (scan.pulse_counts.empty())
    throw InvalidParams("pulse_number_scan: n_max below one period's pulse count");

  double pmax = 0.0;
  for (const double v : scan.polarization) pmax = std::max(pmax, std::abs(v));
  if (pmax >= 1e-6) {
    for (std::size_t i = 0; i < scan.pulse_counts.size(); ++i) {
      if (std::abs(scan.polarization[i]) >= 0.999 * pmax) {
        scan.n_init = scan.pulse_counts[i];
        break;
      }
    }
  }
  if (scan.n_init > 0)
    scan.fidelity = nuclear_gate_fidelity(p, seq, tau_s, scan.n_init, GateTarget::Flip);

  scan.metadata = base_metadata(p, seq);
  scan.metadata.add("tau_s", tau_s);
  scan.metadata.add("n_max", n_max);
  scan.metadata.add("electron_init", to_string(einit));
  scan.metadata.add("nuclear_init", to_string(ninit));
  scan.metadata.add("n_init", scan.n_init);
  scan.metadata.add("fidelity_at_n_init", scan.fidelity);
  return scan;
}

GateTarget gate_target_from_string(const std::string& s) {
  if (s == "flip") return GateTarget::Flip;
  if (s == "polarize_up") return GateTarget::PolarizeUp;
  if (s == "polarize_down") return GateTarget::PolarizeDown;
  throw ConfigError("unknown gate target '" + s +
                    "' (want flip, polarize_up or polarize_down)");
}

double nuclear_gate_fidelity(const SpinSystemParams& p, const SequenceSpec& seq,
                             double tau_s, int n_pulses, GateTarget target) {
  p.validate();
  const SegmentList seg = seq.compile_at(tau_s, p);
  const int periods = periods_for(seg, n_pulses);

  const auto run = [&](NuclearInit ninit) {
    return evolve(initial_state(ElectronInit::Xplus, ninit), p, seg, periods);
  };

  switch (target) {
    case GateTarget::Flip: {
      const CMat up_in = partial_trace(run(NuclearInit::Up), Keep::Nuclear);
      const CMat dn_in = partial_trace(run(NuclearInit::Down), Keep::Nuclear);
      return std::max(std::real(up_in(1, 1)), std::real(dn_in(0, 0)));
    }
    case GateTarget::PolarizeUp:
    case GateTarget::PolarizeDown: {
      const CMat rho = electron_reset(run(NuclearInit::MixedHalf));
      const CMat rho_n = partial_trace(rho, Keep::Nuclear);
      const int idx = target == GateTarget::PolarizeUp ? 0 : 1;
      return std::real(rho_n(idx, idx));
    }
  }
  throw InvalidParams("unknown gate target");
}

// ---------------------------------------------------------------------------
// dip extraction

std::vector<Dip> find_dips(const std::vector<double>& tau_s,
                           const std::vector<double>& coherence) {
  std::vector<Dip> out;
  const std::size_t n = tau_s.size();
  if (n != coherence.size() || n < 3) return out;

  double baseline = coherence[0];
  for (const double v : coherence) baseline = std::max(baseline, v);
  double dmax = 0.0;
  for (const double v : coherence) dmax = std::max(dmax, baseline - v);
  if (dmax <= 0.0) return out;
  const double thresh = 0.1 * dmax;

  std::size_t i = 0;
  while (i < n) {
    if (baseline - coherence[i] < thresh) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && baseline - coherence[j + 1] >= thresh) ++j;

    Dip d;
    double wsum = 0.0, csum = 0.0;
    std::size_t imin = i;
    for (std::size_t k = i; k <= j; ++k) {
      const double w = (baseline - coherence[k]) - thresh;
      wsum += w;
      csum += w * tau_s[k];
      if (coherence[k] < coherence[imin]) imin = k;
    }
    d.center_s = wsum > 0.0 ? csum / wsum : tau_s[(i + j) / 2];
    d.tau_at_min_s = tau_s[imin];
    d.min_coherence = coherence[imin];
    d.depth = baseline - coherence[imin];
    d.parabolic_center_s = tau_s[imin];
    if (imin > 0 && imin + 1 < n) {
      const double y0 = coherence[imin - 1], y1 = coherence[imin], y2 = coherence[imin + 1];
      const double denom = y0 - 2.0 * y1 + y2;
      if (denom > 0.0) {
        const double h = 0.5 * (tau_s[imin + 1] - tau_s[imin - 1]);
        d.parabolic_center_s = tau_s[imin] + h * 0.5 * (y0 - y2) / denom;
      }
    }
    out.push_back(d);
    i = j + 1;
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const Dip& a, const Dip& b) { return a.depth > b.depth; });
  return out;
}

double measure_splitting(const std::vector<Dip>& dips) {
  if (dips.size() < 2) return 0.0;
  if (dips[1].depth < 0.5 * dips[0].depth) return 0.0;
  return std::abs(dips[0].center_s - dips[1].center_s);
}

}  // namespace dnss
