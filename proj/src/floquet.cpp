#include "dnss/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dnss/parallel.hpp"

namespace dnss {

std::string to_string(SymmetryLabel l) {
  switch (l) {
    case SymmetryLabel::XplusUp: return "X+up";
    case SymmetryLabel::XplusDown: return "X+down";
    case SymmetryLabel::XminusUp: return "X-up";
    case SymmetryLabel::XminusDown: return "X-down";
    case SymmetryLabel::Mixed: return "mixed";
  }
  return "mixed";
}

CMat period_propagator(const SpinSystemParams& p, const SegmentList& seg) {
  CMat u = CMat::identity(4);
  for (const Segment& s : seg.period) u = segment_propagator(p, s) * u;
  return u;
}

namespace {

SpinSystemParams without_hyperfine(SpinSystemParams p) {
  p.a_perp_hz = 0.0;
  p.a_par_hz = 0.0;
  return p;
}

// Electron-only one-period pulse propagator (A = 0).
CMat electron_period_propagator(const SpinSystemParams& p, const SegmentList& seg) {
  CMat u = CMat::identity(2);
  for (const Segment& s : seg.period) u = electron_segment_propagator(p, s) * u;
  return u;
}

double wrap_pi(double x) {
  x = std::fmod(x + kPi, kTwoPi);
  if (x < 0.0) x += kTwoPi;
  return x - kPi;
}

// Distance between two principal phases on the circle, in [0, pi].
double circle_gap(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace

double extract_theta(const SpinSystemParams& p, const SequenceSpec& seq, double tau_s) {
  const SpinSystemParams p0 = without_hyperfine(p);
  const SegmentList seg = seq.compile_at(tau_s, p0);
  CMat up = electron_period_propagator(p0, seg);
  const AxisAngle aa = su2_axis_angle(cplx(-1.0) * up);
  if (aa.axis[0] * aa.axis[0] < 0.99)
    throw OutOfRegime("extract_theta: pulse rotation is not predominantly about x");
  return 0.5 * aa.angle * aa.axis[0];
}

ThetaCurve theta_curve(const SpinSystemParams& p, const SequenceSpec& seq,
                       const std::vector<double>& tau_grid) {
  ThetaCurve c;
  c.tau_s = tau_grid;
  c.detuning_hz = p.detuning_hz;
  c.pulse_width_s = p.pulse_width_s;
  c.theta_rad.resize(tau_grid.size());
  c.in_regime.resize(tau_grid.size());
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    try {
      c.theta_rad[i] = extract_theta(p, seq, tau_grid[i]);
      c.in_regime[i] = true;
    } catch (const OutOfRegime&) {
      c.theta_rad[i] = std::numeric_limits<double>::quiet_NaN();
      c.in_regime[i] = false;
    }
  }
  return c;
}

namespace {

struct GridPoint {
  std::array<double, 4> phase{};
  std::array<CVec, 4> vec{};
};

std::array<CVec, 4> symmetry_states() {
  // |X+ up>, |X+ down>, |X- up>, |X- down> in the basis u up, u down, d up,
  // d down; the nuclear factor of X+- is the identity.
  const double r = 1.0 / std::sqrt(2.0);
  std::array<CVec, 4> s{};
  s[0] = {r, 0.0, r, 0.0};
  s[1] = {0.0, r, 0.0, r};
  s[2] = {r, 0.0, -r, 0.0};
  s[3] = {0.0, r, 0.0, -r};
  return s;
}

SymmetryLabel classify(const CVec& v) {
  static const std::array<CVec, 4> states = symmetry_states();
  static const std::array<SymmetryLabel, 4> labels = {
      SymmetryLabel::XplusUp, SymmetryLabel::XplusDown, SymmetryLabel::XminusUp,
      SymmetryLabel::XminusDown};
  for (int i = 0; i < 4; ++i)
    if (std::abs(inner(states[i], v, 4)) > 0.99) return labels[i];
  return SymmetryLabel::Mixed;
}

// Realign the columns listed in idx (a degenerate cluster) to maximal
// overlap with the previous vectors via the unitary polar factor of the
// overlap matrix; keeps the cluster orthonormal.
void realign_cluster(const std::array<CVec, 4>& prev, GridPoint& cur,
                     const std::vector<int>& idx) {
  const int m = static_cast<int>(idx.size());
  CMat o(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) o(a, b) = inner(cur.vec[idx[a]], prev[idx[b]], 4);
  // Unitary polar factor Q = O (O^dag O)^{-1/2}.
  const CMat gram = o.adjoint() * o;
  const HermEig e = herm_eig(0.5 * (gram + gram.adjoint()));
  CMat invsqrt(m);
  for (int k = 0; k < m; ++k) {
    const double lam = e.values[k];
    if (lam <= 1e-12) return;  // cluster subspaces drifted apart; keep as-is
    const double w = 1.0 / std::sqrt(lam);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        invsqrt(r, c) += e.vectors(r, k) * w * std::conj(e.vectors(c, k));
  }
  const CMat q = o * invsqrt;
  std::array<CVec, 4> aligned{};
  for (int b = 0; b < m; ++b) {
    CVec nv{};
    for (int a = 0; a < m; ++a)
      for (int r = 0; r < 4; ++r) nv[r] += cur.vec[idx[a]][r] * q(a, b);
    aligned[b] = nv;
  }
  for (int b = 0; b < m; ++b) cur.vec[idx[b]] = aligned[b];
}

FloquetSpectrum spectrum_impl(const SpinSystemParams& p, const SequenceSpec& seq,
                              const std::vector<double>& tau_grid, int jobs) {
  p.validate();
  FloquetSpectrum out;
  out.tau_s = tau_grid;

  std::vector<GridPoint> pts(tau_grid.size());
  parallel_for(tau_grid.size(), jobs, [&](std::size_t i) {
    const SegmentList seg = seq.compile_at(tau_grid[i], p);
    const UnitaryPhases up = unitary_phases(period_propagator(p, seg));
    for (int b = 0; b < 4; ++b) {
      pts[i].phase[b] = up.phases[b];
      pts[i].vec[b] = column(up.vectors, b);
    }
  });

  for (FloquetBranch& br : out.branches) {
    br.phase_rad.resize(tau_grid.size());
    br.winding.resize(tau_grid.size());
    br.label.resize(tau_grid.size());
    br.vec.resize(tau_grid.size());
  }

  std::array<double, 4> prev_phase{};
  std::array<int, 4> prev_wind{};
  std::array<CVec, 4> prev_vec{};

  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    GridPoint cur = pts[i];
    std::array<int, 4> assign{0, 1, 2, 3};  // branch b <- column assign[b]

    if (i > 0) {
      // Greedy best-overlap assignment of new columns to branches.
      std::array<std::array<double, 4>, 4> ov{};
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) ov[b][c] = std::abs(inner(prev_vec[b], cur.vec[c], 4));
      std::array<bool, 4> used_b{}, used_c{};
      for (int pick = 0; pick < 4; ++pick) {
        int bb = -1, bc = -1;
        double best = -1.0;
        for (int b = 0; b < 4; ++b) {
          if (used_b[b]) continue;
          for (int c = 0; c < 4; ++c) {
            if (used_c[c]) continue;
            if (ov[b][c] > best) {
              best = ov[b][c];
              bb = b;
              bc = c;
            }
          }
        }
        if (best <= 0.5)
          throw BranchTrackingLost(
              "branch tracking lost between tau grid points; refine the grid");
        assign[bb] = bc;
        used_b[bb] = true;
        used_c[bc] = true;
      }

      // Permute columns into branch order, then realign degenerate clusters
      // so true crossings do not scramble the tracked vectors.
      GridPoint perm;
      for (int b = 0; b < 4; ++b) {
        perm.phase[b] = cur.phase[assign[b]];
        perm.vec[b] = cur.vec[assign[b]];
      }
      cur = perm;
      std::vector<int> cluster;
      for (int b = 0; b < 4; ++b) {
        cluster.clear();
        cluster.push_back(b);
        for (int c = 0; c < 4; ++c)
          if (c != b && circle_gap(cur.phase[b], cur.phase[c]) < 1e-7) cluster.push_back(c);
        if (cluster.size() > 1 && cluster[0] == *std::min_element(cluster.begin(), cluster.end())) {
          std::sort(cluster.begin(), cluster.end());
          realign_cluster(prev_vec, cur, cluster);
        }
      }
    }

    for (int b = 0; b < 4; ++b) {
      int wind = 0;
      if (i > 0) {
        const double d = cur.phase[b] - prev_phase[b];
        wind = prev_wind[b];
        if (d > kPi) wind -= 1;
        if (d < -kPi) wind += 1;
      }
      out.branches[b].phase_rad[i] = cur.phase[b];
      out.branches[b].winding[i] = wind;
      out.branches[b].vec[i] = cur.vec[b];
      out.branches[b].label[i] = classify(cur.vec[b]);
      prev_phase[b] = cur.phase[b];
      prev_wind[b] = wind;
      prev_vec[b] = cur.vec[b];
    }
  }
  return out;
}

}  // namespace

FloquetSpectrum full_spectrum(const SpinSystemParams& p, const SequenceSpec& seq,
                              const std::vector<double>& tau_grid, int jobs) {
  return spectrum_impl(p, seq, tau_grid, jobs);
}

FloquetSpectrum unperturbed_spectrum(const SpinSystemParams& p, const SequenceSpec& seq,
                                     const std::vector<double>& tau_grid, int jobs) {
  return spectrum_impl(without_hyperfine(p), seq, tau_grid, jobs);
}

DipPrediction predict_dips(const SpinSystemParams& p, const SequenceSpec& seq,
                           int harmonic_k) {
  if (harmonic_k < 1) throw InvalidParams("harmonic_k must be >= 1");
  const double wl = p.omega_larmor();
  if (wl == 0.0) throw InvalidParams("predict_dips requires a nonzero Larmor frequency");
  const double target = (2.0 * harmonic_k - 1.0) * kPi;

  DipPrediction d;
  d.harmonic_k = harmonic_k;
  d.converged = true;

  for (int sgn : {+1, -1}) {
    double tau = target / wl;
    bool ok = false;
    int it = 0;
    double theta = 0.0;
    for (it = 1; it <= 200; ++it) {
      theta = std::abs(extract_theta(p, seq, tau));
      const double next = (target + sgn * theta) / wl;
      const double step = std::abs(next - tau);
      tau = next;
      if (step < 1e-15) {
        ok = true;
        break;
      }
    }
    if (sgn > 0) {
      d.tau_plus_s = tau;
      d.theta_at_dip_rad = theta;
    } else {
      d.tau_minus_s = tau;
    }
    d.iterations = std::max(d.iterations, it);
    d.converged = d.converged && ok;
  }
  return d;
}

namespace {

// Gap between two tracked branches at an off-grid tau: diagonalize, match
// each branch's stored eigenvector from the reference grid point, take the
// circle distance of the matched phases.
double matched_gap(const SpinSystemParams& p, const SequenceSpec& seq, double tau,
                   const CVec& va, const CVec& vb) {
  const SegmentList seg = seq.compile_at(tau, p);
  const UnitaryPhases up = unitary_phases(period_propagator(p, seg));
  int ia = 0, ib = 0;
  double ba = -1.0, bb = -1.0;
  for (int c = 0; c < 4; ++c) {
    const CVec w = column(up.vectors, c);
    const double oa = std::abs(inner(va, w, 4));
    const double ob = std::abs(inner(vb, w, 4));
    if (oa > ba) {
      ba = oa;
      ia = c;
    }
    if (ob > bb) {
      bb = ob;
      ib = c;
    }
  }
  if (ia == ib) {
    // Degenerate pair collapsed onto one column: pick the runner-up for b.
    double second = -1.0;
    int is = 0;
    for (int c = 0; c < 4; ++c) {
      if (c == ia) continue;
      const double ob = std::abs(inner(vb, column(up.vectors, c), 4));
      if (ob > second) {
        second = ob;
        is = c;
      }
    }
    ib = is;
  }
  return circle_gap(up.phases[ia], up.phases[ib]);
}

SymmetryLabel label_near(const FloquetBranch& br, std::size_t i) {
  const std::size_t n = br.label.size();
  for (std::size_t off = 0; off < n; ++off) {
    if (i >= off && br.label[i - off] != SymmetryLabel::Mixed) return br.label[i - off];
    if (i + off < n && br.label[i + off] != SymmetryLabel::Mixed) return br.label[i + off];
  }
  return SymmetryLabel::Mixed;
}

bool is_xplus(SymmetryLabel l) {
  return l == SymmetryLabel::XplusUp || l == SymmetryLabel::XplusDown;
}

}  // namespace

std::vector<CrossingInfo> find_crossings(const SpinSystemParams& p,
                                         const SequenceSpec& seq,
                                         const FloquetSpectrum& spec) {
  std::vector<CrossingInfo> out;
  const std::size_t n = spec.tau_s.size();
  if (n < 3) return out;

  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      const FloquetBranch& ba = spec.branches[a];
      const FloquetBranch& bb = spec.branches[b];
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double gm = circle_gap(ba.phase_rad[i - 1], bb.phase_rad[i - 1]);
        const double g0 = circle_gap(ba.phase_rad[i], bb.phase_rad[i]);
        const double gp = circle_gap(ba.phase_rad[i + 1], bb.phase_rad[i + 1]);
        if (!(g0 < 0.5 && g0 <= gm && g0 < gp)) continue;

        double lo = spec.tau_s[i - 1], hi = spec.tau_s[i + 1];
        const CVec va = ba.vec[i];
        const CVec vb = bb.vec[i];
        for (int it = 0; it < 100 && (hi - lo) > 1e-18; ++it) {
          const double m1 = lo + (hi - lo) / 3.0;
          const double m2 = hi - (hi - lo) / 3.0;
          if (matched_gap(p, seq, m1, va, vb) <= matched_gap(p, seq, m2, va, vb))
            hi = m2;
          else
            lo = m1;
        }
        CrossingInfo c;
        c.branch_a = a;
        c.branch_b = b;
        c.tau_s = 0.5 * (lo + hi);
        c.gap_rad = matched_gap(p, seq, c.tau_s, va, vb);
        c.same_electron_symmetry = is_xplus(label_near(ba, i)) == is_xplus(label_near(bb, i));
        out.push_back(c);
      }
    }

  std::sort(out.begin(), out.end(),
            [](const CrossingInfo& x, const CrossingInfo& y) { return x.tau_s < y.tau_s; });
  return out;
}

}  // namespace dnss
