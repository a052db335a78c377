#include "dnss/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dnss {

CMat::CMat(int dim) : dim_(dim) {
  if (dim < 1 || dim > 4) throw InvalidParams("CMat: dim must be in [1, 4]");
}

CMat CMat::identity(int dim) {
  CMat m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

CMat CMat::adjoint() const {
  CMat m(dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) m(r, c) = std::conj((*this)(c, r));
  return m;
}

cplx CMat::trace() const {
  cplx t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double CMat::norm() const {
  double s = 0.0;
  for (int i = 0; i < dim_ * dim_; ++i) s += std::norm(a_[i]);
  return std::sqrt(s);
}

CMat& CMat::operator+=(const CMat& o) {
  if (o.dim_ != dim_) throw InvalidParams("CMat: dimension mismatch");
  for (int i = 0; i < dim_ * dim_; ++i) a_[i] += o.a_[i];
  return *this;
}

CMat& CMat::operator-=(const CMat& o) {
  if (o.dim_ != dim_) throw InvalidParams("CMat: dimension mismatch");
  for (int i = 0; i < dim_ * dim_; ++i) a_[i] -= o.a_[i];
  return *this;
}

CMat& CMat::operator*=(cplx s) {
  for (int i = 0; i < dim_ * dim_; ++i) a_[i] *= s;
  return *this;
}

CMat operator*(const CMat& a, const CMat& b) {
  if (a.dim_ != b.dim_) throw InvalidParams("CMat: dimension mismatch");
  const int n = a.dim_;
  CMat m(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      cplx s = 0.0;
      for (int k = 0; k < n; ++k) s += a(r, k) * b(k, c);
      m(r, c) = s;
    }
  return m;
}

double distance(const CMat& a, const CMat& b) { return (a - b).norm(); }

cplx inner(const CVec& u, const CVec& v, int n) {
  cplx s = 0.0;
  for (int i = 0; i < n; ++i) s += std::conj(u[i]) * v[i];
  return s;
}

double vec_norm(const CVec& v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::norm(v[i]);
  return std::sqrt(s);
}

CVec mat_vec(const CMat& m, const CVec& v) {
  const int n = m.dim();
  CVec w{};
  for (int r = 0; r < n; ++r) {
    cplx s = 0.0;
    for (int c = 0; c < n; ++c) s += m(r, c) * v[c];
    w[r] = s;
  }
  return w;
}

CVec column(const CMat& m, int c) {
  CVec v{};
  for (int r = 0; r < m.dim(); ++r) v[r] = m(r, c);
  return v;
}

void set_column(CMat& m, int c, const CVec& v) {
  for (int r = 0; r < m.dim(); ++r) m(r, c) = v[r];
}

namespace {

double offdiag_norm(const CMat& a) {
  double s = 0.0;
  for (int r = 0; r < a.dim(); ++r)
    for (int c = 0; c < a.dim(); ++c)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

void require_hermitian(const CMat& h, const char* who) {
  const double scale = std::max(h.norm(), 1e-300);
  if (distance(h, h.adjoint()) > 1e-10 * scale)
    throw NotHermitian(std::string(who) + ": matrix is not Hermitian");
}

// Normalize column c of m so its first component of modulus > tol is real
// and positive.
void fix_phase_first_nonzero(CMat& m, int c) {
  for (int r = 0; r < m.dim(); ++r) {
    const cplx v = m(r, c);
    if (std::abs(v) > 1e-8) {
      const cplx ph = std::conj(v) / std::abs(v);
      for (int k = 0; k < m.dim(); ++k) m(k, c) *= ph;
      return;
    }
  }
}

// Normalize column c of m so its largest-modulus component is real and
// positive (lowest index wins ties by strict comparison).
void fix_phase_largest(CMat& m, int c) {
  int best = 0;
  double mag = -1.0;
  for (int r = 0; r < m.dim(); ++r) {
    const double a = std::abs(m(r, c));
    if (a > mag) {
      mag = a;
      best = r;
    }
  }
  if (mag <= 0.0) return;
  const cplx ph = std::conj(m(best, c)) / mag;
  for (int k = 0; k < m.dim(); ++k) m(k, c) *= ph;
}

}  // namespace

HermEig herm_eig(const CMat& h) {
  require_hermitian(h, "herm_eig");
  const int n = h.dim();

  // Work on the exactly symmetrized matrix so roundoff asymmetry cannot
  // leak into the rotations.
  CMat a = 0.5 * (h + h.adjoint());
  CMat v = CMat::identity(n);
  const double scale = std::max(a.norm(), 1e-300);

  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    if (offdiag_norm(a) <= 1e-14 * scale) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double r = std::abs(apq);
        if (r <= 1e-30 * scale) continue;
        const double alpha = std::arg(apq);
        const double app = std::real(a(p, p));
        const double aqq = std::real(a(q, q));
        const double tau = (aqq - app) / (2.0 * r);
        const double t =
            (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx eminus = std::polar(1.0, -alpha);
        CMat k = CMat::identity(n);
        k(p, p) = c;
        k(p, q) = s;
        k(q, p) = -s * eminus;
        k(q, q) = c * eminus;
        a = k.adjoint() * a * k;
        v = v * k;
      }
  }
  if (!converged && offdiag_norm(a) > 1e-14 * scale)
    throw Diverged("herm_eig: Jacobi sweeps did not converge");

  std::array<int, 4> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](int i, int j) { return std::real(a(i, i)) < std::real(a(j, j)); });

  HermEig e;
  e.n = n;
  e.vectors = CMat(n);
  for (int i = 0; i < n; ++i) {
    e.values[i] = std::real(a(order[i], order[i]));
    set_column(e.vectors, i, column(v, order[i]));
    fix_phase_first_nonzero(e.vectors, i);
  }

  const double hscale = h.norm();
  for (int i = 0; i < n; ++i) {
    CVec vi = column(e.vectors, i);
    CVec hv = mat_vec(h, vi);
    for (int r = 0; r < n; ++r) hv[r] -= e.values[i] * vi[r];
    if (vec_norm(hv, n) > 1e-12 * std::max(hscale, 1e-300))
      throw Diverged("herm_eig: residual check failed");
  }
  return e;
}

CMat expm_i(const CMat& h, double t) {
  require_hermitian(h, "expm_i");
  if (t == 0.0) return CMat::identity(h.dim());
  const HermEig e = herm_eig(h);
  const int n = h.dim();
  CMat u(n);
  for (int k = 0; k < n; ++k) {
    const cplx ph = std::polar(1.0, -e.values[k] * t);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        u(r, c) += e.vectors(r, k) * ph * std::conj(e.vectors(c, k));
  }
  return u;
}

namespace {

// One diagonalization attempt for unitary_phases at a fixed pencil weight.
// Returns true and fills (vecs, lambdas) when every eigenpair meets the
// residual budget.
bool pencil_attempt(const CMat& u, const CMat& ha, const CMat& hb, double mu,
                    CMat& vecs, std::array<cplx, 4>& lambdas) {
  const int n = u.dim();
  const CMat c = ha + cplx(mu) * hb;
  HermEig e = herm_eig(c);
  vecs = e.vectors;

  // Degenerate pencil clusters are resolved against hb restricted to the
  // cluster: two distinct unitary eigenphases cannot collide in both the
  // cosine and sine combinations at once.
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && e.values[j + 1] - e.values[j] <= 1e-6) ++j;
    const int m = j - i + 1;
    if (m >= 2) {
      CMat bsub(m);
      std::array<CVec, 4> cols{};
      for (int a = 0; a < m; ++a) cols[a] = column(vecs, i + a);
      for (int a = 0; a < m; ++a) {
        const CVec bv = mat_vec(hb, cols[a]);
        for (int b = 0; b < m; ++b) {
          cplx s = 0.0;
          for (int r = 0; r < n; ++r) s += std::conj(cols[b][r]) * bv[r];
          bsub(b, a) = s;
        }
      }
      const HermEig f = herm_eig(0.5 * (bsub + bsub.adjoint()));
      for (int k = 0; k < m; ++k) {
        CVec nv{};
        for (int a = 0; a < m; ++a)
          for (int r = 0; r < n; ++r) nv[r] += cols[a][r] * f.vectors(a, k);
        set_column(vecs, i + k, nv);
      }
    }
    i = j + 1;
  }

  for (int k = 0; k < n; ++k) {
    const CVec vk = column(vecs, k);
    const CVec w = mat_vec(u, vk);
    const cplx lam = inner(vk, w, n);
    CVec resid = w;
    for (int r = 0; r < n; ++r) resid[r] -= lam * vk[r];
    if (vec_norm(resid, n) > 5e-11) return false;
    lambdas[k] = lam;
  }
  return true;
}

}  // namespace

UnitaryPhases unitary_phases(const CMat& u) {
  const int n = u.dim();
  if (distance(u.adjoint() * u, CMat::identity(n)) > 1e-10)
    throw NotUnitary("unitary_phases: matrix is not unitary");

  const CMat ha = 0.5 * (u + u.adjoint());
  const CMat hb = cplx(0.0, -0.5) * (u - u.adjoint());

  CMat vecs(n);
  std::array<cplx, 4> lambdas{};
  if (!pencil_attempt(u, ha, hb, 0.6180339887, vecs, lambdas) &&
      !pencil_attempt(u, ha, hb, 1.7320508075688772, vecs, lambdas))
    throw Diverged("unitary_phases: pencil diagonalization failed");

  std::array<double, 4> phases{};
  for (int k = 0; k < n; ++k) {
    double phi = -std::arg(lambdas[k] / std::abs(lambdas[k]));
    if (phi <= -kPi) phi += kTwoPi;
    if (phi > kPi) phi -= kTwoPi;
    phases[k] = phi;
  }

  std::array<int, 4> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](int i, int j) { return phases[i] < phases[j]; });

  UnitaryPhases r;
  r.n = n;
  r.vectors = CMat(n);
  for (int k = 0; k < n; ++k) {
    r.phases[k] = phases[order[k]];
    set_column(r.vectors, k, column(vecs, order[k]));
    fix_phase_largest(r.vectors, k);
  }

  for (int k = 0; k < n; ++k) {
    const CVec vk = column(r.vectors, k);
    CVec resid = mat_vec(u, vk);
    const cplx lam = std::polar(1.0, -r.phases[k]);
    for (int i = 0; i < n; ++i) resid[i] -= lam * vk[i];
    if (vec_norm(resid, n) > 1e-10)
      throw Diverged("unitary_phases: residual check failed");
  }
  return r;
}

AxisAngle su2_axis_angle(const CMat& u) {
  if (u.dim() != 2) throw InvalidParams("su2_axis_angle: dim must be 2");
  if (distance(u.adjoint() * u, CMat::identity(2)) > 1e-10)
    throw NotUnitary("su2_axis_angle: matrix is not unitary");

  // u = exp(-i gp) v with det(v) = 1, so gp = -arg(det)/2.
  const cplx det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  double gp = -0.5 * std::arg(det);
  const CMat v = std::polar(1.0, gp) * u;  // special unitary up to roundoff

  const double ctr = 0.5 * std::real(v(0, 0) + v(1, 1));

  // v = cos(angle/2) - i sin(angle/2) (n . sigma)
  std::array<double, 3> sn{
      0.5 * std::real(cplx(0.0, 1.0) * (v(0, 1) + v(1, 0))),
      0.5 * std::real(v(1, 0) - v(0, 1)),
      0.5 * std::real(cplx(0.0, 1.0) * (v(0, 0) - v(1, 1)))};
  const double s = std::sqrt(sn[0] * sn[0] + sn[1] * sn[1] + sn[2] * sn[2]);
  // atan2 keeps full precision where acos(ctr) would lose half its digits.
  const double angle = 2.0 * std::atan2(s, ctr);  // in [0, 2*pi]

  AxisAngle r;
  if (s < 1e-12) {
    r.angle = 0.0;
    r.axis = {1.0, 0.0, 0.0};
    r.global_phase = (ctr < 0.0) ? gp + kPi : gp;
  } else {
    r.axis = {sn[0] / s, sn[1] / s, sn[2] / s};
    r.angle = angle;
    r.global_phase = gp;
    if (angle > kPi) {
      r.angle = kTwoPi - angle;
      for (double& x : r.axis) x = -x;
      r.global_phase = gp + kPi;
    }
  }
  if (r.global_phase > kPi) r.global_phase -= kTwoPi;
  if (r.global_phase <= -kPi) r.global_phase += kTwoPi;
  return r;
}

CMat kron(const CMat& a, const CMat& b) {
  const int da = a.dim(), db = b.dim();
  if (da * db > 4) throw InvalidParams("kron: product dimension exceeds 4");
  CMat m(da * db);
  for (int r1 = 0; r1 < da; ++r1)
    for (int c1 = 0; c1 < da; ++c1)
      for (int r2 = 0; r2 < db; ++r2)
        for (int c2 = 0; c2 < db; ++c2)
          m(r1 * db + r2, c1 * db + c2) = a(r1, c1) * b(r2, c2);
  return m;
}

CMat partial_trace(const CMat& rho, Keep keep) {
  if (rho.dim() != 4) throw InvalidParams("partial_trace: dim must be 4");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-10)
    throw BadTrace("partial_trace: trace is not 1");
  CMat m(2);
  if (keep == Keep::Electron) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        m(i, j) = rho(i * 2 + 0, j * 2 + 0) + rho(i * 2 + 1, j * 2 + 1);
  } else {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        m(i, j) = rho(0 * 2 + i, 0 * 2 + j) + rho(1 * 2 + i, 1 * 2 + j);
  }
  return m;
}

}  // namespace dnss
