#pragma once

#include <array>
#include <complex>

#include "dnss/errors.hpp"

namespace dnss {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Dense row-major complex matrix. Every object in this problem lives in a
// Hilbert space of dimension 2 (one spin) or 4 (electron x nucleus), so
// storage is a fixed-capacity array and dim is restricted to {1, 2, 3, 4}.
class CMat {
 public:
  CMat() : CMat(2) {}
  explicit CMat(int dim);

  static CMat identity(int dim);

  int dim() const { return dim_; }

  cplx& operator()(int r, int c) { return a_[r * dim_ + c]; }
  const cplx& operator()(int r, int c) const { return a_[r * dim_ + c]; }

  CMat adjoint() const;
  cplx trace() const;
  double norm() const;  // Frobenius norm

  CMat& operator+=(const CMat& o);
  CMat& operator-=(const CMat& o);
  CMat& operator*=(cplx s);

  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(cplx s, CMat a) { return a *= s; }
  friend CMat operator*(const CMat& a, const CMat& b);

 private:
  int dim_;
  std::array<cplx, 16> a_{};
};

// Frobenius distance ||a - b||.
double distance(const CMat& a, const CMat& b);

// Column vector in the same fixed-capacity style; entries beyond the active
// dimension stay zero.
using CVec = std::array<cplx, 4>;

cplx inner(const CVec& u, const CVec& v, int n);  // <u|v>, conjugate-linear in u
double vec_norm(const CVec& v, int n);
CVec mat_vec(const CMat& m, const CVec& v);
CVec column(const CMat& m, int c);
void set_column(CMat& m, int c, const CVec& v);

struct HermEig {
  int n = 0;
  std::array<double, 4> values{};  // ascending
  CMat vectors;                    // column i pairs with values[i]
};

struct UnitaryPhases {
  int n = 0;
  std::array<double, 4> phases{};  // in (-pi, pi], ascending
  CMat vectors;                    // column i satisfies U v = exp(-i phase) v
};

struct AxisAngle {
  double angle = 0.0;              // in [0, pi]
  std::array<double, 3> axis{};    // unit vector; {1,0,0} when angle == 0
  double global_phase = 0.0;       // U = exp(-i gp) exp(-i angle/2 axis.sigma)
};

enum class Keep { Electron, Nuclear };

// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
// rotations. Eigenvalues come back ascending; each eigenvector is unit norm
// with its first nonzero component real and positive. Residuals satisfy
// ||H v - w v|| < 1e-12 * ||H||. Throws NotHermitian, Diverged.
HermEig herm_eig(const CMat& h);

// exp(-i h t) for Hermitian h, via the eigendecomposition. t == 0 returns
// the exact identity. Throws NotHermitian.
CMat expm_i(const CMat& h, double t);

// Eigenphases and eigenvectors of a unitary, via the Hermitian pencil
// (U+U')/2 + mu (U-U')/(2i). Phases lie in (-pi, pi] and come back
// ascending; each eigenvector has its largest-modulus component real and
// positive. Residuals satisfy ||U v - exp(-i phase) v|| < 1e-10. Throws
// NotUnitary, Diverged.
UnitaryPhases unitary_phases(const CMat& u);

// Decompose a 2x2 unitary as exp(-i gp) exp(-i angle/2 n.sigma) with
// angle in [0, pi]. Throws NotUnitary.
AxisAngle su2_axis_angle(const CMat& u);

// Kronecker product; requires a.dim() * b.dim() <= 4.
CMat kron(const CMat& a, const CMat& b);

// Partial trace of a 4x4 operator over one factor of C2 x C2 (electron is
// the first factor). For density matrices the caller's trace is preserved;
// throws BadTrace if |Tr rho - 1| > 1e-10.
CMat partial_trace(const CMat& rho, Keep keep);

}  // namespace dnss
