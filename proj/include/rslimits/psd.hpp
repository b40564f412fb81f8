#pragma once

// Matrix-cone primitives over symmetric d x d matrices.
//
// Conventions:
//   vec(M)   stacks the columns of M (column-major).
//   vech(M)  stacks the entries on or below the diagonal, column by column:
//            for d = 2, vech([[a, b], [b, c]]) = (a, b, c).
//   D_d      is the d^2 x d(d+1)/2 duplication matrix, D_d vech(M) = vec(M).

#include <Eigen/Dense>

namespace rslimits {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultPsdTol = 1e-9;

// Symmetric matrix with finite entries. Construction symmetrizes the input
// as (M + M^T) / 2 after checking the asymmetry is within `asym_tol`
// relative to max(1, max |M_ij|).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m, double asym_tol = 1e-9);

  static SymMatrix zero(int d);
  static SymMatrix identity(int d);
  // Symmetrizes without the asymmetry check (used for algebraic results that
  // are symmetric up to rounding).
  static SymMatrix symmetrized(const Matrix& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;
  friend SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

  bool operator==(const SymMatrix& o) const { return m_ == o.m_; }

 private:
  Matrix m_;
};

// Symmetric positive-semidefinite matrix; membership checked at construction
// with the relative tolerance rule of is_psd.
class PsdMatrix {
 public:
  PsdMatrix() = default;
  explicit PsdMatrix(const SymMatrix& m, double tol = kDefaultPsdTol);
  explicit PsdMatrix(const Matrix& m, double tol = kDefaultPsdTol)
      : PsdMatrix(SymMatrix(m), tol) {}

  static PsdMatrix zero(int d);
  static PsdMatrix identity(int d);

  int dim() const { return base_.dim(); }
  const SymMatrix& sym() const { return base_; }
  const Matrix& mat() const { return base_.mat(); }
  double tol() const { return tol_; }
  double operator()(int i, int j) const { return base_(i, j); }

  bool operator==(const PsdMatrix& o) const { return base_ == o.base_; }

 private:
  SymMatrix base_;
  double tol_ = kDefaultPsdTol;
};

Vector vech(const SymMatrix& m);
Vector vec(const Matrix& m);
// Inverse of vech.
SymMatrix unvech(const Vector& v, int d);

// Integer-valued 0/1 matrix.
Matrix duplication_matrix(int d);

Matrix kron(const Matrix& a, const Matrix& b);

// Eigenvalues (ascending) via the self-adjoint solver.
Vector sym_eigenvalues(const SymMatrix& m);
double min_eigenvalue(const SymMatrix& m);
double spectral_norm(const SymMatrix& m);

// True iff lambda_min(m) >= -tol * max(1, ||m||_2).
bool is_psd(const SymMatrix& m, double tol = kDefaultPsdTol);
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol = kDefaultPsdTol);

// Eigenvalue clipping at zero.
PsdMatrix project_psd(const SymMatrix& m);

// Symmetric PSD square root via eigendecomposition. Negative eigenvalues
// within rounding are clipped.
SymMatrix sqrt_psd(const SymMatrix& m);

// Tr[a b] computed elementwise as sum_ij a_ij b_ji.
double trace_product(const Matrix& a, const Matrix& b);

}  // namespace rslimits
