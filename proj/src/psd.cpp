#include "rslimits/psd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rslimits/errors.hpp"

namespace rslimits {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + ": non-finite entries");
  }
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << "dimension mismatch: " << a.dim() << " vs " << b.dim();
    throw InputError(os.str());
  }
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m, double asym_tol) {
  if (m.rows() != m.cols()) {
    throw InputError("symmetric matrix must be square");
  }
  require_finite(m, "symmetric matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (m.size() > 0 && asym > asym_tol * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric (max |m_ij - m_ji| = " << asym << ")";
    throw InputError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(int d) { return symmetrized(Matrix::Zero(d, d)); }

SymMatrix SymMatrix::identity(int d) { return symmetrized(Matrix::Identity(d, d)); }

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InputError("symmetric matrix must be square");
  }
  require_finite(m, "symmetric matrix");
  SymMatrix out;
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  require_same_dim(*this, o);
  SymMatrix out;
  out.m_ = m_ + o.m_;
  return out;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  require_same_dim(*this, o);
  SymMatrix out;
  out.m_ = m_ - o.m_;
  return out;
}

SymMatrix SymMatrix::operator*(double s) const {
  SymMatrix out;
  out.m_ = m_ * s;
  return out;
}

PsdMatrix::PsdMatrix(const SymMatrix& m, double tol) : base_(m), tol_(tol) {
  if (!is_psd(m, tol)) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite (min eigenvalue "
       << min_eigenvalue(m) << ")";
    throw InputError(os.str());
  }
}

PsdMatrix PsdMatrix::zero(int d) { return PsdMatrix(SymMatrix::zero(d)); }

PsdMatrix PsdMatrix::identity(int d) { return PsdMatrix(SymMatrix::identity(d)); }

Vector vech(const SymMatrix& m) {
  const int d = m.dim();
  Vector v(d * (d + 1) / 2);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) v(k++) = m(i, j);
  }
  return v;
}

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

SymMatrix unvech(const Vector& v, int d) {
  if (v.size() != d * (d + 1) / 2) {
    throw InputError("unvech: length does not match dimension");
  }
  Matrix m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return SymMatrix::symmetrized(m);
}

Matrix duplication_matrix(int d) {
  if (d < 1) throw InputError("duplication_matrix: d must be >= 1");
  Matrix dup = Matrix::Zero(d * d, d * (d + 1) / 2);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      // vec index of (i, j) is i + j * d.
      dup(i + j * d, k) = 1.0;
      dup(j + i * d, k) = 1.0;
      ++k;
    }
  }
  return dup;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  require_finite(a, "kron");
  require_finite(b, "kron");
  const Eigen::Index p = b.rows();
  const Eigen::Index q = b.cols();
  Matrix out(a.rows() * p, a.cols() * q);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * p, j * q, p, q) = a(i, j) * b;
    }
  }
  return out;
}

Vector sym_eigenvalues(const SymMatrix& m) {
  if (m.dim() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed");
  }
  return es.eigenvalues();
}

double min_eigenvalue(const SymMatrix& m) { return sym_eigenvalues(m).minCoeff(); }

double spectral_norm(const SymMatrix& m) {
  return sym_eigenvalues(m).cwiseAbs().maxCoeff();
}

bool is_psd(const SymMatrix& m, double tol) {
  if (!m.mat().allFinite()) throw InputError("is_psd: non-finite entries");
  if (m.dim() == 0) return true;
  const Vector ev = sym_eigenvalues(m);
  const double norm = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -tol * std::max(1.0, norm);
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  require_same_dim(a, b);
  return is_psd(b - a, tol);
}

PsdMatrix project_psd(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed");
  }
  const Vector clipped = es.eigenvalues().cwiseMax(0.0);
  if (clipped == es.eigenvalues()) return PsdMatrix(m);
  const Matrix& v = es.eigenvectors();
  return PsdMatrix(SymMatrix::symmetrized(v * clipped.asDiagonal() * v.transpose()), 1e-12);
}

SymMatrix sqrt_psd(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = es.eigenvectors();
  return SymMatrix::symmetrized(v * root.asDiagonal() * v.transpose());
}

double trace_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

}  // namespace rslimits
