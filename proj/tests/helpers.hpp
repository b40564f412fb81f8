#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "rslimits/potential.hpp"

namespace testing {

using rslimits::Matrix;
using rslimits::ModelSpec;
using rslimits::PsdMatrix;
using rslimits::Prior;
using rslimits::SymMatrix;
using rslimits::Vector;

inline PsdMatrix scalar_psd(double v) { return PsdMatrix(Matrix::Constant(1, 1, v)); }

inline ModelSpec scalar_model(double b, double s, Prior prior) {
  ModelSpec m;
  m.d = 1;
  m.couplings = {Matrix::Constant(1, 1, b)};
  m.s = scalar_psd(s);
  m.prior = std::move(prior);
  return m;
}

inline Prior gaussian_prior(int d) { return Prior::gaussian(PsdMatrix::identity(d)); }

inline Prior rademacher_product(int d) {
  return Prior::product(std::vector<Prior>(static_cast<std::size_t>(d), Prior::rademacher()));
}

inline Prior scalar_discrete(std::vector<double> atoms, std::vector<double> weights) {
  std::vector<Vector> a;
  for (double x : atoms) a.push_back(Vector::Constant(1, x));
  return Prior::discrete(a, Eigen::Map<Vector>(weights.data(), static_cast<Eigen::Index>(weights.size())));
}

inline Matrix random_matrix(std::mt19937_64& rng, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) m(i, j) = u(rng);
  }
  return m;
}

inline SymMatrix random_sym(std::mt19937_64& rng, int d) {
  return SymMatrix::symmetrized(random_matrix(rng, d, -1.0, 1.0));
}

inline PsdMatrix random_psd(std::mt19937_64& rng, int d, double scale = 1.0) {
  const Matrix a = random_matrix(rng, d, -1.0, 1.0);
  return PsdMatrix(SymMatrix::symmetrized(scale * a * a.transpose() / d));
}

// Random PSD q with q <= rho: rho^{1/2} C rho^{1/2}, 0 <= C <= I.
inline PsdMatrix random_q_in_interval(std::mt19937_64& rng, const PsdMatrix& rho) {
  const int d = rho.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(random_sym(rng, d).mat());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector ev(d);
  for (int i = 0; i < d; ++i) ev(i) = u(rng);
  const Matrix c = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Matrix root = rslimits::sqrt_psd(rho.sym()).mat();
  return rslimits::project_psd(SymMatrix::symmetrized(root * c * root));
}

// Scalar channel I(X; sqrt(r) X + Z) for a discrete prior, computed as
// h(Y) - h(Z) with adaptive Gauss-Kronrod over the output density. Shares no
// code with the library's quadrature.
inline double scalar_mi_reference(const std::vector<double>& atoms, const std::vector<double>& w,
                                  double r) {
  if (r <= 0.0) return 0.0;
  const double a = std::sqrt(r);
  auto density = [&](double y) {
    double p = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const double t = y - a * atoms[k];
      p += w[k] * std::exp(-0.5 * t * t);
    }
    return p / std::sqrt(2.0 * M_PI);
  };
  double lo = 0.0;
  double hi = 0.0;
  for (double x : atoms) {
    lo = std::min(lo, a * x);
    hi = std::max(hi, a * x);
  }
  auto integrand = [&](double y) {
    const double p = density(y);
    return p > 0.0 ? -p * std::log(p) : 0.0;
  };
  double h = 0.0;
  // Piecewise to keep each panel smooth relative to the mixture bumps.
  const double step = 1.0;
  for (double y = lo - 14.0; y < hi + 14.0; y += step) {
    h += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, y, y + step, 15, 1e-13);
  }
  return h - 0.5 * std::log(2.0 * M_PI * M_E);
}

// Minimizes a scalar function on [lo, hi]: dense grid, then Brent around the best cell.
template <typename F>
std::pair<double, double> grid_minimize(F&& f, double lo, double hi, int points) {
  double best_x = lo;
  double best_v = f(lo);
  for (int i = 1; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  const double cell = (hi - lo) / (points - 1);
  const auto res = boost::math::tools::brent_find_minima(
      f, std::max(lo, best_x - cell), std::min(hi, best_x + cell), 52);
  if (res.second < best_v) return {res.first, res.second};
  return {best_x, best_v};
}

}  // namespace testing
