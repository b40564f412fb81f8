#include "rslimits/rotinv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "rslimits/errors.hpp"

namespace rslimits {

void SpectralDistribution::validate() const {
  if (atoms.empty()) throw InputError("tau: at least one atom required");
  if (atoms.size() != weights.size()) throw InputError("tau: atoms and weights differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i]) || atoms[i] < 0.0) {
      throw InputError("tau.atoms: eigenvalues must be finite and nonnegative");
    }
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw InputError("tau.weights: weights must be finite and nonnegative");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("tau.weights: weights must sum to 1");
}

void RotInvModel::validate() const {
  if (!(std::isfinite(alpha) && alpha > 0.0)) throw InputError("rotinv: alpha must be > 0");
  if (!(std::isfinite(lambda) && lambda > 0.0)) throw InputError("rotinv: lambda must be > 0");
  if (prior.dim() != 1) throw InputError("rotinv: prior must be scalar");
  tau.validate();
}

double r_transform(const RotInvModel& m, double u) {
  if (!(u >= 0.0)) throw InputError("r_transform: u must be >= 0");
  double total = 0.0;
  for (std::size_t i = 0; i < m.tau.atoms.size(); ++i) {
    const double x = m.tau.atoms[i];
    total += m.tau.weights[i] * x / (1.0 + u * x);
  }
  return m.alpha * total;
}

double integrated_r(const RotInvModel& m, double a) {
  if (!(a >= 0.0)) throw InputError("integrated_r: a must be >= 0");
  double total = 0.0;
  for (std::size_t i = 0; i < m.tau.atoms.size(); ++i) {
    total += m.tau.weights[i] * std::log1p(a * m.tau.atoms[i]);
  }
  return m.alpha * total;
}

namespace {

PsdMatrix scalar(double v) { return PsdMatrix(Matrix::Constant(1, 1, v)); }

double prior_rho(const Prior& p) { return second_moment(p).mat()(0, 0); }

// Fixed-point map E -> mmse(lambda R(-E lambda)).
double se_map(const RotInvModel& m, double e, const QuadratureScheme& quad) {
  return scalar_mmse(m.prior, m.lambda * r_transform(m, e * m.lambda), quad);
}

}  // namespace

double scalar_mmse(const Prior& p, double r, const QuadratureScheme& quad) {
  return mmse_matrix(p, PsdMatrix::zero(1), scalar(r), quad).mat()(0, 0);
}

double i_rs(const RotInvModel& m, double e, double r, const QuadratureScheme& quad) {
  const double rho = prior_rho(m.prior);
  if (!(e >= 0.0 && e <= rho * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "i_rs: E = " << e << " outside [0, " << rho << "]";
    throw InputError(os.str());
  }
  if (!(r >= 0.0)) throw InputError("i_rs: r must be >= 0");
  return mutual_information(m.prior, PsdMatrix::zero(1), scalar(r), quad) +
         0.5 * integrated_r(m, e * m.lambda) - 0.5 * r * e;
}

double sup_over_e(const RotInvModel& m, double r, const QuadratureScheme& quad, double* argmax) {
  const double rho = prior_rho(m.prior);
  // d/dE i_RS = (lambda R(-E lambda) - r) / 2, decreasing in E.
  auto slope = [&](double e) { return m.lambda * r_transform(m, e * m.lambda) - r; };
  double e_best;
  if (slope(0.0) <= 0.0) {
    e_best = 0.0;
  } else if (slope(rho) >= 0.0) {
    e_best = rho;
  } else {
    double lo = 0.0;
    double hi = rho;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * rho; ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    e_best = 0.5 * (lo + hi);
  }
  if (argmax != nullptr) *argmax = e_best;
  return i_rs(m, e_best, r, quad);
}

std::vector<RotInvFixedPoint> state_evolution(const RotInvModel& m, const SolveSettings& settings,
                                              const QuadratureScheme& quad) {
  m.validate();
  settings.validate();
  const double rho = prior_rho(m.prior);
  auto gap = [&](double e) { return e - se_map(m, e, quad); };

  std::vector<RotInvFixedPoint> found;
  auto record = [&](double e, const std::string& origin, bool converged) {
    for (const RotInvFixedPoint& f : found) {
      if (std::abs(f.e - e) < 1e-7) return;
    }
    RotInvFixedPoint fp;
    fp.e = e;
    fp.r = m.lambda * r_transform(m, e * m.lambda);
    fp.residual = std::abs(gap(e));
    fp.value = i_rs(m, std::clamp(e, 0.0, rho), fp.r, quad);
    fp.origin = origin;
    fp.converged = converged && fp.residual <= 1e-9;
    found.push_back(fp);
  };

  // Sign changes of E - mmse(...) on a coarse grid, refined by bisection.
  constexpr int kGrid = 200;
  double prev_e = 0.0;
  double prev_g = gap(0.0);
  if (prev_g == 0.0) record(0.0, "bracket", true);
  for (int j = 1; j <= kGrid; ++j) {
    const double e = rho * j / kGrid;
    const double g = gap(e);
    if (g == 0.0) {
      record(e, "bracket", true);
    } else if ((prev_g < 0.0 && g > 0.0) || (prev_g > 0.0 && g < 0.0)) {
      double lo = prev_e;
      double hi = e;
      const bool rising = prev_g < 0.0;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * rho; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = gap(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        ((gm < 0.0) == rising ? lo : hi) = mid;
      }
      record(0.5 * (lo + hi), "bracket", true);
    }
    prev_e = e;
    prev_g = g;
  }

  const std::pair<const char*, double> inits[] = {{"informative", 1e-3 * rho}, {"uninformative", rho}};
  for (const auto& [label, e0] : inits) {
    double e = e0;
    bool converged = false;
    for (int it = 0; it < settings.max_iters; ++it) {
      const double target = se_map(m, e, quad);
      const double res = std::abs(target - e);
      e = (1.0 - settings.damping) * e + settings.damping * target;
      if (res <= settings.tol) {
        converged = true;
        break;
      }
    }
    record(e, label, converged);
  }
  std::sort(found.begin(), found.end(),
            [](const RotInvFixedPoint& a, const RotInvFixedPoint& b) { return a.e < b.e; });
  return found;
}

double infsup_grid(const RotInvModel& m, double r_max, int r_points, int e_points,
                   const QuadratureScheme& quad, Exec exec) {
  m.validate();
  if (r_points < 2 || e_points < 2 || !(r_max > 0.0)) {
    throw InputError("infsup_grid: need at least 2 points per axis and r_max > 0");
  }
  const double rho = prior_rho(m.prior);
  std::vector<double> shannon(e_points);
  for (int j = 0; j < e_points; ++j) {
    shannon[j] = 0.5 * integrated_r(m, rho * j / (e_points - 1) * m.lambda);
  }
  std::vector<double> row_max(r_points);
  auto row = [&](int i) {
    const double r = r_max * i / (r_points - 1);
    const double mi = mutual_information(m.prior, PsdMatrix::zero(1), scalar(r), quad, Exec::Serial);
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < e_points; ++j) {
      const double e = rho * j / (e_points - 1);
      best = std::max(best, mi + shannon[j] - 0.5 * r * e);
    }
    row_max[i] = best;
  };
  if (exec == Exec::Serial) {
    for (int i = 0; i < r_points; ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < r_points; ++i) row(i);
  }
  return *std::min_element(row_max.begin(), row_max.end());
}

RotInvResult solve_rotinv(const RotInvModel& m, const SolveSettings& settings,
                          const QuadratureScheme& quad, int grid_points) {
  m.validate();
  RotInvResult out;
  out.fixed_points = state_evolution(m, settings, quad);
  if (out.fixed_points.empty()) throw NumericalError("solve_rotinv: no fixed point found");

  // sup_E i_RS is minimized either at a fixed point or at r = 0; it
  // increases for r beyond lambda R(0).
  double e0 = 0.0;
  out.value = sup_over_e(m, 0.0, quad, &e0);
  out.e_star = e0;
  out.r_star = 0.0;
  out.at_boundary = true;
  out.sup_over_fixed_points = -std::numeric_limits<double>::infinity();
  for (const RotInvFixedPoint& fp : out.fixed_points) {
    out.sup_over_fixed_points = std::max(out.sup_over_fixed_points, fp.value);
    double e = 0.0;
    const double h = sup_over_e(m, fp.r, quad, &e);
    if (h < out.value + 1e-14) {
      out.value = h;
      out.e_star = e;
      out.r_star = fp.r;
      out.at_boundary = false;
    }
  }

  if (grid_points > 1) {
    const double r_max = std::max(4.0, 1.25 * m.lambda * r_transform(m, 0.0));
    out.grid_value = infsup_grid(m, r_max, grid_points, grid_points, quad);
    out.grid_gap = std::abs(out.value - out.grid_value);
  }
  return out;
}

SpectralDistribution empirical_spectrum(int factors, int n, double alpha, std::uint64_t seed) {
  if (factors < 0 || factors > 5) throw InputError("empirical_spectrum: factors must be in [0, 5]");
  if (n < 1 || n > 2000) throw InputError("empirical_spectrum: n must be in [1, 2000]");
  if (!(std::isfinite(alpha) && alpha > 0.0)) throw InputError("empirical_spectrum: alpha must be > 0");

  SpectralDistribution out;
  out.weights.assign(n, 1.0 / n);
  if (factors == 0) {
    out.atoms.assign(n, 1.0);
    return out;
  }
  const auto rows = std::max<long>(1, std::lround(alpha * n));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Matrix g(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) g(i, j) = normal(rng);
    }
    return g;
  };
  Matrix phi = gaussian(rows, n);
  for (int k = 1; k < factors; ++k) phi = gaussian(rows, rows) * phi;
  const Matrix t = phi.transpose() * phi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(t, Eigen::EigenvaluesOnly);
  out.atoms.resize(n);
  for (int i = 0; i < n; ++i) out.atoms[i] = std::max(0.0, es.eigenvalues()(i));
  return out;
}

}  // namespace rslimits
