#pragma once

// Replica formula for random linear estimation y = sqrt(lambda) Phi x + z with
// a right-rotationally invariant Phi = Phi' W. The spectral law tau of the
// eigenvalues of Phi'^T Phi' / n enters only through the R-transform
//   R(-u) = alpha * E[x / (1 + u x)],  x ~ tau,
// and its antiderivative alpha * E[ln(1 + a x)].

#include <cstdint>
#include <string>
#include <vector>

#include "rslimits/channel.hpp"
#include "rslimits/solver.hpp"

namespace rslimits {

struct SpectralDistribution {
  std::vector<double> atoms;    // nonnegative
  std::vector<double> weights;  // sum to one

  // Throws InputError on negative atoms or a bad weight vector.
  void validate() const;
  bool operator==(const SpectralDistribution&) const = default;
};

struct RotInvModel {
  double alpha = 1.0;
  double lambda = 1.0;
  Prior prior;  // scalar
  SpectralDistribution tau;

  void validate() const;
};

double r_transform(const RotInvModel& m, double u);
double integrated_r(const RotInvModel& m, double a);

// i_RS(E, r) = I(X; sqrt(r) X + Z) + 1/2 integrated_r(E lambda) - r E / 2.
// Requires 0 <= e <= rho = E[X^2] and r >= 0.
double i_rs(const RotInvModel& m, double e, double r, const QuadratureScheme& quad);

// Scalar MMSE of X from sqrt(r) X + Z.
double scalar_mmse(const Prior& p, double r, const QuadratureScheme& quad);

struct RotInvFixedPoint {
  double e = 0.0;
  double r = 0.0;
  double value = 0.0;
  double residual = 0.0;  // |E - mmse(r)| with r = lambda R(-E lambda)
  std::string origin;     // init label or "bracket"
  bool converged = false;
};

// Solutions of E = mmse(r), r = lambda R(-E lambda). Damped iteration from
// E0 in {rho, 1e-3 rho} plus sign-change bracketing on a 200-point E grid.
// Duplicates (|dE| < 1e-7) are merged; bracketed roots are kept in preference.
std::vector<RotInvFixedPoint> state_evolution(const RotInvModel& m, const SolveSettings& settings,
                                              const QuadratureScheme& quad);

struct RotInvResult {
  double value = 0.0;  // inf_r sup_E i_RS
  double e_star = 0.0;
  double r_star = 0.0;
  bool at_boundary = false;  // minimizer is r = 0 rather than a member of the set
  double sup_over_fixed_points = 0.0;
  double grid_value = 0.0;   // inf_r max_E over the cross-check grid
  double grid_gap = 0.0;     // |value - grid_value|
  std::vector<RotInvFixedPoint> fixed_points;
};

// sup over E in [0, rho] of i_RS(E, r); concave in E, so the maximizer solves
// lambda R(-E lambda) = r or sits on the boundary.
double sup_over_e(const RotInvModel& m, double r, const QuadratureScheme& quad,
                  double* argmax = nullptr);

// Grid cross-check of inf_r max_E i_RS on [0, r_max] x [0, rho].
double infsup_grid(const RotInvModel& m, double r_max, int r_points, int e_points,
                   const QuadratureScheme& quad, Exec exec = Exec::Parallel);

RotInvResult solve_rotinv(const RotInvModel& m, const SolveSettings& settings,
                          const QuadratureScheme& quad, int grid_points = 1000);

// Eigenvalues of Phi'^T Phi' with Phi' the product of `factors` independent
// Gaussian matrices (the first factors - 1 are m x m, the last m x n, entries
// N(0, 1/n), m = round(alpha n)). factors = 0 gives n unit atoms.
SpectralDistribution empirical_spectrum(int factors, int n, double alpha, std::uint64_t seed);

}  // namespace rslimits
