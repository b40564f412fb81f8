#pragma once

// Solvers for the variational formula f(S) = inf_r sup_q I(r, q).
//
// The primary route is the single-letter form
//   f(S) = inf_q { I_S(r*(q)) + 1/2 sum_l Tr[B_l^T (rho - q) B_l (rho - q)] },
// explored through the damped state-evolution map
//   q <- (1 - beta) q + beta * Proj_psd(rho - M_S(r*(q))).
// Among the converged fixed points the smallest potential value wins.

#include <optional>
#include <string>
#include <vector>

#include "rslimits/potential.hpp"

namespace rslimits {

struct LabeledInit {
  std::string label;
  PsdMatrix q;
};

struct SolveSettings {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iters = 10'000;
  // Extra starting points tried in addition to the defaults
  // {1e-3 * rho ("uninformative"), rho ("informative")}.
  std::vector<LabeledInit> inits;
  double finite_diff_step = 1e-4;
  // Adds a Nelder-Mead minimization of the stationary potential over
  // q = rho^{1/2} C rho^{1/2}, C = L L^T clipped to [0, I], polished by SE.
  bool direct_search = false;

  void validate() const;
};

struct FixedPointResult {
  PsdMatrix q_star;
  PsdMatrix r_star;
  double f_value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::string init_label;
  bool converged = false;
};

struct SolveOutcome {
  FixedPointResult best;
  std::vector<FixedPointResult> candidates;
  // Two converged candidates within 1e-6 in value but apart in q.
  bool tie = false;
};

FixedPointResult se_iterate(const ModelSpec& m, const PsdMatrix& q0, const SolveSettings& settings,
                            const QuadratureScheme& quad, const std::string& label = "custom");

SolveOutcome solve_f(const ModelSpec& m, const SolveSettings& settings,
                     const QuadratureScheme& quad);

struct InfSupCandidate {
  PsdMatrix r;
  PsdMatrix q_argmax;
  double value = 0.0;
  int inner_iterations = 0;
  bool inner_converged = false;
};

struct InfSupResult {
  double value = 0.0;
  PsdMatrix r;
  PsdMatrix q;
  bool converged = false;
  std::vector<InfSupCandidate> candidates;
};

// sup_q I(r, q) for a fixed r by accelerated projected gradient ascent on the
// concave quadratic q-part. Requires the positive coupling structure.
InfSupCandidate inner_sup(const ModelSpec& m, const PsdMatrix& r, const QuadratureScheme& quad,
                          int max_iters = 200'000);

// inf over r in {r*(q) : q a state-evolution fixed point} of sup_q I(r, q).
// Throws InputError when the positive coupling hypothesis fails.
InfSupResult solve_infsup(const ModelSpec& m, const SolveSettings& settings,
                          const QuadratureScheme& quad);

struct MmsePrediction {
  PsdMatrix mmse;                       // M_S(r*(q*))
  SymMatrix grad_f;                     // central differences of f over S
  double consistency_gap = 0.0;         // || grad_f - mmse / 2 ||_F
  FixedPointResult optimum;
  bool tie = false;
  std::vector<PsdMatrix> branch_mmse;   // M_S at every tied branch
  bool regularized = false;             // S was singular and 1e-8 I was added
};

// Requires S positive definite unless `force_singular` is set, in which case
// 1e-8 I is added and `regularized` is reported.
MmsePrediction predict_mmse(const ModelSpec& m, const SolveSettings& settings,
                            const QuadratureScheme& quad, bool force_singular = false);

struct SweepPath {
  enum class Kind {
    CouplingScale,  // B_l <- t * B_l
    CouplingSnr,    // B_l <- sqrt(t) * B_l, so r*(q) scales linearly in t
    SideEntry,      // S_kl = S_lk = t
  };
  Kind kind = Kind::CouplingScale;
  int coupling = 0;
  int row = 0;
  int col = 0;

  ModelSpec apply(const ModelSpec& base, double t) const;
  std::string describe() const;
  static SweepPath parse(const std::string& text);
};

struct SweepRow {
  double param = 0.0;
  double f = 0.0;
  double q_trace = 0.0;
  double r_trace = 0.0;
  double mmse_trace = 0.0;
  bool converged = false;
  std::string branch;
  PsdMatrix q_star;
};

// Rows are in grid order. With `warm_start` the previous row's q* is tried as
// an extra init ("warm") and points run sequentially; otherwise grid points
// run in parallel.
std::vector<SweepRow> sweep(const ModelSpec& m, const SweepPath& path,
                            const std::vector<double>& grid, const SolveSettings& settings,
                            const QuadratureScheme& quad, bool warm_start = true);

}  // namespace rslimits
