#pragma once

// The replica-symmetric potential of the multiview spiked matrix model
//
//   Y~     = X S^{1/2} + W~                    (n x d side channel)
//   Y_l    = n^{-1/2} X B_l X^T + W_l,  l = 1..L
//
// I(r, q) = I_S(r) + 1/2 Tr[ r (q - rho) + sum_l { B_l^T rho B_l rho - B_l^T q B_l q } ]
//
// with rho = E[X X^T] the prior second moment.

#include <vector>

#include "rslimits/channel.hpp"

namespace rslimits {

struct ModelSpec {
  int d = 0;
  std::vector<Matrix> couplings;  // B_l, each d x d
  PsdMatrix s;                    // side-channel matrix S
  Prior prior;

  int views() const { return static_cast<int>(couplings.size()); }

  // Throws InputError when dimensions disagree or entries are non-finite.
  void validate() const;

  bool operator==(const ModelSpec& o) const;
};

struct PotentialValue {
  double value = 0.0;
  double channel_term = 0.0;  // I_S(r)
  double linear_term = 0.0;   // 1/2 Tr[r (q - rho)]
  double quartic_term = 0.0;  // 1/2 sum_l Tr[B^T rho B rho - B^T q B q]
  bool q_outside_interval = false;  // q not in [0, rho]
};

// r*(q) = sum_l { B_l q B_l^T + B_l^T q B_l }. Linear in q.
SymMatrix r_star(const ModelSpec& m, const SymMatrix& q);

PotentialValue potential(const ModelSpec& m, const PsdMatrix& r, const PsdMatrix& q,
                         const QuadratureScheme& quad, Exec exec = Exec::Parallel);

// I(r*(q), q) = I_S(r*(q)) + 1/2 sum_l Tr[B_l^T (rho - q) B_l (rho - q)].
double potential_at_stationary_q(const ModelSpec& m, const PsdMatrix& q,
                                 const QuadratureScheme& quad, Exec exec = Exec::Parallel);

// The d^2 x d^2 matrix sum_l { (B_l (x) B_l) + (B_l (x) B_l)^T }.
Matrix coupling_kron_sum(const ModelSpec& m);

struct HypothesisCheck {
  bool holds = false;
  double min_eigenvalue = 0.0;
};

// Positive coupling structure: coupling_kron_sum(m) is PSD at tol 1e-9.
HypothesisCheck check_hypothesis(const ModelSpec& m);

// Hessian of g(q) = Tr[r q] - sum_l Tr[B_l^T q B_l q] in vech coordinates:
// -D_d^T coupling_kron_sum(m) D_d. Does not depend on r.
SymMatrix q_hessian(const ModelSpec& m);

// Negative semidefiniteness of q_hessian at the same relative tolerance.
bool q_hessian_nsd(const ModelSpec& m);

}  // namespace rslimits
