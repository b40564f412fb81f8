#pragma once

// The d-dimensional additive Gaussian channel Y = (S + r)^{1/2} X + W,
// W ~ N(0, I_d), X ~ prior. Provides its mutual information I_S(r) (nats)
// and MMSE matrix M_S(r) = E[cov(X | Y)].

#include <vector>

#include "rslimits/parallel.hpp"
#include "rslimits/psd.hpp"
#include "rslimits/quadrature.hpp"

namespace rslimits {

// Row distribution of the signal: finitely many atoms with weights, or a
// centered Gaussian (closed-form fixture only; unbounded support).
class Prior {
 public:
  enum class Kind { Discrete, Gaussian };

  static Prior discrete(std::vector<Vector> atoms, Vector weights);
  static Prior gaussian(PsdMatrix covariance);
  // Uniform on {+1, -1}.
  static Prior rademacher();
  // Product of independent priors on the coordinates (discrete only).
  static Prior product(const std::vector<Prior>& factors);

  Kind kind() const { return kind_; }
  bool is_discrete() const { return kind_ == Kind::Discrete; }
  int dim() const { return dim_; }

  const std::vector<Vector>& atoms() const { return atoms_; }
  const Vector& weights() const { return weights_; }
  const PsdMatrix& covariance() const { return cov_; }
  int atom_count() const { return static_cast<int>(atoms_.size()); }

  Vector mean() const;

  bool operator==(const Prior& o) const;

 private:
  Kind kind_ = Kind::Discrete;
  int dim_ = 0;
  std::vector<Vector> atoms_;
  Vector weights_;
  PsdMatrix cov_;
};

// rho_bar = E[X X^T].
PsdMatrix second_moment(const Prior& p);
// E[cov(X)] = rho_bar - E[X] E[X]^T: the MMSE matrix with no observation.
PsdMatrix prior_covariance(const Prior& p);

struct ChannelValue {
  double mutual_information = 0.0;
  PsdMatrix mmse;
};

// Evaluates both I_S(r) and M_S(r) in one pass over the quadrature points.
ChannelValue evaluate_channel(const Prior& p, const PsdMatrix& s, const PsdMatrix& r,
                              const QuadratureScheme& quad, Exec exec = Exec::Parallel);

double mutual_information(const Prior& p, const PsdMatrix& s, const PsdMatrix& r,
                          const QuadratureScheme& quad, Exec exec = Exec::Parallel);

PsdMatrix mmse_matrix(const Prior& p, const PsdMatrix& s, const PsdMatrix& r,
                      const QuadratureScheme& quad, Exec exec = Exec::Parallel);

}  // namespace rslimits
