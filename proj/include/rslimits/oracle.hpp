#pragma once

// Exact Bayesian posterior of the finite-n model by enumerating every
// assignment of prior atoms to the n rows. Only for discrete priors and
// tiny n; used to check the asymptotic predictions.

#include <cstdint>
#include <vector>

#include "rslimits/parallel.hpp"
#include "rslimits/potential.hpp"

namespace rslimits {

constexpr double kDefaultEnumerationBudget = 2e5;

struct FiniteInstance {
  ModelSpec model;
  int n = 0;
  std::uint64_t seed = 0;
  Matrix signal;                 // n x d, rows drawn from the prior atoms
  std::vector<int> atom_index;   // atom of each row
  Matrix y_side;                 // n x d: X S^{1/2} + noise
  std::vector<Matrix> y_views;   // n x n each: X B X^T / sqrt(n) + noise
};

struct PosteriorSummary {
  Matrix per_row_mean;           // n x d
  PsdMatrix per_row_cov_avg;     // (1/n) sum_i cov(x_i | data)
  // log sum_x P(x) exp(loglik(x)), where loglik drops the Gaussian
  // normalization constants shared by every configuration.
  double log_evidence = 0.0;
  double log_likelihood_truth = 0.0;
  Matrix overlap_mean;           // X^T <x> / n
  Matrix replica_overlap_mean;   // <x>^T <x> / n
};

// Throws InputError for non-discrete priors, n < 1, or atom_count^n > budget.
void check_enumeration_budget(const ModelSpec& m, int n, double budget = kDefaultEnumerationBudget);

FiniteInstance sample_instance(const ModelSpec& m, int n, std::uint64_t seed,
                               double budget = kDefaultEnumerationBudget);

PosteriorSummary exact_posterior(const FiniteInstance& inst,
                                 double budget = kDefaultEnumerationBudget);

struct FiniteMiEstimate {
  double mi_per_row = 0.0;
  double std_err = 0.0;
  PsdMatrix mmse_avg;  // per_row_cov_avg averaged over the data replicas
};

// Monte Carlo over data replicas of (1/n)[loglik(truth) - log_evidence].
// Replica k uses seed derive_seed(seed, k).
FiniteMiEstimate finite_mi(const ModelSpec& m, int n, int data_samples, std::uint64_t seed,
                           Exec exec = Exec::Parallel, double budget = kDefaultEnumerationBudget);

struct NishimoriEstimate {
  double residual = 0.0;  // || mean(<Q>) - mean(<Q12>) ||_F
  double std_err = 0.0;   // Monte Carlo standard error of that difference
  Matrix overlap_mean;
  Matrix replica_overlap_mean;
};

NishimoriEstimate nishimori_residual(const ModelSpec& m, int n, int data_samples,
                                     std::uint64_t seed, Exec exec = Exec::Parallel,
                                     double budget = kDefaultEnumerationBudget);

}  // namespace rslimits
