#pragma once

#include <cstdint>
#include <vector>

namespace rslimits {

// Nodes and weights for E[f(Z)], Z ~ N(0, 1). Weights sum to one.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch on the probabilists' Hermite Jacobi matrix, then Newton
// polishing of each node with weights from the orthonormal recurrence.
// Rules are cached per size; the returned reference stays valid.
const GaussHermiteRule& gauss_hermite(int n);

// How expectations over d-dimensional standard Gaussian noise are taken.
struct QuadratureScheme {
  enum class Kind { TensorGaussHermite, MonteCarlo };

  Kind kind = Kind::TensorGaussHermite;
  int nodes_per_dim = 63;
  std::int64_t sample_count = 1'000'000;
  std::uint64_t seed = 0;

  // 63 nodes/dim for d <= 2, 21 for d = 3, seeded Monte Carlo (1e6) beyond.
  static QuadratureScheme default_for(int d, std::uint64_t seed = 0);
  static QuadratureScheme tensor(int nodes_per_dim);
  static QuadratureScheme monte_carlo(std::int64_t samples, std::uint64_t seed);

  // Number of evaluation points for dimension d.
  std::int64_t point_count(int d) const;
};

// Random access to the evaluation points of a scheme in dimension d.
// Monte Carlo points come from a counter-based stream keyed on
// (seed, index), so any point can be generated independently.
class QuadratureSampler {
 public:
  QuadratureSampler(const QuadratureScheme& q, int d);

  std::int64_t size() const { return count_; }
  // Fills `z` (length d) with point `index` and returns its weight.
  double point(std::int64_t index, double* z) const;

 private:
  QuadratureScheme scheme_;
  int d_;
  std::int64_t count_;
  const GaussHermiteRule* rule_ = nullptr;
};

// SplitMix64 finalizer; also used to derive per-replica seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rslimits
