#include "rslimits/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "rslimits/errors.hpp"

namespace rslimits {

namespace {

// Orthonormal Hermite polynomials for the standard normal weight:
// sqrt(k+1) p_{k+1} = x p_k - sqrt(k) p_{k-1}, p_0 = 1.
// Returns p_n(x), p_{n-1}(x) and sum_{k<n} p_k(x)^2.
struct HermiteEval {
  double pn, pn1, sumsq;
};

HermiteEval eval_orthonormal(int n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  double sumsq = 0.0;
  for (int k = 0; k < n; ++k) {
    sumsq += cur * cur;
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return {cur, prev, sumsq};
}

GaussHermiteRule build_rule(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigensolve failed");

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    for (int it = 0; it < 4; ++it) {
      const HermiteEval e = eval_orthonormal(n, x);
      if (e.pn1 == 0.0) break;
      const double step = e.pn / (std::sqrt(static_cast<double>(n)) * e.pn1);
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / eval_orthonormal(n, x).sumsq;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  // Symmetrize: the rule is exactly symmetric about zero.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1) throw InputError("gauss_hermite: need at least one node");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(n));
  return *slot;
}

QuadratureScheme QuadratureScheme::default_for(int d, std::uint64_t seed) {
  if (d <= 2) return tensor(63);
  if (d == 3) return tensor(21);
  return monte_carlo(1'000'000, seed);
}

QuadratureScheme QuadratureScheme::tensor(int nodes_per_dim) {
  if (nodes_per_dim < 1) throw InputError("quadrature: nodes_per_dim must be >= 1");
  QuadratureScheme q;
  q.kind = Kind::TensorGaussHermite;
  q.nodes_per_dim = nodes_per_dim;
  return q;
}

QuadratureScheme QuadratureScheme::monte_carlo(std::int64_t samples, std::uint64_t seed) {
  if (samples < 1) throw InputError("quadrature: sample_count must be >= 1");
  QuadratureScheme q;
  q.kind = Kind::MonteCarlo;
  q.sample_count = samples;
  q.seed = seed;
  return q;
}

std::int64_t QuadratureScheme::point_count(int d) const {
  if (kind == Kind::MonteCarlo) return sample_count;
  std::int64_t count = 1;
  for (int i = 0; i < d; ++i) {
    count *= nodes_per_dim;
    if (count > (std::int64_t{1} << 40)) throw InputError("quadrature: tensor grid too large");
  }
  return count;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

QuadratureSampler::QuadratureSampler(const QuadratureScheme& q, int d)
    : scheme_(q), d_(d), count_(q.point_count(d)) {
  if (q.kind == QuadratureScheme::Kind::TensorGaussHermite) {
    rule_ = &gauss_hermite(q.nodes_per_dim);
  }
}

double QuadratureSampler::point(std::int64_t index, double* z) const {
  if (rule_ != nullptr) {
    const int n = scheme_.nodes_per_dim;
    double w = 1.0;
    std::int64_t rest = index;
    for (int i = 0; i < d_; ++i) {
      const int digit = static_cast<int>(rest % n);
      rest /= n;
      z[i] = rule_->nodes[digit];
      w *= rule_->weights[digit];
    }
    return w;
  }
  // Box-Muller on uniforms keyed by (seed, index, coordinate).
  const std::uint64_t base = derive_seed(scheme_.seed, static_cast<std::uint64_t>(index));
  constexpr double kScale = 0x1.0p-53;
  for (int i = 0; i < d_; ++i) {
    const std::uint64_t a = mix64(base + 2 * static_cast<std::uint64_t>(i));
    const std::uint64_t b = mix64(base + 2 * static_cast<std::uint64_t>(i) + 1);
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * kScale;
    const double u2 = static_cast<double>(b >> 11) * kScale;
    z[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return 1.0 / static_cast<double>(count_);
}

}  // namespace rslimits
