#include "rslimits/oracle.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "rslimits/errors.hpp"
#include "rslimits/quadrature.hpp"

namespace rslimits {

void check_enumeration_budget(const ModelSpec& m, int n, double budget) {
  if (!m.prior.is_discrete()) throw InputError("oracle: exact enumeration needs a discrete prior");
  if (n < 1) throw InputError("oracle: n must be >= 1");
  const double configs = std::pow(static_cast<double>(m.prior.atom_count()), n);
  if (configs > budget) {
    std::ostringstream os;
    os << "oracle: " << m.prior.atom_count() << "^" << n << " = " << configs
       << " configurations exceed the enumeration budget " << budget;
    throw InputError(os.str());
  }
}

FiniteInstance sample_instance(const ModelSpec& m, int n, std::uint64_t seed, double budget) {
  m.validate();
  check_enumeration_budget(m, n, budget);
  const int d = m.d;

  FiniteInstance inst;
  inst.model = m;
  inst.n = n;
  inst.seed = seed;

  std::mt19937_64 signal_rng(derive_seed(seed, 0));
  std::mt19937_64 noise_rng(derive_seed(seed, 1));
  const Vector& w = m.prior.weights();
  std::discrete_distribution<int> pick(w.data(), w.data() + w.size());
  std::normal_distribution<double> normal(0.0, 1.0);

  inst.signal.resize(n, d);
  inst.atom_index.resize(n);
  for (int i = 0; i < n; ++i) {
    inst.atom_index[i] = pick(signal_rng);
    inst.signal.row(i) = m.prior.atoms()[inst.atom_index[i]].transpose();
  }

  const Matrix root = sqrt_psd(m.s.sym()).mat();
  inst.y_side = inst.signal * root;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) inst.y_side(i, k) += normal(noise_rng);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (const Matrix& b : m.couplings) {
    Matrix y = scale * inst.signal * b * inst.signal.transpose();
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) y(i, j) += normal(noise_rng);
    }
    inst.y_views.push_back(std::move(y));
  }
  return inst;
}

namespace {

// Log-likelihood pieces that depend on the configuration, tabulated per atom.
struct LikelihoodTables {
  int n = 0;
  int atoms = 0;
  Matrix side;                      // side(i, k): row i assigned atom k
  std::vector<Matrix> cross;        // G_l(a, b) / sqrt(n)
  std::vector<Matrix> square_half;  // G_l(a, b)^2 / (2n)

  double loglik(const std::vector<int>& c, const FiniteInstance& inst) const {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += side(i, c[i]);
    for (std::size_t l = 0; l < cross.size(); ++l) {
      const Matrix& y = inst.y_views[l];
      const Matrix& g = cross[l];
      const Matrix& g2 = square_half[l];
      for (int j = 0; j < n; ++j) {
        const int cj = c[j];
        for (int i = 0; i < n; ++i) total += y(i, j) * g(c[i], cj) - g2(c[i], cj);
      }
    }
    return total;
  }
};

LikelihoodTables build_tables(const FiniteInstance& inst) {
  const ModelSpec& m = inst.model;
  const int k_atoms = m.prior.atom_count();
  const Matrix root = sqrt_psd(m.s.sym()).mat();

  LikelihoodTables t;
  t.n = inst.n;
  t.atoms = k_atoms;
  t.side.resize(inst.n, k_atoms);
  for (int k = 0; k < k_atoms; ++k) {
    const Vector a = root * m.prior.atoms()[k];
    const double half_norm = 0.5 * a.squaredNorm();
    for (int i = 0; i < inst.n; ++i) t.side(i, k) = inst.y_side.row(i).dot(a) - half_norm;
  }
  const double n = static_cast<double>(inst.n);
  for (const Matrix& b : m.couplings) {
    Matrix g(k_atoms, k_atoms);
    for (int a = 0; a < k_atoms; ++a) {
      for (int c = 0; c < k_atoms; ++c) {
        g(a, c) = m.prior.atoms()[a].dot(b * m.prior.atoms()[c]);
      }
    }
    t.cross.push_back(g / std::sqrt(n));
    t.square_half.push_back(g.cwiseProduct(g) / (2.0 * n));
  }
  return t;
}

// Advances a base-k odometer; returns false after the last configuration.
bool next_config(std::vector<int>& c, int k) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (++c[i] < k) return true;
    c[i] = 0;
  }
  return false;
}

}  // namespace

PosteriorSummary exact_posterior(const FiniteInstance& inst, double budget) {
  const ModelSpec& m = inst.model;
  check_enumeration_budget(m, inst.n, budget);
  const int n = inst.n;
  const int d = m.d;
  const int k_atoms = m.prior.atom_count();
  if (inst.y_side.rows() != n || inst.y_side.cols() != d ||
      static_cast<int>(inst.y_views.size()) != m.views()) {
    throw InputError("oracle: instance data do not match the model");
  }

  const LikelihoodTables tables = build_tables(inst);
  Vector log_prior(k_atoms);
  for (int k = 0; k < k_atoms; ++k) {
    const double w = m.prior.weights()(k);
    log_prior(k) = w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
  }

  std::vector<double> logw;
  logw.reserve(static_cast<std::size_t>(std::pow(k_atoms, n)));
  std::vector<int> c(n, 0);
  double top = -std::numeric_limits<double>::infinity();
  do {
    double lp = 0.0;
    for (int i = 0; i < n; ++i) lp += log_prior(c[i]);
    const double v = std::isfinite(lp) ? lp + tables.loglik(c, inst) : lp;
    logw.push_back(v);
    top = std::max(top, v);
  } while (next_config(c, k_atoms));

  double z = 0.0;
  for (double v : logw) z += std::exp(v - top);

  // Posterior marginals of each row.
  Matrix marg = Matrix::Zero(n, k_atoms);
  std::fill(c.begin(), c.end(), 0);
  std::size_t idx = 0;
  do {
    const double p = std::exp(logw[idx++] - top) / z;
    for (int i = 0; i < n; ++i) marg(i, c[i]) += p;
  } while (next_config(c, k_atoms));

  PosteriorSummary out;
  out.log_evidence = top + std::log(z);
  out.log_likelihood_truth = tables.loglik(inst.atom_index, inst);

  out.per_row_mean = Matrix::Zero(n, d);
  Matrix cov = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    Vector mean = Vector::Zero(d);
    Matrix second = Matrix::Zero(d, d);
    for (int k = 0; k < k_atoms; ++k) {
      const Vector& x = m.prior.atoms()[k];
      mean += marg(i, k) * x;
      second += marg(i, k) * x * x.transpose();
    }
    out.per_row_mean.row(i) = mean.transpose();
    cov += second - mean * mean.transpose();
  }
  out.per_row_cov_avg = project_psd(SymMatrix::symmetrized(cov / n));
  out.overlap_mean = inst.signal.transpose() * out.per_row_mean / n;
  out.replica_overlap_mean = out.per_row_mean.transpose() * out.per_row_mean / n;
  return out;
}

namespace {

template <typename Fn>
void for_each_replica(int count, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) fn(k);
}

double standard_error(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

FiniteMiEstimate finite_mi(const ModelSpec& m, int n, int data_samples, std::uint64_t seed,
                           Exec exec, double budget) {
  m.validate();
  check_enumeration_budget(m, n, budget);
  if (data_samples < 1) throw InputError("oracle: data_samples must be >= 1");

  std::vector<double> values(data_samples);
  std::vector<Matrix> covs(data_samples);
  for_each_replica(data_samples, exec, [&](int k) {
    const FiniteInstance inst = sample_instance(m, n, derive_seed(seed, k), budget);
    const PosteriorSummary post = exact_posterior(inst, budget);
    values[k] = (post.log_likelihood_truth - post.log_evidence) / n;
    covs[k] = post.per_row_cov_avg.mat();
  });

  FiniteMiEstimate out;
  Matrix cov = Matrix::Zero(m.d, m.d);
  for (int k = 0; k < data_samples; ++k) {
    out.mi_per_row += values[k];
    cov += covs[k];
  }
  out.mi_per_row /= data_samples;
  out.std_err = standard_error(values);
  out.mmse_avg = project_psd(SymMatrix::symmetrized(cov / data_samples));
  return out;
}

NishimoriEstimate nishimori_residual(const ModelSpec& m, int n, int data_samples,
                                     std::uint64_t seed, Exec exec, double budget) {
  m.validate();
  check_enumeration_budget(m, n, budget);
  if (data_samples < 1) throw InputError("oracle: data_samples must be >= 1");

  std::vector<Matrix> q(data_samples);
  std::vector<Matrix> q12(data_samples);
  for_each_replica(data_samples, exec, [&](int k) {
    const FiniteInstance inst = sample_instance(m, n, derive_seed(seed, k), budget);
    const PosteriorSummary post = exact_posterior(inst, budget);
    q[k] = post.overlap_mean;
    q12[k] = post.replica_overlap_mean;
  });

  NishimoriEstimate out;
  out.overlap_mean = Matrix::Zero(m.d, m.d);
  out.replica_overlap_mean = Matrix::Zero(m.d, m.d);
  for (int k = 0; k < data_samples; ++k) {
    out.overlap_mean += q[k];
    out.replica_overlap_mean += q12[k];
  }
  out.overlap_mean /= data_samples;
  out.replica_overlap_mean /= data_samples;
  out.residual = (out.overlap_mean - out.replica_overlap_mean).norm();

  double var_sum = 0.0;
  std::vector<double> entry(data_samples);
  for (int a = 0; a < m.d; ++a) {
    for (int b = 0; b < m.d; ++b) {
      for (int k = 0; k < data_samples; ++k) entry[k] = q[k](a, b) - q12[k](a, b);
      const double se = standard_error(entry);
      var_sum += se * se;
    }
  }
  out.std_err = std::sqrt(var_sum);
  return out;
}

}  // namespace rslimits
