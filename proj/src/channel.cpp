#include "rslimits/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rslimits/errors.hpp"

namespace rslimits {

Prior Prior::discrete(std::vector<Vector> atoms, Vector weights) {
  if (atoms.empty()) throw InputError("prior: at least one atom required");
  if (static_cast<Eigen::Index>(atoms.size()) != weights.size()) {
    throw InputError("prior: atoms and weights differ in length");
  }
  const Eigen::Index d = atoms.front().size();
  if (d < 1) throw InputError("prior: atoms must have dimension >= 1");
  for (const Vector& a : atoms) {
    if (a.size() != d) throw InputError("prior: atoms differ in dimension");
    if (!a.allFinite()) throw InputError("prior: non-finite atom");
  }
  if (!weights.allFinite() || weights.minCoeff() < 0.0) {
    throw InputError("prior: weights must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "prior: weights sum to " << weights.sum() << ", expected 1";
    throw InputError(os.str());
  }
  Prior p;
  p.kind_ = Kind::Discrete;
  p.dim_ = static_cast<int>(d);
  p.atoms_ = std::move(atoms);
  p.weights_ = std::move(weights);
  return p;
}

Prior Prior::gaussian(PsdMatrix covariance) {
  if (covariance.dim() < 1) throw InputError("prior: covariance must be at least 1x1");
  Prior p;
  p.kind_ = Kind::Gaussian;
  p.dim_ = covariance.dim();
  p.cov_ = std::move(covariance);
  return p;
}

Prior Prior::rademacher() {
  return discrete({Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)},
                  Vector::Constant(2, 0.5));
}

Prior Prior::product(const std::vector<Prior>& factors) {
  if (factors.empty()) throw InputError("prior: empty product");
  std::vector<Vector> atoms{Vector()};
  std::vector<double> weights{1.0};
  for (const Prior& f : factors) {
    if (!f.is_discrete()) throw InputError("prior: product requires discrete factors");
    std::vector<Vector> next_atoms;
    std::vector<double> next_weights;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      for (int k = 0; k < f.atom_count(); ++k) {
        Vector a(atoms[i].size() + f.dim());
        a << atoms[i], f.atoms()[k];
        next_atoms.push_back(std::move(a));
        next_weights.push_back(weights[i] * f.weights()(k));
      }
    }
    atoms = std::move(next_atoms);
    weights = std::move(next_weights);
  }
  Vector w = Eigen::Map<Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  w /= w.sum();
  return discrete(std::move(atoms), std::move(w));
}

Vector Prior::mean() const {
  if (kind_ == Kind::Gaussian) return Vector::Zero(dim_);
  Vector m = Vector::Zero(dim_);
  for (int k = 0; k < atom_count(); ++k) m += weights_(k) * atoms_[k];
  return m;
}

bool Prior::operator==(const Prior& o) const {
  if (kind_ != o.kind_ || dim_ != o.dim_) return false;
  if (kind_ == Kind::Gaussian) return cov_ == o.cov_;
  return atoms_ == o.atoms_ && weights_ == o.weights_;
}

PsdMatrix second_moment(const Prior& p) {
  if (p.kind() == Prior::Kind::Gaussian) return p.covariance();
  Matrix m = Matrix::Zero(p.dim(), p.dim());
  for (int k = 0; k < p.atom_count(); ++k) {
    m += p.weights()(k) * p.atoms()[k] * p.atoms()[k].transpose();
  }
  return PsdMatrix(SymMatrix::symmetrized(m));
}

PsdMatrix prior_covariance(const Prior& p) {
  const Vector mu = p.mean();
  return project_psd(second_moment(p).sym() -
                     SymMatrix::symmetrized(mu * mu.transpose()));
}

namespace {

void check_channel_args(const Prior& p, const PsdMatrix& s, const PsdMatrix& r) {
  if (s.dim() != p.dim() || r.dim() != p.dim()) {
    std::ostringstream os;
    os << "channel: dimension mismatch (prior " << p.dim() << ", S " << s.dim()
       << ", r " << r.dim() << ")";
    throw InputError(os.str());
  }
}

ChannelValue gaussian_closed_form(const Prior& p, const SymMatrix& root) {
  const int d = p.dim();
  const Matrix& sigma = p.covariance().mat();
  const Matrix& a = root.mat();
  const Matrix inner = Matrix::Identity(d, d) + a * sigma * a;
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) throw NumericalError("channel: I + A Sigma A not SPD");
  const Matrix l = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(l(i, i));
  const Matrix sa = sigma * a;
  const Matrix post = sigma - sa * llt.solve(sa.transpose());
  ChannelValue out;
  out.mutual_information = 0.5 * logdet;
  out.mmse = project_psd(SymMatrix::symmetrized(post));
  return out;
}

// Precomputed pairwise quantities for a discrete prior seen through A:
// delta_kj = A (x_k - x_j), half_sq_kj = |delta_kj|^2 / 2.
struct DiscreteKernel {
  int d = 0;
  int atoms = 0;
  std::vector<double> x;        // atoms * d
  std::vector<double> w;        // atoms
  std::vector<double> log_w;    // atoms, -inf for zero weight
  std::vector<double> delta;    // atoms * atoms * d
  std::vector<double> half_sq;  // atoms * atoms

  DiscreteKernel(const Prior& p, const Matrix& a) : d(p.dim()), atoms(p.atom_count()) {
    x.resize(static_cast<std::size_t>(atoms) * d);
    w.resize(atoms);
    log_w.resize(atoms);
    for (int k = 0; k < atoms; ++k) {
      for (int i = 0; i < d; ++i) x[k * d + i] = p.atoms()[k](i);
      w[k] = p.weights()(k);
      log_w[k] = w[k] > 0.0 ? std::log(w[k]) : -std::numeric_limits<double>::infinity();
    }
    delta.resize(static_cast<std::size_t>(atoms) * atoms * d);
    half_sq.resize(static_cast<std::size_t>(atoms) * atoms);
    for (int k = 0; k < atoms; ++k) {
      for (int j = 0; j < atoms; ++j) {
        const Vector diff = a * (p.atoms()[k] - p.atoms()[j]);
        for (int i = 0; i < d; ++i) delta[(k * atoms + j) * d + i] = diff(i);
        half_sq[k * atoms + j] = 0.5 * diff.squaredNorm();
      }
    }
  }

  // Adds the contribution of noise point z (without its quadrature weight):
  // mi -= sum_k w_k log sum_j w_j exp(-half_sq_kj - z . delta_kj),
  // cov += sum_k w_k cov(posterior | y = A x_k + z).
  // `scratch` holds 2 * atoms + d doubles.
  void accumulate(const double* z, double& mi, double* cov, double* scratch) const {
    double* logit = scratch;
    double* pi = scratch + atoms;
    double* mean = scratch + 2 * atoms;
    for (int k = 0; k < atoms; ++k) {
      if (w[k] == 0.0) continue;
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < atoms; ++j) {
        const double* dl = &delta[(static_cast<std::size_t>(k) * atoms + j) * d];
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += z[i] * dl[i];
        logit[j] = log_w[j] - half_sq[k * atoms + j] - dot;
        mx = std::max(mx, logit[j]);
      }
      double sum = 0.0;
      for (int j = 0; j < atoms; ++j) {
        pi[j] = std::exp(logit[j] - mx);
        sum += pi[j];
      }
      mi -= w[k] * (mx + std::log(sum));
      const double inv = 1.0 / sum;
      for (int i = 0; i < d; ++i) mean[i] = 0.0;
      for (int j = 0; j < atoms; ++j) {
        pi[j] *= inv;
        for (int i = 0; i < d; ++i) mean[i] += pi[j] * x[j * d + i];
      }
      // Posterior covariance sum_j pi_j (x_j - m)(x_j - m)^T, lower triangle.
      for (int j = 0; j < atoms; ++j) {
        if (pi[j] == 0.0) continue;
        const double c = w[k] * pi[j];
        for (int b = 0; b < d; ++b) {
          const double eb = x[j * d + b] - mean[b];
          for (int a2 = b; a2 < d; ++a2) {
            cov[a2 + b * d] += c * (x[j * d + a2] - mean[a2]) * eb;
          }
        }
      }
    }
  }
};

constexpr std::int64_t kChunk = 512;

ChannelValue finish(double mi, std::vector<double>& cov, int d) {
  if (!std::isfinite(mi)) throw NumericalError("channel: non-finite mutual information");
  Matrix m(d, d);
  for (int b = 0; b < d; ++b) {
    for (int a = b; a < d; ++a) m(a, b) = m(b, a) = cov[a + b * d];
  }
  if (!m.allFinite()) throw NumericalError("channel: non-finite MMSE matrix");
  ChannelValue out;
  out.mutual_information = mi;
  out.mmse = project_psd(SymMatrix::symmetrized(m));
  return out;
}

// Both kernels sum point contributions within 512-point chunks and then add
// the chunk totals in index order, so they agree to the last bit.
void accumulate_chunk(const DiscreteKernel& kern, const QuadratureSampler& sampler, std::int64_t c,
                      double* out, double* z, double* scratch, double* local) {
  const int d = kern.d;
  const std::int64_t end = std::min(sampler.size(), (c + 1) * kChunk);
  for (std::int64_t p = c * kChunk; p < end; ++p) {
    const double omega = sampler.point(p, z);
    double mi_p = 0.0;
    std::fill(local, local + d * d, 0.0);
    kern.accumulate(z, mi_p, local, scratch);
    out[0] += omega * mi_p;
    for (int i = 0; i < d * d; ++i) out[1 + i] += omega * local[i];
  }
}

ChannelValue discrete_serial(const DiscreteKernel& kern, const QuadratureScheme& quad) {
  const int d = kern.d;
  const QuadratureSampler sampler(quad, d);
  const std::int64_t chunks = (sampler.size() + kChunk - 1) / kChunk;
  std::vector<double> z(d), scratch(2 * kern.atoms + d), local(d * d), cov(d * d, 0.0);
  std::vector<double> chunk(1 + d * d);
  double mi = 0.0;
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::fill(chunk.begin(), chunk.end(), 0.0);
    accumulate_chunk(kern, sampler, c, chunk.data(), z.data(), scratch.data(), local.data());
    mi += chunk[0];
    for (int i = 0; i < d * d; ++i) cov[i] += chunk[1 + i];
  }
  return finish(mi, cov, d);
}

ChannelValue discrete_parallel(const DiscreteKernel& kern, const QuadratureScheme& quad) {
  const int d = kern.d;
  const QuadratureSampler sampler(quad, d);
  const std::int64_t points = sampler.size();
  const std::int64_t chunks = (points + kChunk - 1) / kChunk;
  const int stride = 1 + d * d;
  std::vector<double> partial(static_cast<std::size_t>(chunks) * stride, 0.0);

#pragma omp parallel
  {
    std::vector<double> z(d), scratch(2 * kern.atoms + d), local(d * d);
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
      accumulate_chunk(kern, sampler, c, &partial[static_cast<std::size_t>(c) * stride], z.data(),
                       scratch.data(), local.data());
    }
  }

  double mi = 0.0;
  std::vector<double> cov(d * d, 0.0);
  for (std::int64_t c = 0; c < chunks; ++c) {
    const double* in = &partial[static_cast<std::size_t>(c) * stride];
    mi += in[0];
    for (int i = 0; i < d * d; ++i) cov[i] += in[1 + i];
  }
  return finish(mi, cov, d);
}

}  // namespace

ChannelValue evaluate_channel(const Prior& p, const PsdMatrix& s, const PsdMatrix& r,
                              const QuadratureScheme& quad, Exec exec) {
  check_channel_args(p, s, r);
  const SymMatrix root = sqrt_psd(s.sym() + r.sym());
  if (p.kind() == Prior::Kind::Gaussian) return gaussian_closed_form(p, root);
  const DiscreteKernel kern(p, root.mat());
  return exec == Exec::Serial ? discrete_serial(kern, quad) : discrete_parallel(kern, quad);
}

double mutual_information(const Prior& p, const PsdMatrix& s, const PsdMatrix& r,
                          const QuadratureScheme& quad, Exec exec) {
  return evaluate_channel(p, s, r, quad, exec).mutual_information;
}

PsdMatrix mmse_matrix(const Prior& p, const PsdMatrix& s, const PsdMatrix& r,
                      const QuadratureScheme& quad, Exec exec) {
  return evaluate_channel(p, s, r, quad, exec).mmse;
}

}  // namespace rslimits
