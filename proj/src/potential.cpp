#include "rslimits/potential.hpp"

#include <sstream>

#include "rslimits/errors.hpp"

namespace rslimits {

void ModelSpec::validate() const {
  if (d < 1) throw InputError("model: d must be >= 1");
  for (std::size_t l = 0; l < couplings.size(); ++l) {
    const Matrix& b = couplings[l];
    if (b.rows() != d || b.cols() != d) {
      std::ostringstream os;
      os << "model: couplings[" << l << "] is " << b.rows() << "x" << b.cols()
         << ", expected " << d << "x" << d;
      throw InputError(os.str());
    }
    if (!b.allFinite()) {
      std::ostringstream os;
      os << "model: couplings[" << l << "] has non-finite entries";
      throw InputError(os.str());
    }
  }
  if (s.dim() != d) throw InputError("model: s has the wrong dimension");
  if (prior.dim() != d) throw InputError("model: prior has the wrong dimension");
}

bool ModelSpec::operator==(const ModelSpec& o) const {
  return d == o.d && couplings == o.couplings && s == o.s && prior == o.prior;
}

namespace {

void require_dim(const ModelSpec& m, int dim, const char* what) {
  if (dim != m.d) {
    std::ostringstream os;
    os << what << ": dimension " << dim << " does not match model dimension " << m.d;
    throw InputError(os.str());
  }
}

// 1/2 sum_l Tr[B^T a B a] using elementwise traces.
double half_coupling_form(const ModelSpec& m, const Matrix& a) {
  double total = 0.0;
  for (const Matrix& b : m.couplings) {
    total += trace_product(b.transpose() * a, b * a);
  }
  return 0.5 * total;
}

}  // namespace

SymMatrix r_star(const ModelSpec& m, const SymMatrix& q) {
  require_dim(m, q.dim(), "r_star");
  Matrix out = Matrix::Zero(m.d, m.d);
  for (const Matrix& b : m.couplings) {
    out.noalias() += b * q.mat() * b.transpose();
    out.noalias() += b.transpose() * q.mat() * b;
  }
  return SymMatrix::symmetrized(out);
}

PotentialValue potential(const ModelSpec& m, const PsdMatrix& r, const PsdMatrix& q,
                         const QuadratureScheme& quad, Exec exec) {
  require_dim(m, r.dim(), "potential");
  require_dim(m, q.dim(), "potential");
  const PsdMatrix rho = second_moment(m.prior);

  PotentialValue out;
  out.channel_term = mutual_information(m.prior, m.s, r, quad, exec);
  out.linear_term = 0.5 * trace_product(r.mat(), q.mat() - rho.mat());
  out.quartic_term = half_coupling_form(m, rho.mat()) - half_coupling_form(m, q.mat());
  out.value = out.channel_term + out.linear_term + out.quartic_term;
  out.q_outside_interval = !loewner_leq(q.sym(), rho.sym(), 1e-7);
  return out;
}

double potential_at_stationary_q(const ModelSpec& m, const PsdMatrix& q,
                                  const QuadratureScheme& quad, Exec exec) {
  require_dim(m, q.dim(), "potential_at_stationary_q");
  const PsdMatrix rho = second_moment(m.prior);
  const PsdMatrix r = project_psd(r_star(m, q.sym()));
  return mutual_information(m.prior, m.s, r, quad, exec) +
         half_coupling_form(m, rho.mat() - q.mat());
}

Matrix coupling_kron_sum(const ModelSpec& m) {
  Matrix sum = Matrix::Zero(m.d * m.d, m.d * m.d);
  for (const Matrix& b : m.couplings) {
    const Matrix k = kron(b, b);
    sum += k + k.transpose();
  }
  return sum;
}

HypothesisCheck check_hypothesis(const ModelSpec& m) {
  const SymMatrix sum = SymMatrix::symmetrized(coupling_kron_sum(m));
  HypothesisCheck out;
  out.min_eigenvalue = min_eigenvalue(sum);
  out.holds = is_psd(sum, kDefaultPsdTol);
  return out;
}

SymMatrix q_hessian(const ModelSpec& m) {
  const Matrix dup = duplication_matrix(m.d);
  return SymMatrix::symmetrized(-(dup.transpose() * coupling_kron_sum(m) * dup));
}

bool q_hessian_nsd(const ModelSpec& m) { return is_psd(q_hessian(m) * -1.0, kDefaultPsdTol); }

}  // namespace rslimits
