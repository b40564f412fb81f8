#include "rslimits/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "rslimits/errors.hpp"

namespace rslimits {

void SolveSettings::validate() const {
  if (!(damping > 0.0 && damping <= 1.0)) throw InputError("solver: damping must be in (0, 1]");
  if (!(tol > 0.0)) throw InputError("solver: tol must be > 0");
  if (max_iters < 1) throw InputError("solver: max_iters must be >= 1");
  if (!(finite_diff_step > 0.0)) throw InputError("solver: finite_diff_step must be > 0");
}

namespace {

double frobenius(const Matrix& m) { return m.norm(); }

// Builds the result record at a terminal iterate.
FixedPointResult finish_fixed_point(const ModelSpec& m, const PsdMatrix& q, double residual,
                                    int iterations, const std::string& label, bool converged,
                                    const QuadratureScheme& quad) {
  FixedPointResult out;
  out.q_star = q;
  out.r_star = project_psd(r_star(m, q.sym()));
  out.f_value = potential_at_stationary_q(m, q, quad);
  out.residual = residual;
  out.iterations = iterations;
  out.init_label = label;
  out.converged = converged;
  return out;
}

// Minimal Nelder-Mead on R^n.
Vector nelder_mead(const std::function<double(const Vector&)>& fn, Vector x0, double step,
                   int max_evals) {
  const Eigen::Index n = x0.size();
  std::vector<Vector> simplex{x0};
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector v = x0;
    v(i) += step;
    simplex.push_back(v);
  }
  std::vector<double> vals;
  for (const Vector& v : simplex) vals.push_back(fn(v));
  int evals = static_cast<int>(simplex.size());

  std::vector<int> order(simplex.size());
  while (evals < max_evals) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <= 1e-13 * (1.0 + std::abs(vals[best]))) break;

    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += simplex[order[i]];
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - simplex[worst]);
    const double fr = fn(reflected);
    ++evals;
    if (fr < vals[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = fn(expanded);
      ++evals;
      if (fe < fr) {
        simplex[worst] = expanded;
        vals[worst] = fe;
      } else {
        simplex[worst] = reflected;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      simplex[worst] = reflected;
      vals[worst] = fr;
    } else {
      const Vector contracted = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = fn(contracted);
      ++evals;
      if (fc < vals[worst]) {
        simplex[worst] = contracted;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i < simplex.size(); ++i) {
          if (static_cast<int>(i) == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          vals[i] = fn(simplex[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return simplex[static_cast<std::size_t>(it - vals.begin())];
}

// q = rho^{1/2} C rho^{1/2} with C = L L^T clipped to eigenvalues in [0, 1].
PsdMatrix factor_to_q(const Vector& params, int d, const SymMatrix& rho_root) {
  Matrix l = Matrix::Zero(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) l(i, j) = params(k++);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(l * l.transpose());
  const Vector clipped = es.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
  const Matrix c = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return project_psd(SymMatrix::symmetrized(rho_root.mat() * c * rho_root.mat()));
}

FixedPointResult direct_search(const ModelSpec& m, const SolveSettings& settings,
                               const QuadratureScheme& quad) {
  const PsdMatrix rho = second_moment(m.prior);
  const SymMatrix rho_root = sqrt_psd(rho.sym());
  const int d = m.d;
  Vector x0 = Vector::Zero(d * (d + 1) / 2);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) x0(k++) = (i == j) ? std::sqrt(0.5) : 0.0;
  }
  auto objective = [&](const Vector& p) {
    return potential_at_stationary_q(m, factor_to_q(p, d, rho_root), quad);
  };
  const Vector best = nelder_mead(objective, x0, 0.25, 200 * static_cast<int>(x0.size()) + 100);
  return se_iterate(m, factor_to_q(best, d, rho_root), settings, quad, "direct");
}

}  // namespace

FixedPointResult se_iterate(const ModelSpec& m, const PsdMatrix& q0, const SolveSettings& settings,
                            const QuadratureScheme& quad, const std::string& label) {
  settings.validate();
  m.validate();
  if (q0.dim() != m.d) throw InputError("se_iterate: q0 has the wrong dimension");
  const PsdMatrix rho = second_moment(m.prior);
  if (!loewner_leq(q0.sym(), rho.sym(), 1e-7)) {
    throw InputError("se_iterate: q0 must satisfy 0 <= q0 <= rho");
  }

  const double beta = settings.damping;
  Matrix q = q0.mat();
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;
  while (it < settings.max_iters) {
    ++it;
    const PsdMatrix qm(SymMatrix::symmetrized(q), 1e-7);
    const PsdMatrix r = project_psd(r_star(m, qm.sym()));
    const PsdMatrix mmse = mmse_matrix(m.prior, m.s, r, quad);
    const PsdMatrix target = project_psd(rho.sym() - mmse.sym());
    residual = frobenius(target.mat() - q);
    q = (1.0 - beta) * q + beta * target.mat();
    if (residual <= settings.tol) {
      converged = true;
      break;
    }
  }
  return finish_fixed_point(m, project_psd(SymMatrix::symmetrized(q)), residual, it, label,
                            converged, quad);
}

SolveOutcome solve_f(const ModelSpec& m, const SolveSettings& settings,
                     const QuadratureScheme& quad) {
  settings.validate();
  m.validate();
  const PsdMatrix rho = second_moment(m.prior);

  std::vector<LabeledInit> inits{{"uninformative", PsdMatrix(rho.sym() * 1e-3)},
                                 {"informative", rho}};
  inits.insert(inits.end(), settings.inits.begin(), settings.inits.end());

  SolveOutcome out;
  for (const LabeledInit& init : inits) {
    out.candidates.push_back(se_iterate(m, init.q, settings, quad, init.label));
  }
  if (settings.direct_search) out.candidates.push_back(direct_search(m, settings, quad));

  const FixedPointResult* best = nullptr;
  for (const FixedPointResult& c : out.candidates) {
    if (!c.converged) continue;
    if (best == nullptr || c.f_value < best->f_value) best = &c;
  }
  if (best == nullptr) {
    for (const FixedPointResult& c : out.candidates) {
      if (best == nullptr || c.f_value < best->f_value) best = &c;
    }
  }
  out.best = *best;
  for (const FixedPointResult& c : out.candidates) {
    if (!c.converged || &c == best) continue;
    if (std::abs(c.f_value - best->f_value) <= 1e-6 &&
        frobenius(c.q_star.mat() - best->q_star.mat()) > 1e-4) {
      out.tie = true;
    }
  }
  return out;
}

namespace {

// Orthonormal basis of the symmetric d x d matrices under the Frobenius
// inner product: E_ii and (E_ij + E_ji) / sqrt(2).
std::vector<Matrix> symmetric_basis(int d) {
  std::vector<Matrix> basis;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      Matrix e = Matrix::Zero(d, d);
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
      }
      basis.push_back(e);
    }
  }
  return basis;
}

// Largest eigenvalue of the self-adjoint map q -> r*(q) on symmetric matrices.
double r_star_operator_norm(const ModelSpec& m) {
  const std::vector<Matrix> basis = symmetric_basis(m.d);
  const auto p = static_cast<Eigen::Index>(basis.size());
  Matrix g(p, p);
  for (Eigen::Index b = 0; b < p; ++b) {
    const Matrix image = r_star(m, SymMatrix::symmetrized(basis[b])).mat();
    for (Eigen::Index a = 0; a < p; ++a) g(a, b) = trace_product(basis[a], image);
  }
  return spectral_norm(SymMatrix::symmetrized(g));
}

// q-dependent part 1/2 Tr[r q] - 1/2 sum_l Tr[B^T q B q].
double q_part(const ModelSpec& m, const Matrix& r, const Matrix& q) {
  double quartic = 0.0;
  for (const Matrix& b : m.couplings) quartic += trace_product(b.transpose() * q, b * q);
  return 0.5 * trace_product(r, q) - 0.5 * quartic;
}

}  // namespace

InfSupCandidate inner_sup(const ModelSpec& m, const PsdMatrix& r, const QuadratureScheme& quad,
                          int max_iters) {
  m.validate();
  if (!check_hypothesis(m).holds) {
    throw InputError("inner_sup: positive coupling hypothesis violated; sup over q is not concave");
  }
  const PsdMatrix rho = second_moment(m.prior);
  const double lip = 0.5 * r_star_operator_norm(m);

  InfSupCandidate out;
  out.r = r;
  if (lip == 0.0) {
    // No couplings: the q-part is linear, bounded above only for r = 0.
    out.q_argmax = rho;
    out.inner_converged = true;
    out.value = r.mat().isZero(0.0)
                    ? mutual_information(m.prior, m.s, r, quad)
                    : std::numeric_limits<double>::infinity();
    return out;
  }

  // FISTA with adaptive restart, step 1 / lip.
  const double step = 1.0 / lip;
  Matrix q = Matrix::Zero(m.d, m.d);
  Matrix y = q;
  double t = 1.0;
  double prev_val = q_part(m, r.mat(), q);
  int it = 0;
  while (it < max_iters) {
    ++it;
    const Matrix grad = 0.5 * (r.mat() - r_star(m, SymMatrix::symmetrized(y)).mat());
    const Matrix next = project_psd(SymMatrix::symmetrized(y + step * grad)).mat();
    const double val = q_part(m, r.mat(), next);
    const double move = frobenius(next - q);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Tested before the restart: at the optimum rounding alone can make the
    // objective dip and would otherwise restart forever.
    if (move <= 1e-13 * std::max(1.0, frobenius(q))) {
      if (val >= prev_val) q = next;
      out.inner_converged = true;
      break;
    }
    if (val < prev_val && t > 1.0) {
      // Restart momentum. A plain step (t = 1) ascends in exact arithmetic,
      // so a dip there is rounding and the step is kept.
      y = q;
      t = 1.0;
      continue;
    }
    y = next + ((t - 1.0) / t_next) * (next - q);
    q = next;
    t = t_next;
    prev_val = val;
  }
  out.inner_iterations = it;
  out.q_argmax = project_psd(SymMatrix::symmetrized(q));
  const PotentialValue pv = potential(m, r, out.q_argmax, quad);
  out.value = pv.value;
  return out;
}

InfSupResult solve_infsup(const ModelSpec& m, const SolveSettings& settings,
                          const QuadratureScheme& quad) {
  m.validate();
  const HypothesisCheck hyp = check_hypothesis(m);
  if (!hyp.holds) {
    std::ostringstream os;
    os << "solve_infsup: positive coupling hypothesis violated (min eigenvalue "
       << hyp.min_eigenvalue << "); inner sup over q is not concave";
    throw InputError(os.str());
  }
  const SolveOutcome fixed = solve_f(m, settings, quad);

  InfSupResult out;
  std::vector<PsdMatrix> rs;
  for (const FixedPointResult& c : fixed.candidates) {
    if (!c.converged) continue;
    const bool seen = std::any_of(rs.begin(), rs.end(), [&](const PsdMatrix& r) {
      return frobenius(r.mat() - c.r_star.mat()) <= 1e-8;
    });
    if (!seen) rs.push_back(c.r_star);
  }
  if (rs.empty()) {
    out.converged = false;
    out.value = fixed.best.f_value;
    out.r = fixed.best.r_star;
    out.q = fixed.best.q_star;
    return out;
  }

  out.converged = true;
  const InfSupCandidate* best = nullptr;
  for (const PsdMatrix& r : rs) {
    out.candidates.push_back(inner_sup(m, r, quad));
  }
  for (const InfSupCandidate& c : out.candidates) {
    out.converged = out.converged && c.inner_converged;
    if (best == nullptr || c.value < best->value) best = &c;
  }
  out.value = best->value;
  out.r = best->r;
  out.q = best->q_argmax;
  return out;
}

MmsePrediction predict_mmse(const ModelSpec& m, const SolveSettings& settings,
                            const QuadratureScheme& quad, bool force_singular) {
  m.validate();
  ModelSpec model = m;
  MmsePrediction out;
  const double min_ev = min_eigenvalue(m.s.sym());
  if (min_ev <= 1e-12 * std::max(1.0, spectral_norm(m.s.sym()))) {
    if (!force_singular) {
      throw InputError("predict_mmse: S must be positive definite");
    }
    model.s = PsdMatrix(m.s.sym() + SymMatrix::identity(m.d) * 1e-8);
    out.regularized = true;
  }

  const SolveOutcome at = solve_f(model, settings, quad);
  out.optimum = at.best;
  out.tie = at.tie;
  out.mmse = mmse_matrix(model.prior, model.s, at.best.r_star, quad);
  if (at.tie) {
    for (const FixedPointResult& c : at.candidates) {
      if (c.converged && std::abs(c.f_value - at.best.f_value) <= 1e-6) {
        out.branch_mmse.push_back(mmse_matrix(model.prior, model.s, c.r_star, quad));
      }
    }
  }

  SolveSettings warm = settings;
  warm.inits.push_back({"warm", at.best.q_star});
  auto f_at = [&](const SymMatrix& s) {
    ModelSpec shifted = model;
    shifted.s = PsdMatrix(s);
    return solve_f(shifted, warm, quad).best.f_value;
  };

  Matrix grad = Matrix::Zero(m.d, m.d);
  for (int l = 0; l < m.d; ++l) {
    for (int k = l; k < m.d; ++k) {
      Matrix dir = Matrix::Zero(m.d, m.d);
      dir(k, l) = dir(l, k) = 1.0;
      const SymMatrix e = SymMatrix::symmetrized(dir);
      const double scale = std::max(std::abs(model.s(k, k)), std::abs(model.s(l, l)));
      double h = settings.finite_diff_step * (1.0 + scale);
      for (int tries = 0; tries < 30 && !is_psd(model.s.sym() - e * h, 0.0); ++tries) h *= 0.5;
      const double deriv = (f_at(model.s.sym() + e * h) - f_at(model.s.sym() - e * h)) / (2.0 * h);
      // Tr[E grad] = deriv; E has two unit entries off the diagonal.
      grad(k, l) = grad(l, k) = (k == l) ? deriv : 0.5 * deriv;
    }
  }
  out.grad_f = SymMatrix::symmetrized(grad);
  out.consistency_gap = frobenius(grad - 0.5 * out.mmse.mat());
  return out;
}

ModelSpec SweepPath::apply(const ModelSpec& base, double t) const {
  ModelSpec m = base;
  switch (kind) {
    case Kind::CouplingScale:
    case Kind::CouplingSnr: {
      if (coupling < 0 || coupling >= m.views()) {
        throw InputError("sweep: coupling index out of range");
      }
      if (kind == Kind::CouplingSnr && t < 0.0) {
        throw InputError("sweep: coupling-snr parameter must be >= 0");
      }
      const double factor = kind == Kind::CouplingScale ? t : std::sqrt(t);
      m.couplings[coupling] *= factor;
      break;
    }
    case Kind::SideEntry: {
      if (row < 0 || col < 0 || row >= m.d || col >= m.d) {
        throw InputError("sweep: side-channel entry out of range");
      }
      Matrix s = m.s.mat();
      s(row, col) = s(col, row) = t;
      m.s = PsdMatrix(SymMatrix::symmetrized(s));
      break;
    }
  }
  return m;
}

std::string SweepPath::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::CouplingScale: os << "coupling-scale:" << coupling; break;
    case Kind::CouplingSnr: os << "coupling-snr:" << coupling; break;
    case Kind::SideEntry: os << "s-entry:" << row << "," << col; break;
  }
  return os.str();
}

SweepPath SweepPath::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InputError("sweep path must look like coupling-scale:L, coupling-snr:L or s-entry:K,L");
  }
  const std::string head = text.substr(0, colon);
  const std::string tail = text.substr(colon + 1);
  SweepPath p;
  try {
    if (head == "coupling-scale" || head == "coupling-snr") {
      p.kind = head == "coupling-scale" ? Kind::CouplingScale : Kind::CouplingSnr;
      std::size_t used = 0;
      p.coupling = std::stoi(tail, &used);
      if (used != tail.size()) throw InputError("bad index");
    } else if (head == "s-entry") {
      p.kind = Kind::SideEntry;
      const auto comma = tail.find(',');
      if (comma == std::string::npos) throw InputError("bad index");
      p.row = std::stoi(tail.substr(0, comma));
      p.col = std::stoi(tail.substr(comma + 1));
    } else {
      throw InputError("unknown path kind");
    }
  } catch (const std::exception&) {
    throw InputError("invalid sweep path '" + text + "'");
  }
  return p;
}

namespace {

SweepRow solve_row(const ModelSpec& base, const SweepPath& path, double t,
                   const SolveSettings& settings, const QuadratureScheme& quad) {
  SweepRow row;
  row.param = t;
  try {
    const ModelSpec m = path.apply(base, t);
    const SolveOutcome res = solve_f(m, settings, quad);
    row.f = res.best.f_value;
    row.q_trace = res.best.q_star.mat().trace();
    row.r_trace = res.best.r_star.mat().trace();
    row.mmse_trace = mmse_matrix(m.prior, m.s, res.best.r_star, quad).mat().trace();
    row.converged = res.best.converged;
    row.branch = res.best.init_label;
    row.q_star = res.best.q_star;
  } catch (const std::exception&) {
    row.f = std::numeric_limits<double>::quiet_NaN();
    row.q_trace = row.r_trace = row.mmse_trace = row.f;
    row.converged = false;
    row.branch = "error";
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep(const ModelSpec& m, const SweepPath& path,
                            const std::vector<double>& grid, const SolveSettings& settings,
                            const QuadratureScheme& quad, bool warm_start) {
  settings.validate();
  m.validate();
  std::vector<SweepRow> rows(grid.size());
  if (warm_start) {
    std::optional<PsdMatrix> previous;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      SolveSettings local = settings;
      if (previous) local.inits.push_back({"warm", *previous});
      rows[i] = solve_row(m, path, grid[i], local, quad);
      if (rows[i].converged) previous = rows[i].q_star;
    }
    return rows;
  }
  const auto n = static_cast<std::int64_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    rows[i] = solve_row(m, path, grid[i], settings, quad);
  }
  return rows;
}

}  // namespace rslimits
