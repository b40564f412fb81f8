// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
// limits are fixed here. Usage: acceptance <rs_limits binary> <fixture dir>

#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rslimits/channel.hpp"
#include "rslimits/oracle.hpp"
#include "rslimits/potential.hpp"
#include "rslimits/rotinv.hpp"
#include "rslimits/solver.hpp"

using namespace rslimits;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

PsdMatrix scalar(double v) { return PsdMatrix(Matrix::Constant(1, 1, v)); }

ModelSpec scalar_model(double b, double s, Prior prior) {
  ModelSpec m;
  m.d = 1;
  m.couplings = {Matrix::Constant(1, 1, b)};
  m.s = scalar(s);
  m.prior = std::move(prior);
  return m;
}

Prior scalar_discrete(const std::vector<double>& atoms, const std::vector<double>& w) {
  std::vector<Vector> a;
  for (double x : atoms) a.push_back(Vector::Constant(1, x));
  return Prior::discrete(a, Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
}

Prior rademacher2() { return Prior::product({Prior::rademacher(), Prior::rademacher()}); }

Matrix uniform_matrix(std::mt19937_64& rng, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = u(rng);
  return m;
}

PsdMatrix random_pd(std::mt19937_64& rng, int d, double scale) {
  const Matrix a = uniform_matrix(rng, d, -1, 1);
  return PsdMatrix(SymMatrix::symmetrized(scale * (a * a.transpose() + 0.2 * Matrix::Identity(d, d))));
}

const QuadratureScheme& quad_for(int d) {
  static const QuadratureScheme q1 = QuadratureScheme::default_for(1);
  static const QuadratureScheme q2 = QuadratureScheme::default_for(2);
  return d == 1 ? q1 : q2;
}

// ---------------------------------------------------------------------------

Outcome gaussian_scalar() {
  // q = 1 - 1 / (1 + 2q) gives q = 1/2, r = 2q = 1, and
  // f = 1/2 ln(1 + r) + 1/2 * 1/2 * (1 - q)^2 * 2 = 1/2 ln 2 + 1/8.
  const double f_exact = 0.5 * std::log(2.0) + 0.125;
  const ModelSpec m = scalar_model(1.0, 0.0, Prior::gaussian(PsdMatrix::identity(1)));
  const SolveOutcome out = solve_f(m, SolveSettings{}, quad_for(1));
  const double q = out.best.q_star.mat()(0, 0);
  const double r = out.best.r_star.mat()(0, 0);
  const double f = out.best.f_value;
  const double err = std::max({std::abs(q - 0.5), std::abs(r - 1.0), std::abs(f - f_exact), std::abs(f - 0.471574)});
  return {err <= 1e-6, fmt("q*=%.10f r*=%.10f f=%.10f (analytic %.10f), max error %.2e <= 1e-6", q, r, f, f_exact, err)};
}

Outcome phase_transition() {
  // B = b with lambda = 2 b^2, so coupling-snr t is lambda itself.
  const ModelSpec base = scalar_model(std::sqrt(0.5), 0.0, Prior::rademacher());
  SweepPath path;
  path.kind = SweepPath::Kind::CouplingSnr;
  std::vector<double> grid;
  for (int i = 0; i <= 30; ++i) grid.push_back(0.5 + 0.05 * i);
  const std::vector<SweepRow> rows = sweep(base, path, grid, SolveSettings{}, quad_for(1));

  bool ok = true;
  double worst_below = 0.0;
  double worst_above = 1.0;
  double worst_grid_q = 0.0;
  double worst_grid_f = 0.0;
  for (const SweepRow& row : rows) {
    const double lambda = row.param;
    const double q = row.q_star.mat()(0, 0);
    ok = ok && row.converged;
    if (lambda <= 0.95 + 1e-12) {
      worst_below = std::max(worst_below, q);
      ok = ok && q < 1e-4;
    }
    if (lambda >= 1.1 - 1e-12) {
      worst_above = std::min(worst_above, q);
      ok = ok && q > 0.01;
    }
    // Independent scan of the stationary potential at resolution 1e-3.
    const ModelSpec m = path.apply(base, lambda);
    double best_q = 0.0;
    double best_f = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= 1000; ++j) {
      const double qq = 1e-3 * j;
      const double v = potential_at_stationary_q(m, scalar(qq), quad_for(1));
      if (v < best_f) {
        best_f = v;
        best_q = qq;
      }
    }
    // The solver may only beat the grid by sub-resolution refinement, and
    // the grid minimizer must sit on the same branch.
    const double df = best_f - row.f;
    worst_grid_f = std::max(worst_grid_f, std::abs(df));
    ok = ok && df >= -1e-9 && df <= 1e-5;
    if (lambda <= 0.95 + 1e-12 || lambda >= 1.1 - 1e-12) {
      worst_grid_q = std::max(worst_grid_q, std::abs(best_q - q));
      ok = ok && std::abs(best_q - q) <= 2e-3;
    }
  }
  return {ok, fmt("%zu points; max q* for lambda<=0.95: %.2e (<1e-4); min q* for lambda>=1.1: %.4f (>0.01); "
                  "grid scan |dq| <= %.1e, |df| <= %.1e",
                  rows.size(), worst_below, worst_above, worst_grid_q, worst_grid_f)};
}

Outcome duality_gap() {
  std::mt19937_64 rng(101);
  int accepted = 0;
  int drawn = 0;
  double worst = 0.0;
  bool ok = true;
  while (accepted < 10) {
    ++drawn;
    ModelSpec m;
    m.d = 2;
    for (int l = 0; l < 2; ++l) {
      const Matrix a = uniform_matrix(rng, 2, -1, 1);
      m.couplings.push_back(a * a.transpose() + 0.3 * uniform_matrix(rng, 2, -1, 1));
    }
    m.s = random_pd(rng, 2, 0.3);
    m.prior = rademacher2();
    if (!check_hypothesis(m).holds) continue;
    ++accepted;
    const SolveOutcome f = solve_f(m, SolveSettings{}, quad_for(2));
    const InfSupResult is = solve_infsup(m, SolveSettings{}, quad_for(2));
    const double gap = std::abs(f.best.f_value - is.value);
    worst = std::max(worst, gap);
    ok = ok && f.best.converged && is.converged && gap <= 1e-6;
  }
  return {ok, fmt("10 models (%d drawn), max |f - infsup| = %.2e <= 1e-6", drawn, worst)};
}

Outcome envelope() {
  std::vector<std::pair<std::string, ModelSpec>> models;
  models.emplace_back("rademacher lambda=2 S=0.1", scalar_model(1.0, 0.1, Prior::rademacher()));
  models.emplace_back("three-point S=0.5", scalar_model(1.2, 0.5, scalar_discrete({-1, 0, 2}, {0.3, 0.5, 0.2})));
  {
    ModelSpec m;
    m.d = 2;
    m.couplings = {Matrix::Identity(2, 2)};
    Matrix s(2, 2);
    s << 0.3, 0.1, 0.1, 0.2;
    m.s = PsdMatrix(SymMatrix(s));
    m.prior = rademacher2();
    models.emplace_back("d=2 identity coupling", m);
  }
  {
    ModelSpec m;
    m.d = 2;
    Matrix b1(2, 2), b2(2, 2), s(2, 2);
    b1 << 1.0, 0.3, 0.3, 0.5;
    b2 << 0.4, 0.0, 0.0, 0.9;
    s << 0.5, -0.2, -0.2, 0.4;
    m.couplings = {b1, b2};
    m.s = PsdMatrix(SymMatrix(s));
    m.prior = rademacher2();
    models.emplace_back("d=2 two views", m);
  }
  {
    ModelSpec m;
    m.d = 2;
    Matrix b(2, 2), s(2, 2);
    b << 0.0, 1.5, 0.0, 0.0;
    s << 0.6, 0.0, 0.0, 0.3;
    m.couplings = {b};
    m.s = PsdMatrix(SymMatrix(s));
    m.prior = Prior::discrete({Vector::Unit(2, 0), Vector::Unit(2, 1), -Vector::Unit(2, 0)}, Vector::Constant(3, 1.0 / 3));
    models.emplace_back("d=2 bipartite coupling", m);
  }
  double worst = 0.0;
  bool ok = true;
  std::string names;
  for (const auto& [name, m] : models) {
    const MmsePrediction p = predict_mmse(m, SolveSettings{}, quad_for(m.d));
    worst = std::max(worst, p.consistency_gap);
    ok = ok && p.optimum.converged && p.consistency_gap <= 1e-4;
  }
  return {ok, fmt("%zu models, max ||grad f - M/2||_F = %.2e <= 1e-4", models.size(), worst)};
}

double quadratic_piece(const ModelSpec& m, const Matrix& q) {
  double total = 0.0;
  for (const Matrix& b : m.couplings) total -= (b.transpose() * q * b * q).trace();
  return total;
}

Outcome hessian() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(1, 3);
  int agree = 0;
  int total = 0;
  int holds = 0;
  double worst_fd = 0.0;
  std::string disagreements;
  for (int t = 0; t < 200; ++t) {
    ModelSpec m;
    m.d = pick(rng);
    const int views = pick(rng);
    for (int l = 0; l < views; ++l) m.couplings.push_back(uniform_matrix(rng, m.d, -2, 2));
    m.s = PsdMatrix::zero(m.d);
    m.prior = Prior::gaussian(PsdMatrix::identity(m.d));
    const bool h = check_hypothesis(m).holds;
    const bool nsd = q_hessian_nsd(m);
    holds += h;
    ++total;
    if (h == nsd) {
      ++agree;
    } else {
      disagreements += fmt(" #%d(d=%d,L=%d,min eig %.3g)", t, m.d, views, check_hypothesis(m).min_eigenvalue);
    }

    // Mixed second differences of the quadratic piece; exact for a quadratic
    // up to rounding.
    const Matrix hess = q_hessian(m).mat();
    const int p = m.d * (m.d + 1) / 2;
    const double step = 1e-2;
    const Vector base = vech(SymMatrix::symmetrized(uniform_matrix(rng, m.d, -1, 1)));
    auto g = [&](const Vector& v) { return quadratic_piece(m, unvech(v, m.d).mat()); };
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        const Vector ea = Vector::Unit(p, a) * step;
        const Vector eb = Vector::Unit(p, b) * step;
        const double fd =
            (g(base + ea + eb) - g(base + ea - eb) - g(base - ea + eb) + g(base - ea - eb)) / (4 * step * step);
        worst_fd = std::max(worst_fd, std::abs(fd - hess(a, b)));
      }
    }
  }
  const bool ok = agree == total && worst_fd <= 1e-8;
  std::string detail = fmt("verdicts agree on %d/%d models (%d satisfy the hypothesis); finite-difference "
                           "Hessian error %.2e <= 1e-8",
                           agree, total, holds, worst_fd);
  if (!disagreements.empty()) detail += "; disagree:" + disagreements;
  return {ok, detail};
}

Outcome finite_n() {
  const ModelSpec m = scalar_model(1.0, 0.2, Prior::rademacher());
  const double f = solve_f(m, SolveSettings{}, QuadratureScheme::tensor(300)).best.f_value;
  const std::vector<int> sizes{4, 6, 8, 10};
  int decreasing = 0;
  int endpoint = 0;
  double mean_gap[4] = {0, 0, 0, 0};
  for (int seed = 0; seed < 20; ++seed) {
    std::vector<double> gaps;
    for (int n : sizes) gaps.push_back(std::abs(finite_mi(m, n, 2000, derive_seed(0xF1417E, seed)).mi_per_row - f));
    bool mono = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) mono = mono && gaps[i] < gaps[i - 1];
    decreasing += mono;
    endpoint += gaps.back() < gaps.front();
    for (int i = 0; i < 4; ++i) mean_gap[i] += gaps[i] / 20;
  }
  const bool ok = decreasing >= 18;
  return {ok, fmt("f=%.6f; |I_n - f| decreasing over n=4,6,8,10 in %d/20 seeds (need >= 18); "
                  "n=10 below n=4 in %d/20; mean gaps %.4f %.4f %.4f %.4f",
                  f, decreasing, endpoint, mean_gap[0], mean_gap[1], mean_gap[2], mean_gap[3])};
}

Outcome nishimori() {
  struct Config {
    std::string name;
    ModelSpec m;
    int n;
  };
  std::vector<Config> configs;
  configs.push_back({"rademacher", scalar_model(1.0, 0.2, Prior::rademacher()), 8});
  configs.push_back({"three-point", scalar_model(0.9, 0.3, scalar_discrete({-1, 0.5, 1.5}, {0.3, 0.4, 0.3})), 6});
  {
    ModelSpec m = scalar_model(0.8, 0.0, Prior::rademacher());
    m.couplings.push_back(Matrix::Constant(1, 1, -0.5));
    configs.push_back({"two views", m, 8});
  }
  {
    ModelSpec m;
    m.d = 2;
    Matrix s(2, 2);
    s << 0.3, 0.1, 0.1, 0.2;
    m.couplings = {Matrix::Identity(2, 2)};
    m.s = PsdMatrix(SymMatrix(s));
    m.prior = rademacher2();
    configs.push_back({"d=2 identity", m, 4});
  }
  {
    ModelSpec m;
    m.d = 2;
    Matrix b(2, 2);
    b << 0.0, 1.5, 0.0, 0.0;
    m.couplings = {b};
    m.s = PsdMatrix::zero(2);
    m.prior = Prior::discrete({Vector::Unit(2, 0), Vector::Unit(2, 1), -Vector::Unit(2, 0)}, Vector::Constant(3, 1.0 / 3));
    configs.push_back({"d=2 bipartite", m, 5});
  }
  bool ok = true;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const NishimoriEstimate e = nishimori_residual(configs[i].m, configs[i].n, 2000, 77 + i);
    const double ratio = e.std_err > 0 ? e.residual / e.std_err : (e.residual == 0 ? 0 : INFINITY);
    worst_ratio = std::max(worst_ratio, ratio);
    ok = ok && e.residual <= 4 * e.std_err;
  }
  return {ok, fmt("%zu configs, max residual / std err = %.2f <= 4", configs.size(), worst_ratio)};
}

Outcome rotinv() {
  RotInvModel m;
  m.prior = Prior::gaussian(PsdMatrix::identity(1));
  m.tau = {{1.0}, {1.0}};
  const QuadratureScheme q = QuadratureScheme::default_for(1);
  const RotInvResult res = solve_rotinv(m, SolveSettings{}, q);
  // Fixed point E = r solves r (1 + r) = 1; value ln(1 + g) - g^2 / 2.
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  const double value = std::log1p(g) - 0.5 * g * g;
  const double err = std::max({std::abs(res.value - value), std::abs(res.e_star - g), std::abs(res.r_star - g)});
  bool ok = err <= 1e-6 && std::abs(res.e_star - 0.618034) <= 1e-6 && std::abs(res.r_star - 0.618034) <= 1e-6;

  double worst_int = 0.0;
  const std::vector<SpectralDistribution> taus = {{{1.0}, {1.0}}, {{1.0, 4.0}, {0.5, 0.5}}};
  for (const SpectralDistribution& tau : taus) {
    RotInvModel t = m;
    t.tau = tau;
    for (int i = 0; i <= 20; ++i) {
      const double a = 0.5 * i;
      const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double z) { return r_transform(t, z); }, 0.0, a, 20, 1e-13);
      worst_int = std::max(worst_int, std::abs(num - integrated_r(t, a)));
    }
  }
  ok = ok && worst_int <= 1e-10;

  const SpectralDistribution mp = empirical_spectrum(1, 1000, 1.0, 2024);
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < mp.atoms.size(); ++i) {
    mean += mp.weights[i] * mp.atoms[i];
    second += mp.weights[i] * mp.atoms[i] * mp.atoms[i];
  }
  ok = ok && std::abs(mean - 1.0) <= 0.05 && std::abs(second - 2.0) <= 0.1;
  return {ok, fmt("value %.10f vs analytic %.10f (stated 0.290259 is off by %.1e from ln(1+g)-g^2/2), "
                  "E*=%.9f r*=%.9f, max error %.1e <= 1e-6; integrated_r vs quadrature %.1e <= 1e-10; "
                  "spectrum mean %.4f, second moment %.4f",
                  res.value, value, std::abs(0.290259 - value), res.e_star, res.r_star, err, worst_int, mean, second)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli, const std::string& fixtures) {
  const std::string tmp = std::filesystem::temp_directory_path() / ("rs_limits_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(tmp);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"oracle", "--model " + fixtures + "/rademacher_wigner.json --seed 11 oracle --n 6 --data-samples 300"},
      {"sweep", "--model " + fixtures + "/rademacher_snr.json sweep --path coupling-snr:0 --grid 0.5:2.0:0.05"},
      {"solve", "--model " + fixtures + "/identity2.json solve"},
      {"rotinv", "--model " + fixtures + "/rotinv_two_atom.json rotinv-solve"},
      {"spectrum", "--seed 5 rotinv-spectrum --factors 2 --n 300 --alpha 0.5"},
  };
  bool ok = true;
  std::string differs;
  for (const auto& [name, args] : commands) {
    std::vector<std::string> outputs;
    for (int run = 0; run < 3; ++run) {
      const std::string file = tmp + "/" + name + std::to_string(run);
      const std::string cmd = "RS_LIMITS_THREADS=" + std::to_string(run + 1) + " '" + cli + "' " + args + " > '" +
                              file + "' 2>/dev/null";
      const int rc = std::system(cmd.c_str());
      ok = ok && rc == 0;
      outputs.push_back(slurp(file));
    }
    const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[1] == outputs[2];
    if (!same) differs += " " + name;
    ok = ok && same;
  }
  std::filesystem::remove_all(tmp);
  return {ok, fmt("%zu commands x 3 runs (1, 2, 3 threads) byte-identical%s", commands.size(),
                  differs.empty() ? "" : (", differ:" + differs).c_str())};
}

struct Criterion {
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <rs_limits> <fixture dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const std::string fixtures = argv[2];
  const std::vector<Criterion> criteria = {
      {"scalar Gaussian spiked Wigner", 1, gaussian_scalar},
      {"Rademacher phase transition", 30, phase_transition},
      {"duality gap", 120, duality_gap},
      {"envelope / I-MMSE consistency", 120, envelope},
      {"concavity Hessian", 60, hessian},
      {"finite-n convergence", 600, finite_n},
      {"Nishimori identity", 300, nishimori},
      {"rotationally invariant module", 60, rotinv},
      {"determinism", 120, [&] { return determinism(cli, fixtures); }},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = out.pass && secs < c.limit_seconds;
    failures += !pass;
    std::printf("%s  %s: %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), out.detail.c_str(),
                secs, c.limit_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
