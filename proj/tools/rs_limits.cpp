// rs_limits: command-line front end for the replica-symmetric solvers.
//
// Exit status: 0 success, 1 input error, 2 numerical non-convergence.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rslimits/errors.hpp"
#include "rslimits/model_io.hpp"
#include "rslimits/oracle.hpp"
#include "rslimits/parallel.hpp"
#include "rslimits/rotinv.hpp"
#include "rslimits/solver.hpp"

using namespace rslimits;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNonConvergence = 2;

struct Options {
  std::string model_path;
  std::string out_path;
  std::uint64_t seed = 0;
  int threads = 0;
  double damping = 0.5;
  double tol = 1e-10;
  int max_iters = 10'000;
  int quad_nodes = 0;
  long long mc_samples = 0;
  bool direct_search = false;

  std::string r_json;
  std::string q_json;
  bool force = false;
  std::string path;
  std::string grid;
  bool no_warm = false;
  int n = 6;
  int data_samples = 2000;
  int factors = 1;
  int spectrum_n = 1000;
  double alpha = 1.0;
  int grid_points = 1000;
};

std::string read_file(const std::string& path) {
  if (path.empty()) throw InputError("--model is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Options& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.out_path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + o.out_path + "'");
  out << text;
}

SolveSettings settings_of(const Options& o) {
  SolveSettings s;
  s.damping = o.damping;
  s.tol = o.tol;
  s.max_iters = o.max_iters;
  s.direct_search = o.direct_search;
  s.validate();
  return s;
}

QuadratureScheme quad_of(const Options& o, int d) {
  if (o.quad_nodes < 0) throw InputError("--quad-nodes must be > 0");
  if (o.mc_samples < 0) throw InputError("--mc-samples must be > 0");
  if (o.quad_nodes > 0 && o.mc_samples > 0) {
    throw InputError("--quad-nodes and --mc-samples are mutually exclusive");
  }
  if (o.quad_nodes > 0) return QuadratureScheme::tensor(o.quad_nodes);
  if (o.mc_samples > 0) return QuadratureScheme::monte_carlo(o.mc_samples, o.seed);
  return QuadratureScheme::default_for(d, o.seed);
}

PsdMatrix psd_arg(const std::string& text, int d, const char* name) {
  if (text.empty()) throw InputError(std::string("--") + name + " is required");
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error&) {
    throw InputError(std::string("--") + name + ": invalid JSON matrix");
  }
  // Reuse the model parser's matrix validation through a throwaway document.
  Json doc = {{"d", d}, {"couplings", Json::array()}, {"s", j},
              {"prior", {{"gaussian", {{"cov", matrix_to_json(Matrix::Identity(d, d))}}}}}};
  try {
    return model_from_json(doc).s;
  } catch (const InputError& e) {
    std::string msg = e.what();
    if (msg.rfind("s", 0) == 0) msg = std::string(name) + msg.substr(1);
    throw InputError("--" + msg);
  }
}

Json fixed_point_json(const FixedPointResult& r) {
  return Json{{"init_label", r.init_label},
              {"converged", r.converged},
              {"f", r.f_value},
              {"q_star", matrix_to_json(r.q_star.mat())},
              {"r_star", matrix_to_json(r.r_star.mat())},
              {"residual", r.residual},
              {"iterations", r.iterations}};
}

void warn_hypothesis(const HypothesisCheck& h) {
  if (!h.holds) {
    std::cerr << "warning: positive coupling hypothesis violated (min eigenvalue "
              << format_real(h.min_eigenvalue) << "); results are marked accordingly\n";
  }
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw InputError("--grid is required");
  std::vector<double> grid;
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InputError("--grid: cannot parse '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw InputError("--grid: cannot parse '" + s + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(to_double(item));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw InputError("--grid: expected start:stop:step with step > 0");
    }
    const long count = std::lround((parts[1] - parts[0]) / parts[2]) + 1;
    if (count > 100000) throw InputError("--grid: too many points");
    for (long i = 0; i < count; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return grid;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(to_double(item));
  return grid;
}

int cmd_check(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  const HypothesisCheck h = check_hypothesis(m);
  Json out{{"holds", h.holds},
           {"min_eigenvalue", h.min_eigenvalue},
           {"q_hessian_nsd", q_hessian_nsd(m)}};
  emit(o, dump_json(out));
  return kExitOk;
}

int cmd_potential(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  const HypothesisCheck h = check_hypothesis(m);
  warn_hypothesis(h);
  const PsdMatrix r = psd_arg(o.r_json, m.d, "r");
  const PsdMatrix q = psd_arg(o.q_json, m.d, "q");
  const PotentialValue v = potential(m, r, q, quad_of(o, m.d));
  Json out{{"value", v.value},
           {"channel_term", v.channel_term},
           {"linear_term", v.linear_term},
           {"quartic_term", v.quartic_term},
           {"q_outside_interval", v.q_outside_interval},
           {"hypothesis_violated", !h.holds}};
  emit(o, dump_json(out));
  return kExitOk;
}

int cmd_solve(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  const HypothesisCheck h = check_hypothesis(m);
  warn_hypothesis(h);
  const SolveOutcome res = solve_f(m, settings_of(o), quad_of(o, m.d));
  Json candidates = Json::array();
  for (const FixedPointResult& c : res.candidates) candidates.push_back(fixed_point_json(c));
  Json out{{"f", res.best.f_value},
           {"q_star", matrix_to_json(res.best.q_star.mat())},
           {"r_star", matrix_to_json(res.best.r_star.mat())},
           {"residual", res.best.residual},
           {"iterations", res.best.iterations},
           {"init_label", res.best.init_label},
           {"converged", res.best.converged},
           {"tie", res.tie},
           {"hypothesis_violated", !h.holds},
           {"candidates", candidates}};
  emit(o, dump_json(out));
  return res.best.converged ? kExitOk : kExitNonConvergence;
}

int cmd_infsup(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  const SolveSettings settings = settings_of(o);
  const QuadratureScheme quad = quad_of(o, m.d);
  const InfSupResult res = solve_infsup(m, settings, quad);
  const SolveOutcome single = solve_f(m, settings, quad);
  Json candidates = Json::array();
  for (const InfSupCandidate& c : res.candidates) {
    candidates.push_back(Json{{"r", matrix_to_json(c.r.mat())},
                              {"q_argmax", matrix_to_json(c.q_argmax.mat())},
                              {"value", c.value},
                              {"inner_iterations", c.inner_iterations},
                              {"inner_converged", c.inner_converged}});
  }
  Json out{{"value", res.value},
           {"r", matrix_to_json(res.r.mat())},
           {"q", matrix_to_json(res.q.mat())},
           {"converged", res.converged},
           {"single_letter_f", single.best.f_value},
           {"duality_gap", std::abs(res.value - single.best.f_value)},
           {"candidates", candidates}};
  emit(o, dump_json(out));
  return res.converged ? kExitOk : kExitNonConvergence;
}

int cmd_mmse(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  const HypothesisCheck h = check_hypothesis(m);
  warn_hypothesis(h);
  const MmsePrediction p = predict_mmse(m, settings_of(o), quad_of(o, m.d), o.force);
  if (p.regularized) std::cerr << "warning: S is singular; 1e-8 I was added\n";
  if (p.tie) std::cerr << "warning: optimum is not unique; per-branch MMSE matrices reported\n";
  Json branches = Json::array();
  for (const PsdMatrix& b : p.branch_mmse) branches.push_back(matrix_to_json(b.mat()));
  Json out{{"mmse", matrix_to_json(p.mmse.mat())},
           {"grad_f", matrix_to_json(p.grad_f.mat())},
           {"consistency_gap", p.consistency_gap},
           {"f", p.optimum.f_value},
           {"q_star", matrix_to_json(p.optimum.q_star.mat())},
           {"converged", p.optimum.converged},
           {"tie", p.tie},
           {"branch_mmse", branches},
           {"regularized", p.regularized},
           {"hypothesis_violated", !h.holds}};
  emit(o, dump_json(out));
  return p.optimum.converged ? kExitOk : kExitNonConvergence;
}

int cmd_sweep(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  if (o.path.empty()) throw InputError("--path is required");
  const SweepPath path = SweepPath::parse(o.path);
  const std::vector<double> grid = parse_grid(o.grid);
  path.apply(m, grid.front());
  const std::vector<SweepRow> rows = sweep(m, path, grid, settings_of(o), quad_of(o, m.d), !o.no_warm);
  std::string csv = "param,f,q_trace,r_trace,mmse_trace,converged,branch\n";
  int unconverged = 0;
  for (const SweepRow& r : rows) {
    csv += format_real(r.param) + "," + format_real(r.f) + "," + format_real(r.q_trace) + "," +
           format_real(r.r_trace) + "," + format_real(r.mmse_trace) + "," +
           (r.converged ? "true" : "false") + "," + r.branch + "\n";
    if (!r.converged) ++unconverged;
  }
  emit(o, csv);
  if (unconverged > 0) {
    std::cerr << "warning: " << unconverged << " of " << rows.size()
              << " sweep points did not converge (marked in the converged column)\n";
  }
  return kExitOk;
}

int cmd_oracle(const Options& o) {
  const ModelSpec m = parse_model(read_file(o.model_path));
  check_enumeration_budget(m, o.n);
  const FiniteMiEstimate mi = finite_mi(m, o.n, o.data_samples, o.seed);
  const NishimoriEstimate nish = nishimori_residual(m, o.n, o.data_samples, o.seed);
  Json out{{"n", o.n},
           {"data_samples", o.data_samples},
           {"seed", o.seed},
           {"finite_mi", mi.mi_per_row},
           {"finite_mi_std_err", mi.std_err},
           {"mmse_avg", matrix_to_json(mi.mmse_avg.mat())},
           {"nishimori_residual", nish.residual},
           {"nishimori_std_err", nish.std_err},
           {"overlap_mean", matrix_to_json(nish.overlap_mean)},
           {"replica_overlap_mean", matrix_to_json(nish.replica_overlap_mean)}};
  emit(o, dump_json(out));
  return kExitOk;
}

int cmd_rotinv_solve(const Options& o) {
  const RotInvModel m = parse_rotinv(read_file(o.model_path));
  const RotInvResult res = solve_rotinv(m, settings_of(o), quad_of(o, 1), o.grid_points);
  Json fps = Json::array();
  bool all_converged = true;
  for (const RotInvFixedPoint& f : res.fixed_points) {
    fps.push_back(Json{{"e", f.e}, {"r", f.r}, {"value", f.value}, {"residual", f.residual},
                       {"origin", f.origin}, {"converged", f.converged}});
    all_converged = all_converged && f.converged;
  }
  Json out{{"value", res.value},
           {"e_star", res.e_star},
           {"r_star", res.r_star},
           {"at_boundary", res.at_boundary},
           {"sup_over_fixed_points", res.sup_over_fixed_points},
           {"grid_value", res.grid_value},
           {"grid_gap", res.grid_gap},
           {"fixed_points", fps}};
  emit(o, dump_json(out));
  return all_converged ? kExitOk : kExitNonConvergence;
}

int cmd_rotinv_spectrum(const Options& o) {
  const SpectralDistribution tau = empirical_spectrum(o.factors, o.spectrum_n, o.alpha, o.seed);
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < tau.atoms.size(); ++i) {
    mean += tau.weights[i] * tau.atoms[i];
    second += tau.weights[i] * tau.atoms[i] * tau.atoms[i];
  }
  Json out{{"factors", o.factors}, {"n", o.spectrum_n}, {"alpha", o.alpha}, {"seed", o.seed},
           {"mean", mean}, {"second_moment", second}, {"tau", spectrum_to_json(tau)}};
  emit(o, dump_json(out));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replica-symmetric limits of multiview spiked matrix models"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  app.add_option("--model", o.model_path, "Model JSON file");
  app.add_option("--out", o.out_path, "Output file (default stdout)");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--threads", o.threads, "Worker threads (env RS_LIMITS_THREADS)");
  app.add_option("--damping", o.damping, "State-evolution damping in (0, 1]");
  app.add_option("--tol", o.tol, "Fixed-point tolerance (Frobenius)");
  app.add_option("--max-iters", o.max_iters, "Maximum state-evolution iterations");
  app.add_option("--quad-nodes", o.quad_nodes, "Gauss-Hermite nodes per dimension");
  app.add_option("--mc-samples", o.mc_samples, "Monte Carlo samples for the channel");
  app.add_flag("--direct-search", o.direct_search, "Add a derivative-free search over q");

  app.add_subcommand("check-hypothesis", "Test the positive coupling structure");
  auto* pot = app.add_subcommand("potential", "Evaluate the potential at (r, q)");
  pot->add_option("--r", o.r_json, "r as a JSON matrix")->required();
  pot->add_option("--q", o.q_json, "q as a JSON matrix")->required();
  app.add_subcommand("solve", "Minimize the single-letter potential");
  app.add_subcommand("infsup", "Inf-sup cross-check");
  auto* mm = app.add_subcommand("mmse", "Predicted MMSE matrix and gradient check");
  mm->add_flag("--force", o.force, "Allow singular S (adds 1e-8 I)");
  auto* sw = app.add_subcommand("sweep", "Parameter sweep to CSV");
  sw->add_option("--path", o.path, "coupling-scale:L, coupling-snr:L or s-entry:K,L")->required();
  sw->add_option("--grid", o.grid, "start:stop:step or a comma list")->required();
  sw->add_flag("--no-warm", o.no_warm, "Independent grid points (parallel)");
  auto* orc = app.add_subcommand("oracle", "Exact finite-n posterior statistics");
  orc->add_option("--n", o.n, "Rows");
  orc->add_option("--data-samples", o.data_samples, "Data replicas");
  auto* rs = app.add_subcommand("rotinv-solve", "Rotationally invariant replica formula");
  rs->add_option("--grid-points", o.grid_points, "Cross-check grid points per axis");
  auto* spec = app.add_subcommand("rotinv-spectrum", "Empirical spectrum of Gaussian products");
  spec->add_option("--factors", o.factors, "Number of Gaussian factors (0..5)");
  spec->add_option("--n", o.spectrum_n, "Columns (<= 2000)");
  spec->add_option("--alpha", o.alpha, "Aspect ratio m / n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    int threads = o.threads;
    if (threads <= 0) {
      if (const char* env = std::getenv("RS_LIMITS_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) set_thread_count(threads);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "check-hypothesis") return cmd_check(o);
    if (name == "potential") return cmd_potential(o);
    if (name == "solve") return cmd_solve(o);
    if (name == "infsup") return cmd_infsup(o);
    if (name == "mmse") return cmd_mmse(o);
    if (name == "sweep") return cmd_sweep(o);
    if (name == "oracle") return cmd_oracle(o);
    if (name == "rotinv-solve") return cmd_rotinv_solve(o);
    if (name == "rotinv-spectrum") return cmd_rotinv_spectrum(o);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNonConvergence;
  }
  return kExitInput;
}
