#include "rslimits/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rslimits/errors.hpp"

namespace rslimits {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  const std::string sub = path.empty() ? key : path + "." + key;
  if (it == obj.end()) fail(sub, "missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "non-finite number");
  return v;
}

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

Vector vector_of(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], indexed(path, i));
  return v;
}

Matrix matrix_of(const Json& j, int d, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    fail(path, "expected a " + std::to_string(d) + "x" + std::to_string(d) + " array");
  }
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    const std::string row_path = indexed(path, i);
    const Vector row = vector_of(j[i], row_path);
    if (row.size() != d) fail(row_path, "expected " + std::to_string(d) + " entries");
    m.row(i) = row.transpose();
  }
  return m;
}

PsdMatrix psd_of(const Json& j, int d, const std::string& path) {
  const Matrix m = matrix_of(j, d, path);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) fail(path, "matrix is not symmetric");
  const SymMatrix sym = SymMatrix::symmetrized(m);
  if (!is_psd(sym)) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite (min eigenvalue " << min_eigenvalue(sym) << ")";
    fail(path, os.str());
  }
  return PsdMatrix(sym);
}

Vector weights_of(const Json& j, std::size_t count, const std::string& path) {
  const Vector w = vector_of(j, path);
  if (static_cast<std::size_t>(w.size()) != count) fail(path, "length differs from atoms");
  if (w.size() > 0 && w.minCoeff() < 0.0) fail(path, "weights must be nonnegative");
  if (std::abs(w.sum() - 1.0) > 1e-12) {
    fail(path, "weights sum to " + format_real(w.sum()) + ", expected 1");
  }
  return w;
}

Prior prior_of(const Json& j, int d, const std::string& path) {
  if (!j.is_object() || j.size() != 1) fail(path, "expected exactly one of \"discrete\" or \"gaussian\"");
  if (j.contains("discrete")) {
    const std::string base = path + ".discrete";
    const Json& body = field(j, "discrete", path);
    const Json& atoms_j = field(body, "atoms", base);
    const std::string atoms_path = base + ".atoms";
    if (!atoms_j.is_array() || atoms_j.empty()) fail(atoms_path, "expected a nonempty array");
    std::vector<Vector> atoms;
    for (std::size_t i = 0; i < atoms_j.size(); ++i) {
      const std::string p = indexed(atoms_path, i);
      Vector a = (d == 1 && atoms_j[i].is_number()) ? Vector::Constant(1, number(atoms_j[i], p))
                                                     : vector_of(atoms_j[i], p);
      if (a.size() != d) fail(p, "expected " + std::to_string(d) + " coordinates");
      atoms.push_back(std::move(a));
    }
    Vector w = weights_of(field(body, "weights", base), atoms.size(), base + ".weights");
    return Prior::discrete(std::move(atoms), std::move(w));
  }
  if (j.contains("gaussian")) {
    const Json& body = field(j, "gaussian", path);
    return Prior::gaussian(psd_of(field(body, "cov", path + ".gaussian"), d, path + ".gaussian.cov"));
  }
  fail(path, "expected \"discrete\" or \"gaussian\"");
}

Json parse_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

Json prior_to_json(const Prior& p) {
  Json out = Json::object();
  if (p.is_discrete()) {
    Json atoms = Json::array();
    for (const Vector& a : p.atoms()) atoms.push_back(std::vector<double>(a.data(), a.data() + a.size()));
    const Vector& w = p.weights();
    out["discrete"] = {{"atoms", atoms}, {"weights", std::vector<double>(w.data(), w.data() + w.size())}};
  } else {
    out["gaussian"] = {{"cov", matrix_to_json(p.covariance().mat())}};
  }
  return out;
}

}  // namespace

ModelSpec model_from_json(const Json& doc) {
  if (!doc.is_object()) fail("model", "expected an object");
  const Json& d_j = field(doc, "d", "");
  if (!d_j.is_number_integer() || d_j.get<long long>() < 1 || d_j.get<long long>() > 16) {
    fail("d", "expected an integer in [1, 16]");
  }
  ModelSpec m;
  m.d = d_j.get<int>();
  const Json& cj = field(doc, "couplings", "");
  if (!cj.is_array()) fail("couplings", "expected an array of matrices");
  for (std::size_t l = 0; l < cj.size(); ++l) m.couplings.push_back(matrix_of(cj[l], m.d, indexed("couplings", l)));
  m.s = psd_of(field(doc, "s", ""), m.d, "s");
  m.prior = prior_of(field(doc, "prior", ""), m.d, "prior");
  m.validate();
  return m;
}

ModelSpec parse_model(const std::string& json_text) { return model_from_json(parse_text(json_text)); }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json model_to_json(const ModelSpec& m) {
  Json out = Json::object();
  out["d"] = m.d;
  Json cs = Json::array();
  for (const Matrix& b : m.couplings) cs.push_back(matrix_to_json(b));
  out["couplings"] = cs;
  out["s"] = matrix_to_json(m.s.mat());
  out["prior"] = prior_to_json(m.prior);
  return out;
}

std::string serialize_model(const ModelSpec& m) { return dump_json(model_to_json(m)); }

RotInvModel parse_rotinv(const std::string& json_text) {
  const Json doc = parse_text(json_text);
  if (!doc.is_object()) fail("model", "expected an object");
  RotInvModel m;
  m.alpha = number(field(doc, "alpha", ""), "alpha");
  m.lambda = number(field(doc, "lambda", ""), "lambda");
  if (!(m.alpha > 0.0)) fail("alpha", "must be > 0");
  if (!(m.lambda > 0.0)) fail("lambda", "must be > 0");
  m.prior = prior_of(field(doc, "prior", ""), 1, "prior");
  const Json& tj = field(doc, "tau", "");
  const Vector atoms = vector_of(field(tj, "atoms", "tau"), "tau.atoms");
  const Vector w = weights_of(field(tj, "weights", "tau"), static_cast<std::size_t>(atoms.size()), "tau.weights");
  m.tau.atoms.assign(atoms.data(), atoms.data() + atoms.size());
  m.tau.weights.assign(w.data(), w.data() + w.size());
  m.validate();
  return m;
}

Json spectrum_to_json(const SpectralDistribution& tau) {
  return Json{{"atoms", tau.atoms}, {"weights", tau.weights}};
}

std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace {

bool is_flat(const Json& j) {
  for (const Json& e : j) {
    if (e.is_structured()) return false;
  }
  return true;
}

void write(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner + Json(it.key()).dump() + ": ";
      write(it.value(), indent + 1, out);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (is_flat(j)) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        write(j[i], indent + 1, out);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += inner;
      write(j[i], indent + 1, out);
    }
    out += "\n" + pad + "]";
  } else if (j.is_number_float()) {
    out += format_real(j.get<double>());
  } else {
    out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  write(j, 0, out);
  out += "\n";
  return out;
}

}  // namespace rslimits
