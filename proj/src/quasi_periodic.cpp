#include "favard/quasi_periodic.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "favard/errors.hpp"
#include "json_util.hpp"

namespace favard {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot_k(const std::vector<int>& k, std::span<const double> theta) {
  double arg = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) arg += static_cast<double>(k[j]) * theta[j];
  return arg;
}

void check_index(const std::vector<int>& k, int m, const std::string& field) {
  if (static_cast<int>(k.size()) != m) {
    throw ValidationError(field, "multi-index has " + std::to_string(k.size()) +
                                     " entries, expected " + std::to_string(m));
  }
}

// p / (c + q) applied in place to f; returns |c + q|.
double apply_reciprocal(const Reciprocal& rec, std::span<const double> theta, Vector& f) {
  double den = rec.c;
  for (const auto& term : rec.q_terms) {
    const double arg = dot_k(term.k, theta);
    den += term.cos * std::cos(arg) + term.sin * std::sin(arg);
  }
  if (!(std::abs(den) >= rec.eta)) {
    throw NearSingularityError("reciprocal denominator " + std::to_string(den) +
                               " is below margin " + std::to_string(rec.eta));
  }
  f /= den;
  return std::abs(den);
}

}  // namespace

std::string to_string(TimeDomain domain) {
  return domain == TimeDomain::discrete ? "discrete" : "continuous";
}

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double angular_distance(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

TorusPoint advance_phase(const TorusPoint& theta0, std::span<const double> omega, double t) {
  TorusPoint out(theta0.size());
  for (std::size_t j = 0; j < theta0.size(); ++j) out[j] = wrap_angle(theta0[j] + t * omega[j]);
  return out;
}

double return_quality(std::span<const double> omega, double tau) {
  double worst = 0.0;
  for (double w : omega) worst = std::max(worst, angular_distance(tau * w, 0.0));
  return worst;
}

void QuasiPeriodicSpec::validate() const {
  if (frequencies.empty()) throw ValidationError("frequencies", "at least one frequency is required");
  std::set<double> seen;
  for (double w : frequencies) {
    if (!std::isfinite(w) || w == 0.0) throw ValidationError("frequencies", "must be finite and nonzero");
    if (!seen.insert(w).second) throw ValidationError("frequencies", "must be pairwise distinct");
  }
  if (dimension < 1) throw ValidationError("dimension", "must be at least 1");
  if (delay_order < 0) throw ValidationError("delay_order", "must be nonnegative");
  if (delay_order > 0 && time_domain != TimeDomain::discrete) {
    throw ValidationError("delay_order", "delay systems are discrete-time only");
  }
  const int m = torus_dim();
  const int n = dimension;
  const int cols = state_dim();
  for (const auto& term : matrix_terms) {
    check_index(term.k, m, "matrix_terms.k");
    if (term.cos.rows() != n || term.cos.cols() != cols || term.sin.rows() != n ||
        term.sin.cols() != cols) {
      throw ValidationError("matrix_terms", "coefficient matrices must be " + std::to_string(n) +
                                                "x" + std::to_string(cols));
    }
    if (!term.cos.allFinite() || !term.sin.allFinite()) {
      throw ValidationError("matrix_terms", "coefficients must be finite");
    }
  }
  for (const auto& term : forcing_terms) {
    check_index(term.k, m, "forcing_terms.k");
    if (term.cos.size() != n || term.sin.size() != n) {
      throw ValidationError("forcing_terms", "coefficient vectors must have length " + std::to_string(n));
    }
    if (!term.cos.allFinite() || !term.sin.allFinite()) {
      throw ValidationError("forcing_terms", "coefficients must be finite");
    }
  }
  if (reciprocal) {
    if (!std::isfinite(reciprocal->c)) throw ValidationError("reciprocal.c", "must be finite");
    if (!(reciprocal->eta > 0.0)) throw ValidationError("reciprocal.eta", "must be positive");
    for (const auto& term : reciprocal->q_terms) check_index(term.k, m, "reciprocal.q_terms.k");
  }
}

namespace {

// Angles are passed to cos/sin as they are: the library reduces them exactly,
// while wrapping first would add a rounding error of order ulp(2 pi).
Coefficients evaluate_angles(const QuasiPeriodicSpec& spec, std::span<const double> angles) {
  Coefficients out;
  out.A = Matrix::Zero(spec.dimension, spec.state_dim());
  out.f = Vector::Zero(spec.dimension);
  for (const auto& term : spec.matrix_terms) {
    const double arg = dot_k(term.k, angles);
    out.A += term.cos * std::cos(arg) + term.sin * std::sin(arg);
  }
  for (const auto& term : spec.forcing_terms) {
    const double arg = dot_k(term.k, angles);
    out.f += term.cos * std::cos(arg) + term.sin * std::sin(arg);
  }
  if (spec.reciprocal) {
    out.min_denominator = apply_reciprocal(*spec.reciprocal, angles, out.f);
    out.near_singular = out.min_denominator < kReciprocalWarnBand;
  }
  return out;
}

}  // namespace

Coefficients eval_torus(const QuasiPeriodicSpec& spec, std::span<const double> theta) {
  std::vector<double> wrapped(theta.begin(), theta.end());
  for (double& x : wrapped) x = wrap_angle(x);
  return evaluate_angles(spec, wrapped);
}

Coefficients eval_base(const QuasiPeriodicSpec& spec, const TorusPoint& theta0, double t) {
  if (!std::isfinite(t)) throw ValidationError("t", "must be finite");
  if (spec.is_discrete() && t != std::round(t)) {
    throw ValidationError("t", "discrete-time evaluation requires an integer time");
  }
  std::vector<double> angles(theta0.size());
  for (std::size_t j = 0; j < theta0.size(); ++j) angles[j] = theta0[j] + t * spec.frequencies[j];
  return evaluate_angles(spec, angles);
}

void eval_base_into(const QuasiPeriodicSpec& spec, const TorusPoint& theta0, double t,
                    std::vector<double>& phase, Matrix& A, Vector& f) {
  const auto& omega = spec.frequencies;
  phase.resize(omega.size());
  for (std::size_t j = 0; j < omega.size(); ++j) phase[j] = theta0[j] + t * omega[j];
  A.setZero(spec.dimension, spec.state_dim());
  f.setZero(spec.dimension);
  for (const auto& term : spec.matrix_terms) {
    const double arg = dot_k(term.k, phase);
    const double c = std::cos(arg);
    const double s = std::sin(arg);
    A += term.cos * c + term.sin * s;
  }
  for (const auto& term : spec.forcing_terms) {
    const double arg = dot_k(term.k, phase);
    f += term.cos * std::cos(arg) + term.sin * std::sin(arg);
  }
  if (spec.reciprocal) apply_reciprocal(*spec.reciprocal, phase, f);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::vector<int> index_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of integers");
  std::vector<int> k;
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw ValidationError(field, "expected an array of integers");
    k.push_back(e.get<int>());
  }
  return k;
}

}  // namespace

json to_json(const QuasiPeriodicSpec& spec) {
  json doc;
  doc["frequencies"] = spec.frequencies;
  json mterms = json::array();
  for (const auto& t : spec.matrix_terms) {
    mterms.push_back({{"k", t.k}, {"cos", matrix_json(t.cos)}, {"sin", matrix_json(t.sin)}});
  }
  doc["matrix_terms"] = std::move(mterms);
  json fterms = json::array();
  for (const auto& t : spec.forcing_terms) {
    fterms.push_back({{"k", t.k}, {"cos", vector_json(t.cos)}, {"sin", vector_json(t.sin)}});
  }
  doc["forcing_terms"] = std::move(fterms);
  if (spec.reciprocal) {
    json q = json::array();
    for (const auto& t : spec.reciprocal->q_terms) q.push_back({{"k", t.k}, {"cos", t.cos}, {"sin", t.sin}});
    doc["reciprocal"] = {{"c", spec.reciprocal->c}, {"q_terms", std::move(q)}, {"eta", spec.reciprocal->eta}};
  }
  doc["time_domain"] = to_string(spec.time_domain);
  doc["dimension"] = spec.dimension;
  doc["delay_order"] = spec.delay_order;
  return doc;
}

QuasiPeriodicSpec spec_from_json(const json& doc) {
  using detail::require;
  using detail::reject_unknown;
  if (!doc.is_object()) throw ValidationError("spec", "expected an object");
  reject_unknown(doc, {"frequencies", "matrix_terms", "forcing_terms", "reciprocal", "time_domain",
                       "dimension", "delay_order"},
                 "spec");
  QuasiPeriodicSpec spec;
  spec.frequencies = detail::real_list(require(doc, "frequencies"), "frequencies");
  spec.dimension = detail::integer(require(doc, "dimension"), "dimension");
  spec.delay_order = doc.contains("delay_order") ? detail::integer(doc.at("delay_order"), "delay_order") : 0;
  const std::string domain = detail::string(require(doc, "time_domain"), "time_domain");
  if (domain == "continuous") {
    spec.time_domain = TimeDomain::continuous;
  } else if (domain == "discrete") {
    spec.time_domain = TimeDomain::discrete;
  } else {
    throw ValidationError("time_domain", "expected 'continuous' or 'discrete'");
  }

  const int cols = spec.state_dim();
  if (doc.contains("matrix_terms")) {
    const auto& arr = doc.at("matrix_terms");
    if (!arr.is_array()) throw ValidationError("matrix_terms", "expected an array");
    for (const auto& t : arr) {
      reject_unknown(t, {"k", "cos", "sin"}, "matrix_terms");
      MatrixTerm term;
      term.k = index_from(require(t, "k", "matrix_terms"), "matrix_terms.k");
      term.cos = t.contains("cos") ? detail::matrix(t.at("cos"), "matrix_terms.cos")
                                   : Matrix::Zero(spec.dimension, cols);
      term.sin = t.contains("sin") ? detail::matrix(t.at("sin"), "matrix_terms.sin")
                                   : Matrix::Zero(spec.dimension, cols);
      spec.matrix_terms.push_back(std::move(term));
    }
  }
  if (doc.contains("forcing_terms")) {
    const auto& arr = doc.at("forcing_terms");
    if (!arr.is_array()) throw ValidationError("forcing_terms", "expected an array");
    for (const auto& t : arr) {
      reject_unknown(t, {"k", "cos", "sin"}, "forcing_terms");
      VectorTerm term;
      term.k = index_from(require(t, "k", "forcing_terms"), "forcing_terms.k");
      term.cos = t.contains("cos") ? detail::vector(t.at("cos"), "forcing_terms.cos")
                                   : Vector::Zero(spec.dimension);
      term.sin = t.contains("sin") ? detail::vector(t.at("sin"), "forcing_terms.sin")
                                   : Vector::Zero(spec.dimension);
      spec.forcing_terms.push_back(std::move(term));
    }
  }
  if (doc.contains("reciprocal")) {
    const auto& r = doc.at("reciprocal");
    reject_unknown(r, {"c", "q_terms", "eta"}, "reciprocal");
    Reciprocal rec;
    rec.c = detail::real(require(r, "c", "reciprocal"), "reciprocal.c");
    if (r.contains("eta")) rec.eta = detail::real(r.at("eta"), "reciprocal.eta");
    if (r.contains("q_terms")) {
      for (const auto& t : r.at("q_terms")) {
        reject_unknown(t, {"k", "cos", "sin"}, "reciprocal.q_terms");
        ScalarTerm term;
        term.k = index_from(require(t, "k", "reciprocal.q_terms"), "reciprocal.q_terms.k");
        term.cos = t.contains("cos") ? detail::real(t.at("cos"), "reciprocal.q_terms.cos") : 0.0;
        term.sin = t.contains("sin") ? detail::real(t.at("sin"), "reciprocal.q_terms.sin") : 0.0;
        rec.q_terms.push_back(std::move(term));
      }
    }
    spec.reciprocal = std::move(rec);
  }
  spec.validate();
  return spec;
}

}  // namespace favard
