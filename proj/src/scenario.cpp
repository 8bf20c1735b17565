#include "favard/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "favard/errors.hpp"
#include "favard/io.hpp"
#include "json_util.hpp"

namespace favard {

namespace {

using nlohmann::json;
using detail::reject_unknown;
using detail::require;

constexpr const char* kVersion = "favard 0.1.0";

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <class F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Position of a byte offset as 1-based line and column.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

bool filesystem_safe(const std::string& name) {
  if (name.empty() || name.front() == '.' || name.size() > 128) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  });
}

SeedSpec seed_from_json(const json& j) {
  reject_unknown(j, {"kind", "value", "start", "burn_in", "offset"}, "seed");
  SeedSpec seed;
  const std::string kind = detail::string(require(j, "kind", "seed"), "seed.kind");
  if (kind == "explicit") {
    reject_unknown(j, {"kind", "value"}, "seed");
    seed.kind = SeedSpec::Kind::explicit_value;
    seed.value = detail::vector(require(j, "value", "seed"), "seed.value");
  } else if (kind == "long-run") {
    reject_unknown(j, {"kind", "start", "burn_in", "offset"}, "seed");
    seed.kind = SeedSpec::Kind::long_run;
    if (j.contains("start")) seed.value = detail::vector(j.at("start"), "seed.start");
    if (j.contains("burn_in")) seed.burn_in = detail::real(j.at("burn_in"), "seed.burn_in");
    if (j.contains("offset")) seed.offset = detail::vector(j.at("offset"), "seed.offset");
  } else {
    throw ValidationError("seed.kind", "expected 'explicit' or 'long-run'");
  }
  return seed;
}

json seed_json(const SeedSpec& seed) {
  if (seed.kind == SeedSpec::Kind::explicit_value) return {{"kind", "explicit"}, {"value", vector_json(seed.value)}};
  json j = {{"kind", "long-run"}, {"burn_in", seed.burn_in}, {"start", vector_json(seed.value)}};
  if (seed.offset) j["offset"] = vector_json(*seed.offset);
  return j;
}

SolverConfig solver_from_json(const json& j) {
  reject_unknown(j, {"delta_cap", "horizon", "min_tau", "scan_step", "composition_depth", "method", "iterations",
                     "delta_grid"},
                 "solver");
  SolverConfig c;
  c.delta_cap = detail::real(require(j, "delta_cap", "solver"), "solver.delta_cap");
  c.horizon = detail::real(require(j, "horizon", "solver"), "solver.horizon");
  if (j.contains("min_tau")) c.min_tau = detail::real(j.at("min_tau"), "solver.min_tau");
  if (j.contains("scan_step")) c.scan_step = detail::real(j.at("scan_step"), "solver.scan_step");
  if (j.contains("composition_depth")) {
    c.composition_depth = detail::integer(j.at("composition_depth"), "solver.composition_depth");
  }
  if (j.contains("method")) c.method = parse_solver_method(detail::string(j.at("method"), "solver.method"));
  if (j.contains("iterations")) c.iterations = detail::integer(j.at("iterations"), "solver.iterations");
  if (j.contains("delta_grid")) c.delta_grid = detail::real_list(j.at("delta_grid"), "solver.delta_grid");
  return c;
}

ComparabilityConfig comparability_from_json(const json& j) {
  reject_unknown(j, {"epsilons", "delta_grid", "horizon", "min_tau", "min_return", "scan_step"}, "comparability");
  ComparabilityConfig c;
  c.horizon = detail::real(require(j, "horizon", "comparability"), "comparability.horizon");
  if (j.contains("epsilons")) c.epsilons = detail::real_list(j.at("epsilons"), "comparability.epsilons");
  if (j.contains("delta_grid")) c.delta_grid = detail::real_list(j.at("delta_grid"), "comparability.delta_grid");
  if (j.contains("min_tau")) c.min_tau = detail::real(j.at("min_tau"), "comparability.min_tau");
  if (j.contains("min_return")) c.min_return = detail::real(j.at("min_return"), "comparability.min_return");
  if (j.contains("scan_step")) c.scan_step = detail::real(j.at("scan_step"), "comparability.scan_step");
  return c;
}

AlmostPeriodConfig almost_periods_from_json(const json& j) {
  reject_unknown(j, {"epsilon", "window", "scan_min", "scan_max", "scan_step", "dt"}, "almost_periods");
  AlmostPeriodConfig c;
  c.epsilon = detail::real(require(j, "epsilon", "almost_periods"), "almost_periods.epsilon");
  c.window = detail::real(require(j, "window", "almost_periods"), "almost_periods.window");
  if (j.contains("scan_min")) c.scan_min = detail::real(j.at("scan_min"), "almost_periods.scan_min");
  c.scan_max = detail::real(require(j, "scan_max", "almost_periods"), "almost_periods.scan_max");
  if (j.contains("scan_step")) c.scan_step = detail::real(j.at("scan_step"), "almost_periods.scan_step");
  if (j.contains("dt")) c.dt = detail::real(j.at("dt"), "almost_periods.dt");
  return c;
}

void check_dim(const Vector& v, int n, const std::string& field) {
  if (v.size() != n) {
    throw ValidationError(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  if (!v.allFinite()) throw ValidationError(field, "entries must be finite");
}

void check_positive_list(const std::vector<double>& v, const std::string& field) {
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError(field, "entries must be positive and finite");
  }
}

// Forcing sample from t0 = -window, long enough to cover [-window, scan_max + window].
std::size_t forcing_count(const AlmostPeriodConfig& c) {
  return static_cast<std::size_t>(std::ceil((c.scan_max + 2.0 * c.window) / c.dt - 1e-9)) + 1;
}

json favard_document(const RunRecord& rec) {
  const Scenario& sc = rec.scenario;
  json doc;
  if (rec.favard) {
    doc = to_json(*rec.favard);
  } else {
    doc = {{"verdict", to_string(rec.verdict)}, {"verdict_reason", rec.verdict_reason}};
  }
  doc["verdict"] = to_string(rec.verdict);
  doc["verdict_reason"] = rec.verdict_reason;
  doc["provenance"] = {
      {"scenario", sc.name},
      {"scenario_hash", rec.scenario_hash},
      {"u0", vector_json(rec.u0)},
      {"delta_cap", sc.solver.delta_cap},
      {"horizon", sc.solver.horizon},
      {"min_tau", sc.solver.min_tau},
      {"scan_step", rec.returns.scan_step},
      {"h", sc.spec.is_discrete() ? 1.0 : sc.h},
      {"certification_tolerance", rec.certification_tolerance},
      {"returns_found", rec.returns.returns.size() - rec.returns.composed},
      {"returns_composed", rec.returns.composed},
      {"max_composition_defect", rec.returns.max_composition_defect},
      {"optimizer",
       {{"method", to_string(sc.solver.method)},
        {"iterations", sc.solver.iterations},
        {"composition_depth", sc.solver.composition_depth}}},
  };
  doc["run_notices"] = rec.notices;
  return doc;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void Scenario::validate() const {
  if (!filesystem_safe(name)) throw ValidationError("name", "must be nonempty and use only [A-Za-z0-9._-]");
  spec.validate();
  const int n = spec.state_dim();
  if (!base_phase.empty() && static_cast<int>(base_phase.size()) != spec.torus_dim()) {
    throw ValidationError("base_phase", "expected one angle per frequency");
  }
  for (double a : base_phase) {
    if (!std::isfinite(a)) throw ValidationError("base_phase", "angles must be finite");
  }
  if (!spec.is_discrete() && !(h > 0.0 && std::isfinite(h))) throw ValidationError("h", "must be positive");

  if (seed.kind == SeedSpec::Kind::explicit_value) {
    check_dim(seed.value, n, "seed.value");
  } else {
    if (seed.value.size() != 0) check_dim(seed.value, n, "seed.start");
    if (seed.offset) check_dim(*seed.offset, n, "seed.offset");
    if (!(seed.burn_in >= 0.0)) throw ValidationError("seed.burn_in", "must be nonnegative");
    if (spec.is_discrete() && seed.burn_in != std::floor(seed.burn_in)) {
      throw ValidationError("seed.burn_in", "must be an integer in discrete time");
    }
    if (!(seed.burn_in < solver.horizon)) throw ValidationError("seed.burn_in", "must be below solver.horizon");
  }
  if (anchor) check_dim(*anchor, n, "anchor");

  if (!(solver.delta_cap > 0.0) || solver.delta_cap > std::numbers::pi) {
    throw ValidationError("solver.delta_cap", "must lie in (0, pi]");
  }
  if (!(solver.horizon > 0.0) || !std::isfinite(solver.horizon)) {
    throw ValidationError("solver.horizon", "must be positive");
  }
  if (!(solver.min_tau >= 0.0) || !(solver.min_tau < solver.horizon)) {
    throw ValidationError("solver.min_tau", "must lie in [0, horizon)");
  }
  if (!(solver.scan_step >= 0.0)) throw ValidationError("solver.scan_step", "must be nonnegative");
  if (solver.composition_depth < 0) throw ValidationError("solver.composition_depth", "must be nonnegative");
  if (solver.iterations < 1) throw ValidationError("solver.iterations", "must be positive");
  check_positive_list(solver.delta_grid, "solver.delta_grid");

  if (comparability) {
    if (comparability->epsilons.empty()) throw ValidationError("comparability.epsilons", "must be nonempty");
    check_positive_list(comparability->epsilons, "comparability.epsilons");
    check_positive_list(comparability->delta_grid, "comparability.delta_grid");
    if (!(comparability->horizon > 0.0) || !std::isfinite(comparability->horizon)) {
      throw ValidationError("comparability.horizon", "must be positive");
    }
    if (!(comparability->min_tau >= 0.0)) throw ValidationError("comparability.min_tau", "must be nonnegative");
    if (!(comparability->scan_step >= 0.0)) throw ValidationError("comparability.scan_step", "must be nonnegative");
  }
  if (almost_periods) {
    const auto& a = *almost_periods;
    if (!(a.epsilon > 0.0)) throw ValidationError("almost_periods.epsilon", "must be positive");
    if (!(a.window > 0.0)) throw ValidationError("almost_periods.window", "must be positive");
    if (!(a.scan_min >= 0.0)) throw ValidationError("almost_periods.scan_min", "must be nonnegative");
    if (!(a.scan_max > a.scan_min)) throw ValidationError("almost_periods.scan_max", "must exceed scan_min");
    if (!(a.dt > 0.0)) throw ValidationError("almost_periods.dt", "must be positive");
    if (!(a.scan_step > 0.0)) throw ValidationError("almost_periods.scan_step", "must be positive");
  }
}

Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("scenario", "expected an object");
  reject_unknown(doc, {"name", "description", "spec", "base_phase", "h", "seed", "anchor", "solver", "comparability",
                       "almost_periods", "output_dir"},
                 "scenario");
  Scenario sc;
  sc.name = detail::string(require(doc, "name"), "name");
  if (doc.contains("description")) sc.description = detail::string(doc.at("description"), "description");
  sc.spec = spec_from_json(require(doc, "spec"));
  if (doc.contains("base_phase")) sc.base_phase = detail::real_list(doc.at("base_phase"), "base_phase");
  if (doc.contains("h")) sc.h = detail::real(doc.at("h"), "h");
  sc.seed = seed_from_json(require(doc, "seed"));
  if (doc.contains("anchor")) sc.anchor = detail::vector(doc.at("anchor"), "anchor");
  sc.solver = solver_from_json(require(doc, "solver"));
  if (doc.contains("comparability")) sc.comparability = comparability_from_json(doc.at("comparability"));
  if (doc.contains("almost_periods")) sc.almost_periods = almost_periods_from_json(doc.at("almost_periods"));
  if (doc.contains("output_dir")) sc.output_dir = detail::string(doc.at("output_dir"), "output_dir");
  sc.validate();
  return sc;
}

json to_json(const Scenario& sc) {
  json doc = {
      {"name", sc.name},
      {"description", sc.description},
      {"spec", to_json(sc.spec)},
      {"base_phase", sc.base_phase},
      {"h", sc.h},
      {"seed", seed_json(sc.seed)},
      {"solver",
       {{"delta_cap", sc.solver.delta_cap},
        {"horizon", sc.solver.horizon},
        {"min_tau", sc.solver.min_tau},
        {"scan_step", sc.solver.scan_step},
        {"composition_depth", sc.solver.composition_depth},
        {"method", to_string(sc.solver.method)},
        {"iterations", sc.solver.iterations},
        {"delta_grid", sc.solver.delta_grid}}},
  };
  if (sc.anchor) doc["anchor"] = vector_json(*sc.anchor);
  if (sc.comparability) {
    const auto& c = *sc.comparability;
    doc["comparability"] = {{"epsilons", c.epsilons},   {"delta_grid", c.delta_grid}, {"horizon", c.horizon},
                            {"min_tau", c.min_tau},     {"min_return", c.min_return}, {"scan_step", c.scan_step}};
  }
  if (sc.almost_periods) {
    const auto& a = *sc.almost_periods;
    doc["almost_periods"] = {{"epsilon", a.epsilon},     {"window", a.window}, {"scan_min", a.scan_min}, {"scan_max", a.scan_max},
                             {"scan_step", a.scan_step}, {"dt", a.dt}};
  }
  if (sc.output_dir) doc["output_dir"] = *sc.output_dir;
  return doc;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, column] = line_column(text, offset);
    std::string what = e.what();
    // Drop the library's own "[json.exception.parse_error.101] parse error at ...:" prefix.
    if (const auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
    throw ParseError(line, column, what);
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

std::string scenario_hash(const Scenario& scenario) { return fnv1a_hex(to_json(scenario).dump()); }

std::filesystem::path bundled_scenario_dir() { return FAVARD_SCENARIO_DIR; }

std::vector<ScenarioEntry> list_scenarios(const std::filesystem::path& dir) {
  std::vector<ScenarioEntry> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const Scenario sc = load_scenario(entry.path());
    out.push_back({sc.name, sc.description, entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) return name_or_path;
  const auto bundled = bundled_scenario_dir() / (name_or_path + ".json");
  if (std::filesystem::exists(bundled)) return bundled;
  throw Error("no scenario file or bundled scenario named '" + name_or_path + "'");
}

SeededSystem apply_seed(const Scenario& sc) {
  TorusPoint phase = sc.base_phase;
  if (phase.empty()) phase.assign(sc.spec.frequencies.size(), 0.0);
  CocycleSystem sys(sc.spec, phase, sc.h);
  if (sc.seed.kind == SeedSpec::Kind::explicit_value) return {sys, sc.seed.value};
  const Vector start = sc.seed.value.size() ? sc.seed.value : Vector::Zero(sys.state_dim());
  Vector u0 = evaluate_affine(sys, start, sc.seed.burn_in);
  if (sc.seed.offset) u0 += *sc.seed.offset;
  return {sys.shifted(sc.seed.burn_in), u0};
}

RunRecord execute_scenario(const Scenario& sc) {
  sc.validate();
  RunRecord rec;
  rec.scenario = sc;
  rec.scenario_hash = scenario_hash(sc);
  const SeededSystem seeded = stage("seed", [&] { return apply_seed(sc); });
  const CocycleSystem& sys = seeded.sys;
  rec.u0 = seeded.u0;
  rec.certification_tolerance = default_certification_tolerance(sys);

  if (sc.almost_periods) {
    const auto& a = *sc.almost_periods;
    rec.almost_periods = stage("almost_periods", [&] {
      const TrajectorySample forcing = sample_forcing(sc.spec, sys.base_phase(), -a.window, a.dt, forcing_count(a));
      return scan_almost_periods(forcing, {a.epsilon, a.window, a.scan_min, a.scan_max, a.scan_step});
    });
    if (sc.spec.reciprocal) {
      double closest = std::numeric_limits<double>::infinity();
      const std::size_t n = forcing_count(a);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = -a.window + static_cast<double>(i) * a.dt;
        closest = std::min(closest, eval_base(sc.spec, sys.base_phase(), t).min_denominator);
      }
      if (closest < kReciprocalWarnBand) {
        rec.notices.push_back("reciprocal denominator comes within " + format_double(closest) +
                              " of zero on the sampled forcing window");
      }
    }
  }

  rec.returns = stage("returns", [&] {
    const NearReturnSet found =
        find_near_returns(sys, {sc.solver.delta_cap, sc.solver.horizon, sc.solver.min_tau, sc.solver.scan_step});
    return extend_with_compositions(found, sys, sc.solver.composition_depth);
  });

  if (rec.returns.empty()) {
    stage("boundedness", [&] {
      const double threshold = 1e8 * (1.0 + sys.norm()(rec.u0));
      if (!(trajectory_sup(sys, rec.u0, sc.solver.horizon, threshold) <= threshold)) {
        throw BlowUpError("seed trajectory exceeds " + format_double(threshold));
      }
    });
    rec.verdict = Verdict::inconclusive;
    rec.verdict_reason = "no near-returns with quality <= " + format_double(sc.solver.delta_cap) + " in [" +
                         format_double(sc.solver.min_tau) + ", " + format_double(sc.solver.horizon) + "]";
    rec.notices.push_back("solver and comparability skipped: empty return set");
    return rec;
  }

  FavardProblem problem = stage("assemble", [&] { return assemble_problem(sys, rec.u0, rec.returns); });
  if (sc.anchor) problem.anchor = *sc.anchor;

  FavardResult result = stage("solve", [&] {
    SolverOptions opt;
    opt.max_iterations = sc.solver.iterations;
    return solve_minmax(problem, sc.solver.method, opt);
  });

  const std::vector<double> grid =
      sc.solver.delta_grid.empty() ? default_delta_grid(sc.solver.delta_cap) : sc.solver.delta_grid;
  const FixedPointCheck check =
      stage("verify", [&] { return verify_fixed_point(sys, result.u_bar, problem.returns, grid, rec.certification_tolerance); });
  result.residual_curve = check.curve;
  result.verdict = check.verdict;
  result.verdict_reason = check.reason;
  if (result.trace.oracle_value && !result.trace.oracle_agrees) {
    result.verdict = Verdict::inconclusive;
    result.verdict_reason = "optimizer value " + format_double(result.trace.claimed_value) +
                            " exceeds the grid oracle " + format_double(*result.trace.oracle_value) + " + " +
                            format_double(*result.trace.oracle_tolerance);
  }
  rec.verdict = result.verdict;
  rec.verdict_reason = result.verdict_reason;

  if (sc.comparability) {
    if (result.verdict == Verdict::certified) {
      const auto& c = *sc.comparability;
      rec.comparability = stage("comparability", [&] {
        const std::vector<double> dgrid = c.delta_grid.empty() ? default_comparability_grid() : c.delta_grid;
        return comparability_from_fixed_point(result, sys, c.epsilons, c.horizon, dgrid,
                                              {c.min_tau, c.min_return, c.scan_step});
      });
    } else {
      rec.notices.push_back("comparability skipped: fixed point not certified");
    }
  }
  rec.favard = std::move(result);
  return rec;
}

RunRecord run_scenario(const Scenario& sc, const std::optional<std::filesystem::path>& out_root) {
  const std::string started = iso_now();
  RunRecord rec = execute_scenario(sc);
  const std::filesystem::path root = out_root ? *out_root : std::filesystem::path(sc.output_dir.value_or("runs"));
  std::filesystem::create_directories(root);
  for (int n = 1;; ++n) {
    const auto dir = root / (sc.name + "-" + rec.scenario_hash.substr(0, 8) + "-" + std::to_string(n));
    if (std::filesystem::create_directory(dir)) {
      rec.directory = dir;
      break;
    }
  }
  const auto& d = rec.directory;
  write_text_file(d / "config.json", to_json(sc).dump(2) + "\n");
  write_text_file(d / "summary.txt", summary_text(rec));
  write_text_file(d / "favard.json", favard_document(rec).dump(2) + "\n");
  write_text_file(d / "returns.csv", returns_csv(rec.returns));
  write_text_file(d / "comparability.csv",
                  rec.comparability ? comparability_csv(*rec.comparability) : comparability_csv({}));
  write_text_file(d / "almost_periods.csv",
                  rec.almost_periods ? almost_periods_csv(*rec.almost_periods) : almost_periods_csv({}));
  const json meta = {
      {"scenario_hash", rec.scenario_hash}, {"started", started},
      {"finished", iso_now()},              {"version", kVersion},
      {"workers", omp_get_max_threads()},   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                          std::to_string(EIGEN_MINOR_VERSION)},
  };
  write_text_file(d / "metadata.json", meta.dump(2) + "\n");
  return rec;
}

FavardResult run_oracle(const Scenario& sc) {
  sc.validate();
  const SeededSystem seeded = stage("seed", [&] { return apply_seed(sc); });
  const NearReturnSet returns = stage("returns", [&] {
    return extend_with_compositions(
        find_near_returns(seeded.sys, {sc.solver.delta_cap, sc.solver.horizon, sc.solver.min_tau, sc.solver.scan_step}),
        seeded.sys, sc.solver.composition_depth);
  });
  FavardProblem problem = stage("assemble", [&] { return assemble_problem(seeded.sys, seeded.u0, returns); });
  if (sc.anchor) problem.anchor = *sc.anchor;
  FavardResult result = stage("oracle", [&] { return solve_minmax(problem, SolverMethod::grid_oracle); });
  const std::vector<double> grid =
      sc.solver.delta_grid.empty() ? default_delta_grid(sc.solver.delta_cap) : sc.solver.delta_grid;
  const FixedPointCheck check = verify_fixed_point(seeded.sys, result.u_bar, problem.returns, grid,
                                                   default_certification_tolerance(seeded.sys));
  result.residual_curve = check.curve;
  result.verdict = check.verdict;
  result.verdict_reason = check.reason;
  return result;
}

std::string summary_text(const RunRecord& rec) {
  std::ostringstream out;
  const Scenario& sc = rec.scenario;
  out << "scenario        " << sc.name << '\n';
  if (!sc.description.empty()) out << "description     " << sc.description << '\n';
  out << "hash            " << rec.scenario_hash << '\n';
  out << "time domain     " << to_string(sc.spec.time_domain)
      << (sc.spec.delay_order > 0 ? " (delay order " + std::to_string(sc.spec.delay_order) + ")" : "") << '\n';
  out << "state dim       " << sc.spec.state_dim() << '\n';
  out << "seed u0         [";
  for (Eigen::Index i = 0; i < rec.u0.size(); ++i) out << (i ? ", " : "") << format_double(rec.u0[i]);
  out << "]\n";
  out << "returns         " << rec.returns.returns.size() << " (" << rec.returns.composed << " composed, "
      << rec.returns.scanned << " taus scanned)\n";
  if (rec.almost_periods) {
    out << "almost periods  " << rec.almost_periods->periods.size() << " at eps="
        << format_double(rec.almost_periods->epsilon) << ", max gap " << format_double(rec.almost_periods->max_gap)
        << '\n';
  }
  if (rec.favard) {
    const auto& f = *rec.favard;
    out << "u_bar           [";
    for (Eigen::Index i = 0; i < f.u_bar.size(); ++i) out << (i ? ", " : "") << format_double(f.u_bar[i]);
    out << "]\n";
    out << "ell             " << format_double(f.ell_value) << '\n';
    out << "optimizer       " << f.trace.method << ", " << f.trace.iterations << " iterations, "
        << f.trace.stop_reason << '\n';
    if (f.trace.oracle_value) {
      out << "grid oracle     " << format_double(*f.trace.oracle_value) << " (tolerance "
          << format_double(*f.trace.oracle_tolerance) << ")\n";
    }
    out << "residual curve\n";
    for (const auto& pt : f.residual_curve) {
      out << "  delta=" << format_double(pt.delta) << "  r=" << format_double(pt.r) << "  n=" << pt.count << '\n';
    }
    for (const auto& n : f.notices) out << "notice          " << n << '\n';
  }
  if (rec.comparability) {
    out << "comparability   horizon " << format_double(rec.comparability->horizon) << ", min_tau "
        << format_double(rec.comparability->min_tau) << '\n';
    for (std::size_t i = 0; i < rec.comparability->epsilons.size(); ++i) {
      out << "  eps=" << format_double(rec.comparability->epsilons[i])
          << "  delta=" << format_double(rec.comparability->deltas[i]) << '\n';
    }
  }
  for (const auto& n : rec.notices) out << "notice          " << n << '\n';
  out << "verdict         " << to_string(rec.verdict) << '\n';
  out << "reason          " << rec.verdict_reason << '\n';
  return out.str();
}

}  // namespace favard
