// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "favard/comparability.hpp"
#include "favard/errors.hpp"
#include "favard/scenario.hpp"
#include "favard/signals.hpp"
#include "support.hpp"

using namespace favard;
using namespace testing;
namespace fs = std::filesystem;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

int failures = 0;

void report(int n, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  [%.1f s] %s\n", n, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome cocycle_algebra() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Gen g(2024);
  struct Backend {
    const char* name;
    TimeDomain domain;
    int delay;
    double tol;
  };
  for (const Backend be : {Backend{"continuous", TimeDomain::continuous, 0, 1e-7},
                           Backend{"discrete", TimeDomain::discrete, 0, 1e-12},
                           Backend{"delay", TimeDomain::discrete, 2, 1e-12}}) {
    double worst_identity = 0.0;
    double worst_affine = 0.0;
    bool exact_zero = true;
    for (int trial = 0; trial < 100; ++trial) {
      const double scale = be.domain == TimeDomain::continuous ? 0.5 : 0.3;
      const QuasiPeriodicSpec spec = g.spec(be.domain, 2, be.delay, 2, scale);
      const CocycleSystem sys(spec, {g.uniform(0, 2 * kPi), g.uniform(0, 2 * kPi)});
      const int N = sys.state_dim();
      const Vector u = g.vector(N, 2.0);
      const Vector v = g.vector(N, 2.0);
      double t = g.uniform(0.0, 10.0);
      double s = g.uniform(0.0, 10.0);
      if (sys.is_discrete()) {
        t = std::floor(t);
        s = std::floor(s);
      }
      exact_zero = exact_zero && evaluate_affine(sys, u, 0.0) == u;
      worst_identity = std::max(worst_identity, verify_cocycle_identity(sys, u, t, s));
      const double a = g.uniform(0.0, 1.0);
      const Vector mixed = evaluate_affine(sys, a * u + (1 - a) * v, t);
      const Vector separate = a * evaluate_affine(sys, u, t) + (1 - a) * evaluate_affine(sys, v, t);
      const StateNorm norm = sys.norm();
      worst_affine = std::max(worst_affine, norm.distance(mixed, separate) / (1.0 + norm(u) + norm(v)));
    }
    o.require(exact_zero, std::string(be.name) + " psi(0,u) = u");
    o.require(worst_identity <= be.tol, std::string(be.name) + " cocycle identity");
    o.require(worst_affine <= 1e-9, std::string(be.name) + " affineness");
    o.note(std::string(be.name) + ": identity " + fmt(worst_identity) + ", affine " + fmt(worst_affine));
  }
  const double secs = elapsed_since(t0);
  o.require(secs <= 60.0, "runtime <= 60 s");
  return o;
}

Outcome closed_form() {
  Outcome o;
  const CocycleSystem sys(scalar_ode(-1.0, {1.0}, {{{1}, 1.0}}), {0.0});
  const double x = evaluate_affine(sys, vec1(0.5), 2 * kPi)[0];
  const double U = fundamental_matrix(sys, 1.0).U(0, 0);
  o.require(std::abs(x - 0.5) <= 1e-6, "psi(2pi, 0.5) = 0.5");
  o.require(std::abs(U - std::exp(-1.0)) <= 1e-8, "U(1) = e^-1");
  o.note("|psi(2pi,0.5)-0.5| = " + fmt(std::abs(x - 0.5)) + ", |U(1)-e^-1| = " + fmt(std::abs(U - std::exp(-1.0))));
  return o;
}

// Shared between criteria 3, 6 and 7.
struct DichotomyRun {
  Scenario scenario;
  RunRecord record;
  CocycleSystem sys;
};

std::optional<DichotomyRun> dichotomy;

Outcome favard_minimizer() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Scenario sc = load_scenario(resolve_scenario("quasiperiodic-dichotomy"));
  o.require(sc.solver.delta_cap == 0.05 && sc.solver.horizon == 2000.0, "scenario uses delta_cap 0.05, horizon 2000");
  const RunRecord rec = execute_scenario(sc);
  const SeededSystem seeded = apply_seed(sc);
  dichotomy = DichotomyRun{sc, rec, seeded.sys};

  // Long-time oracle: two seeds started far in the past of the base point.
  const double back = 400.0;
  const CocycleSystem past = seeded.sys.shifted(-back);
  const double a = evaluate_affine(past, vec1(-5.0), back)[0];
  const double b = evaluate_affine(past, vec1(5.0), back)[0];
  const double oracle = 0.5 * (a + b);
  const double closed = dichotomy_solution(sc.seed.burn_in);
  o.require(std::abs(a - b) <= 1e-6, "oracle seeds agree to 1e-6");
  o.note("oracle " + fmt(oracle) + " (seeds differ by " + fmt(std::abs(a - b)) + ", closed form off by " +
         fmt(std::abs(oracle - closed)) + ")");

  if (!rec.favard) {
    o.require(false, "min-max result present");
    return o;
  }
  const double u_bar = rec.favard->u_bar[0];
  o.require(std::abs(u_bar - oracle) <= 1e-4, "u_bar within 1e-4 of the oracle");
  o.note("u_bar " + fmt(u_bar) + " (|u_bar - oracle| = " + fmt(std::abs(u_bar - oracle)) + ")");
  o.require(rec.verdict == Verdict::certified, "verdict certified");
  const auto& curve = rec.favard->residual_curve;
  const double r_min = curve.empty() ? INFINITY : curve.back().r;
  o.require(r_min <= 1e-5, "r(delta_min) <= 1e-5");
  o.note("verdict " + to_string(rec.verdict) + ", r(delta_min=" + fmt(curve.empty() ? 0.0 : curve.back().delta) +
         ") = " + fmt(r_min));

  // Second anchor, reported alongside.
  Scenario shifted_anchor = sc;
  shifted_anchor.anchor = rec.u0 + vec1(1.0);
  const RunRecord alt = execute_scenario(shifted_anchor);
  if (alt.favard) {
    o.note("anchor u0+1: u_bar " + fmt(alt.favard->u_bar[0]) + ", |u_bar - oracle| = " +
           fmt(std::abs(alt.favard->u_bar[0] - oracle)) + ", verdict " + to_string(alt.verdict));
  }
  const double secs = elapsed_since(t0);
  o.require(secs <= 300.0, "runtime <= 5 min");
  return o;
}

Outcome telescoping() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario base = load_scenario(resolve_scenario("telescoping-critical"));
  for (double cap : {0.1, 0.03, 0.01}) {
    Scenario sc = base;
    sc.solver.delta_cap = cap;
    sc.solver.delta_grid.clear();
    const RunRecord rec = execute_scenario(sc);
    const std::string tag = "cap " + fmt(cap);
    if (!rec.favard) {
      o.require(false, tag + ": min-max result present");
      continue;
    }
    const double u0 = rec.u0[0];
    const double theta0 = apply_seed(sc).sys.base_phase()[0];
    // u(t) = u0 + cos(theta0 + t) - cos(theta0).
    double closed_defect = 0.0;
    for (const auto& r : rec.returns.returns) {
      closed_defect = std::max(closed_defect, std::abs(r.b[0] - (std::cos(theta0 + r.tau) - std::cos(theta0))));
      closed_defect = std::max(closed_defect, std::abs(r.Phi(0, 0) - 1.0));
    }
    o.require(closed_defect <= 1e-12, tag + ": return maps match the telescoping closed form");
    const double dist = std::abs(rec.favard->u_bar[0] - u0);
    o.require(dist <= 2 * cap * cap, tag + ": |u_bar - u0| <= 2 cap^2");
    bool curve_ok = !rec.favard->residual_curve.empty();
    for (const auto& pt : rec.favard->residual_curve) curve_ok = curve_ok && pt.r <= pt.delta * pt.delta / 2 * 1.01;
    o.require(curve_ok, tag + ": r(delta) <= 1.01 delta^2/2");
    o.note(tag + ": " + std::to_string(rec.returns.returns.size()) + " returns, |u_bar-u0| " + fmt(dist) +
           ", r(delta_min) " + fmt(rec.favard->residual_curve.empty() ? 0.0 : rec.favard->residual_curve.back().r));
  }
  o.require(elapsed_since(t0) <= 60.0, "runtime <= 60 s");
  return o;
}

Outcome near_returns() {
  Outcome o;
  const std::vector<double> omega{1.0, kSqrt2};
  const CocycleSystem sys(dichotomy_spec(), {0.0, 0.0});
  const NearReturnSet set = find_near_returns(sys, {0.05, 500.0, 0.0, 0.0});
  double nearest = INFINITY;
  for (const auto& r : set.returns) nearest = std::min(nearest, std::abs(r.tau - 439.82));
  o.require(nearest <= 0.01, "tau ~ 439.82 found");

  std::vector<double> brute;
  const double h = sys.step();
  for (long k = 0; k <= static_cast<long>(std::floor(500.0 / h + 1e-9)); ++k) {
    const double tau = static_cast<double>(k) * h;
    if (brute_quality(omega, tau) <= 0.05) brute.push_back(tau);
  }
  bool same = brute.size() == set.returns.size();
  for (std::size_t i = 0; same && i < brute.size(); ++i) same = brute[i] == set.returns[i].tau;
  o.require(same, "brute-force scan agrees exactly");
  o.note(std::to_string(set.returns.size()) + " returns, brute force " + std::to_string(brute.size()) +
         ", nearest to 439.82 at distance " + fmt(nearest));
  return o;
}

bool monotone(const ComparabilityReport& r) {
  for (std::size_t i = 0; i < r.epsilons.size(); ++i)
    for (std::size_t j = 0; j < r.epsilons.size(); ++j)
      if (r.epsilons[i] < r.epsilons[j] && r.deltas[i] > r.deltas[j]) return false;
  return true;
}

std::vector<ComparabilityReport> all_reports;

Outcome comparability() {
  Outcome o;
  if (!dichotomy) {
    o.require(false, "criterion 3 run available");
    return o;
  }
  const RunRecord& rec = dichotomy->record;
  if (!rec.comparability) {
    o.require(false, "comparability report for the certified u_bar");
    return o;
  }
  const ComparabilityReport& r = *rec.comparability;
  o.require(r.horizon == 2000.0, "horizon 2000");
  for (double eps : {0.1, 0.03, 0.01}) {
    bool found = false;
    for (std::size_t i = 0; i < r.epsilons.size(); ++i) {
      if (r.epsilons[i] == eps) {
        found = true;
        o.require(r.deltas[i] > 0.0, "delta(" + fmt(eps) + ") > 0");
        o.note("delta(" + fmt(eps) + ") = " + fmt(r.deltas[i]));
      }
    }
    o.require(found, "eps " + fmt(eps) + " reported");
  }
  all_reports.push_back(r);
  // A finer eps sweep on the same solution.
  const std::vector<double> sweep{1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
  all_reports.push_back(estimate_modulus(dichotomy->sys, rec.favard->u_bar, sweep, 2000.0,
                                         default_comparability_grid()));
  return o;
}

Outcome negative_control() {
  Outcome o;
  if (!dichotomy || !dichotomy->record.favard) {
    o.require(false, "criterion 3 run available");
    return o;
  }
  const Vector u = dichotomy->record.favard->u_bar + vec1(1.0);
  const std::vector<double> eps{0.01};
  const auto grid = default_comparability_grid();
  ModulusOptions early;
  early.min_tau = 0.0;
  ModulusOptions late;
  late.min_tau = 50.0;
  const auto a = estimate_modulus(dichotomy->sys, u, eps, 2000.0, grid, early);
  const auto b = estimate_modulus(dichotomy->sys, u, eps, 2000.0, grid, late);
  all_reports.push_back(a);
  all_reports.push_back(b);
  o.require(a.deltas[0] == 0.0, "delta(0.01) = 0 with min_tau 0");
  o.require(b.deltas[0] > 0.0, "delta(0.01) > 0 with min_tau 50");
  o.note("min_tau 0: " + fmt(a.deltas[0]) + ", min_tau 50: " + fmt(b.deltas[0]));
  bool mono = true;
  for (const auto& r : all_reports) mono = mono && monotone(r);
  o.require(mono, "delta(eps) monotone on every report");
  o.note(std::to_string(all_reports.size()) + " reports monotone in eps: " + (mono ? "yes" : "no"));
  return o;
}

Outcome levitan() {
  Outcome o;
  const Scenario sc = load_scenario(resolve_scenario("levitan-forcing"));
  Gen g(88);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double t = g.uniform(-1000.0, 1000.0);
    const double direct = 1.0 / (2.0 + std::cos(t) + std::cos(kSqrt2 * t));
    worst = std::max(worst, std::abs(eval_base(sc.spec, {0.0, 0.0}, t).f[0] - direct));
  }
  o.require(worst <= 1e-12, "forcing within 1e-12 of the direct formula");
  o.note("max |f - direct| " + fmt(worst));

  const RunRecord rec = execute_scenario(sc);
  o.require(rec.almost_periods.has_value(), "almost-period scan ran");
  if (rec.almost_periods) {
    const auto& ap = *rec.almost_periods;
    o.require(ap.epsilon == 0.5 && ap.window_halfwidth == 50.0, "scan at eps 0.5, L 50");
    o.require(!ap.periods.empty(), "period list nonempty");
    std::size_t nonzero = 0;
    for (double p : ap.periods) nonzero += p != 0.0;
    o.note(std::to_string(ap.periods.size()) + " periods in [" + fmt(ap.scan_min) + ", " + fmt(ap.scan_max) +
           "], nonzero " + std::to_string(nonzero));
  }

  // Windowed sup of the forcing over [-T, T] for growing T.
  std::string sups;
  double previous = 0.0;
  double first = 0.0;
  bool grows = true;
  for (double T : {50.0, 100.0, 500.0, 2000.0}) {
    const double dt = 1e-3;
    const auto count = static_cast<std::size_t>(std::llround(2 * T / dt)) + 1;
    const TrajectorySample s = sample_forcing(sc.spec, {0.0, 0.0}, -T, dt, count);
    double sup = 0.0;
    for (const auto& v : s.values) sup = std::max(sup, std::abs(v[0]));
    grows = grows && sup >= previous;
    if (first == 0.0) first = sup;
    previous = sup;
    sups += (sups.empty() ? "" : ", ") + std::string("T=") + fmt(T) + ": " + fmt(sup);
  }
  o.require(grows && previous > first, "windowed sup grows with the horizon");
  o.note("windowed sup " + sups);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FAVARD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every file of the single run directory under root except metadata.json.
std::map<std::string, std::string> run_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& dir : fs::directory_iterator(root)) {
    for (const auto& f : fs::directory_iterator(dir.path())) {
      if (f.path().filename() == "metadata.json") continue;
      out[dir.path().filename().string() + "/" + f.path().filename().string()] = slurp(f.path());
    }
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  const fs::path scratch = fs::temp_directory_path() / "favard-acceptance-determinism";
  std::size_t files = 0;
  const auto entries = list_scenarios();
  for (const auto& e : entries) {
    std::vector<std::map<std::string, std::string>> runs;
    std::vector<int> codes;
    int i = 0;
    for (int workers : {1, 1, 4}) {
      const fs::path root = scratch / (e.name + "-" + std::to_string(i++));
      fs::remove_all(root);
      codes.push_back(run_cli("run " + e.path.string() + " --quiet --workers " + std::to_string(workers) +
                              " --out " + root.string()));
      runs.push_back(run_files(root));
    }
    const bool same = runs[0] == runs[1] && runs[0] == runs[2] && codes[0] == codes[1] && codes[0] == codes[2];
    o.require(same, e.name + " identical across runs and workers");
    files += runs[0].size();
  }
  fs::remove_all(scratch);
  o.note(std::to_string(entries.size()) + " scenarios, " + std::to_string(files) +
         " files compared byte for byte (metadata.json excluded)");
  return o;
}

}  // namespace

int main() {
  report(1, cocycle_algebra);
  report(2, closed_form);
  report(3, favard_minimizer);
  report(4, telescoping);
  report(5, near_returns);
  report(6, comparability);
  report(7, negative_control);
  report(8, levitan);
  report(9, determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
