#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "favard/comparability.hpp"
#include "favard/minmax.hpp"
#include "favard/quasi_periodic.hpp"
#include "favard/returns.hpp"
#include "favard/signals.hpp"
#include "json.hpp"

namespace favard {

struct SeedSpec {
  enum class Kind { explicit_value, long_run };
  Kind kind = Kind::explicit_value;
  Vector value;                 ///< explicit seed, or start of the burn-in (zero when empty)
  double burn_in = 200.0;       ///< long-run only
  std::optional<Vector> offset; ///< long-run only: added after the burn-in
};

struct SolverConfig {
  double delta_cap = 0.05;
  double horizon = 100.0;
  double min_tau = 0.0;
  double scan_step = 0.0;
  int composition_depth = 1;
  SolverMethod method = SolverMethod::simplex_subgradient;
  int iterations = 10000;
  std::vector<double> delta_grid;
};

struct ComparabilityConfig {
  std::vector<double> epsilons{0.1, 0.03, 0.01};
  std::vector<double> delta_grid;  ///< empty selects default_comparability_grid()
  double horizon = 100.0;
  double min_tau = 0.0;
  double min_return = -1.0;
  double scan_step = 0.0;
};

struct AlmostPeriodConfig {
  double epsilon = 0.1;
  double window = 10.0;
  double scan_min = 0.0;
  double scan_max = 100.0;
  double scan_step = 0.1;
  double dt = 0.1;
};

struct Scenario {
  std::string name;
  std::string description;
  QuasiPeriodicSpec spec;
  TorusPoint base_phase;  ///< zeros when omitted
  double h = 1e-3;
  SeedSpec seed;
  std::optional<Vector> anchor;  ///< anchor of the Favard functional; the seed when omitted
  SolverConfig solver;
  std::optional<ComparabilityConfig> comparability;
  std::optional<AlmostPeriodConfig> almost_periods;
  std::optional<std::string> output_dir;

  /// Throws ValidationError naming the field.
  void validate() const;
};

/// Strict schema: unknown fields are ValidationErrors.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Scenario& scenario);

/// Parses structured text; syntax errors are ParseErrors with line/column.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Hash of the canonical serialization (16 hex digits).
std::string scenario_hash(const Scenario& scenario);

std::filesystem::path bundled_scenario_dir();

struct ScenarioEntry {
  std::string name;
  std::string description;
  std::filesystem::path path;
};

/// Bundled scenarios sorted by name.
std::vector<ScenarioEntry> list_scenarios(const std::filesystem::path& dir = bundled_scenario_dir());

/// A path when it exists, otherwise a bundled scenario name.
std::filesystem::path resolve_scenario(const std::string& name_or_path);

/// Start state and base system after applying the seed directive.
struct SeededSystem {
  CocycleSystem sys;
  Vector u0;
};
SeededSystem apply_seed(const Scenario& scenario);

struct RunRecord {
  std::string scenario_hash;
  std::filesystem::path directory;
  Scenario scenario;
  Vector u0;
  std::optional<AlmostPeriodReport> almost_periods;
  NearReturnSet returns;
  std::optional<FavardResult> favard;
  std::optional<ComparabilityReport> comparability;
  double certification_tolerance = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string verdict_reason;
  std::vector<std::string> notices;

  /// 0 certified, 2 inconclusive.
  int exit_code() const { return verdict == Verdict::certified ? 0 : 2; }
};

/// Runs the whole pipeline without touching the filesystem.
RunRecord execute_scenario(const Scenario& scenario);

/// Executes and writes a fresh run directory <name>-<hash8>-<n> under
/// out_root (or the scenario's output_dir, or ./runs).
RunRecord run_scenario(const Scenario& scenario, const std::optional<std::filesystem::path>& out_root = {});

/// Only the grid oracle on the scenario's min-max problem.
FavardResult run_oracle(const Scenario& scenario);

std::string summary_text(const RunRecord& record);

}  // namespace favard
