// Scenario runner: run, validate, list, oracle.

#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "favard/errors.hpp"
#include "favard/io.hpp"
#include "favard/scenario.hpp"

namespace {

constexpr int kExitError = 1;

struct Options {
  std::string target;
  std::string out;
  int workers = 0;
  double h = 0.0;
  bool quiet = false;
};

favard::Scenario load(const Options& opt) {
  favard::Scenario sc = favard::load_scenario(favard::resolve_scenario(opt.target));
  if (opt.h > 0.0) {
    sc.h = opt.h;
    sc.validate();
  }
  return sc;
}

int cmd_run(const Options& opt) {
  const favard::Scenario sc = load(opt);
  std::optional<std::filesystem::path> out;
  if (!opt.out.empty()) out = opt.out;
  const favard::RunRecord rec = favard::run_scenario(sc, out);
  if (!opt.quiet) {
    std::cout << favard::summary_text(rec);
    std::cout << "output          " << rec.directory.string() << '\n';
  }
  return rec.exit_code();
}

int cmd_validate(const Options& opt) {
  const favard::Scenario sc = load(opt);
  if (!opt.quiet) std::cout << "ok " << sc.name << " (" << favard::scenario_hash(sc) << ")\n";
  return 0;
}

int cmd_list(const Options& opt) {
  for (const auto& e : favard::list_scenarios()) {
    std::cout << e.name;
    if (!opt.quiet && !e.description.empty()) std::cout << "  " << e.description;
    std::cout << '\n';
  }
  return 0;
}

int cmd_oracle(const Options& opt) {
  const favard::Scenario sc = load(opt);
  const favard::FavardResult r = favard::run_oracle(sc);
  if (!opt.quiet) {
    std::cout << "u_bar    [";
    for (Eigen::Index i = 0; i < r.u_bar.size(); ++i) std::cout << (i ? ", " : "") << favard::format_double(r.u_bar[i]);
    std::cout << "]\nell      " << favard::format_double(r.ell_value) << '\n';
    std::cout << "hull dim " << r.trace.hull_dimension << '\n';
    std::cout << "verdict  " << favard::to_string(r.verdict) << '\n';
    std::cout << "reason   " << r.verdict_reason << '\n';
  }
  return r.verdict == favard::Verdict::certified ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Favard fixed points of quasi-periodic affine cocycles"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Options opt;
  app.add_option("--out", opt.out, "Root directory for run outputs");
  app.add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--h", opt.h, "Integrator step override")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", opt.quiet, "Suppress the summary");

  auto* run = app.add_subcommand("run", "Run a scenario (file or bundled name)");
  run->add_option("config", opt.target)->required();
  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("config", opt.target)->required();
  auto* list = app.add_subcommand("list", "List bundled scenarios");
  auto* oracle = app.add_subcommand("oracle", "Run only the grid oracle");
  oracle->add_option("config", opt.target)->required();
  for (auto* sub : {run, validate, list, oracle}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }
  if (opt.workers > 0) omp_set_num_threads(opt.workers);

  try {
    if (*run) return cmd_run(opt);
    if (*validate) return cmd_validate(opt);
    if (*list) return cmd_list(opt);
    if (*oracle) return cmd_oracle(opt);
  } catch (const favard::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
  } catch (const favard::StageError& e) {
    std::cerr << "error in stage " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kExitError;
}
