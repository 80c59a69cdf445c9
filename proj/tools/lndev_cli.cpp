// Command-line front end: one task per invocation.
//   lndev <task> --scenario FILE [--out DIR] [--seed N] [--tol X]
// Exit codes: 0 ok, 1 check failed, 2 usage or parse error, 3 numerical failure.

#include <CLI11.hpp>

#include <iostream>
#include <locale>

#include "lndev/error.hpp"
#include "lndev/scenario.hpp"

namespace {

void print_diagnostics(const lndev::ParseError& e, const std::string& file) {
  for (const auto& d : e.diagnostics()) {
    std::cerr << file;
    if (d.line > 0) std::cerr << ':' << d.line;
    std::cerr << ": " << (d.field.empty() ? "" : d.field + ": ") << d.reason << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::locale::global(std::locale::classic());

  CLI::App app{"Deviation equations on spaces with affine connection"};
  app.require_subcommand(1, 1);
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  double tol = 0.0;
  for (const auto& name : lndev::task_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " task");
    sub->add_option("--scenario", scenario_path, "scenario file")->required();
    sub->add_option("--out", out_dir, "output directory (default: output.dir, then LNDEV_OUT_DIR, then .)");
    sub->add_option("--seed", seed, "sample-point seed");
    sub->add_option("--tol", tol, "pass/fail tolerance")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  lndev::RunOptions opt;
  if (sub->count("--out")) opt.out_dir = out_dir;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--tol")) opt.tolerance = tol;
  try {
    const lndev::Task task = lndev::parse_task(sub->get_name());
    const lndev::Scenario s = lndev::load_scenario(scenario_path);
    const lndev::RunResult r = lndev::run_scenario(s, task, opt);
    std::cout << r.report;
    return r.exit_code;
  } catch (const lndev::ParseError& e) {
    print_diagnostics(e, scenario_path);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lndev::exit_code_for(e);
  }
}
