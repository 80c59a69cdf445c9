#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lndev/builtins.hpp"
#include "lndev/field.hpp"
#include "lndev/space.hpp"

namespace lndev {

/// Tasks a scenario can run. One scenario file drives one task.
enum class Task { check_identity, classify, symmetry, integrate, tidal, lie_oracle, dragged_residual };
std::string to_string(Task t);
Task parse_task(const std::string& name);
std::vector<std::string> task_names();

struct SpaceSpec {
  std::string builtin;  // empty: inline definition
  // builtin parameters (unset: builtin default)
  std::optional<int> n;
  std::optional<double> a, c, M, b;
  std::vector<double> w;
  // inline definition
  int dim = 0;
  std::vector<std::string> coordinates;  // defaults x0, x1, ...
  std::vector<std::string> frame;        // n*n, row i = components of E_i; empty: coordinate frame
  std::map<std::array<int, 3>, std::string> connection;  // (k, i, j) -> Gamma^k_ij
  std::vector<std::string> metric;       // n*n or empty
  bool operator==(const SpaceSpec&) const = default;
};

struct FieldSpec {
  Basis basis = Basis::coordinate;
  std::vector<std::string> components;
  bool operator==(const FieldSpec&) const = default;
};

struct TrajectorySection {
  std::string kind = "geodesic";  // geodesic | flow
  std::vector<double> x0;
  std::vector<double> u0;
  double s0 = 0.0;
  double s1 = 1.0;
  bool operator==(const TrajectorySection&) const = default;
};

struct DeviationSection {
  std::vector<double> xi0;
  std::vector<double> V0;
  bool V0_from_family = false;  // V0: family
  std::string condition = "free-particles";
  bool operator==(const DeviationSection&) const = default;
};

struct NumericsSection {
  std::string method = "rk4-fixed";
  double step = 1e-3;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  long max_steps = 10'000'000;
  int samples = 101;  // uniform output nodes; 0: every step
  std::optional<double> tolerance;
  std::vector<double> epsilons{1e-3, 5e-4, 2.5e-4};
  double curvature_fraction = 0.05;
  bool operator==(const NumericsSection&) const = default;
};

struct SamplingSection {
  std::vector<double> lo;
  std::vector<double> hi;
  int points = 20;
  std::uint64_t seed = 1;
  bool operator==(const SamplingSection&) const = default;
};

struct Scenario {
  std::string task;  // optional; must match the requested task when set
  SpaceSpec space;
  std::optional<FieldSpec> u;
  std::optional<FieldSpec> xi;
  std::optional<std::string> w;
  std::map<std::array<int, 3>, std::string> lie_gamma;
  std::optional<TrajectorySection> trajectory;
  std::optional<DeviationSection> deviation;
  NumericsSection numerics;
  SamplingSection sampling;
  std::string symmetry_kind;
  int recurrence_order = 1;
  std::map<std::string, bool> expect;  // classification expectations
  bool expect_cancel = false;          // tidal: curvature and torsion parts cancel
  std::string output_dir;
  std::string output_prefix = "lndev";
  bool operator==(const Scenario&) const = default;
};

/// Parse scenario text (YAML subset). Throws ParseError with one diagnostic
/// per problem: unknown keys, wrong types, missing fields, bad expressions.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& s);

/// Checks that the fields the task needs are present. Throws ParseError.
void validate_for_task(const Scenario& s, Task task);

/// Space described by the scenario, with the builtin record when it names one.
struct ResolvedSpace {
  ConnectionSpace space;
  std::optional<BuiltinSpace> builtin;
};
ResolvedSpace build_space(const Scenario& s);

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides the scenario and LNDEV_OUT_DIR
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  bool write_files = true;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 check failed
  std::string report; // structured text
  std::string csv;    // integrate only
  std::vector<std::string> files;
};

/// Run one task. Errors propagate as exceptions; see exit_code_for.
RunResult run_scenario(const Scenario& s, Task task, const RunOptions& options = {});

/// 2 for parse/contract errors, 3 for numerical failures.
int exit_code_for(const std::exception& e);

/// Locale-independent shortest-round-trip-safe formatting (17 significant digits).
std::string format_double(double v);

}  // namespace lndev
