#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lndev/conditions.hpp"
#include "lndev/deviation.hpp"
#include "lndev/error.hpp"
#include "lndev/scenario.hpp"
#include "lndev/tensor_ops.hpp"
#include "scenario_internal.hpp"

namespace lndev {

namespace {

std::size_t z(int i) { return static_cast<std::size_t>(i); }

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// One line of the report's check list.
struct Check {
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = true;
  std::string note = {};
  std::vector<std::pair<std::string, std::vector<double>>> data = {};
};

struct Context {
  const Scenario& sc;
  Task task;
  ConnectionSpace space;
  std::optional<BuiltinSpace> builtin;
  std::uint64_t seed;
  std::optional<double> tolerance;  // explicit (option or scenario)
  int n;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> info;

  double tol_or(double fallback) const { return tolerance.value_or(fallback); }

  VectorField vector_field(const FieldSpec& f, const std::string& name) const {
    return {compile_expressions(sc, n, f.components, "fields." + name + ".components"), f.basis};
  }

  std::vector<ChartPoint> points() const {
    SampleBox box{sc.sampling.lo, sc.sampling.hi};
    if (box.lo.empty()) {
      if (!builtin) throw ContractError("sampling.box is required for inline spaces");
      box = builtin->box;
    }
    if (box.lo.size() != z(n)) throw ContractError("sampling.box has the wrong dimension");
    return sample_points(box, sc.sampling.points, seed);
  }
};

void run_check_identity(Context& c) {
  const VectorField xi = c.vector_field(*c.sc.xi, "xi");
  const double tol = c.tol_or(holds_threshold(c.space));
  std::optional<Field> supplied;
  if (!c.sc.lie_gamma.empty()) supplied = compile_index_entries(c.sc, c.n, c.sc.lie_gamma, "fields.lie_gamma");
  Check id{"identity", 0.0, tol};
  Check sup{"supplied-lie-gamma", 0.0, tol};
  for (const auto& x : c.points()) {
    const auto cf = lie_derivative_connection(c.space, xi, x, LieSource::closed_form);
    const auto idv = lie_derivative_connection(c.space, xi, x, LieSource::identity);
    const double scale = std::max(1.0, max_abs(cf.L));
    id.residual = std::max(id.residual, max_abs_diff(cf.L, idv.L) / scale);
    if (supplied) {
      const auto v = supplied->values(x);
      double m = 0.0;
      for (std::size_t q = 0; q < v.size(); ++q) m = std::max(m, std::abs(v[q] - cf.L[q]));
      sup.residual = std::max(sup.residual, m / scale);
    }
  }
  id.pass = id.residual <= tol;
  c.checks.push_back(id);
  if (supplied) {
    sup.pass = sup.residual <= tol;
    c.checks.push_back(sup);
  }
}

void run_classify(Context& c) {
  ClassifyOptions opt;
  if (c.tolerance) opt.thresholds = {*c.tolerance, *c.tolerance};
  opt.recurrence_order = c.sc.recurrence_order;
  const auto pts = c.points();
  const auto rep = classify_space(c.space, pts, opt);
  std::map<std::string, bool> expect = c.builtin ? c.builtin->expected : std::map<std::string, bool>{};
  for (const auto& [k, v] : c.sc.expect) expect[k] = v;
  for (const auto& [k, v] : expect) {
    if (!rep.has(k)) throw ContractError("classify.expect names unknown property '" + k + "'");
  }
  for (const auto& p : rep.properties) {
    Check ch{p.name, p.residual, p.threshold, true, p.note};
    if (!p.applicable) {
      ch.note = ch.note.empty() ? "not applicable" : ch.note;
      ch.residual = std::nan("");
    }
    ch.data.push_back({"holds", {p.holds ? 1.0 : 0.0}});
    if (const auto it = expect.find(p.name); it != expect.end()) {
      ch.pass = p.applicable && p.holds == it->second;
      ch.data.push_back({"expected", {it->second ? 1.0 : 0.0}});
    }
    if (p.holds && !p.recovered.empty()) ch.data.push_back({"recovered", p.recovered.front()});
    c.checks.push_back(ch);
  }
  if (!c.builtin) return;
  const double dtol = c.tol_or(1e-6);
  for (const auto& [key, data] : c.builtin->expected_data) {
    const auto& rec = rep.at(key.substr(0, key.find('.')));
    Check ch{key, 0.0, dtol};
    if (!rec.holds || rec.recovered.size() != pts.size()) {
      ch.pass = false;
      ch.residual = std::nan("");
      ch.note = "property does not hold, nothing recovered";
    } else {
      for (const auto& per : rec.recovered) {
        for (std::size_t i = 0; i < data.size() && i < per.size(); ++i) {
          ch.residual = std::max(ch.residual, std::abs(per[i] - data[i]));
        }
      }
      ch.pass = ch.residual <= dtol;
    }
    ch.data.push_back({"oracle", data});
    c.checks.push_back(ch);
  }
}

void run_symmetry(Context& c) {
  const VectorField xi = c.vector_field(*c.sc.xi, "xi");
  Thresholds th;
  if (c.tolerance) th = {*c.tolerance, *c.tolerance};
  const auto recs = check_symmetry(c.space, xi, parse_symmetry_kind(c.sc.symmetry_kind), c.points(), th);
  for (const auto& r : recs) {
    Check ch{r.name, r.residual, r.threshold, r.holds, r.note};
    if (r.holds && !r.recovered.empty()) {
      std::vector<double> first;
      for (const auto& v : r.recovered) first.push_back(v.empty() ? std::nan("") : v.front());
      ch.data.push_back({"recovered", first});
    }
    c.checks.push_back(ch);
  }
}

IntegratorSettings settings_of(const NumericsSection& ns) {
  IntegratorSettings st;
  st.method = ns.method == "rk45-adaptive" ? OdeMethod::rk45_adaptive : OdeMethod::rk4_fixed;
  st.step = ns.step;
  st.rel_tol = ns.rel_tol;
  st.abs_tol = ns.abs_tol;
  st.max_steps = ns.max_steps;
  return st;
}

std::vector<double> sample_grid(const NumericsSection& ns, double s0, double s1) {
  std::vector<double> out;
  if (ns.samples <= 0) return out;
  for (int k = 0; k < ns.samples; ++k) {
    out.push_back(k == ns.samples - 1 ? s1 : s0 + (s1 - s0) * k / (ns.samples - 1));
  }
  return out;
}

std::string csv_header(int n) {
  std::string h = "s";
  for (const char* p : {"x", "u", "xi", "V", "rhs"}) {
    for (int i = 0; i < n; ++i) h += std::string(",") + p + "_" + std::to_string(i);
  }
  return h + ",res_firstintegral\n";
}

void csv_row(std::string& out, double s, std::initializer_list<std::span<const double>> blocks, int n, double fi) {
  out += format_double(s);
  for (const auto& b : blocks) {
    for (int i = 0; i < n; ++i) {
      out += ',';
      out += b.empty() ? "nan" : format_double(b[z(i)]);
    }
  }
  out += ',';
  out += format_double(fi);
  out += '\n';
}

std::string run_integrate(Context& c) {
  const auto& tr = *c.sc.trajectory;
  const IntegratorSettings st = settings_of(c.sc.numerics);
  const auto grid = sample_grid(c.sc.numerics, tr.s0, tr.s1);
  std::string csv = csv_header(c.n);

  std::optional<VectorField> u;
  if (c.sc.u) u = c.vector_field(*c.sc.u, "u");

  if (!c.sc.deviation) {
    if (tr.kind != "geodesic") {
      // integral curve only: a deviation run with zero data gives the base curve
      TrajectorySpec spec{TrajectoryKind::flow, tr.x0, {}, u, tr.s0, tr.s1};
      const std::vector<double> zero(z(c.n), 0.0);
      const auto run = integrate_deviation(c.space, spec, zero, zero, ConditionTag::family, st, grid,
                                           c.sc.numerics.curvature_fraction);
      for (const auto& sn : run.states) csv_row(csv, sn.s, {sn.x.coords(), sn.u, {}, {}, {}}, c.n, std::nan(""));
      c.info.push_back({"steps", std::to_string(run.steps)});
      c.info.push_back({"nodes", std::to_string(run.states.size())});
      return csv;
    }
    const auto traj = integrate_geodesic(c.space, ChartPoint(tr.x0), tr.u0, tr.s0, tr.s1, st, grid);
    for (const auto& nd : traj.nodes) csv_row(csv, nd.s, {nd.x.coords(), nd.u, {}, {}, {}}, c.n, std::nan(""));
    c.info.push_back({"nodes", std::to_string(traj.nodes.size())});
    if (traj.nodes.size() >= 3 && !grid.empty()) {
      Check ch{"tangent-consistency", traj.tangent_consistency(), std::nan(""), true, "informational"};
      c.checks.push_back(ch);
    }
    return csv;
  }

  const auto& dv = *c.sc.deviation;
  const ConditionTag tag = dv.condition == "family" ? ConditionTag::family : ConditionTag::free_particles;
  TrajectorySpec spec;
  spec.kind = tr.kind == "flow" ? TrajectoryKind::flow : TrajectoryKind::geodesic;
  spec.x0 = tr.x0;
  spec.u0 = tr.u0;
  spec.u_field = u;
  spec.s0 = tr.s0;
  spec.s1 = tr.s1;
  std::vector<double> V0 = dv.V0;
  if (dv.V0_from_family) V0 = family_initial_velocity(c.space, ChartPoint(tr.x0), *u, dv.xi0);
  const auto run = integrate_deviation(c.space, spec, dv.xi0, V0, tag, st, grid, c.sc.numerics.curvature_fraction);
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    const auto& sn = run.states[k];
    csv_row(csv, sn.s, {sn.x.coords(), sn.u, sn.xi, sn.V, run.rhs[k]}, c.n, run.first_integral[k]);
  }
  for (const auto& w : run.warnings) c.warnings.push_back(w);
  c.info.push_back({"steps", std::to_string(run.steps)});
  c.info.push_back({"nodes", std::to_string(run.states.size())});
  c.info.push_back({"initial_V", [&] {
                      std::string s;
                      for (std::size_t i = 0; i < V0.size(); ++i) s += (i ? " " : "") + format_double(V0[i]);
                      return s;
                    }()});
  if (u) {
    // |Lie_xi u| relative to 1 + |u||xi| at every node
    const double base = c.tol_or(1e-5);
    Check ch{"first-integral", 0.0, base};
    for (std::size_t k = 0; k < run.states.size(); ++k) {
      const double fi = run.first_integral[k];
      if (std::isnan(fi)) continue;
      const double bound = 1.0 + norm(run.states[k].u) * norm(run.states[k].xi);
      ch.residual = std::max(ch.residual, fi / bound);
    }
    if (tag == ConditionTag::family) ch.pass = ch.residual <= base;
    else ch.note = "informational: free-particles does not conserve it in general";
    c.checks.push_back(ch);
  }
  return csv;
}

void run_tidal(Context& c) {
  const auto& tr = *c.sc.trajectory;
  const auto& dv = *c.sc.deviation;
  DeviationState st{tr.s0, ChartPoint(tr.x0), tr.u0, dv.xi0, dv.V0};
  const auto parts = tidal_decomposition(c.space, st);
  std::vector<double> sum(z(c.n));
  for (int k = 0; k < c.n; ++k) sum[z(k)] = parts.curvature[z(k)] + parts.torsion[z(k)];
  const double tol = c.tol_or(1e-6);
  Check ch{"tidal-sum", norm(sum), tol, true};
  ch.data = {{"curvature_part", parts.curvature}, {"torsion_part", parts.torsion}, {"sum", sum}};
  ch.data.push_back({"norms", {norm(parts.curvature), norm(parts.torsion)}});
  if (c.sc.expect_cancel) ch.pass = ch.residual <= tol;
  else ch.note = "informational: cancellation not requested";
  c.checks.push_back(ch);
}

void run_lie_oracle(Context& c) {
  const VectorField xi = c.vector_field(*c.sc.xi, "xi");
  const double tol = c.tol_or(1e-5);
  DraggingProbe probe{c.sc.numerics.epsilons, 1e-2};
  probe.validate();
  const auto& eps = probe.epsilons;
  const double rho = eps[0] / eps[1];
  Check agree{"extrapolated-vs-closed-form", 0.0, tol};
  Check slope{"convergence-slope", std::nan(""), 0.2};
  std::vector<double> slopes;
  for (const auto& x : c.points()) {
    const auto cf = lie_derivative_connection(c.space, xi, x, LieSource::closed_form).L;
    const auto est = dragging_oracle(c.space, xi, x, probe);
    const double scale = std::max(1.0, max_abs(cf));
    agree.residual = std::max(agree.residual, max_abs_diff(est.extrapolated, cf) / scale);
    if (eps.size() < 3) continue;
    // errors of consecutive-pair extrapolants shrink like eps^2
    std::vector<double> r;
    for (std::size_t k = 0; k + 1 < est.difference_quotients.size(); ++k) {
      TensorValue e = cf;
      for (std::size_t q = 0; q < e.size(); ++q) {
        e[q] = (rho * est.difference_quotients[k + 1][q] - est.difference_quotients[k][q]) / (rho - 1.0);
      }
      r.push_back(max_abs_diff(e, cf));
    }
    if (r.back() > 1e-11 * scale) slopes.push_back(std::log(r.front() / r.back()) / std::log(std::pow(rho, double(r.size() - 1))));
  }
  agree.pass = agree.residual <= tol;
  c.checks.push_back(agree);
  if (eps.size() < 3) return;
  if (slopes.empty()) {
    slope.note = "errors at roundoff level at every point";
  } else {
    const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
    slope.residual = std::max(std::abs(*lo - 2.0), std::abs(*hi - 2.0));
    slope.pass = slope.residual <= 0.2;
    slope.data.push_back({"slope_range", {*lo, *hi}});
  }
  c.checks.push_back(slope);
}

void run_dragged(Context& c) {
  DeviationFields f{c.vector_field(*c.sc.u, "u"), c.vector_field(*c.sc.xi, "xi")};
  const Field w = compile_expressions(c.sc, c.n, {c.sc.w.value_or("1")}, "fields.w");
  const double tol = c.tol_or(1e-6);
  std::vector<ChartPoint> pts;
  if (c.sc.trajectory) pts.push_back(ChartPoint(c.sc.trajectory->x0));
  else pts = c.points();
  Check direct{"direct-residual", 0.0, tol};
  Check printed{"printed-residual", 0.0, std::nan(""), true, "informational"};
  Check dis{"printed-vs-direct", 0.0, std::nan(""), true, "informational"};
  for (const auto& x : pts) {
    const auto r = dragged_condition_residual(c.space, x, f, w);
    for (double v : r.direct) direct.residual = std::max(direct.residual, std::abs(v));
    for (double v : r.printed) printed.residual = std::max(printed.residual, std::abs(v));
    dis.residual = std::max(dis.residual, r.disagreement);
    if (pts.size() == 1) {
      direct.data.push_back({"value", r.direct});
      printed.data.push_back({"value", r.printed});
    }
  }
  direct.pass = direct.residual <= tol;
  c.checks.insert(c.checks.end(), {direct, printed, dis});
}

void emit_number(YAML::Emitter& e, double v) { e << format_double(v); }

std::string render_report(const Context& c, bool pass, const std::vector<std::string>& files) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "task" << YAML::Value << to_string(c.task);
  e << YAML::Key << "space" << YAML::Value << c.space.name();
  e << YAML::Key << "dimension" << YAML::Value << c.n;
  e << YAML::Key << "derivatives" << YAML::Value
    << (c.space.derivative_mode() == DerivativeMode::analytic ? "analytic" : "finite-difference");
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "status" << YAML::Value << (pass ? "pass" : "fail");
  for (const auto& [k, v] : c.info) e << YAML::Key << k << YAML::Value << v;
  e << YAML::Key << "checks" << YAML::Value << YAML::BeginSeq;
  for (const auto& ch : c.checks) {
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << ch.name;
    e << YAML::Key << "residual" << YAML::Value;
    emit_number(e, ch.residual);
    e << YAML::Key << "threshold" << YAML::Value;
    emit_number(e, ch.threshold);
    e << YAML::Key << "pass" << YAML::Value << ch.pass;
    if (!ch.note.empty()) e << YAML::Key << "note" << YAML::Value << ch.note;
    for (const auto& [k, v] : ch.data) {
      e << YAML::Key << k << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (double x : v) emit_number(e, x);
      e << YAML::EndSeq;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  if (!c.warnings.empty()) {
    e << YAML::Key << "warnings" << YAML::Value << YAML::BeginSeq;
    for (const auto& w : c.warnings) e << w;
    e << YAML::EndSeq;
  }
  if (!files.empty()) {
    e << YAML::Key << "files" << YAML::Value << YAML::BeginSeq;
    for (const auto& f : files) e << f;
    e << YAML::EndSeq;
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string output_dir(const Scenario& s, const RunOptions& o) {
  if (o.out_dir) return *o.out_dir;
  if (!s.output_dir.empty()) return s.output_dir;
  if (const char* env = std::getenv("LNDEV_OUT_DIR"); env && *env) return env;
  return ".";
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw ContractError("cannot write '" + p.string() + "'");
}

}  // namespace

RunResult run_scenario(const Scenario& s, Task task, const RunOptions& options) {
  validate_for_task(s, task);
  ResolvedSpace rs = build_space(s);
  Context c{s, task, rs.space, rs.builtin, options.seed.value_or(s.sampling.seed),
            options.tolerance ? options.tolerance : s.numerics.tolerance, rs.space.dim(), {}, {}, {}};

  std::string csv;
  switch (task) {
    case Task::check_identity: run_check_identity(c); break;
    case Task::classify: run_classify(c); break;
    case Task::symmetry: run_symmetry(c); break;
    case Task::integrate: csv = run_integrate(c); break;
    case Task::tidal: run_tidal(c); break;
    case Task::lie_oracle: run_lie_oracle(c); break;
    case Task::dragged_residual: run_dragged(c); break;
  }
  const bool pass = std::all_of(c.checks.begin(), c.checks.end(), [](const Check& ch) { return ch.pass; });

  RunResult r;
  r.exit_code = pass ? 0 : 1;
  r.csv = csv;
  if (options.write_files) {
    const std::filesystem::path dir = output_dir(s, options);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ContractError("cannot create output directory '" + dir.string() + "'");
    const std::string stem = s.output_prefix + "_" + to_string(task);
    if (!csv.empty()) {
      const auto p = dir / (stem + ".csv");
      write_file(p, csv);
      r.files.push_back(p.string());
    }
    const auto rp = dir / (stem + ".report.yaml");
    r.files.push_back(rp.string());
    r.report = render_report(c, pass, r.files);
    write_file(rp, r.report);
  } else {
    r.report = render_report(c, pass, {});
  }
  return r;
}

}  // namespace lndev
