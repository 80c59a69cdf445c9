#include "lndev/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lndev/conditions.hpp"
#include "lndev/error.hpp"
#include "lndev/expr.hpp"
#include "scenario_internal.hpp"

namespace lndev {

namespace {

std::size_t z(int i) { return static_cast<std::size_t>(i); }

const char* const kTaskNames[] = {"check-identity", "classify", "symmetry", "integrate",
                                  "tidal", "lie-oracle", "dragged-residual"};

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// Collects diagnostics while walking the document.
class Reader {
 public:
  std::vector<Diagnostic> diags;

  void error(const YAML::Node& n, const std::string& field, const std::string& why) {
    diags.push_back({line_of(n), field, why});
  }

  bool is_map(const YAML::Node& n, const std::string& field) {
    if (n.IsMap()) return true;
    error(n, field, "expected a mapping");
    return false;
  }

  void check_keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        error(kv.first, path.empty() ? key : path + "." + key, "unknown key '" + key + "'");
      }
    }
  }

  template <class T>
  bool scalar(const YAML::Node& n, const std::string& field, T& out) {
    if (!n.IsScalar()) {
      error(n, field, "expected a scalar");
      return false;
    }
    try {
      out = n.as<T>();
      return true;
    } catch (const YAML::Exception&) {
      error(n, field, "cannot read '" + n.Scalar() + "' as " + type_name<T>());
      return false;
    }
  }

  bool number_list(const YAML::Node& n, const std::string& field, std::vector<double>& out) {
    if (!n.IsSequence()) {
      error(n, field, "expected a list of numbers");
      return false;
    }
    out.clear();
    bool ok = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
      double v = 0.0;
      ok = scalar(n[i], field + "[" + std::to_string(i) + "]", v) && ok;
      out.push_back(v);
    }
    return ok;
  }

  bool string_list(const YAML::Node& n, const std::string& field, std::vector<std::string>& out) {
    if (!n.IsSequence()) {
      error(n, field, "expected a list");
      return false;
    }
    out.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      std::string v;
      scalar(n[i], field + "[" + std::to_string(i) + "]", v);
      out.push_back(v);
    }
    return true;
  }

  // n x n nested list of expressions, flattened row-major.
  void matrix(const YAML::Node& n, const std::string& field, std::vector<std::string>& out) {
    out.clear();
    if (!n.IsSequence()) {
      error(n, field, "expected a list of rows");
      return;
    }
    for (std::size_t r = 0; r < n.size(); ++r) {
      std::vector<std::string> row;
      string_list(n[r], field + "[" + std::to_string(r) + "]", row);
      if (row.size() != n.size()) error(n[r], field, "rows must have as many entries as there are rows");
      out.insert(out.end(), row.begin(), row.end());
    }
  }

  // Sparse (k, i, j, expr) entries.
  void entries(const YAML::Node& n, const std::string& field, std::map<std::array<int, 3>, std::string>& out) {
    out.clear();
    if (!n.IsSequence()) {
      error(n, field, "expected a list of [k, i, j, expression] entries");
      return;
    }
    for (std::size_t e = 0; e < n.size(); ++e) {
      const std::string f = field + "[" + std::to_string(e) + "]";
      const YAML::Node item = n[e];
      if (!item.IsSequence() || item.size() != 4) {
        error(item, f, "expected [k, i, j, expression]");
        continue;
      }
      std::array<int, 3> idx{};
      bool ok = true;
      for (int q = 0; q < 3; ++q) ok = scalar(item[z(q)], f, idx[z(q)]) && ok;
      std::string ex;
      ok = scalar(item[3], f, ex) && ok;
      if (!ok) continue;
      if (out.count(idx)) error(item, f, "duplicate entry");
      out[idx] = ex;
    }
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_same_v<T, bool>) return "true/false";
    else return "text";
  }
};

FieldSpec read_field(Reader& r, const YAML::Node& n, const std::string& path) {
  FieldSpec f;
  if (!r.is_map(n, path)) return f;
  r.check_keys(n, path, {"basis", "components"});
  if (n["basis"]) {
    std::string b;
    if (r.scalar(n["basis"], path + ".basis", b)) {
      if (b == "frame") f.basis = Basis::frame;
      else if (b == "coordinate") f.basis = Basis::coordinate;
      else r.error(n["basis"], path + ".basis", "basis must be 'frame' or 'coordinate'");
    }
  }
  if (n["components"]) r.string_list(n["components"], path + ".components", f.components);
  else r.error(n, path + ".components", "missing required key");
  return f;
}

void read_space(Reader& r, const YAML::Node& n, SpaceSpec& s) {
  if (!r.is_map(n, "space")) return;
  r.check_keys(n, "space", {"builtin", "n", "a", "c", "M", "b", "w", "dim", "coordinates", "frame", "connection", "metric"});
  if (n["builtin"]) r.scalar(n["builtin"], "space.builtin", s.builtin);
  auto opt = [&](const char* key, auto& out) {
    if (n[key]) {
      typename std::remove_reference_t<decltype(out)>::value_type v{};
      if (r.scalar(n[key], std::string("space.") + key, v)) out = v;
    }
  };
  opt("n", s.n);
  opt("a", s.a);
  opt("c", s.c);
  opt("M", s.M);
  opt("b", s.b);
  if (n["w"]) r.number_list(n["w"], "space.w", s.w);
  if (n["dim"]) r.scalar(n["dim"], "space.dim", s.dim);
  if (n["coordinates"]) r.string_list(n["coordinates"], "space.coordinates", s.coordinates);
  if (n["frame"]) r.matrix(n["frame"], "space.frame", s.frame);
  if (n["connection"]) r.entries(n["connection"], "space.connection", s.connection);
  if (n["metric"]) r.matrix(n["metric"], "space.metric", s.metric);

  const bool inline_keys = n["dim"] || n["coordinates"] || n["frame"] || n["connection"] || n["metric"];
  if (!s.builtin.empty() && inline_keys) {
    r.error(n, "space", "give either 'builtin' or an inline definition, not both");
  }
  if (s.builtin.empty()) {
    if (!n["dim"]) r.error(n, "space.dim", "inline space needs 'dim'");
    else if (s.dim < 2 || s.dim > kMaxDim) r.error(n["dim"], "space.dim", "dimension must be between 2 and " + std::to_string(kMaxDim));
    if (!s.coordinates.empty() && static_cast<int>(s.coordinates.size()) != s.dim) {
      r.error(n["coordinates"], "space.coordinates", "need one name per dimension");
    }
    if (!s.frame.empty() && static_cast<int>(s.frame.size()) != s.dim * s.dim) {
      r.error(n["frame"], "space.frame", "frame must be dim x dim");
    }
    if (!s.metric.empty() && static_cast<int>(s.metric.size()) != s.dim * s.dim) {
      r.error(n["metric"], "space.metric", "metric must be dim x dim");
    }
    for (const auto& [idx, ex] : s.connection) {
      for (int q : idx) {
        if (q < 0 || q >= s.dim) r.error(n["connection"], "space.connection", "index out of range");
      }
    }
  } else if (const auto names = builtin_names(); std::find(names.begin(), names.end(), s.builtin) == names.end()) {
    r.error(n["builtin"], "space.builtin", "unknown builtin '" + s.builtin + "'");
  }
}

std::vector<std::string> builtin_coordinates(const std::string& name, int n) {
  if (name == "sphere") return n == 3 ? std::vector<std::string>{"chi", "theta", "phi"} : std::vector<std::string>{"theta", "phi"};
  if (name == "schwarzschild") return {"t", "r", "theta", "phi"};
  if (name == "flat-polar-frame") return {"r", "theta"};
  if (name == "compensation") return {"theta", "phi"};
  return {};
}

BuiltinParams builtin_params(const SpaceSpec& s) {
  BuiltinParams p;
  if (s.n) p.n = *s.n;
  if (s.a) p.a = *s.a;
  if (s.c) p.c = *s.c;
  if (s.M) p.M = *s.M;
  if (s.b) p.b = *s.b;
  p.w = s.w;
  return p;
}

// Variable names usable in expressions: x0..x{n-1} plus coordinate names.
std::vector<std::string> variables(const SpaceSpec& s, int n) {
  std::vector<std::string> v = s.builtin.empty() ? s.coordinates : builtin_coordinates(s.builtin, n);
  if (v.empty()) {
    for (int i = 0; i < n; ++i) v.push_back("x" + std::to_string(i));
  }
  return v;
}

// Expressions are evaluated with the coordinate-name list followed by the
// generic names, so both spellings work.
struct Vars {
  std::vector<std::string> names;
  int n = 0;
};

Vars make_vars(const SpaceSpec& s, int n) {
  Vars v;
  v.n = n;
  v.names = variables(s, n);
  if (v.names.size() == z(n)) {
    for (int i = 0; i < n; ++i) {
      const std::string g = "x" + std::to_string(i);
      if (std::find(v.names.begin(), v.names.end(), g) == v.names.end()) v.names.push_back(g);
    }
  }
  return v;
}

Field compile(const std::vector<std::string>& texts, const Vars& vars, const std::string& field) {
  std::vector<Expr> ex;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    ex.push_back(Expr::parse(texts[i], vars.names, field + "[" + std::to_string(i) + "]"));
  }
  const int n = vars.n;
  const int extra = static_cast<int>(vars.names.size()) - n;
  if (extra == 0) return expression_field(ex, n);
  // duplicate coordinates for the alias names
  std::vector<int> map(vars.names.size());
  for (std::size_t i = 0; i < vars.names.size(); ++i) map[i] = i < z(n) ? static_cast<int>(i) : std::stoi(vars.names[i].substr(1));
  return Field::generic(n, static_cast<int>(ex.size()), [ex, map](const auto& x, auto& out) {
    using S = std::decay_t<decltype(out[0])>;
    std::vector<S> full(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) full[i] = x[z(map[i])];
    for (std::size_t c = 0; c < ex.size(); ++c) out[c] = ex[c].eval(std::span<const S>(full));
  });
}

Field compile_entries(const std::map<std::array<int, 3>, std::string>& entries, const Vars& vars, const std::string& field) {
  const int n = vars.n;
  std::vector<std::string> texts(z(n * n * n), "0");
  for (const auto& [idx, ex] : entries) {
    texts[z((idx[0] * n + idx[1]) * n + idx[2])] = ex;
  }
  return compile(texts, vars, field);
}

int space_dim(const SpaceSpec& s) {
  if (s.builtin.empty()) return s.dim;
  Scenario tmp;
  tmp.space = s;
  return build_space(tmp).space.dim();
}

}  // namespace

Field compile_expressions(const Scenario& s, int n, const std::vector<std::string>& texts, const std::string& field) {
  return compile(texts, make_vars(s.space, n), field);
}

Field compile_index_entries(const Scenario& s, int n, const std::map<std::array<int, 3>, std::string>& entries,
                            const std::string& field) {
  return compile_entries(entries, make_vars(s.space, n), field);
}

std::string to_string(Task t) { return kTaskNames[static_cast<int>(t)]; }

Task parse_task(const std::string& name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kTaskNames[i]) return static_cast<Task>(i);
  }
  throw ParseError({{0, "task", "unknown task '" + name + "'"}});
}

std::vector<std::string> task_names() { return {std::begin(kTaskNames), std::end(kTaskNames)}; }

ResolvedSpace build_space(const Scenario& sc) {
  const SpaceSpec& s = sc.space;
  if (!s.builtin.empty()) {
    BuiltinSpace b = make_builtin(s.builtin, builtin_params(s));
    ConnectionSpace sp = b.space;
    return {sp, std::move(b)};
  }
  const int n = s.dim;
  if (n < 2 || n > kMaxDim) throw ContractError("inline space dimension out of range");
  const Vars vars = make_vars(s, n);
  const Field gamma = compile_entries(s.connection, vars, "space.connection");
  std::optional<Field> metric;
  if (!s.metric.empty()) metric = compile(s.metric, vars, "space.metric");
  if (s.frame.empty()) return {ConnectionSpace::coordinate("inline", n, gamma, metric), std::nullopt};
  return {ConnectionSpace("inline", n, compile(s.frame, vars, "space.frame"), gamma, metric), std::nullopt};
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError({{e.mark.line + 1, "", e.msg}});
  }
  Reader r;
  Scenario s;
  if (!root.IsMap()) throw ParseError({{line_of(root), "", "scenario must be a mapping"}});
  r.check_keys(root, "", {"task", "space", "fields", "trajectory", "deviation", "numerics", "sampling", "symmetry", "classify", "tidal", "output"});
  if (root["task"]) {
    if (r.scalar(root["task"], "task", s.task)) {
      const auto names = task_names();
      if (std::find(names.begin(), names.end(), s.task) == names.end()) r.error(root["task"], "task", "unknown task '" + s.task + "'");
    }
  }
  if (root["space"]) read_space(r, root["space"], s.space);
  else r.error(root, "space", "missing required section");

  if (const auto f = root["fields"]) {
    if (r.is_map(f, "fields")) {
      r.check_keys(f, "fields", {"u", "xi", "w", "lie_gamma"});
      if (f["u"]) s.u = read_field(r, f["u"], "fields.u");
      if (f["xi"]) s.xi = read_field(r, f["xi"], "fields.xi");
      if (f["w"]) {
        std::string w;
        if (r.scalar(f["w"], "fields.w", w)) s.w = w;
      }
      if (f["lie_gamma"]) r.entries(f["lie_gamma"], "fields.lie_gamma", s.lie_gamma);
    }
  }
  if (const auto t = root["trajectory"]) {
    if (r.is_map(t, "trajectory")) {
      r.check_keys(t, "trajectory", {"kind", "x0", "u0", "s_range"});
      TrajectorySection tr;
      if (t["kind"] && r.scalar(t["kind"], "trajectory.kind", tr.kind) && tr.kind != "geodesic" && tr.kind != "flow") {
        r.error(t["kind"], "trajectory.kind", "kind must be 'geodesic' or 'flow'");
      }
      if (t["x0"]) r.number_list(t["x0"], "trajectory.x0", tr.x0);
      else r.error(t, "trajectory.x0", "missing required key");
      if (t["u0"]) r.number_list(t["u0"], "trajectory.u0", tr.u0);
      if (t["s_range"]) {
        std::vector<double> sr;
        if (r.number_list(t["s_range"], "trajectory.s_range", sr)) {
          if (sr.size() != 2) r.error(t["s_range"], "trajectory.s_range", "expected [s0, s1]");
          else {
            tr.s0 = sr[0];
            tr.s1 = sr[1];
          }
        }
      }
      s.trajectory = tr;
    }
  }
  if (const auto d = root["deviation"]) {
    if (r.is_map(d, "deviation")) {
      r.check_keys(d, "deviation", {"xi0", "V0", "condition"});
      DeviationSection dv;
      if (d["xi0"]) r.number_list(d["xi0"], "deviation.xi0", dv.xi0);
      else r.error(d, "deviation.xi0", "missing required key");
      if (d["V0"]) {
        if (d["V0"].IsScalar() && d["V0"].Scalar() == "family") dv.V0_from_family = true;
        else r.number_list(d["V0"], "deviation.V0", dv.V0);
      }
      if (d["condition"]) r.scalar(d["condition"], "deviation.condition", dv.condition);
      s.deviation = dv;
    }
  }
  if (const auto nm = root["numerics"]) {
    if (r.is_map(nm, "numerics")) {
      r.check_keys(nm, "numerics", {"method", "step", "rel_tol", "abs_tol", "max_steps", "samples", "tolerance", "epsilons", "curvature_fraction"});
      auto& ns = s.numerics;
      if (nm["method"] && r.scalar(nm["method"], "numerics.method", ns.method) && ns.method != "rk4-fixed" && ns.method != "rk45-adaptive") {
        r.error(nm["method"], "numerics.method", "method must be 'rk4-fixed' or 'rk45-adaptive'");
      }
      if (nm["step"]) r.scalar(nm["step"], "numerics.step", ns.step);
      if (nm["rel_tol"]) r.scalar(nm["rel_tol"], "numerics.rel_tol", ns.rel_tol);
      if (nm["abs_tol"]) r.scalar(nm["abs_tol"], "numerics.abs_tol", ns.abs_tol);
      if (nm["max_steps"]) r.scalar(nm["max_steps"], "numerics.max_steps", ns.max_steps);
      if (nm["samples"]) r.scalar(nm["samples"], "numerics.samples", ns.samples);
      if (nm["tolerance"]) {
        double t = 0.0;
        if (r.scalar(nm["tolerance"], "numerics.tolerance", t)) ns.tolerance = t;
      }
      if (nm["epsilons"]) r.number_list(nm["epsilons"], "numerics.epsilons", ns.epsilons);
      if (nm["curvature_fraction"]) r.scalar(nm["curvature_fraction"], "numerics.curvature_fraction", ns.curvature_fraction);
      if (!(ns.step > 0.0)) r.error(nm, "numerics.step", "step must be positive");
      if (ns.samples < 0 || ns.samples == 1) r.error(nm, "numerics.samples", "samples must be 0 or at least 2");
    }
  }
  if (const auto sm = root["sampling"]) {
    if (r.is_map(sm, "sampling")) {
      r.check_keys(sm, "sampling", {"box", "points", "seed"});
      if (const auto b = sm["box"]) {
        if (r.is_map(b, "sampling.box")) {
          r.check_keys(b, "sampling.box", {"lo", "hi"});
          if (b["lo"]) r.number_list(b["lo"], "sampling.box.lo", s.sampling.lo);
          if (b["hi"]) r.number_list(b["hi"], "sampling.box.hi", s.sampling.hi);
          if (s.sampling.lo.size() != s.sampling.hi.size()) r.error(b, "sampling.box", "lo and hi need the same length");
        }
      }
      if (sm["points"]) r.scalar(sm["points"], "sampling.points", s.sampling.points);
      if (sm["seed"]) r.scalar(sm["seed"], "sampling.seed", s.sampling.seed);
      if (s.sampling.points < 1) r.error(sm, "sampling.points", "need at least one point");
    }
  }
  if (const auto sy = root["symmetry"]) {
    if (r.is_map(sy, "symmetry")) {
      r.check_keys(sy, "symmetry", {"kind"});
      if (sy["kind"]) r.scalar(sy["kind"], "symmetry.kind", s.symmetry_kind);
    }
  }
  if (const auto c = root["classify"]) {
    if (r.is_map(c, "classify")) {
      r.check_keys(c, "classify", {"recurrence_order", "expect"});
      if (c["recurrence_order"]) r.scalar(c["recurrence_order"], "classify.recurrence_order", s.recurrence_order);
      if (const auto e = c["expect"]) {
        if (r.is_map(e, "classify.expect")) {
          for (const auto& kv : e) {
            bool v = false;
            const std::string key = kv.first.as<std::string>();
            if (r.scalar(kv.second, "classify.expect." + key, v)) s.expect[key] = v;
          }
        }
      }
    }
  }
  if (const auto t = root["tidal"]) {
    if (r.is_map(t, "tidal")) {
      r.check_keys(t, "tidal", {"expect_cancel"});
      if (t["expect_cancel"]) r.scalar(t["expect_cancel"], "tidal.expect_cancel", s.expect_cancel);
    }
  }
  if (const auto o = root["output"]) {
    if (r.is_map(o, "output")) {
      r.check_keys(o, "output", {"dir", "prefix"});
      if (o["dir"]) r.scalar(o["dir"], "output.dir", s.output_dir);
      if (o["prefix"]) r.scalar(o["prefix"], "output.prefix", s.output_prefix);
    }
  }
  if (!r.diags.empty()) throw ParseError(r.diags);

  // Expressions: compile and evaluate at a representative point.
  int n = 0;
  try {
    n = space_dim(s.space);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError({{line_of(root["space"]), "space", e.what()}});
  }
  const Vars vars = make_vars(s.space, n);
  std::vector<double> probe(z(n), 0.0);
  if (s.trajectory && s.trajectory->x0.size() == z(n)) probe = s.trajectory->x0;
  else if (s.sampling.lo.size() == z(n)) {
    for (int i = 0; i < n; ++i) probe[z(i)] = 0.5 * (s.sampling.lo[z(i)] + s.sampling.hi[z(i)]);
  } else if (!s.space.builtin.empty()) {
    const auto b = build_space(s).builtin;
    for (int i = 0; i < n; ++i) probe[z(i)] = 0.5 * (b->box.lo[z(i)] + b->box.hi[z(i)]);
  }
  auto check = [&](const YAML::Node& node, const std::string& field, auto&& make) {
    try {
      const Field f = make();
      for (double v : f.values(ChartPoint(probe))) {
        if (!std::isfinite(v)) throw EvaluationError("not finite at the initial point");
      }
    } catch (const ParseError& e) {
      for (const auto& d : e.diagnostics()) r.diags.push_back({line_of(node), d.field, d.reason});
    } catch (const Error& e) {
      r.diags.push_back({line_of(node), field, e.what()});
    }
  };
  const YAML::Node sp = root["space"];
  if (s.space.builtin.empty()) {
    check(sp["connection"] ? sp["connection"] : sp, "space.connection", [&] { return compile_entries(s.space.connection, vars, "space.connection"); });
    if (!s.space.frame.empty()) check(sp["frame"], "space.frame", [&] { return compile(s.space.frame, vars, "space.frame"); });
    if (!s.space.metric.empty()) check(sp["metric"], "space.metric", [&] { return compile(s.space.metric, vars, "space.metric"); });
  }
  const YAML::Node fl = root["fields"];
  for (auto* fs : {&s.u, &s.xi}) {
    if (!*fs) continue;
    const std::string name = fs == &s.u ? "u" : "xi";
    if ((*fs)->components.size() != z(n)) {
      r.diags.push_back({line_of(fl[name]), "fields." + name + ".components", "need " + std::to_string(n) + " components"});
      continue;
    }
    check(fl[name], "fields." + name, [&] { return compile((*fs)->components, vars, "fields." + name + ".components"); });
  }
  if (s.w) check(fl["w"], "fields.w", [&] { return compile({*s.w}, vars, "fields.w"); });
  if (!s.lie_gamma.empty()) {
    for (const auto& [idx, ex] : s.lie_gamma) {
      for (int q : idx) {
        if (q < 0 || q >= n) r.diags.push_back({line_of(fl["lie_gamma"]), "fields.lie_gamma", "index out of range"});
      }
    }
    if (r.diags.empty()) check(fl["lie_gamma"], "fields.lie_gamma", [&] { return compile_entries(s.lie_gamma, vars, "fields.lie_gamma"); });
  }
  auto check_len = [&](const std::vector<double>& v, const YAML::Node& node, const std::string& field, bool optional) {
    if (optional && v.empty()) return;
    if (v.size() != z(n)) r.diags.push_back({line_of(node), field, "need " + std::to_string(n) + " entries"});
  };
  if (s.trajectory) {
    check_len(s.trajectory->x0, root["trajectory"], "trajectory.x0", false);
    check_len(s.trajectory->u0, root["trajectory"], "trajectory.u0", true);
  }
  if (s.deviation) {
    check_len(s.deviation->xi0, root["deviation"], "deviation.xi0", false);
    check_len(s.deviation->V0, root["deviation"], "deviation.V0", true);
  }
  if (!s.sampling.lo.empty()) check_len(s.sampling.lo, root["sampling"], "sampling.box", false);
  if (!r.diags.empty()) throw ParseError(r.diags);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError({{0, "scenario", "cannot open '" + path + "'"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void emit_numbers(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << YAML::Value << format_double(x);
  e << YAML::EndSeq;
}

void emit_strings(YAML::Emitter& e, const std::vector<std::string>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : v) e << YAML::DoubleQuoted << x;
  e << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& e, const std::vector<std::string>& m, int n) {
  e << YAML::BeginSeq;
  for (int r = 0; r < n; ++r) emit_strings(e, std::vector<std::string>(m.begin() + r * n, m.begin() + (r + 1) * n));
  e << YAML::EndSeq;
}

void emit_entries(YAML::Emitter& e, const std::map<std::array<int, 3>, std::string>& m) {
  e << YAML::BeginSeq;
  for (const auto& [idx, ex] : m) {
    e << YAML::Flow << YAML::BeginSeq << idx[0] << idx[1] << idx[2] << YAML::DoubleQuoted << ex << YAML::EndSeq;
  }
  e << YAML::EndSeq;
}

void emit_field(YAML::Emitter& e, const FieldSpec& f) {
  e << YAML::BeginMap;
  e << YAML::Key << "basis" << YAML::Value << (f.basis == Basis::frame ? "frame" : "coordinate");
  e << YAML::Key << "components" << YAML::Value;
  emit_strings(e, f.components);
  e << YAML::EndMap;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  if (!s.task.empty()) e << YAML::Key << "task" << YAML::Value << s.task;
  e << YAML::Key << "space" << YAML::Value << YAML::BeginMap;
  const SpaceSpec& sp = s.space;
  if (!sp.builtin.empty()) {
    e << YAML::Key << "builtin" << YAML::Value << sp.builtin;
    if (sp.n) e << YAML::Key << "n" << YAML::Value << *sp.n;
    for (auto [key, val] : {std::pair{"a", sp.a}, std::pair{"c", sp.c}, std::pair{"M", sp.M}, std::pair{"b", sp.b}}) {
      if (val) e << YAML::Key << key << YAML::Value << format_double(*val);
    }
    if (!sp.w.empty()) {
      e << YAML::Key << "w" << YAML::Value;
      emit_numbers(e, sp.w);
    }
  } else {
    e << YAML::Key << "dim" << YAML::Value << sp.dim;
    if (!sp.coordinates.empty()) {
      e << YAML::Key << "coordinates" << YAML::Value;
      emit_strings(e, sp.coordinates);
    }
    if (!sp.frame.empty()) {
      e << YAML::Key << "frame" << YAML::Value;
      emit_matrix(e, sp.frame, sp.dim);
    }
    e << YAML::Key << "connection" << YAML::Value;
    emit_entries(e, sp.connection);
    if (!sp.metric.empty()) {
      e << YAML::Key << "metric" << YAML::Value;
      emit_matrix(e, sp.metric, sp.dim);
    }
  }
  e << YAML::EndMap;

  if (s.u || s.xi || s.w || !s.lie_gamma.empty()) {
    e << YAML::Key << "fields" << YAML::Value << YAML::BeginMap;
    if (s.u) {
      e << YAML::Key << "u" << YAML::Value;
      emit_field(e, *s.u);
    }
    if (s.xi) {
      e << YAML::Key << "xi" << YAML::Value;
      emit_field(e, *s.xi);
    }
    if (s.w) e << YAML::Key << "w" << YAML::Value << YAML::DoubleQuoted << *s.w;
    if (!s.lie_gamma.empty()) {
      e << YAML::Key << "lie_gamma" << YAML::Value;
      emit_entries(e, s.lie_gamma);
    }
    e << YAML::EndMap;
  }
  if (s.trajectory) {
    const auto& t = *s.trajectory;
    e << YAML::Key << "trajectory" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kind" << YAML::Value << t.kind;
    e << YAML::Key << "x0" << YAML::Value;
    emit_numbers(e, t.x0);
    if (!t.u0.empty()) {
      e << YAML::Key << "u0" << YAML::Value;
      emit_numbers(e, t.u0);
    }
    e << YAML::Key << "s_range" << YAML::Value;
    emit_numbers(e, {t.s0, t.s1});
    e << YAML::EndMap;
  }
  if (s.deviation) {
    const auto& d = *s.deviation;
    e << YAML::Key << "deviation" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "xi0" << YAML::Value;
    emit_numbers(e, d.xi0);
    if (d.V0_from_family) e << YAML::Key << "V0" << YAML::Value << "family";
    else if (!d.V0.empty()) {
      e << YAML::Key << "V0" << YAML::Value;
      emit_numbers(e, d.V0);
    }
    e << YAML::Key << "condition" << YAML::Value << d.condition;
    e << YAML::EndMap;
  }
  {
    const auto& n = s.numerics;
    e << YAML::Key << "numerics" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "method" << YAML::Value << n.method;
    e << YAML::Key << "step" << YAML::Value << format_double(n.step);
    e << YAML::Key << "rel_tol" << YAML::Value << format_double(n.rel_tol);
    e << YAML::Key << "abs_tol" << YAML::Value << format_double(n.abs_tol);
    e << YAML::Key << "max_steps" << YAML::Value << n.max_steps;
    e << YAML::Key << "samples" << YAML::Value << n.samples;
    if (n.tolerance) e << YAML::Key << "tolerance" << YAML::Value << format_double(*n.tolerance);
    e << YAML::Key << "epsilons" << YAML::Value;
    emit_numbers(e, n.epsilons);
    e << YAML::Key << "curvature_fraction" << YAML::Value << format_double(n.curvature_fraction);
    e << YAML::EndMap;
  }
  e << YAML::Key << "sampling" << YAML::Value << YAML::BeginMap;
  if (!s.sampling.lo.empty()) {
    e << YAML::Key << "box" << YAML::Value << YAML::BeginMap << YAML::Key << "lo" << YAML::Value;
    emit_numbers(e, s.sampling.lo);
    e << YAML::Key << "hi" << YAML::Value;
    emit_numbers(e, s.sampling.hi);
    e << YAML::EndMap;
  }
  e << YAML::Key << "points" << YAML::Value << s.sampling.points;
  e << YAML::Key << "seed" << YAML::Value << s.sampling.seed;
  e << YAML::EndMap;
  if (!s.symmetry_kind.empty()) {
    e << YAML::Key << "symmetry" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << s.symmetry_kind << YAML::EndMap;
  }
  e << YAML::Key << "classify" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "recurrence_order" << YAML::Value << s.recurrence_order;
  if (!s.expect.empty()) {
    e << YAML::Key << "expect" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : s.expect) e << YAML::Key << k << YAML::Value << v;
    e << YAML::EndMap;
  }
  e << YAML::EndMap;
  e << YAML::Key << "tidal" << YAML::Value << YAML::BeginMap << YAML::Key << "expect_cancel" << YAML::Value << s.expect_cancel << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  if (!s.output_dir.empty()) e << YAML::Key << "dir" << YAML::Value << YAML::DoubleQuoted << s.output_dir;
  e << YAML::Key << "prefix" << YAML::Value << YAML::DoubleQuoted << s.output_prefix;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate_for_task(const Scenario& s, Task task) {
  std::vector<Diagnostic> d;
  auto need = [&](bool ok, const std::string& field, const std::string& why) {
    if (!ok) d.push_back({0, field, why});
  };
  if (!s.task.empty() && s.task != to_string(task)) {
    d.push_back({0, "task", "scenario is for '" + s.task + "', not '" + to_string(task) + "'"});
  }
  switch (task) {
    case Task::check_identity:
    case Task::lie_oracle:
      need(s.xi.has_value(), "fields.xi", to_string(task) + " needs a deviation field");
      break;
    case Task::classify:
      need(s.recurrence_order == 1 || s.recurrence_order == 2, "classify.recurrence_order", "must be 1 or 2");
      break;
    case Task::symmetry:
      need(s.xi.has_value(), "fields.xi", "symmetry needs the candidate field as fields.xi");
      need(!s.symmetry_kind.empty(), "symmetry.kind", "missing required key");
      if (!s.symmetry_kind.empty()) {
        try {
          parse_symmetry_kind(s.symmetry_kind);
        } catch (const ContractError& e) {
          d.push_back({0, "symmetry.kind", e.what()});
        }
      }
      break;
    case Task::integrate: {
      need(s.trajectory.has_value(), "trajectory", "integrate needs a trajectory");
      if (s.trajectory) {
        if (s.trajectory->kind == "geodesic") need(!s.trajectory->u0.empty(), "trajectory.u0", "geodesic needs u0");
        else need(s.u.has_value(), "fields.u", "flow trajectory needs fields.u");
      }
      if (s.deviation) {
        const auto& dv = *s.deviation;
        need(dv.condition == "family" || dv.condition == "free-particles", "deviation.condition",
             "trajectory integration supports 'family' and 'free-particles'");
        if (dv.condition == "family") need(s.u.has_value(), "fields.u", "family condition needs fields.u");
        need(!dv.V0.empty() || dv.V0_from_family, "deviation.V0", "missing required key");
        if (dv.V0_from_family) need(s.u.has_value(), "deviation.V0", "'family' initial velocity needs fields.u");
      }
      break;
    }
    case Task::tidal:
      need(s.trajectory.has_value() && !s.trajectory->u0.empty(), "trajectory.u0", "tidal needs x0 and u0");
      need(s.deviation.has_value(), "deviation", "tidal needs xi0 and V0");
      if (s.deviation) need(!s.deviation->V0.empty(), "deviation.V0", "tidal needs explicit V0");
      break;
    case Task::dragged_residual:
      need(s.u.has_value() && s.xi.has_value(), "fields", "dragged-residual needs fields.u and fields.xi");
      break;
  }
  if (!d.empty()) throw ParseError(d);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ContractError*>(&e)) return 2;
  return 3;
}

}  // namespace lndev
