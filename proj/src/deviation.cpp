#include "lndev/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lndev/error.hpp"

namespace lndev {

namespace {

using Vec = std::vector<double>;

std::size_t z(int i) { return static_cast<std::size_t>(i); }

Vec vals(const JetTensor& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].value;
  return out;
}

double norm_inf(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec add(Vec a, const Vec& b, double sb = 1.0) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += sb * b[i];
  return a;
}

// t^k_i v^i for a (1,1) jet tensor.
JetTensor apply(const JetTensor& t, const JetTensor& v) {
  const int n = v.dim();
  JetTensor out = JetTensor::valence(n, 1, 0);
  for (int k = 0; k < n; ++k) {
    Jet s(0.0);
    for (int i = 0; i < n; ++i) s += t(k, i) * v(i);
    out(k) = s;
  }
  return out;
}

// T^k_{jl} a^j b^l
JetTensor torsion_of(const JetTensor& t, const JetTensor& a, const JetTensor& b) {
  const int n = a.dim();
  JetTensor out = JetTensor::valence(n, 1, 0);
  for (int k = 0; k < n; ++k) {
    Jet s(0.0);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) s += t(k, j, l) * a(j) * b(l);
    out(k) = s;
  }
  return out;
}

JetTensor jet_vector(std::span<const double> v) {
  JetTensor out = JetTensor::valence(static_cast<int>(v.size()), 1, 0);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Jet(v[i]);
  return out;
}

// u^k_{|i} u^i with all jets kept.
JetTensor force_jet(const LocalGeometry& g, const JetTensor& uv, const JetTensor& du) {
  (void)g;
  return apply(du, uv);
}

// Family torsion tensor at jet level from the u-field.
TensorValue family_torsion(const LocalGeometry& g, const JetTensor& uv, FamilyTorsionForm form) {
  const int n = g.dim();
  const auto& t = g.torsion();
  const JetTensor du = g.covariant_derivative(uv);
  TensorValue out = TensorValue::valence(n, 1, 1);
  JetTensor first;
  if (form == FamilyTorsionForm::family) {
    // (T^k_{lj} u^j)_{|n} u^n
    JetTensor tu = JetTensor::valence(n, 1, 1);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        Jet s(0.0);
        for (int j = 0; j < n; ++j) s += t(k, l, j) * uv(j);
        tu(k, l) = s;
      }
    const JetTensor dtu = g.covariant_derivative(tu);
    first = JetTensor::valence(n, 1, 1);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        Jet s(0.0);
        for (int m = 0; m < n; ++m) s += dtu(k, l, m) * uv(m);
        first(k, l) = s;
      }
  } else {
    const JetTensor dt = g.covariant_derivative(t);
    first = JetTensor::valence(n, 1, 1);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        Jet s(0.0);
        for (int j = 0; j < n; ++j)
          for (int m = 0; m < n; ++m) s += dt(k, l, j, m) * uv(j) * uv(m);
        first(k, l) = s;
      }
  }
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      double v = -first(k, l).value;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          double inner = du(i, l).value;
          for (int m = 0; m < n; ++m) inner -= t(i, l, m).value * uv(m).value;
          v += uv(j).value * t(k, j, i).value * inner;
        }
      }
      out(k, l) = v;
    }
  }
  return out;
}

}  // namespace

std::string to_string(ConditionTag tag) {
  switch (tag) {
    case ConditionTag::generalized: return "generalized";
    case ConditionTag::geodesic_f0: return "geodesic-F0";
    case ConditionTag::lie_u_zero: return "lie-u-zero";
    case ConditionTag::parallel_u: return "parallel-u";
    case ConditionTag::lie_f_minus_f: return "lie-F-minus-F";
    case ConditionTag::u_equals_xi: return "u-equals-xi";
    case ConditionTag::absorbed_lie_gamma: return "absorbed-lieGamma";
    case ConditionTag::family: return "family";
    case ConditionTag::free_particles: return "free-particles";
    case ConditionTag::dragged: return "dragged";
  }
  return "unknown";
}

ConditionTag parse_condition_tag(const std::string& name) {
  for (auto t : {ConditionTag::generalized, ConditionTag::geodesic_f0, ConditionTag::lie_u_zero,
                 ConditionTag::parallel_u, ConditionTag::lie_f_minus_f, ConditionTag::u_equals_xi,
                 ConditionTag::absorbed_lie_gamma, ConditionTag::family,
                 ConditionTag::free_particles, ConditionTag::dragged}) {
    if (to_string(t) == name) return t;
  }
  throw ContractError("unknown condition tag '" + name + "'");
}

DeviationTerms deviation_terms(const ConnectionSpace& space, const ChartPoint& x,
                               const DeviationFields& fields, const ConditionAux& aux) {
  const int n = space.dim();
  LocalGeometry g(space, x);
  const JetTensor uv = g.vector(fields.u);
  const JetTensor xv = g.vector(fields.xi);
  const JetTensor du = g.covariant_derivative(uv);
  const JetTensor dxi = g.covariant_derivative(xv);
  const JetTensor F = force_jet(g, uv, du);
  const auto& r = g.curvature();
  const auto& t = g.torsion();

  DeviationTerms out;
  out.u = vals(uv);
  out.xi = vals(xv);
  out.F = vals(F);
  out.du = values(du);
  out.dxi = values(dxi);

  out.curvature.assign(z(n), 0.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) out.curvature[z(k)] += r(k, i, j, l).value * out.u[z(i)] * out.u[z(j)] * out.xi[z(l)];

  out.force = vals(apply(dxi, F));

  JetTensor txi = JetTensor::valence(n, 1, 1);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      Jet s(0.0);
      for (int l = 0; l < n; ++l) s += t(k, j, l) * xv(l);
      txi(k, j) = s;
    }
  const JetTensor dtxi = g.covariant_derivative(txi);
  out.torsion.assign(z(n), 0.0);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) out.torsion[z(k)] += out.u[z(j)] * out.u[z(m)] * dtxi(k, j, m).value;

  TensorValue lg;
  if (aux.lie_gamma) {
    if (aux.lie_gamma->components() != n * n * n || aux.lie_gamma->dim() != n) {
      throw ContractError("supplied Lie derivative of Gamma has the wrong shape");
    }
    lg = TensorValue::valence(n, 1, 2);
    const auto v = aux.lie_gamma->values(x);
    std::copy(v.begin(), v.end(), lg.data().begin());
  } else {
    lg = values(lie_connection_closed_form(g, xv));
  }
  out.lie_gamma.assign(z(n), 0.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.lie_gamma[z(k)] += out.u[z(i)] * out.u[z(j)] * lg(k, i, j);

  const JetTensor lu = lie_bracket(g, xv, uv);
  out.lie_u = vals(lu);
  out.lie_F = vals(lie_bracket(g, xv, F));
  out.d_lie_u = vals(apply(g.covariant_derivative(lu), uv));
  out.lie_u_du = vals(apply(du, lu));
  out.lie_S = vals(apply(g.lie_derivative(du, xv), uv));
  return out;
}

namespace {

Vec reduced_form(const LocalGeometry* g, const DeviationTerms& d, ConditionTag tag,
                 const ConnectionSpace& space, const ChartPoint& x, const DeviationFields& fields) {
  const Vec base = add(d.curvature, d.torsion);
  switch (tag) {
    case ConditionTag::generalized:
    case ConditionTag::dragged:
      return add(add(base, d.force), d.lie_gamma);
    case ConditionTag::geodesic_f0:
      return add(add(base, d.d_lie_u, -1.0), d.lie_u_du, -1.0);
    case ConditionTag::lie_u_zero:
      return add(add(base, d.force), d.lie_F);
    case ConditionTag::parallel_u:
      return add(base, d.d_lie_u, -1.0);
    case ConditionTag::lie_f_minus_f:
      return add(add(add(add(base, d.force), d.F, -1.0), d.d_lie_u, -1.0), d.lie_u_du, -1.0);
    case ConditionTag::u_equals_xi: {
      // Lie_u F + u^k_{|j} F^j + T(u, F)
      const JetTensor uv = g->vector(fields.u);
      const JetTensor du = g->covariant_derivative(uv);
      const JetTensor F = apply(du, uv);
      Vec out = vals(lie_bracket(*g, uv, F));
      out = add(out, vals(apply(du, F)));
      return add(out, vals(torsion_of(g->torsion(), uv, F)));
    }
    case ConditionTag::absorbed_lie_gamma:
      return add(base, d.F, -1.0);
    case ConditionTag::family:
    case ConditionTag::free_particles: {
      const int n = space.dim();
      const JetTensor uv = g->vector(fields.u);
      const JetTensor du = g->covariant_derivative(uv);
      const TensorValue dF = values(g->covariant_derivative(apply(du, uv)));
      const TensorValue tt = family_torsion(*g, uv, FamilyTorsionForm::family);
      Vec out = d.curvature;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) out[z(k)] += d.xi[z(l)] * (dF(k, l) + tt(k, l));
      (void)x;
      return out;
    }
  }
  throw ContractError("unknown condition tag");
}

double hypothesis_residual(const DeviationTerms& d, ConditionTag tag) {
  switch (tag) {
    case ConditionTag::generalized:
    case ConditionTag::dragged:
      return 0.0;
    case ConditionTag::geodesic_f0:
      return std::max(norm_inf(d.F), norm_inf(d.lie_F));
    case ConditionTag::lie_u_zero:
    case ConditionTag::family:
      return std::max(norm_inf(d.lie_u), norm_inf(d.d_lie_u));
    case ConditionTag::parallel_u:
      return std::max(max_abs(d.du), norm_inf(d.lie_F));
    case ConditionTag::lie_f_minus_f:
      return norm_inf(add(d.lie_F, d.F));
    case ConditionTag::u_equals_xi:
      return std::max(norm_inf(add(d.u, d.xi, -1.0)), max_abs_diff(d.du, d.dxi));
    case ConditionTag::absorbed_lie_gamma:
      return norm_inf(add(add(d.lie_gamma, d.F), d.force));
    case ConditionTag::free_particles:
      return std::max({norm_inf(d.F), norm_inf(d.lie_F), norm_inf(d.lie_u), norm_inf(d.d_lie_u)});
  }
  return 0.0;
}

}  // namespace

DeviationRhs generalized_deviation_rhs(const ConnectionSpace& space, const ChartPoint& x,
                                       const DeviationFields& fields, ConditionTag tag,
                                       RhsForm form, const ConditionAux& aux) {
  const DeviationTerms d = deviation_terms(space, x, fields, aux);
  DeviationRhs out;
  const Vec base = add(add(d.curvature, d.force), d.torsion);
  switch (form) {
    case RhsForm::lie_gamma:
      out.rhs = add(base, d.lie_gamma);
      break;
    case RhsForm::lie_vectors:
      out.rhs = add(add(add(base, d.lie_F), d.d_lie_u, -1.0), d.lie_u_du, -1.0);
      break;
    case RhsForm::commutator:
      out.rhs = add(add(base, d.lie_S), d.d_lie_u, -1.0);
      break;
  }
  out.hypothesis_residual = hypothesis_residual(d, tag);
  double scale = 1.0;
  for (const Vec* v : {&d.u, &d.xi, &d.F, &d.curvature, &d.force, &d.torsion, &d.lie_gamma, &d.lie_u, &d.lie_F}) {
    scale = std::max(scale, norm_inf(*v));
  }
  if (out.hypothesis_residual > aux.tolerance * scale) {
    throw ContractError("data violates the " + to_string(tag) + " hypothesis (residual " +
                        std::to_string(out.hypothesis_residual) + ")");
  }
  LocalGeometry g(space, x);
  out.reduced = reduced_form(&g, d, tag, space, x, fields);
  return out;
}

std::vector<double> force_term(const ConnectionSpace& space, const ChartPoint& x,
                               const VectorField& u_field) {
  LocalGeometry g(space, x);
  const JetTensor uv = g.vector(u_field);
  return vals(apply(g.covariant_derivative(uv), uv));
}

std::vector<double> force_term(const ConnectionSpace& space, const ChartPoint& x,
                               std::span<const double> xdot, std::span<const double> xddot) {
  const int n = space.dim();
  if (static_cast<int>(xdot.size()) != n || static_cast<int>(xddot.size()) != n) {
    throw ContractError("force_term: trajectory derivatives have the wrong length");
  }
  LocalGeometry g(space, x);
  const auto cg = g.coordinate_connection();
  std::vector<Jet> acc(z(n));
  for (int a = 0; a < n; ++a) {
    double v = xddot[z(a)];
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) v += cg(a, b, c).value * xdot[z(b)] * xdot[z(c)];
    acc[z(a)] = Jet(v);
  }
  return vals(g.from_coordinate_components(acc));
}

TensorValue family_torsion_tensor(const ConnectionSpace& space, const ChartPoint& x,
                                  const VectorField& u_field, FamilyTorsionForm form) {
  LocalGeometry g(space, x);
  return family_torsion(g, g.vector(u_field), form);
}

TidalParts tidal_decomposition(const ConnectionSpace& space, const DeviationState& state) {
  const int n = space.dim();
  if (static_cast<int>(state.u.size()) != n || static_cast<int>(state.xi.size()) != n ||
      static_cast<int>(state.V.size()) != n) {
    throw ContractError("tidal_decomposition: state vectors have the wrong length");
  }
  LocalGeometry g(space, state.x);
  const auto& r = g.curvature();
  const auto& t = g.torsion();
  const JetTensor dt = g.covariant_derivative(t);
  TidalParts out;
  out.curvature.assign(z(n), 0.0);
  out.torsion.assign(z(n), 0.0);
  const auto& u = state.u;
  const auto& xi = state.xi;
  const auto& V = state.V;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        for (int i = 0; i < n; ++i) out.curvature[z(k)] += r(k, i, j, l).value * u[z(i)] * u[z(j)] * xi[z(l)];
        for (int m = 0; m < n; ++m) out.torsion[z(k)] += dt(k, j, l, m).value * u[z(m)] * u[z(j)] * xi[z(l)];
        out.torsion[z(k)] += t(k, j, l).value * u[z(j)] * V[z(l)];
      }
  }
  return out;
}

double Trajectory::tangent_consistency() const {
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    const double ds = nodes[i + 1].s - nodes[i - 1].s;
    for (int a = 0; a < nodes[i].x.dim(); ++a) {
      const double fd = (nodes[i + 1].x[a] - nodes[i - 1].x[a]) / ds;
      m = std::max(m, std::abs(fd - nodes[i].u_coord[z(a)]));
    }
  }
  return m;
}

namespace {

void check_length(std::span<const double> v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) throw ContractError(std::string(what) + " has the wrong length");
  for (double x : v) {
    if (!std::isfinite(x)) throw ContractError(std::string(what) + " is not finite");
  }
}

std::vector<double> to_coordinate(const LocalGeometry& g, std::span<const double> frame) {
  const auto c = g.coordinate_components(jet_vector(frame));
  Vec out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].value;
  return out;
}

std::vector<double> to_frame(const LocalGeometry& g, std::span<const double> coord) {
  std::vector<Jet> c(coord.begin(), coord.end());
  return vals(g.from_coordinate_components(c));
}

}  // namespace

Trajectory integrate_geodesic(const ConnectionSpace& space, const ChartPoint& x0,
                              std::span<const double> u0, double s0, double s1,
                              const IntegratorSettings& settings, std::span<const double> samples) {
  const int n = space.dim();
  check_length(x0.coords(), n, "x0");
  check_length(u0, n, "u0");
  Vec y(z(2 * n));
  std::copy(x0.coords().begin(), x0.coords().end(), y.begin());
  {
    LocalGeometry g(space, x0);
    const Vec uc = to_coordinate(g, u0);
    std::copy(uc.begin(), uc.end(), y.begin() + n);
  }
  const OdeRhs rhs = [&space, n](double, std::span<const double> st, std::span<double> d) {
    const ChartPoint x(Vec(st.begin(), st.begin() + n));
    const TensorValue cg = coordinate_connection(space, x);
    for (int a = 0; a < n; ++a) {
      d[z(a)] = st[z(n + a)];
      double acc = 0.0;
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) acc += cg(a, b, c) * st[z(n + b)] * st[z(n + c)];
      d[z(n + a)] = -acc;
    }
  };
  const OdeSolution sol = ode_integrate(rhs, y, s0, s1, settings, samples);
  Trajectory tr;
  for (std::size_t i = 0; i < sol.s.size(); ++i) {
    const auto& st = sol.y[i];
    TrajectoryNode node;
    node.s = sol.s[i];
    node.x = ChartPoint(Vec(st.begin(), st.begin() + n));
    node.u_coord.assign(st.begin() + n, st.end());
    node.u = to_frame(LocalGeometry(space, node.x), node.u_coord);
    tr.nodes.push_back(std::move(node));
  }
  return tr;
}

std::vector<double> family_initial_velocity(const ConnectionSpace& space, const ChartPoint& x,
                                            const VectorField& u_field,
                                            std::span<const double> xi0) {
  const int n = space.dim();
  check_length(xi0, n, "xi0");
  LocalGeometry g(space, x);
  const JetTensor uv = g.vector(u_field);
  const JetTensor du = g.covariant_derivative(uv);
  const JetTensor xv = jet_vector(xi0);
  return add(vals(apply(du, xv)), vals(torsion_of(g.torsion(), uv, xv)));
}

namespace {

struct PointEval {
  Vec u;      // frame
  Vec u_coord;
  Vec rhs;    // covariant DV/ds
  Vec dxi;    // d xi/ds (components)
  Vec dV;     // d V/ds (components)
  double first_integral = std::numeric_limits<double>::quiet_NaN();
};

// Frame-component deviation system at one point. `u_frame` is the tangent of
// the base curve; with a u-field, F and its derivative come from the field.
PointEval deviation_point(const ConnectionSpace& space, const ChartPoint& x,
                          std::span<const double> u_frame, const std::optional<VectorField>& u_field,
                          bool use_field_force, std::span<const double> xi, std::span<const double> V) {
  const int n = space.dim();
  LocalGeometry g(space, x);
  const auto& r = g.curvature();
  const auto& t = g.torsion();
  const auto& gam = g.gamma();
  const JetTensor dt = g.covariant_derivative(t);
  PointEval pe;
  pe.u.assign(u_frame.begin(), u_frame.end());
  const auto& u = pe.u;

  Vec F(z(n), 0.0);
  TensorValue dF = TensorValue::valence(n, 1, 1);
  TensorValue du;
  if (u_field) {
    const JetTensor uv = g.vector(*u_field);
    const JetTensor duj = g.covariant_derivative(uv);
    du = values(duj);
    if (use_field_force) {
      const JetTensor Fj = apply(duj, uv);
      F = vals(Fj);
      dF = values(g.covariant_derivative(Fj));
    }
  }

  pe.rhs.assign(z(n), 0.0);
  for (int k = 0; k < n; ++k) {
    double v = 0.0;
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        for (int i = 0; i < n; ++i) v += r(k, i, j, l).value * u[z(i)] * u[z(j)] * xi[z(l)];
        for (int m = 0; m < n; ++m) v += dt(k, j, l, m).value * u[z(m)] * u[z(j)] * xi[z(l)];
        v += t(k, j, l).value * (u[z(j)] * V[z(l)] + F[z(j)] * xi[z(l)]);
      }
    for (int l = 0; l < n; ++l) v += xi[z(l)] * dF(k, l);
    pe.rhs[z(k)] = v;
  }

  pe.dxi.assign(z(n), 0.0);
  pe.dV.assign(z(n), 0.0);
  for (int k = 0; k < n; ++k) {
    double a = V[z(k)], b = pe.rhs[z(k)];
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j) {
        a -= gam(k, l, j).value * xi[z(l)] * u[z(j)];
        b -= gam(k, l, j).value * V[z(l)] * u[z(j)];
      }
    pe.dxi[z(k)] = a;
    pe.dV[z(k)] = b;
  }

  if (u_field) {
    // Lie_xi u = xi^l u^k_{|l} - V^k + T^k_{jl} u^j xi^l
    Vec lie(z(n), 0.0);
    for (int k = 0; k < n; ++k) {
      double v = -V[z(k)];
      for (int l = 0; l < n; ++l) {
        v += xi[z(l)] * du(k, l);
        for (int j = 0; j < n; ++j) v += t(k, j, l).value * u[z(j)] * xi[z(l)];
      }
      lie[z(k)] = v;
    }
    pe.first_integral = norm2(lie);
  }
  return pe;
}

}  // namespace

DeviationRun integrate_deviation(const ConnectionSpace& space, const TrajectorySpec& spec,
                                 std::span<const double> xi0, std::span<const double> V0,
                                 ConditionTag tag, const IntegratorSettings& settings,
                                 std::span<const double> samples, double curvature_scale_fraction) {
  const int n = space.dim();
  check_length(spec.x0, n, "x0");
  check_length(xi0, n, "xi0");
  check_length(V0, n, "V0");
  if (tag != ConditionTag::family && tag != ConditionTag::free_particles) {
    throw ContractError("condition " + to_string(tag) +
                        " does not close along a trajectory; use the field-level right-hand side");
  }
  if (tag == ConditionTag::family && !spec.u_field) {
    throw ContractError("family condition needs a u-field");
  }
  if (spec.kind == TrajectoryKind::flow && !spec.u_field) {
    throw ContractError("flow trajectory needs a u-field");
  }
  if (tag == ConditionTag::free_particles && spec.kind != TrajectoryKind::geodesic) {
    throw ContractError("free-particles condition needs a geodesic base trajectory");
  }
  const bool geodesic = spec.kind == TrajectoryKind::geodesic;
  const bool field_force = tag == ConditionTag::family;

  DeviationRun run;
  const ChartPoint x0(spec.x0);
  {
    LocalGeometry g(space, x0);
    const double rn = max_abs(values(g.curvature()));
    const double xn = norm2(xi0);
    if (rn > 0.0 && xn > curvature_scale_fraction / std::sqrt(rn)) {
      run.warnings.push_back("deviation vector norm " + std::to_string(xn) +
                             " exceeds the configured fraction of the curvature scale " +
                             std::to_string(1.0 / std::sqrt(rn)));
    }
  }

  // State: x, [x' when geodesic], xi, V
  const int off = geodesic ? 2 * n : n;
  Vec y(z(off + 2 * n));
  std::copy(spec.x0.begin(), spec.x0.end(), y.begin());
  if (geodesic) {
    check_length(spec.u0, n, "u0");
    const Vec uc = to_coordinate(LocalGeometry(space, x0), spec.u0);
    std::copy(uc.begin(), uc.end(), y.begin() + n);
  }
  std::copy(xi0.begin(), xi0.end(), y.begin() + off);
  std::copy(V0.begin(), V0.end(), y.begin() + off + n);

  auto evaluate = [&](std::span<const double> st, Vec& u_coord, Vec& u_frame) {
    const ChartPoint x(Vec(st.begin(), st.begin() + n));
    LocalGeometry g(space, x);
    if (geodesic) {
      u_coord.assign(st.begin() + n, st.begin() + 2 * n);
      u_frame = to_frame(g, u_coord);
    } else {
      const JetTensor uv = g.vector(*spec.u_field);
      u_frame = vals(uv);
      u_coord = to_coordinate(g, u_frame);
    }
    return x;
  };

  const OdeRhs rhs = [&](double, std::span<const double> st, std::span<double> d) {
    Vec uc, uf;
    const ChartPoint x = evaluate(st, uc, uf);
    const PointEval pe = deviation_point(space, x, uf, spec.u_field, field_force,
                                         st.subspan(z(off), z(n)), st.subspan(z(off + n), z(n)));
    for (int a = 0; a < n; ++a) d[z(a)] = uc[z(a)];
    if (geodesic) {
      const TensorValue cg = coordinate_connection(space, x);
      for (int a = 0; a < n; ++a) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) acc += cg(a, b, c) * uc[z(b)] * uc[z(c)];
        d[z(n + a)] = -acc;
      }
    }
    for (int k = 0; k < n; ++k) {
      d[z(off + k)] = pe.dxi[z(k)];
      d[z(off + n + k)] = pe.dV[z(k)];
    }
  };

  const OdeSolution sol = ode_integrate(rhs, y, spec.s0, spec.s1, settings, samples);
  run.steps = sol.steps;
  for (std::size_t i = 0; i < sol.s.size(); ++i) {
    const auto& st = sol.y[i];
    Vec uc, uf;
    const ChartPoint x = evaluate(st, uc, uf);
    const std::span<const double> sv(st);
    const PointEval pe = deviation_point(space, x, uf, spec.u_field, field_force,
                                         sv.subspan(z(off), z(n)), sv.subspan(z(off + n), z(n)));
    DeviationState ds;
    ds.s = sol.s[i];
    ds.x = x;
    ds.u = uf;
    ds.xi.assign(st.begin() + off, st.begin() + off + n);
    ds.V.assign(st.begin() + off + n, st.begin() + off + 2 * n);
    run.states.push_back(std::move(ds));
    run.rhs.push_back(pe.rhs);
    run.first_integral.push_back(pe.first_integral);
    if (std::isfinite(pe.first_integral)) run.max_first_integral = std::max(run.max_first_integral, pe.first_integral);
  }
  if (!spec.u_field) run.max_first_integral = std::numeric_limits<double>::quiet_NaN();
  return run;
}

DraggedResidual dragged_condition_residual(const DraggedData& d) {
  const int n = static_cast<int>(d.u.size());
  if (!(std::isfinite(d.w) && d.w != 0.0)) throw ContractError("w must be finite and non-zero");
  for (const Vec* v : {&d.V, &d.F, &d.lie_F, &d.grad_ln_w}) {
    if (static_cast<int>(v->size()) != n) throw ContractError("dragged data vectors have inconsistent lengths");
  }
  Vec uv(z(n));
  for (int i = 0; i < n; ++i) uv[z(i)] = d.u[z(i)] + d.V[z(i)];
  double vgrad = 0.0, uvgrad = 0.0;
  for (int j = 0; j < n; ++j) {
    vgrad += d.V[z(j)] * d.grad_ln_w[z(j)];
    uvgrad += uv[z(j)] * d.grad_ln_w[z(j)];
  }
  const double iw2 = 1.0 / (d.w * d.w);
  DraggedResidual out;
  out.printed.assign(z(n), 0.0);
  out.direct.assign(z(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double common = d.F[z(i)];
    for (int j = 0; j < n; ++j) {
      common += d.V[z(j)] * d.grad_uV(i, j) + d.u[z(j)] * d.cov_V(i, j);
      for (int k = 0; k < n; ++k) common += uv[z(j)] * uv[z(k)] * d.lie_gamma(i, j, k);
    }
    const double printed = common - uv[z(i)] * (vgrad + d.dlnw_dr);
    double extra = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) extra += uv[z(j)] * d.V[z(k)] * d.gamma(i, j, k);
    const double direct = common - uv[z(i)] * uvgrad + extra;
    out.printed[z(i)] = d.lie_F[z(i)] - (-d.F[z(i)] + iw2 * printed);
    out.direct[z(i)] = d.lie_F[z(i)] - (-d.F[z(i)] + iw2 * direct);
    out.disagreement = std::max(out.disagreement, std::abs(out.printed[z(i)] - out.direct[z(i)]));
  }
  return out;
}

DraggedData dragged_data(const ConnectionSpace& space, const ChartPoint& x,
                         const DeviationFields& fields, const Field& w, LieSource source) {
  const int n = space.dim();
  if (w.components() != 1 || w.dim() != n) throw ContractError("w must be a scalar field");
  LocalGeometry g(space, x);
  const JetTensor uv = g.vector(fields.u);
  const JetTensor xv = g.vector(fields.xi);
  const JetTensor du = g.covariant_derivative(uv);
  const JetTensor F = apply(du, uv);
  const JetTensor V = apply(g.covariant_derivative(xv), uv);
  const Jet wj = w.jets(x)[0];
  if (!(std::isfinite(wj.value) && wj.value != 0.0)) throw ContractError("w must be finite and non-zero");

  DraggedData d;
  d.w = wj.value;
  d.u = vals(uv);
  d.V = vals(V);
  d.F = vals(F);
  d.lie_F = vals(lie_bracket(g, xv, F));
  d.gamma = values(g.gamma());
  d.lie_gamma = lie_derivative_connection(space, fields.xi, x, source).L;
  d.grad_ln_w.assign(z(n), 0.0);
  d.dlnw_dr = 0.0;
  for (int j = 0; j < n; ++j) {
    d.grad_ln_w[z(j)] = g.frame_derivative(wj, j).value / wj.value;
    d.dlnw_dr += d.u[z(j)] * d.grad_ln_w[z(j)];
  }
  JetTensor sum = JetTensor::valence(n, 1, 0);
  for (int i = 0; i < n; ++i) sum(i) = uv(i) + V(i);
  d.grad_uV = values(g.frame_gradient(sum));
  d.cov_V = values(g.covariant_derivative(V));
  return d;
}

DraggedResidual dragged_condition_residual(const ConnectionSpace& space, const ChartPoint& x,
                                           const DeviationFields& fields, const Field& w,
                                           LieSource source) {
  return dragged_condition_residual(dragged_data(space, x, fields, w, source));
}

}  // namespace lndev
