#include "lndev/builtins.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "lndev/error.hpp"
#include "lndev/geometry.hpp"

namespace lndev {

namespace {

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

std::size_t z(int i) { return static_cast<std::size_t>(i); }

std::size_t g3(int n, int k, int i, int j) { return z((k * n + i) * n + j); }

Field zero_field(int n, int components) {
  return Field::constant(n, std::vector<double>(z(components), 0.0));
}

Field euclidean(int n) {
  std::vector<double> d(z(n * n), 0.0);
  for (int i = 0; i < n; ++i) d[z(i * n + i)] = 1.0;
  return Field::constant(n, d);
}

SampleBox box(std::vector<double> lo, std::vector<double> hi) { return {std::move(lo), std::move(hi)}; }

// Expected outcomes shared by Levi-Civita connections of a metric.
void levi_civita_truths(BuiltinSpace& b) {
  b.expected["torsion-free"] = true;
  b.expected["equiaffine"] = true;
  b.expected["metric-transport"] = true;
  b.expected["semi-metric"] = true;
}

BuiltinSpace flat_cartesian(const BuiltinParams& p) {
  const int n = p.n ? p.n : 3;
  BuiltinSpace b{ConnectionSpace::coordinate("flat-cartesian", n, zero_field(n, n * n * n), euclidean(n)),
                 box(std::vector<double>(z(n), -1.0), std::vector<double>(z(n), 1.0)), {}, {}};
  levi_civita_truths(b);
  b.expected["flat"] = true;
  b.expected["recurrent"] = true;
  b.expected["einstein"] = true;
  if (n >= 3) b.expected["conformally-euclidean"] = true;
  b.expected_data["einstein.f"] = {0.0};
  b.expected_data["semi-metric.w"] = std::vector<double>(z(n), 0.0);
  return b;
}

// Polar chart (r, theta), orthonormal frame E_r = d_r, E_theta = (1/r) d_theta.
BuiltinSpace flat_polar() {
  Field frame = Field::generic(2, 4, [](const auto& x, auto& out) {
    out[0] = 1.0 + 0.0 * x[0];
    out[1] = 0.0 * x[0];
    out[2] = 0.0 * x[0];
    out[3] = 1.0 / x[0];
  });
  Field gamma = Field::generic(2, 8, [](const auto& x, auto& out) {
    for (int c = 0; c < 8; ++c) out[z(c)] = 0.0 * x[0];
    out[g3(2, 1, 0, 1)] = 1.0 / x[0];
    out[g3(2, 0, 1, 1)] = -1.0 / x[0];
  });
  BuiltinSpace b{ConnectionSpace("flat-polar-frame", 2, frame, gamma, euclidean(2)),
                 box({0.5, 0.0}, {2.0, 2.0 * std::numbers::pi}), {}, {}};
  levi_civita_truths(b);
  b.expected["flat"] = true;
  b.expected["recurrent"] = true;
  b.expected["einstein"] = true;
  b.expected_data["einstein.f"] = {0.0};
  b.expected_data["semi-metric.w"] = {0.0, 0.0};
  return b;
}

// Only Gamma^0_{10} = c: curvature vanishes, torsion T^0_{10} = -c.
BuiltinSpace constant_torsion(const BuiltinParams& p) {
  const int n = p.n ? p.n : 3;
  std::vector<double> g(z(n * n * n), 0.0);
  g[g3(n, 0, 1, 0)] = p.c;
  BuiltinSpace b{ConnectionSpace::coordinate("constant-torsion", n, Field::constant(n, g), euclidean(n)),
                 box(std::vector<double>(z(n), -1.0), std::vector<double>(z(n), 1.0)), {}, {}};
  const bool twisted = p.c != 0.0;
  b.expected["torsion-free"] = !twisted;
  b.expected["flat"] = true;
  b.expected["recurrent"] = true;
  b.expected["equiaffine"] = true;
  b.expected["einstein"] = true;
  b.expected["metric-transport"] = !twisted;
  b.expected["semi-metric"] = !twisted;
  if (n >= 3) b.expected["conformally-euclidean"] = true;
  b.expected_data["einstein.f"] = {0.0};
  return b;
}

template <class S>
void sphere2_gamma(const S& th, std::span<S> out) {
  for (auto& v : out) v = 0.0 * th;
  const S ct = cos(th) / sin(th);
  out[g3(2, 0, 1, 1)] = -sin(th) * cos(th);
  out[g3(2, 1, 0, 1)] = ct;
  out[g3(2, 1, 1, 0)] = ct;
}

// (chi, theta, phi) on the 3-sphere.
template <class S>
void sphere3_gamma(const S& chi, const S& th, std::span<S> out) {
  for (auto& v : out) v = 0.0 * chi;
  const S sc = sin(chi) * cos(chi);
  const S cc = cos(chi) / sin(chi);
  const S ct = cos(th) / sin(th);
  out[g3(3, 0, 1, 1)] = -sc;
  out[g3(3, 0, 2, 2)] = -sc * sin(th) * sin(th);
  out[g3(3, 1, 0, 1)] = cc;
  out[g3(3, 1, 1, 0)] = cc;
  out[g3(3, 1, 2, 2)] = -sin(th) * cos(th);
  out[g3(3, 2, 0, 2)] = cc;
  out[g3(3, 2, 2, 0)] = cc;
  out[g3(3, 2, 1, 2)] = ct;
  out[g3(3, 2, 2, 1)] = ct;
}

BuiltinSpace sphere(const BuiltinParams& p) {
  const int n = p.n ? p.n : 2;
  const double a = p.a;
  if (!(a > 0.0)) throw ContractError("sphere radius must be positive");
  const double pi = std::numbers::pi;
  if (n == 2) {
    Field g = Field::generic(2, 8, [](const auto& x, auto& out) { sphere2_gamma(x[0], std::span(out.data(), out.size())); });
    Field m = Field::generic(2, 4, [a](const auto& x, auto& out) {
      out[0] = a * a + 0.0 * x[0];
      out[1] = 0.0 * x[0];
      out[2] = 0.0 * x[0];
      out[3] = a * a * sin(x[0]) * sin(x[0]);
    });
    BuiltinSpace b{ConnectionSpace::coordinate("sphere", 2, g, m), box({0.3, 0.0}, {pi - 0.3, 2 * pi}), {}, {}};
    levi_civita_truths(b);
    b.expected["flat"] = false;
    b.expected["recurrent"] = true;
    b.expected["einstein"] = true;
    b.expected_data["einstein.f"] = {-1.0 / (a * a)};
    b.expected_data["semi-metric.w"] = {0.0, 0.0};
    return b;
  }
  if (n == 3) {
    Field g = Field::generic(3, 27, [](const auto& x, auto& out) {
      sphere3_gamma(x[0], x[1], std::span(out.data(), out.size()));
    });
    Field m = Field::generic(3, 9, [a](const auto& x, auto& out) {
      for (int c = 0; c < 9; ++c) out[z(c)] = 0.0 * x[0];
      const auto s = sin(x[0]);
      out[0] = a * a + 0.0 * x[0];
      out[4] = a * a * s * s;
      out[8] = a * a * s * s * sin(x[1]) * sin(x[1]);
    });
    BuiltinSpace b{ConnectionSpace::coordinate("sphere", 3, g, m),
                   box({0.3, 0.3, 0.0}, {pi - 0.3, pi - 0.3, 2 * pi}), {}, {}};
    levi_civita_truths(b);
    b.expected["flat"] = false;
    b.expected["recurrent"] = true;
    b.expected["einstein"] = true;
    b.expected["conformally-euclidean"] = true;
    b.expected_data["einstein.f"] = {-2.0 / (a * a)};
    b.expected_data["semi-metric.w"] = {0.0, 0.0, 0.0};
    return b;
  }
  throw ContractError("sphere builtin supports n = 2 or n = 3");
}

// (t, r, theta, phi), signature (-+++).
BuiltinSpace schwarzschild(const BuiltinParams& p) {
  const double M = p.M;
  if (!(M > 0.0)) throw ContractError("Schwarzschild mass must be positive");
  Field g = Field::generic(4, 64, [M](const auto& x, auto& out) {
    for (auto& v : out) v = 0.0 * x[0];
    const auto r = x[1];
    const auto th = x[2];
    const auto f = 1.0 - 2.0 * M / r;
    const auto a = M / (r * r * f);
    out[g3(4, 0, 0, 1)] = a;
    out[g3(4, 0, 1, 0)] = a;
    out[g3(4, 1, 0, 0)] = M * f / (r * r);
    out[g3(4, 1, 1, 1)] = -a;
    out[g3(4, 1, 2, 2)] = -r * f;
    out[g3(4, 1, 3, 3)] = -r * f * sin(th) * sin(th);
    out[g3(4, 2, 1, 2)] = 1.0 / r;
    out[g3(4, 2, 2, 1)] = 1.0 / r;
    out[g3(4, 2, 3, 3)] = -sin(th) * cos(th);
    out[g3(4, 3, 1, 3)] = 1.0 / r;
    out[g3(4, 3, 3, 1)] = 1.0 / r;
    out[g3(4, 3, 2, 3)] = cos(th) / sin(th);
    out[g3(4, 3, 3, 2)] = cos(th) / sin(th);
  });
  Field m = Field::generic(4, 16, [M](const auto& x, auto& out) {
    for (auto& v : out) v = 0.0 * x[0];
    const auto r = x[1];
    const auto f = 1.0 - 2.0 * M / r;
    out[0] = -f;
    out[5] = 1.0 / f;
    out[10] = r * r;
    out[15] = r * r * sin(x[2]) * sin(x[2]);
  });
  BuiltinSpace b{ConnectionSpace::coordinate("schwarzschild", 4, g, m),
                 box({0.0, 6 * M, 0.5, 0.0}, {1.0, 20 * M, std::numbers::pi - 0.5, 2 * std::numbers::pi}), {}, {}};
  levi_civita_truths(b);
  b.expected["flat"] = false;
  b.expected["einstein"] = true;
  b.expected["conformally-euclidean"] = false;
  b.expected_data["einstein.f"] = {0.0};
  b.expected_data["semi-metric.w"] = {0.0, 0.0, 0.0, 0.0};
  return b;
}

// g = exp(2 sigma) delta with sigma = b |x|^2 / 2 and the Weyl connection
//   Gamma^k_ij = LC^k_ij - (delta^k_i w_j + delta^k_j w_i - g_ij w^k) / 2,
// so that g_{ij|k} = w_k g_ij.
BuiltinSpace weyl_example(const BuiltinParams& p) {
  const int n = p.n ? p.n : 3;
  std::vector<double> w = p.w;
  if (w.empty()) {
    const double base[] = {0.3, -0.2, 0.1, 0.25, -0.15, 0.05};
    w.assign(base, base + n);
  }
  if (static_cast<int>(w.size()) != n) throw ContractError("weyl-example: w needs n components");
  const double bb = p.b;
  Field gamma = Field::generic(n, n * n * n, [n, w, bb](const auto& x, auto& out) {
    for (auto& v : out) v = 0.0 * x[0];
    // Effective gradient of the conformal exponent: sigma_k - w_k / 2.
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          auto v = 0.0 * x[0];
          if (k == i) v = v + (bb * x[z(j)] - 0.5 * w[z(j)]);
          if (k == j) v = v + (bb * x[z(i)] - 0.5 * w[z(i)]);
          if (i == j) v = v - (bb * x[z(k)] - 0.5 * w[z(k)]);
          out[g3(n, k, i, j)] = v;
        }
      }
    }
  });
  Field metric = Field::generic(n, n * n, [n, bb](const auto& x, auto& out) {
    auto r2 = 0.0 * x[0];
    for (int a = 0; a < n; ++a) r2 = r2 + x[z(a)] * x[z(a)];
    const auto e = exp(bb * r2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[z(i * n + j)] = (i == j ? 1.0 : 0.0) * e;
  });
  BuiltinSpace b{ConnectionSpace::coordinate("weyl-example", n, gamma, metric),
                 box(std::vector<double>(z(n), -0.5), std::vector<double>(z(n), 0.5)), {}, {}};
  b.expected["torsion-free"] = true;
  b.expected["equiaffine"] = true;
  b.expected["semi-metric"] = true;
  b.expected["metric-transport"] = false;
  b.expected["flat"] = bb == 0.0 && n == 2;
  if (n >= 3) b.expected["conformally-euclidean"] = true;
  b.expected_data["semi-metric.w"] = w;
  return b;
}

}  // namespace

CompensationSetup compensation_setup() {
  return {{std::numbers::pi / 2, 0.0}, {0.0, 1.0}, {0.5, 0.0}};
}

namespace {

// Unit 2-sphere plus K^i_jk(x) = sum_m c_ijkm (x - x0)^m. K vanishes at x0, so
// there its only effect is through first derivatives: the curvature gains
// -(c_ijkl - c_ijlk) and the torsion derivative is -(c_kjln - c_kljn). The
// coefficients are the minimum-norm solution of
//   curvature change contracted with (u, u, xi) = 0
//   d_n T^k_jl u^n u^j xi^l = -R(u, xi) u  (sphere curvature part)
BuiltinSpace compensation() {
  const int n = 2;
  const CompensationSetup cs = compensation_setup();
  BuiltinParams sp;
  const BuiltinSpace base = sphere(sp);
  const ChartPoint x0(cs.point);
  LocalGeometry g(base.space, x0);
  const auto& r = g.curvature();
  std::vector<double> rpart(z(n), 0.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) rpart[z(k)] += r(k, i, j, l).value * cs.u[z(i)] * cs.u[z(j)] * cs.xi[z(l)];

  auto idx = [n](int i, int j, int k, int m) { return ((i * n + j) * n + k) * n + m; };
  const int unknowns = n * n * n * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, unknowns);
  Eigen::VectorXd rhs(2 * n);
  const auto& u = cs.u;
  const auto& xi = cs.xi;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          const double w = u[z(i)] * u[z(j)] * xi[z(l)];
          A(k, idx(k, i, j, l)) -= w;
          A(k, idx(k, i, l, j)) += w;
          // torsion row: d_n T^k_{jl} u^n u^j xi^l with (j, l, n) -> (i, l, j)
          const double wt = u[z(j)] * u[z(i)] * xi[z(l)];
          A(n + k, idx(k, i, l, j)) -= wt;
          A(n + k, idx(k, l, i, j)) += wt;
        }
    rhs(k) = 0.0;
    rhs(n + k) = -rpart[z(k)];
  }
  const Eigen::VectorXd c = A.completeOrthogonalDecomposition().solve(rhs);
  std::vector<double> coef(c.data(), c.data() + c.size());
  const std::vector<double> x0v = cs.point;
  Field sphere_gamma = base.space.connection();
  Field gamma = Field::analytic(n, n * n * n, [sphere_gamma, coef, x0v, n, idx](std::span<const Jet> x, std::span<Jet> out) {
    std::vector<double> p(x.size());
    for (std::size_t a = 0; a < x.size(); ++a) p[a] = x[a].value;
    const auto gs = sphere_gamma.jets(ChartPoint(p));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Jet v = gs[g3(n, i, j, k)];
          for (int m = 0; m < n; ++m) v += coef[z(idx(i, j, k, m))] * (x[z(m)] - x0v[z(m)]);
          out[g3(n, i, j, k)] = v;
        }
  });
  BuiltinSpace b{ConnectionSpace::coordinate("compensation", n, gamma, base.space.metric()),
                 box({1.2, -0.4}, {1.9, 0.4}), {}, {}};
  b.expected["torsion-free"] = false;
  b.expected["flat"] = false;
  return b;
}

}  // namespace

BuiltinSpace make_builtin(const std::string& name, const BuiltinParams& params) {
  if (name == "flat-cartesian") return flat_cartesian(params);
  if (name == "flat-polar-frame") return flat_polar();
  if (name == "constant-torsion") return constant_torsion(params);
  if (name == "sphere") return sphere(params);
  if (name == "schwarzschild") return schwarzschild(params);
  if (name == "weyl-example") return weyl_example(params);
  if (name == "compensation") return compensation();
  throw ContractError("unknown builtin space '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"flat-cartesian", "flat-polar-frame", "constant-torsion", "sphere",
          "schwarzschild", "weyl-example", "compensation"};
}

Field levi_civita(const Field& metric) {
  const int n = metric.dim();
  if (metric.components() != n * n) throw ContractError("levi_civita: metric must have n*n components");
  return Field::analytic(n, n * n * n, [metric, n](std::span<const Jet> x, std::span<Jet> out) {
    std::vector<double> p(x.size());
    for (std::size_t a = 0; a < x.size(); ++a) p[a] = x[a].value;
    const auto g = metric.jets(ChartPoint(p));
    const auto gi = invert(g, n, 1e-300);
    auto dg = [&](int i, int j, int a) { return partial(g[z(i * n + j)], a); };
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Jet v(0.0);
          for (int l = 0; l < n; ++l) {
            v += gi[z(k * n + l)] * (dg(l, j, i) + dg(l, i, j) - dg(i, j, l));
          }
          out[g3(n, k, i, j)] = 0.5 * v;
        }
  });
}

}  // namespace lndev
