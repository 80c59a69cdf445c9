#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lndev/error.hpp"
#include "lndev/geometry.hpp"
#include "lndev/numerics.hpp"
#include "lndev/tensor_ops.hpp"
#include "support/random_space.hpp"

using namespace lndev;

namespace {

Field zero_connection(int n) { return Field::constant(n, std::vector<double>(static_cast<std::size_t>(n * n * n), 0.0)); }

ConnectionSpace flat(int n) { return ConnectionSpace::coordinate("flat", n, zero_connection(n)); }

// Polar chart (r, theta) with orthonormal frame E_r = d_r, E_theta = (1/r) d_theta.
ConnectionSpace flat_polar() {
  Field frame = Field::generic(2, 4, [](const auto& x, auto& out) {
    out[0] = 1.0 + 0.0 * x[0];
    out[1] = 0.0 * x[0];
    out[2] = 0.0 * x[0];
    out[3] = 1.0 / x[0];
  });
  Field gamma = Field::generic(2, 8, [](const auto& x, auto& out) {
    for (int c = 0; c < 8; ++c) out[c] = 0.0 * x[0];
    out[(1 * 2 + 0) * 2 + 1] = 1.0 / x[0];   // Gamma^theta_{r theta}
    out[(0 * 2 + 1) * 2 + 1] = -1.0 / x[0];  // Gamma^r_{theta theta}
  });
  return ConnectionSpace("flat-polar", 2, frame, gamma);
}

}  // namespace

TEST_CASE("chart point validation") {
  CHECK_THROWS_AS(ChartPoint({1.0}), ContractError);
  CHECK_THROWS_AS(ChartPoint({1.0, NAN}), ContractError);
  CHECK(ChartPoint({1.0, 2.0}).dim() == 2);
}

TEST_CASE("frame directional derivative examples") {
  const ChartPoint x{1.5, -0.25};
  Field f = Field::generic(2, 1, [](const auto& y, auto& out) { out[0] = y[0]; });
  CHECK(frame_directional_derivative(flat(2), f, 0, x) == doctest::Approx(1.0));

  Field c = Field::constant(2, {3.0});
  ConnectionSpace sheared("sheared", 2, Field::constant(2, {2.0, 0.5, -1.0, 3.0}), zero_connection(2));
  CHECK(frame_directional_derivative(sheared, c, 1, x) == 0.0);

  // A_0 = (2, 0): E_0 (x^0)^2 = 4 x^0, checked against a Richardson difference.
  Field sq = Field::generic(2, 1, [](const auto& y, auto& out) { out[0] = y[0] * y[0]; });
  ConnectionSpace scaled("scaled", 2, Field::constant(2, {2.0, 0.0, 0.0, 1.0}), zero_connection(2));
  const double oracle = 2.0 * fd_derivative([](std::span<const double> y) { return y[0] * y[0]; },
                                            x.coords(), 0);
  CHECK(frame_directional_derivative(scaled, sq, 0, x) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(frame_directional_derivative(scaled, sq, 0, x) == doctest::Approx(4.0 * x[0]));
}

TEST_CASE("finite-difference fields approximate analytic ones") {
  auto fn = [](const auto& y, auto& out) { out[0] = sin(y[0]) * y[1] * y[1]; };
  Field a = Field::generic(2, 1, fn);
  Field d = Field::finite_difference(2, 1, [fn](std::span<const double> y, std::span<double> out) {
    using std::sin;
    fn(y, out);
  });
  const ChartPoint x{0.3, 1.1};
  const auto ja = a.jets(x)[0];
  const auto jd = d.jets(x)[0];
  for (int i = 0; i < 2; ++i) {
    CHECK(jd.d(i) == doctest::Approx(ja.d(i)).epsilon(1e-9));
    for (int j = 0; j < 2; ++j) CHECK(jd.dd(i, j) == doctest::Approx(ja.dd(i, j)).epsilon(1e-5));
  }
  CHECK(d.mode() == DerivativeMode::finite_difference);
}

TEST_CASE("covariant derivative examples") {
  const ChartPoint x{0.2, 0.7, -0.4};
  TensorField cst{Field::constant(3, {1.0, 2.0, 3.0}), {Variance::upper}};
  CHECK(max_abs(covariant_derivative(flat(3), cst, x)) == 0.0);

  TensorField lin{Field::generic(3, 3, [](const auto& y, auto& out) {
                    for (int k = 0; k < 3; ++k) out[k] = y[k];
                  }),
                  {Variance::upper}};
  const auto d = covariant_derivative(flat(3), lin, x);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i) CHECK(d(k, i) == doctest::Approx(k == i ? 1.0 : 0.0));
  }

  std::mt19937_64 rng(11);
  const ConnectionSpace sp = testing::random_space(rng, 3);
  Field s = testing::random_quadratic_field(rng, 3, 1, 1.0, 1.0, 1.0);
  const auto ds = covariant_derivative(sp, TensorField{s, {}}, x);
  for (int i = 0; i < 3; ++i) {
    CHECK(ds(i) == doctest::Approx(frame_directional_derivative(sp, s, i, x)));
  }
}

TEST_CASE("covariant derivative of the Kronecker delta vanishes") {
  std::mt19937_64 rng(5);
  for (int n : {2, 3, 4}) {
    const ConnectionSpace sp = testing::random_space(rng, n);
    std::vector<double> delta(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i) delta[static_cast<std::size_t>(i * n + i)] = 1.0;
    TensorField d{Field::constant(n, delta), {Variance::upper, Variance::lower}};
    const auto x = testing::random_point(rng, n);
    CHECK(max_abs(covariant_derivative(sp, d, ChartPoint(x))) < 1e-13);
  }
}

TEST_CASE("second covariant derivative examples") {
  const ChartPoint x{0.3, -0.6};
  VectorField lin{Field::generic(2, 2, [](const auto& y, auto& out) {
                    out[0] = 2.0 * y[0] - y[1];
                    out[1] = 0.5 * y[1] + 1.0;
                  }),
                  Basis::frame};
  CHECK(max_abs(second_covariant_derivative(flat(2), lin, x)) < 1e-14);

  VectorField curly{Field::generic(2, 2, [](const auto& y, auto& out) {
                      out[0] = sin(y[0]) * y[1];
                      out[1] = exp(y[0] * y[1]);
                    }),
                    Basis::frame};
  const auto d2 = second_covariant_derivative(flat(2), curly, x);
  for (int k = 0; k < 2; ++k) {
    CHECK(d2(k, 0, 1) - d2(k, 1, 0) == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("transform connection examples") {
  std::mt19937_64 rng(21);
  const ConnectionSpace sp = testing::random_space(rng, 3);
  const ChartPoint x{0.1, 0.2, -0.3};
  Field id = Field::constant(3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto g0 = values(LocalGeometry(sp, x).gamma());
  CHECK(max_abs_diff(transform_connection(sp, id, x), g0) < 1e-15);

  Field m = Field::constant(3, {1, 2, 0, 0, 1, 3, 1, 0, 1});
  CHECK(max_abs(transform_connection(flat(3), m, x)) == 0.0);

  // Zero connection under a position-dependent frame change stays flat.
  Field pm = testing::random_frame(rng, 3);
  const ConnectionSpace moved = change_frame(flat(3), pm, "moved");
  CHECK(max_abs(values(LocalGeometry(moved, x).gamma())) > 1e-3);
  CHECK(max_abs(curvature(moved, x).R) < 1e-12);
}

TEST_CASE("frame round trip restores the connection") {
  std::mt19937_64 rng(8);
  const ConnectionSpace sp = testing::random_space(rng, 3);
  Field pm = testing::random_frame(rng, 3);
  const ConnectionSpace there = change_frame(sp, pm);
  // Inverse change, expressed relative to the changed frame.
  Field back = Field::analytic(3, 9, [pm](std::span<const Jet> y, std::span<Jet> out) {
    std::vector<double> p(y.size());
    for (std::size_t a = 0; a < y.size(); ++a) p[a] = y[a].value;
    const auto inv = invert(pm.jets(ChartPoint(p)), 3, 1e-12);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out[static_cast<std::size_t>(i * 3 + j)] = inv[static_cast<std::size_t>(i * 3 + j)];
    }
  });
  const ConnectionSpace home = change_frame(there, back);
  for (int t = 0; t < 5; ++t) {
    const ChartPoint x(testing::random_point(rng, 3));
    const auto g0 = values(LocalGeometry(sp, x).gamma());
    const auto g1 = values(LocalGeometry(home, x).gamma());
    CHECK(max_abs_diff(g0, g1) <= 1e-9 * std::max(1.0, max_abs(g0)));
  }
}

TEST_CASE("curvature is a tensor under frame change") {
  std::mt19937_64 rng(9);
  const ConnectionSpace sp = testing::random_space(rng, 3);
  Field pm = testing::random_frame(rng, 3);
  const ConnectionSpace there = change_frame(sp, pm);
  const ChartPoint x(testing::random_point(rng, 3));
  const auto r = curvature(sp, x).R;
  const auto r2 = curvature(there, x).R;
  const auto p = pm.values(x);
  std::vector<Jet> pj(p.begin(), p.end());
  const auto qj = invert(pj, 3, 1e-12);
  auto P = [&](int a, int i) { return p[static_cast<std::size_t>(a * 3 + i)]; };
  auto Q = [&](int a, int i) { return qj[static_cast<std::size_t>(i * 3 + a)].value; };  // Q^{a'}_i
  double err = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double v = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) v += Q(a, i) * P(b, j) * P(c, k) * P(d, l) * r(i, j, k, l);
          err = std::max(err, std::abs(v - r2(a, b, c, d)));
        }
  CHECK(err <= 1e-9 * std::max(1.0, max_abs(r)));
}

TEST_CASE("singular frame aborts evaluation") {
  ConnectionSpace bad("bad", 2, Field::constant(2, {1.0, 2.0, 2.0, 4.0}), zero_connection(2));
  CHECK_THROWS_AS(LocalGeometry(bad, ChartPoint{0.0, 0.0}), SingularFrameError);
}

TEST_CASE("polar frame of flat space has zero curvature and torsion") {
  const ConnectionSpace sp = flat_polar();
  for (double r : {0.5, 1.0, 3.0}) {
    const ChartPoint x{r, 0.7};
    CHECK(max_abs(curvature(sp, x).R) < 1e-12);
    CHECK(max_abs(torsion(sp, x).T) < 1e-12);
  }
}
