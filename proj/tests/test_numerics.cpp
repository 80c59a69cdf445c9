#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lndev/error.hpp"
#include "lndev/numerics.hpp"
#include "lndev/tensor_ops.hpp"
#include "support/random_space.hpp"

using namespace lndev;

TEST_CASE("fd_derivative examples") {
  const std::vector<double> three{3.0};
  CHECK(fd_derivative([](std::span<const double> x) { return x[0] * x[0]; }, three, 0) ==
        doctest::Approx(6.0).epsilon(1e-8));
  CHECK(std::abs(fd_derivative([](std::span<const double>) { return 2.5; }, three, 0)) < 1e-12);
  const std::vector<double> one{1.0};
  CHECK(std::abs(fd_derivative([](std::span<const double> x) { return std::sin(x[0]); }, one, 0) -
                 std::cos(1.0)) < 1e-9);
  CHECK_THROWS_AS(fd_derivative([](std::span<const double> x) { return std::log(x[0]); },
                                std::vector<double>{0.0}, 0),
                  EvaluationError);
}

TEST_CASE("fd_derivative convergence order") {
  auto f = [](std::span<const double> x) { return std::exp(std::sin(x[0])); };
  const std::vector<double> p{0.6};
  const double exact = std::cos(0.6) * std::exp(std::sin(0.6));
  auto order = [&](FdScheme s, double h) {
    const double e1 = std::abs(fd_derivative(f, p, 0, s, h) - exact);
    const double e2 = std::abs(fd_derivative(f, p, 0, s, h / 2) - exact);
    return std::log2(e1 / e2);
  };
  CHECK(order(FdScheme::central, 1e-2) >= 1.9);
  CHECK(order(FdScheme::richardson, 4e-2) >= 3.8);
}

TEST_CASE("ode_integrate examples") {
  IntegratorSettings fixed;
  const auto zero = ode_integrate([](double, std::span<const double>, std::span<double> d) { d[0] = 0; },
                                  {1.25}, 0.0, 3.0, fixed);
  for (const auto& y : zero.y) CHECK(y[0] == 1.25);

  IntegratorSettings adaptive;
  adaptive.method = OdeMethod::rk45_adaptive;
  adaptive.step = 1e-2;
  const auto ex = ode_integrate([](double, std::span<const double> y, std::span<double> d) { d[0] = y[0]; },
                                {1.0}, 0.0, 1.0, adaptive);
  CHECK(std::abs(ex.y.back()[0] - std::exp(1.0)) < 1e-8);

  const double period = 2 * M_PI;
  const auto osc = ode_integrate(
      [](double, std::span<const double> y, std::span<double> d) {
        d[0] = y[1];
        d[1] = -y[0];
      },
      {1.0, 0.0}, 0.0, 10 * period, fixed);
  double drift = 0.0;
  for (const auto& y : osc.y) drift = std::max(drift, std::abs(0.5 * (y[0] * y[0] + y[1] * y[1]) - 0.5));
  CHECK(drift < 1e-6);
}

TEST_CASE("dense output at requested samples") {
  IntegratorSettings st;
  st.step = 0.01;
  const std::vector<double> samples{0.0, 0.123, 0.5, 0.777, 1.0};
  const auto sol = ode_integrate([](double, std::span<const double> y, std::span<double> d) { d[0] = y[0]; },
                                 {1.0}, 0.0, 1.0, st, samples);
  REQUIRE(sol.s.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(sol.s[i] == samples[i]);
    CHECK(sol.y[i][0] == doctest::Approx(std::exp(samples[i])).epsilon(1e-8));
  }
}

TEST_CASE("forward then backward integration returns to the start") {
  IntegratorSettings st;
  st.method = OdeMethod::rk45_adaptive;
  auto rhs = [](double, std::span<const double> y, std::span<double> d) {
    d[0] = y[1];
    d[1] = -std::sin(y[0]);
  };
  const auto fwd = ode_integrate(rhs, {0.4, 0.3}, 0.0, 5.0, st);
  const auto back = ode_integrate(rhs, fwd.y.back(), 5.0, 0.0, st);
  CHECK(std::abs(back.y.back()[0] - 0.4) < 1e-8);
  CHECK(std::abs(back.y.back()[1] - 0.3) < 1e-8);
}

TEST_CASE("settings and probe validation") {
  IntegratorSettings bad;
  bad.step = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  CHECK_THROWS_AS((DraggingProbe{{1e-3}, 1e-2}.validate()), ContractError);
  CHECK_THROWS_AS((DraggingProbe{{1e-3, 2e-3}, 1e-2}.validate()), ContractError);
  CHECK_THROWS_AS((DraggingProbe{{1e-3, 5e-4, 1e-4}, 1e-2}.validate()), ContractError);
}

TEST_CASE("dragging oracle examples") {
  const ChartPoint x{0.2, -0.1};
  const auto flat = ConnectionSpace::coordinate("flat", 2, Field::constant(2, std::vector<double>(8, 0.0)));
  VectorField cst{Field::constant(2, {0.3, -2.0}), Basis::frame};
  for (double eps : {1e-3, 5e-4}) CHECK(max_abs(dragged_connection(flat, cst, x, eps)) == 0.0);

  VectorField lin{Field::generic(2, 2, [](const auto& y, auto& out) {
                    out[0] = y[0] - 2.0 * y[1];
                    out[1] = 0.5 * y[0];
                  }),
                  Basis::frame};
  const auto est = dragging_oracle(flat, lin, x);
  for (const auto& q : est.difference_quotients) CHECK(max_abs(q) < 1e-9);

  std::mt19937_64 rng(31);
  const auto sp = testing::random_space(rng, 3);
  const auto xi = testing::random_vector_field(rng, 3);
  const ChartPoint p(testing::random_point(rng, 3));
  const auto cf = lie_derivative_connection(sp, xi, p).L;
  const DraggingProbe probe{{1e-3, 5e-4, 2.5e-4}, 1e-2};
  const auto est3 = dragging_oracle(sp, xi, p, probe);
  // Two extrapolants from consecutive pairs; their errors shrink like eps^2.
  const double r01 = max_abs_diff(
      [&] {
        TensorValue r = TensorValue::valence(3, 1, 2);
        for (std::size_t f = 0; f < r.size(); ++f)
          r[f] = 2 * est3.difference_quotients[1][f] - est3.difference_quotients[0][f];
        return r;
      }(),
      cf);
  const double r12 = max_abs_diff(est3.extrapolated, cf);
  const double slope = std::log(r01 / r12) / std::log(2.0);
  CHECK(slope >= 1.8);
  CHECK(slope <= 2.2);
  CHECK(r12 <= 1e-5 * std::max(1.0, max_abs(cf)));
}
