#include "lndev/field.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lndev/error.hpp"

namespace lndev {

ChartPoint::ChartPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw ContractError("chart point needs dimension >= 2");
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw ContractError("chart point has a non-finite coordinate");
  }
}

double default_fd_step(double x) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::abs(x));
}

Field Field::analytic(int dim, int components, JetFn jet, ValueFn value) {
  if (dim < 1 || dim > kMaxDim) throw ContractError("field dimension out of range");
  Field f;
  f.dim_ = dim;
  f.components_ = components;
  f.mode_ = DerivativeMode::analytic;
  f.jet_ = std::make_shared<const JetFn>(std::move(jet));
  if (value) f.value_ = std::make_shared<const ValueFn>(std::move(value));
  return f;
}

Field Field::finite_difference(int dim, int components, ValueFn value) {
  if (dim < 1 || dim > kMaxDim) throw ContractError("field dimension out of range");
  Field f;
  f.dim_ = dim;
  f.components_ = components;
  f.mode_ = DerivativeMode::finite_difference;
  f.value_ = std::make_shared<const ValueFn>(std::move(value));
  return f;
}

Field Field::constant(int dim, std::vector<double> values) {
  const int m = static_cast<int>(values.size());
  return generic(dim, m, [values](const auto&, auto& out) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i];
  });
}

namespace {

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw EvaluationError("field evaluated to a non-finite value");
  }
}

}  // namespace

std::vector<double> Field::values(const ChartPoint& x) const {
  if (x.dim() != dim_) throw ContractError("field evaluated at point of wrong dimension");
  std::vector<double> out(static_cast<std::size_t>(components_), 0.0);
  if (value_) {
    (*value_)(x.coords(), out);
  } else {
    const auto js = jets(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = js[i].value;
  }
  check_finite(out);
  return out;
}

std::vector<Jet> Field::jets(const ChartPoint& x) const {
  if (x.dim() != dim_) throw ContractError("field evaluated at point of wrong dimension");
  const auto m = static_cast<std::size_t>(components_);
  std::vector<Jet> out(m);
  if (mode_ == DerivativeMode::analytic) {
    const auto xs = seed(x.coords());
    (*jet_)(xs, out);
    for (auto& j : out) {
      if (!isfinite(j)) throw EvaluationError("field evaluated to a non-finite value");
      j.dim = dim_;
    }
    return out;
  }

  // Finite-difference jets from a shared stencil.
  const int n = dim_;
  std::vector<double> p(x.coords().begin(), x.coords().end());
  std::vector<double> f0(m), fp(m), fm(m), fp2(m), fm2(m), fpp(m), fpm(m), fmp(m), fmm(m);
  auto eval = [&](std::vector<double>& out) {
    (*value_)(p, out);
    check_finite(out);
  };
  eval(f0);
  for (std::size_t c = 0; c < m; ++c) {
    out[c] = Jet(f0[c]);
    out[c].dim = n;
  }
  static const double q0 = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  for (int a = 0; a < n; ++a) {
    const double xa = p[a];
    const double h = default_fd_step(xa);
    if (xa + h == xa) throw ToleranceError("finite-difference step underflow");
    p[a] = xa + h; eval(fp);
    p[a] = xa - h; eval(fm);
    p[a] = xa + 0.5 * h; eval(fp2);
    p[a] = xa - 0.5 * h; eval(fm2);
    const double h2 = q0 * std::max(1.0, std::abs(xa));
    std::vector<double> sp(m), sm(m);
    p[a] = xa + h2; eval(sp);
    p[a] = xa - h2; eval(sm);
    p[a] = xa;
    for (std::size_t c = 0; c < m; ++c) {
      const double d1 = (fp[c] - fm[c]) / (2.0 * h);
      const double d2 = (fp2[c] - fm2[c]) / h;
      out[c].grad[a] = (4.0 * d2 - d1) / 3.0;
      out[c].dd(a, a) = (sp[c] - 2.0 * f0[c] + sm[c]) / (h2 * h2);
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double xa = p[a], xb = p[b];
      const double ha = q0 * std::max(1.0, std::abs(xa));
      const double hb = q0 * std::max(1.0, std::abs(xb));
      p[a] = xa + ha; p[b] = xb + hb; eval(fpp);
      p[a] = xa + ha; p[b] = xb - hb; eval(fpm);
      p[a] = xa - ha; p[b] = xb + hb; eval(fmp);
      p[a] = xa - ha; p[b] = xb - hb; eval(fmm);
      p[a] = xa; p[b] = xb;
      for (std::size_t c = 0; c < m; ++c) {
        const double v = (fpp[c] - fpm[c] - fmp[c] + fmm[c]) / (4.0 * ha * hb);
        out[c].dd(a, b) = v;
        out[c].dd(b, a) = v;
      }
    }
  }
  return out;
}

}  // namespace lndev
