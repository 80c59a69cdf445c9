#include "lndev/jet.hpp"

#include <algorithm>
#include <cmath>

#include "lndev/error.hpp"

namespace lndev {

std::vector<Jet> seed(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n > kMaxDim) {
    throw ContractError("chart dimension exceeds kMaxDim");
  }
  std::vector<Jet> out;
  out.reserve(x.size());
  for (int a = 0; a < n; ++a) out.push_back(Jet::variable(x[a], a, n));
  return out;
}

Jet partial(const Jet& f, int alpha) {
  if (f.order < 1) {
    throw ToleranceError("derivative requested beyond available jet order");
  }
  Jet r(f.dim > alpha ? f.grad[alpha] : 0.0);
  r.dim = f.dim;
  r.order = f.order - 1;
  for (int b = 0; b < f.dim; ++b) r.grad[b] = f.dd(alpha, b);
  return r;
}

Jet chain(const Jet& f, double f0, double f1, double f2) {
  Jet r(f0);
  r.dim = f.dim;
  r.order = f.order;
  const int n = f.dim;
  for (int a = 0; a < n; ++a) r.grad[a] = f1 * f.grad[a];
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      r.dd(a, b) = f1 * f.dd(a, b) + f2 * f.grad[a] * f.grad[b];
    }
  }
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  value += o.value;
  const int n = std::max(dim, o.dim);
  for (int a = 0; a < n; ++a) grad[a] += o.grad[a];
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) dd(a, b) += o.dd(a, b);
  }
  dim = n;
  order = std::min(order, o.order);
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  value -= o.value;
  const int n = std::max(dim, o.dim);
  for (int a = 0; a < n; ++a) grad[a] -= o.grad[a];
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) dd(a, b) -= o.dd(a, b);
  }
  dim = n;
  order = std::min(order, o.order);
  return *this;
}

Jet& Jet::operator*=(double s) {
  value *= s;
  for (int a = 0; a < dim; ++a) grad[a] *= s;
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) dd(a, b) *= s;
  }
  return *this;
}

Jet operator*(const Jet& x, const Jet& y) {
  Jet r(x.value * y.value);
  const int n = std::max(x.dim, y.dim);
  r.dim = n;
  r.order = std::min(x.order, y.order);
  for (int a = 0; a < n; ++a) {
    r.grad[a] = x.value * y.grad[a] + y.value * x.grad[a];
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      r.dd(a, b) = x.value * y.dd(a, b) + y.value * x.dd(a, b) +
                   x.grad[a] * y.grad[b] + y.grad[a] * x.grad[b];
    }
  }
  return r;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

Jet operator/(const Jet& a, const Jet& b) {
  const double v = b.value;
  return a * chain(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}

Jet& Jet::operator/=(const Jet& o) { return *this = *this / o; }

Jet operator-(const Jet& a) { return a * -1.0; }
Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }

Jet sin(const Jet& a) {
  const double s = std::sin(a.value);
  return chain(a, s, std::cos(a.value), -s);
}

Jet cos(const Jet& a) {
  const double c = std::cos(a.value);
  return chain(a, c, -std::sin(a.value), -c);
}

Jet tan(const Jet& a) {
  const double t = std::tan(a.value);
  const double sec2 = 1.0 + t * t;
  return chain(a, t, sec2, 2.0 * t * sec2);
}

Jet exp(const Jet& a) {
  const double e = std::exp(a.value);
  return chain(a, e, e, e);
}

Jet log(const Jet& a) {
  const double v = a.value;
  return chain(a, std::log(v), 1.0 / v, -1.0 / (v * v));
}

Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.value);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.value));
}

Jet pow(const Jet& a, double p) {
  if (p == std::floor(p) && std::abs(p) <= 16.0) {
    // Exact integer powers also behave at a.value == 0.
    const int k = static_cast<int>(std::abs(p));
    Jet r(1.0);
    for (int i = 0; i < k; ++i) r = r * a;
    return p < 0 ? Jet(1.0) / r : r;
  }
  const double v = a.value;
  return chain(a, std::pow(v, p), p * std::pow(v, p - 1.0),
               p * (p - 1.0) * std::pow(v, p - 2.0));
}

Jet pow(const Jet& a, const Jet& b) {
  if (b.dim == 0) return pow(a, b.value);
  return exp(b * log(a));
}

Jet abs(const Jet& a) { return a.value < 0.0 ? -a : a; }

Jet atan2(const Jet& y, const Jet& x) {
  Jet r(std::atan2(y.value, x.value));
  const int n = std::max(x.dim, y.dim);
  r.dim = n;
  r.order = std::min(x.order, y.order);
  const Jet r2 = x * x + y * y;
  for (int a = 0; a < n; ++a) {
    Jet num = x * partial(y, a) - y * partial(x, a);
    Jet ga = num / r2;
    r.grad[a] = ga.value;
    for (int b = 0; b < n; ++b) r.dd(a, b) = ga.grad[b];
  }
  return r;
}

}  // namespace lndev
