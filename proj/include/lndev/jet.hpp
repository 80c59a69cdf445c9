#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace lndev {

/// Largest chart dimension supported by the jet arithmetic.
inline constexpr int kMaxDim = 6;

/// Order-2 truncated Taylor expansion of a scalar about a chart point.
///
/// A Jet carries the value, the coordinate gradient and the coordinate
/// Hessian of a quantity. Arithmetic propagates all three exactly (forward
/// mode), so every curvature/torsion/Lie-derivative formula evaluated on jets
/// yields analytic derivatives without finite differencing.
///
/// `order` records how many derivative levels are still valid. Seeded
/// coordinates and constants carry order 2; differentiating drops one level.
/// Mixing jets keeps the minimum.
struct Jet {
  double value = 0.0;
  std::array<double, kMaxDim> grad{};
  std::array<double, kMaxDim * kMaxDim> hess{};
  int dim = 0;
  int order = 2;

  Jet() = default;
  Jet(double v) : value(v) {}  // NOLINT(google-explicit-constructor)

  /// Coordinate x^alpha of an n-dimensional chart, seeded at value v.
  static Jet variable(double v, int alpha, int n) {
    Jet j(v);
    j.dim = n;
    j.grad[alpha] = 1.0;
    return j;
  }

  double d(int a) const { return grad[a]; }
  double dd(int a, int b) const { return hess[a * kMaxDim + b]; }
  double& dd(int a, int b) { return hess[a * kMaxDim + b]; }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator*=(double s);
};

/// Seeded coordinates x^0..x^{n-1} at the given point.
std::vector<Jet> seed(std::span<const double> x);

/// Partial derivative d/dx^alpha; the result has one derivative level less.
/// Throws ToleranceError when the jet has no valid derivative left.
Jet partial(const Jet& f, int alpha);

/// Apply a scalar function given its value and first two derivatives at f.value.
Jet chain(const Jet& f, double f0, double f1, double f2);

Jet operator-(const Jet& a);
Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);

Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet tan(const Jet& a);
Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, double p);
Jet pow(const Jet& a, const Jet& b);
Jet abs(const Jet& a);
Jet atan2(const Jet& y, const Jet& x);

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value; }

inline bool isfinite(const Jet& a) {
  if (!std::isfinite(a.value)) return false;
  for (int i = 0; i < a.dim; ++i) {
    if (!std::isfinite(a.grad[i])) return false;
  }
  return true;
}

}  // namespace lndev
