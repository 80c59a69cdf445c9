#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lndev/jet.hpp"

namespace lndev {

/// Coordinates x^alpha in the single global chart.
class ChartPoint {
 public:
  ChartPoint() = default;
  explicit ChartPoint(std::vector<double> coords);
  ChartPoint(std::initializer_list<double> coords) : ChartPoint(std::vector<double>(coords)) {}

  int dim() const { return static_cast<int>(coords_.size()); }
  double operator[](int a) const { return coords_[static_cast<std::size_t>(a)]; }
  std::span<const double> coords() const { return coords_; }

 private:
  std::vector<double> coords_;
};

enum class DerivativeMode { analytic, finite_difference };

/// Component-valued function of the chart coordinates.
///
/// Analytic fields evaluate their callback on seeded jets and so deliver
/// exact first and second derivatives. Finite-difference fields only have a
/// plain-double callback; their jets are assembled from central differences
/// (gradient with one Richardson level, Hessian from second differences).
class Field {
 public:
  using JetFn = std::function<void(std::span<const Jet>, std::span<Jet>)>;
  using ValueFn = std::function<void(std::span<const double>, std::span<double>)>;

  Field() = default;

  /// `jet` is always called with seeded coordinates at the evaluation point.
  static Field analytic(int dim, int components, JetFn jet, ValueFn value = {});
  static Field finite_difference(int dim, int components, ValueFn value);

  /// Build from a generic callable `f(const auto& x, auto& out)` usable with
  /// both `double` and `Jet` element types.
  template <class F>
  static Field generic(int dim, int components, F f) {
    return analytic(
        dim, components,
        [f](std::span<const Jet> x, std::span<Jet> out) { f(x, out); },
        [f](std::span<const double> x, std::span<double> out) { f(x, out); });
  }

  /// Components independent of position.
  static Field constant(int dim, std::vector<double> values);

  int dim() const { return dim_; }
  int components() const { return components_; }
  DerivativeMode mode() const { return mode_; }
  bool empty() const { return components_ == 0; }

  std::vector<double> values(const ChartPoint& x) const;
  std::vector<Jet> jets(const ChartPoint& x) const;

 private:
  int dim_ = 0;
  int components_ = 0;
  DerivativeMode mode_ = DerivativeMode::analytic;
  std::shared_ptr<const JetFn> jet_;
  std::shared_ptr<const ValueFn> value_;
};

/// Which basis the components of a VectorField refer to.
enum class Basis { frame, coordinate };

struct VectorField {
  Field components;
  Basis basis = Basis::frame;
};

/// Default finite-difference step for coordinate value x: cbrt(eps) * max(1, |x|).
double default_fd_step(double x);

}  // namespace lndev
