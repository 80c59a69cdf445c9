#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lndev/field.hpp"
#include "lndev/tensor.hpp"

namespace lndev {

class ConnectionSpace;

enum class FdScheme { central, richardson };

/// d f / d x^alpha by central differences. With `richardson`, one
/// extrapolation level over steps h and h/2 lifts the error to O(h^4).
/// A non-positive `step` selects default_fd_step(x[alpha]).
double fd_derivative(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> x, int alpha,
                     FdScheme scheme = FdScheme::richardson, double step = 0.0);

enum class OdeMethod { rk4_fixed, rk45_adaptive };

struct IntegratorSettings {
  OdeMethod method = OdeMethod::rk4_fixed;
  double step = 1e-3;      // fixed step, or initial step for rk45
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  long max_steps = 10'000'000;
  double min_step = 1e-14;

  void validate() const;
};

using OdeRhs = std::function<void(double s, std::span<const double> y, std::span<double> dyds)>;

struct OdeSolution {
  std::vector<double> s;
  std::vector<std::vector<double>> y;
  long steps = 0;
};

/// One step of the configured method from (s, y) with step h. For rk45 the
/// step may be rejected; `h` then receives the suggested retry size and the
/// function returns false.
bool ode_step(const OdeRhs& rhs, double& s, std::vector<double>& y, double& h,
              const IntegratorSettings& settings);

/// Integrate from s0 to s1 (either direction). With `samples` non-empty the
/// solution is reported at those parameters via cubic Hermite interpolation
/// between accepted steps; otherwise at every accepted step.
OdeSolution ode_integrate(const OdeRhs& rhs, std::vector<double> y0, double s0, double s1,
                          const IntegratorSettings& settings,
                          std::span<const double> samples = {});

/// Schedule of dragging parameters for the finite-epsilon Lie-derivative
/// estimate. Consecutive values share a fixed ratio.
struct DraggingProbe {
  std::vector<double> epsilons{1e-3, 5e-4};
  double convergence_tol = 1e-2;  // relative disagreement allowed between estimates

  void validate() const;
};

struct DraggingEstimate {
  TensorValue extrapolated;                 // Richardson limit, (1,2)
  std::vector<TensorValue> difference_quotients;  // (Gamma'(eps) - Gamma)/eps per epsilon
};

/// Finite-epsilon dragging estimate of the Lie derivative of the connection
/// along `xi` at `x`. See lie_derivative_connection for the closed form.
DraggingEstimate dragging_oracle(const ConnectionSpace& space, const VectorField& xi,
                                 const ChartPoint& x, const DraggingProbe& probe = {});

/// Dragged connection coefficients at finite epsilon (no limit taken).
TensorValue dragged_connection(const ConnectionSpace& space, const VectorField& xi,
                               const ChartPoint& x, double epsilon);

}  // namespace lndev
