#include "lndev/numerics.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <string>

#include "lndev/error.hpp"

namespace lndev {

namespace odeint = boost::numeric::odeint;

double fd_derivative(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> x, int alpha, FdScheme scheme, double step) {
  std::vector<double> p(x.begin(), x.end());
  const double xa = p[static_cast<std::size_t>(alpha)];
  const double h = step > 0.0 ? step : default_fd_step(xa);
  if (xa + h == xa || xa + 0.5 * h == xa) throw ToleranceError("finite-difference step underflow");
  auto at = [&](double v) {
    p[static_cast<std::size_t>(alpha)] = v;
    const double r = f(p);
    if (!std::isfinite(r)) throw EvaluationError("non-finite value on finite-difference stencil");
    return r;
  };
  const double d1 = (at(xa + h) - at(xa - h)) / (2.0 * h);
  if (scheme == FdScheme::central) return d1;
  const double d2 = (at(xa + 0.5 * h) - at(xa - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

void IntegratorSettings::validate() const {
  if (!(step > 0.0)) throw ContractError("integrator step must be positive");
  if (method == OdeMethod::rk45_adaptive && !(rel_tol > 0.0 && abs_tol > 0.0)) {
    throw ContractError("integrator tolerances must be positive");
  }
  if (max_steps <= 0) throw ContractError("max_steps must be positive");
}

namespace {

using State = std::vector<double>;

struct System {
  const OdeRhs* rhs;
  void operator()(const State& y, State& dy, double s) const {
    (*rhs)(s, y, dy);
    for (double v : dy) {
      if (!std::isfinite(v)) throw IntegrationError("right-hand side became non-finite");
    }
  }
};

}  // namespace

bool ode_step(const OdeRhs& rhs, double& s, std::vector<double>& y, double& h,
              const IntegratorSettings& settings) {
  System sys{&rhs};
  if (settings.method == OdeMethod::rk4_fixed) {
    odeint::runge_kutta4<State> stepper;
    stepper.do_step(sys, y, s, h);
    s += h;
    return true;
  }
  auto stepper = odeint::make_controlled(settings.abs_tol, settings.rel_tol,
                                         odeint::runge_kutta_dopri5<State>());
  return stepper.try_step(sys, y, s, h) == odeint::success;
}

namespace {

// Cubic Hermite interpolation on [s0, s1].
void hermite(double s0, const State& y0, const State& f0, double s1, const State& y1,
             const State& f1, double s, State& out) {
  const double h = s1 - s0;
  const double t = (s - s0) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  out.resize(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) {
    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
  }
}

}  // namespace

OdeSolution ode_integrate(const OdeRhs& rhs, std::vector<double> y0, double s0, double s1,
                          const IntegratorSettings& settings, std::span<const double> samples) {
  settings.validate();
  System sys{&rhs};
  const double dir = s1 >= s0 ? 1.0 : -1.0;
  const double span = std::abs(s1 - s0);
  OdeSolution sol;
  std::vector<double> pending(samples.begin(), samples.end());
  std::sort(pending.begin(), pending.end());
  if (dir < 0) std::reverse(pending.begin(), pending.end());
  std::size_t next = 0;

  State y = std::move(y0);
  State f(y.size()), fnew(y.size());
  double s = s0;
  sys(y, f, s);
  auto emit = [&](double sv, const State& yv) {
    sol.s.push_back(sv);
    sol.y.push_back(yv);
  };
  auto emit_samples_upto = [&](double s_prev, const State& y_prev, const State& f_prev, double s_new,
                               const State& y_new, const State& f_new) {
    State tmp;
    while (next < pending.size() && dir * (pending[next] - s_new) <= 1e-14 * std::max(1.0, span)) {
      const double sv = pending[next];
      if (dir * (sv - s_prev) < -1e-14 * std::max(1.0, span)) {
        throw ContractError("sample point outside the integration range");
      }
      if (sv == s_new) {
        emit(sv, y_new);
      } else if (sv == s_prev) {
        emit(sv, y_prev);
      } else {
        hermite(s_prev, y_prev, f_prev, s_new, y_new, f_new, sv, tmp);
        emit(sv, tmp);
      }
      ++next;
    }
  };

  if (pending.empty()) emit(s, y);
  else emit_samples_upto(s, y, f, s, y, f);

  if (span == 0.0) return sol;

  double h = dir * std::min(settings.step, span);
  if (settings.method == OdeMethod::rk4_fixed) {
    const long nsteps = static_cast<long>(std::ceil(span / settings.step - 1e-9));
    if (nsteps > settings.max_steps) throw IntegrationError("max_steps exceeded");
    h = dir * span / static_cast<double>(nsteps);
    odeint::runge_kutta4<State> stepper;
    for (long k = 0; k < nsteps; ++k) {
      const State yprev = y;
      const State fprev = f;
      const double sprev = s;
      stepper.do_step(sys, y, s, h);
      s = (k + 1 == nsteps) ? s1 : s0 + static_cast<double>(k + 1) * h;
      sys(y, f, s);
      ++sol.steps;
      if (pending.empty()) emit(s, y);
      else emit_samples_upto(sprev, yprev, fprev, s, y, f);
    }
    return sol;
  }

  auto stepper = odeint::make_controlled(settings.abs_tol, settings.rel_tol,
                                         odeint::runge_kutta_dopri5<State>());
  while (dir * (s1 - s) > 0.0) {
    if (sol.steps >= settings.max_steps) throw IntegrationError("max_steps exceeded");
    if (dir * (s + h - s1) > 0.0) h = s1 - s;
    const State yprev = y;
    const State fprev = f;
    const double sprev = s;
    int rejections = 0;
    while (stepper.try_step(sys, y, s, h) != odeint::success) {
      if (std::abs(h) < settings.min_step || ++rejections > 200) {
        throw IntegrationError("step size underflow at s = " + std::to_string(s));
      }
    }
    if (std::abs(s1 - s) < 1e-13 * std::max(1.0, span)) s = s1;
    sys(y, f, s);
    ++sol.steps;
    if (pending.empty()) emit(s, y);
    else emit_samples_upto(sprev, yprev, fprev, s, y, f);
  }
  return sol;
}

void DraggingProbe::validate() const {
  if (epsilons.size() < 2) throw ContractError("dragging probe needs at least two epsilons");
  const double ratio = epsilons[0] / epsilons[1];
  for (std::size_t i = 0; i + 1 < epsilons.size(); ++i) {
    if (!(epsilons[i] > epsilons[i + 1] && epsilons[i + 1] > 0.0)) {
      throw ContractError("dragging epsilons must be positive and descending");
    }
    if (std::abs(epsilons[i] / epsilons[i + 1] - ratio) > 1e-9 * ratio) {
      throw ContractError("dragging epsilons must share a fixed ratio");
    }
  }
}

}  // namespace lndev
