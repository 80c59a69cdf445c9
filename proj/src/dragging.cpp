#include <cmath>

#include "lndev/error.hpp"
#include "lndev/geometry.hpp"
#include "lndev/numerics.hpp"

namespace lndev {

// Dragged frame E_{i-bar} with lower-index matrix N = 1 + eps*Sigma and its
// exact inverse on the upper index; Gamma is read at the dragged point
// x + eps*xi. The difference quotient tends to the closed-form Lie
// derivative as eps -> 0.
TensorValue dragged_connection(const ConnectionSpace& space, const VectorField& xi,
                               const ChartPoint& x, double epsilon) {
  const int n = space.dim();
  LocalGeometry g(space, x);
  const JetTensor xv = g.vector(xi);
  const JetTensor sig = g.sigma(xv);
  const auto xc = g.coordinate_components(xv);

  std::vector<double> shifted(x.coords().begin(), x.coords().end());
  for (int a = 0; a < n; ++a) shifted[static_cast<std::size_t>(a)] += epsilon * xc[static_cast<std::size_t>(a)].value;
  const ChartPoint xbar(shifted);
  const auto gbar = space.connection().values(xbar);
  auto gam = [&](int p, int q, int r) { return gbar[static_cast<std::size_t>((p * n + q) * n + r)]; };

  std::vector<Jet> nmat(static_cast<std::size_t>(n * n));
  for (int q = 0; q < n; ++q) {
    for (int j = 0; j < n; ++j) {
      nmat[static_cast<std::size_t>(q * n + j)] = Jet((q == j ? 1.0 : 0.0) + epsilon * sig(q, j).value);
    }
  }
  const auto ninv = invert(nmat, n, 1e-300);
  auto N = [&](int q, int j) { return nmat[static_cast<std::size_t>(q * n + j)].value; };
  auto Ninv = [&](int i, int p) { return ninv[static_cast<std::size_t>(i * n + p)].value; };

  TensorValue out = TensorValue::valence(n, 1, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int p = 0; p < n; ++p) {
          double inner = 0.0;
          for (int q = 0; q < n; ++q) {
            for (int r = 0; r < n; ++r) inner += N(q, j) * N(r, k) * gam(p, q, r);
          }
          inner += epsilon * g.frame_derivative(sig(p, j), k).value;
          v += Ninv(i, p) * inner;
        }
        out(i, j, k) = v;
      }
    }
  }
  return out;
}

DraggingEstimate dragging_oracle(const ConnectionSpace& space, const VectorField& xi,
                                 const ChartPoint& x, const DraggingProbe& probe) {
  probe.validate();
  const int n = space.dim();
  const auto g0 = space.connection().values(x);
  DraggingEstimate est;
  for (double eps : probe.epsilons) {
    TensorValue d = dragged_connection(space, xi, x, eps);
    for (std::size_t f = 0; f < d.size(); ++f) d[f] = (d[f] - g0[f]) / eps;
    est.difference_quotients.push_back(std::move(d));
  }
  const double ratio = probe.epsilons[0] / probe.epsilons[1];
  std::vector<TensorValue> extrap;
  for (std::size_t i = 0; i + 1 < est.difference_quotients.size(); ++i) {
    const auto& coarse = est.difference_quotients[i];
    const auto& fine = est.difference_quotients[i + 1];
    TensorValue r = TensorValue::valence(n, 1, 2);
    for (std::size_t f = 0; f < r.size(); ++f) r[f] = (ratio * fine[f] - coarse[f]) / (ratio - 1.0);
    extrap.push_back(std::move(r));
  }
  const TensorValue& best = extrap.back();
  const double scale = std::max(1.0, max_abs(best));
  // First-order quotient and extrapolant must agree to leading order; later
  // extrapolants must agree with each other.
  double drift = max_abs_diff(best, est.difference_quotients.back());
  if (extrap.size() >= 2) drift = std::max(drift, max_abs_diff(best, extrap[extrap.size() - 2]));
  if (!std::isfinite(drift) || drift > probe.convergence_tol * scale) {
    throw OracleError("dragging estimate not converging in epsilon (drift " + std::to_string(drift) + ")");
  }
  est.extrapolated = best;
  return est;
}

}  // namespace lndev
