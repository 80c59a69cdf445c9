#pragma once

#include "lndev/field.hpp"
#include "lndev/geometry.hpp"
#include "lndev/numerics.hpp"
#include "lndev/space.hpp"
#include "lndev/tensor.hpp"

namespace lndev {

/// R^i_{jkl}: component i of R(E_k, E_l) E_j.
struct CurvatureValue {
  TensorValue R;
  ChartPoint point;
};

/// T^i_{jk}: component i of T(E_j, E_k).
struct TorsionValue {
  TensorValue T;
  ChartPoint point;
};

enum class LieSource { closed_form, identity, dragging };

struct LieConnectionValue {
  TensorValue L;  // (Lie_xi Gamma)^i_{jk}
  ChartPoint point;
  LieSource source = LieSource::closed_form;
};

// ---- jet-level building blocks ----

/// Closed form from the frame dragging construction:
///   xi^n E_n(G^i_jk) - G^n_jk S^i_n + G^i_nk S^n_j + G^i_jn S^n_k + E_k(S^i_j)
JetTensor lie_connection_closed_form(const LocalGeometry& g, const JetTensor& xi);

/// Same object from second covariant derivatives:
///   xi^k_{|i|j} - R^k_{ijl} xi^l - (T^k_{il} xi^l)_{|j}
JetTensor lie_connection_identity(const LocalGeometry& g, const JetTensor& xi);

/// [xi, u] in frame components, computed in coordinates and mapped back.
JetTensor lie_bracket(const LocalGeometry& g, const JetTensor& xi, const JetTensor& u);

/// Symmetric, trace-free projective part:
///   X^i_(jk) - (delta^i_j X^l_(lk) + delta^i_k X^l_(lj)) / (n+1)
template <class S>
Tensor<S> projective_part(const Tensor<S>& x);

// ---- value-level operations ----

TensorValue anholonomy(const ConnectionSpace& space, const ChartPoint& x);
TorsionValue torsion(const ConnectionSpace& space, const ChartPoint& x);
CurvatureValue curvature(const ConnectionSpace& space, const ChartPoint& x);

/// R_{ij} = R^k_{ijk} (upper index contracted with the last lower index).
TensorValue ricci(const CurvatureValue& r);

std::vector<double> lie_bracket(const ConnectionSpace& space, const VectorField& xi,
                                const VectorField& u, const ChartPoint& x);

/// (Lie_xi g)_{ij} in the frame.
TensorValue lie_derivative_metric(const ConnectionSpace& space, const VectorField& xi,
                                  const ChartPoint& x);

LieConnectionValue lie_derivative_connection(const ConnectionSpace& space, const VectorField& xi,
                                             const ChartPoint& x,
                                             LieSource source = LieSource::closed_form,
                                             const DraggingProbe& probe = {});

/// Thomas projective parameters of the connection at x.
TensorValue thomas_projective(const ConnectionSpace& space, const ChartPoint& x);

// ---- template definitions ----

template <class S>
Tensor<S> projective_part(const Tensor<S>& x) {
  const int n = x.dim();
  Tensor<S> sym = Tensor<S>::valence(n, 1, 2, x.frame());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) sym(i, j, k) = 0.5 * (x(i, j, k) + x(i, k, j));
    }
  }
  std::vector<S> trace(static_cast<std::size_t>(n), S(0.0));
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) trace[static_cast<std::size_t>(k)] += sym(l, l, k);
  }
  Tensor<S> out = sym;
  const double w = 1.0 / (n + 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      out(i, i, k) -= w * trace[static_cast<std::size_t>(k)];
      out(i, k, i) -= w * trace[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

}  // namespace lndev
