#pragma once

#include <optional>

#include "lndev/field.hpp"
#include "lndev/space.hpp"
#include "lndev/tensor.hpp"

namespace lndev {

/// Jet-level view of a ConnectionSpace at one chart point.
///
/// All quantities are truncated Taylor jets in the chart coordinates, so
/// derivatives of derived objects (torsion, curvature, Lie derivatives) come
/// out of the same arithmetic. Derived quantities are computed on first use.
/// Instances are cheap to build and not meant to be shared across threads.
class LocalGeometry {
 public:
  LocalGeometry(const ConnectionSpace& space, const ChartPoint& x);

  int dim() const { return n_; }
  const ChartPoint& point() const { return x_; }
  const ConnectionSpace& space() const { return *space_; }

  /// A_i^alpha and its inverse A^i_alpha.
  const Jet& frame(int i, int alpha) const { return a_[static_cast<std::size_t>(i * n_ + alpha)]; }
  const Jet& coframe(int i, int alpha) const { return ainv_[static_cast<std::size_t>(i * n_ + alpha)]; }

  const JetTensor& gamma() const { return gamma_; }
  const JetTensor& anholonomy() const;
  const JetTensor& torsion() const;
  const JetTensor& curvature() const;
  const JetTensor& metric() const;
  const JetTensor& inverse_metric() const;

  /// E_i(f) = A_i^alpha d_alpha f.
  Jet frame_derivative(const Jet& f, int i) const;

  /// Component-wise E_m(T), appending one lower slot for m.
  JetTensor frame_gradient(const JetTensor& t) const;

  /// Covariant derivative, appending one lower slot: +Gamma per upper slot,
  /// -Gamma per lower slot, with the derivative index in Gamma's last slot.
  JetTensor covariant_derivative(const JetTensor& t) const;

  /// Frame components xi^k of a vector field as a (1) tensor of jets.
  JetTensor vector(const VectorField& v) const;
  /// Coordinate components xi^alpha.
  std::vector<Jet> coordinate_components(const JetTensor& frame_vector) const;
  JetTensor from_coordinate_components(std::span<const Jet> comps) const;

  /// Tensor field components in the frame.
  JetTensor tensor(const TensorField& t) const;

  /// Sigma^j_k = E_k(xi^j) + C^j_{kl} xi^l (so that Lie_xi E_k = -Sigma^j_k E_j).
  JetTensor sigma(const JetTensor& xi) const;

  /// Lie derivative of an arbitrary tensor along xi, via Sigma.
  JetTensor lie_derivative(const JetTensor& t, const JetTensor& xi) const;

  /// Coordinate-frame connection Gamma^alpha_{beta gamma}.
  JetTensor coordinate_connection() const;

 private:
  const ConnectionSpace* space_;
  ChartPoint x_;
  int n_;
  std::vector<Jet> a_;
  std::vector<Jet> ainv_;
  JetTensor gamma_;
  mutable std::optional<JetTensor> anholonomy_;
  mutable std::optional<JetTensor> torsion_;
  mutable std::optional<JetTensor> curvature_;
  mutable std::optional<JetTensor> metric_;
  mutable std::optional<JetTensor> inverse_metric_;
};

/// Invert a square jet matrix (row-major, n x n) by Gauss-Jordan elimination.
/// Throws SingularFrameError when |det| of the value part is below det_eps.
std::vector<Jet> invert(std::span<const Jet> m, int n, double det_eps);

// ---- manifold-core operations (values at a point) ----

/// E_i(f) for component `component` of field f.
double frame_directional_derivative(const ConnectionSpace& space, const Field& f, int i,
                                     const ChartPoint& x, int component = 0);

TensorValue covariant_derivative(const ConnectionSpace& space, const TensorField& t,
                                 const ChartPoint& x);

/// xi^k_{|i|j}, slots (k; i, j).
TensorValue second_covariant_derivative(const ConnectionSpace& space, const VectorField& xi,
                                        const ChartPoint& x);

/// Connection coefficients in the frame E_{i'} = A'^i_{i'} E_i, where the
/// frame-change field lists A'[i'*n + i] = A'^i_{i'}.
TensorValue transform_connection(const ConnectionSpace& space, const Field& frame_change,
                                 const ChartPoint& x);

/// Same space described in the changed frame.
ConnectionSpace change_frame(const ConnectionSpace& space, const Field& frame_change,
                             std::string name = {});

/// Gamma^alpha_{beta gamma} in the coordinate frame.
TensorValue coordinate_connection(const ConnectionSpace& space, const ChartPoint& x);

}  // namespace lndev
