#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lndev/field.hpp"
#include "lndev/tensor.hpp"

namespace lndev {

/// Slot-variance description of a tensor field together with its components.
/// Components are laid out like Tensor (row-major over slots).
struct TensorField {
  Field components;
  std::vector<Variance> slots;
};

/// An n-dimensional space with affine connection, described in a frame
/// E_i = A_i^alpha d_alpha over a single global chart.
///
/// Component layouts:
///   frame       n*n    A[i*n + alpha]     = A_i^alpha
///   connection  n^3    G[(k*n + i)*n + j] = Gamma^k_{ij}, with
///               nabla_{E_j} E_i = Gamma^k_{ij} E_k (differentiation index last)
///   metric      n*n    g[i*n + j] in the frame, symmetrized on evaluation
class ConnectionSpace {
 public:
  ConnectionSpace(std::string name, int dim, Field frame, Field connection,
                  std::optional<Field> metric = std::nullopt);

  /// Space described in the coordinate frame (A = identity).
  static ConnectionSpace coordinate(std::string name, int dim, Field connection,
                                    std::optional<Field> metric = std::nullopt);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const Field& frame() const { return frame_; }
  const Field& connection() const { return connection_; }
  bool has_metric() const { return metric_.has_value(); }
  const Field& metric() const;
  bool holonomic_identity() const { return identity_frame_; }

  /// Finite-difference if any attached field is finite-difference.
  DerivativeMode derivative_mode() const;

  double det_epsilon() const { return det_epsilon_; }
  void set_det_epsilon(double e) { det_epsilon_ = e; }

  /// Replace or attach the metric (frame components).
  ConnectionSpace with_metric(Field metric) const;
  ConnectionSpace with_connection(Field connection) const;

 private:
  std::string name_;
  int dim_ = 0;
  Field frame_;
  Field connection_;
  std::optional<Field> metric_;
  bool identity_frame_ = false;
  double det_epsilon_ = 1e-12;
};

}  // namespace lndev
