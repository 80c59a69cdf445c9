#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lndev/field.hpp"
#include "lndev/geometry.hpp"
#include "lndev/numerics.hpp"
#include "lndev/space.hpp"
#include "lndev/tensor.hpp"
#include "lndev/tensor_ops.hpp"

namespace lndev {

/// Additional condition closing the deviation equation.
enum class ConditionTag {
  generalized,         // user-supplied (or closed-form) Lie derivative of Gamma
  geodesic_f0,         // F = 0
  lie_u_zero,          // Lie_xi u = 0
  parallel_u,          // u^i_{|k} = 0
  lie_f_minus_f,       // Lie_xi F = -F
  u_equals_xi,         // u = xi
  absorbed_lie_gamma,  // u^i u^j Lie_xi Gamma^k_ij = -(F^k + xi^k_{|j} F^j)
  family,              // 2-parameter family of curves
  free_particles,      // geodesic family
  dragged,             // dragged-structure condition
};

std::string to_string(ConditionTag tag);
/// Accepts the names produced by to_string ("geodesic-F0", "lie-u-zero", ...).
ConditionTag parse_condition_tag(const std::string& name);

/// Which assembly of the generalized right-hand side to use.
enum class RhsForm {
  lie_gamma,   // Lie derivative of the connection
  lie_vectors, // Lie derivatives of F and u
  commutator,  // Lie derivative of S = Du and covariant derivative of Lie_xi u
};

/// Vector fields u (tangent congruence) and xi (deviation) around the point.
struct DeviationFields {
  VectorField u;
  VectorField xi;
};

struct ConditionAux {
  /// Replaces the computed Lie derivative of Gamma, frame components (1,2).
  std::optional<Field> lie_gamma;
  /// Hypothesis tolerance, relative to max(1, size of the terms involved).
  double tolerance = 1e-8;
};

/// Every term of the generalized deviation equation at one point, frame components.
struct DeviationTerms {
  std::vector<double> u, xi, F;
  std::vector<double> curvature;     // R^k_{ijl} u^i u^j xi^l
  std::vector<double> force;         // xi^k_{|j} F^j
  std::vector<double> torsion;       // u^j u^m (T^k_{jl} xi^l)_{|m}
  std::vector<double> lie_gamma;     // u^i u^j Lie_xi Gamma^k_ij
  std::vector<double> lie_u;         // [xi, u]
  std::vector<double> lie_F;         // [xi, F]
  std::vector<double> d_lie_u;       // u^m (Lie_xi u)^k_{|m}
  std::vector<double> lie_u_du;      // u^k_{|i} (Lie_xi u)^i
  std::vector<double> lie_S;         // u^i (Lie_xi S)^k_i with S = Du
  TensorValue du;                    // u^k_{|i}
  TensorValue dxi;                   // xi^k_{|i}
};

DeviationTerms deviation_terms(const ConnectionSpace& space, const ChartPoint& x,
                               const DeviationFields& fields, const ConditionAux& aux = {});

struct DeviationRhs {
  std::vector<double> rhs;        // full right-hand side in the requested form
  std::vector<double> reduced;    // the tag's reduced equation
  double hypothesis_residual = 0; // how far the data is from the tag's hypothesis
};

/// Second covariant derivative of xi along u at x. Throws ContractError when
/// the fields violate the tag's hypothesis beyond aux.tolerance.
DeviationRhs generalized_deviation_rhs(const ConnectionSpace& space, const ChartPoint& x,
                                       const DeviationFields& fields, ConditionTag tag,
                                       RhsForm form = RhsForm::lie_gamma,
                                       const ConditionAux& aux = {});

/// F^k = u^k_{|i} u^i from a surrounding u-field.
std::vector<double> force_term(const ConnectionSpace& space, const ChartPoint& x,
                               const VectorField& u_field);

/// F^k from trajectory data: A^k_alpha (x''^alpha + Gamma^alpha_{beta gamma} x'^beta x'^gamma).
std::vector<double> force_term(const ConnectionSpace& space, const ChartPoint& x,
                               std::span<const double> xdot, std::span<const double> xddot);

enum class FamilyTorsionForm {
  family,    // -u^n nabla_n(T^k_{lj} u^j) + u^j T^k_{ji}(u^i_{|l} - T^i_{lm} u^m)
  geodesic,  // -T^k_{lj|n} u^j u^n + u^j T^k_{ji}(u^i_{|l} - T^i_{lm} u^m)
};

/// Mixed tensor T^k_l, slots (k; l).
TensorValue family_torsion_tensor(const ConnectionSpace& space, const ChartPoint& x,
                                  const VectorField& u_field,
                                  FamilyTorsionForm form = FamilyTorsionForm::family);

/// Point on a base trajectory with the deviation data carried along it.
/// u, xi and V are frame components.
struct DeviationState {
  double s = 0.0;
  ChartPoint x;
  std::vector<double> u;
  std::vector<double> xi;
  std::vector<double> V;
};

struct TidalParts {
  std::vector<double> curvature;  // R(u, xi) u
  std::vector<double> torsion;    // T^k_{jl|n} u^n u^j xi^l + T(u, V)
};

/// Split of the free-particle relative acceleration. Assumes F = 0 and
/// Lie_xi u = 0, which lets V stand in for xi^l u^k_{|l} - T(xi, u).
TidalParts tidal_decomposition(const ConnectionSpace& space, const DeviationState& state);

struct TrajectoryNode {
  double s = 0.0;
  ChartPoint x;
  std::vector<double> u_coord;  // dx^alpha/ds
  std::vector<double> u;        // frame components
};

struct Trajectory {
  std::vector<TrajectoryNode> nodes;
  /// Largest mismatch between stored tangents and central differences of
  /// stored positions (interior nodes, uniform sampling assumed).
  double tangent_consistency() const;
};

/// Geodesic through x0 with frame tangent u0, reported at `samples`
/// (or every accepted step when empty).
Trajectory integrate_geodesic(const ConnectionSpace& space, const ChartPoint& x0,
                              std::span<const double> u0, double s0, double s1,
                              const IntegratorSettings& settings,
                              std::span<const double> samples = {});

enum class TrajectoryKind { geodesic, flow };

/// Base trajectory: a geodesic from (x0, u0), or the integral curve of a u-field.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::geodesic;
  std::vector<double> x0;
  std::vector<double> u0;  // frame components; ignored for flow
  std::optional<VectorField> u_field;
  double s0 = 0.0;
  double s1 = 1.0;
};

struct DeviationRun {
  std::vector<DeviationState> states;
  std::vector<std::vector<double>> rhs;       // DV/ds (covariant) per node
  std::vector<double> first_integral;         // |Lie_xi u| per node, NaN without a u-field
  double max_first_integral = 0.0;
  long steps = 0;
  std::vector<std::string> warnings;
};

/// Deviation along the trajectory for the tags that close on trajectory data:
/// `family` (needs a u-field; the base curve is its integral curve) and
/// `free_particles` (geodesic base, F = 0). Other tags need full fields and
/// are rejected with ContractError.
DeviationRun integrate_deviation(const ConnectionSpace& space, const TrajectorySpec& trajectory,
                                 std::span<const double> xi0, std::span<const double> V0,
                                 ConditionTag tag, const IntegratorSettings& settings,
                                 std::span<const double> samples = {},
                                 double curvature_scale_fraction = 0.05);

/// V0 making Lie_xi u vanish initially: xi^l u^k_{|l} + T(u, xi).
std::vector<double> family_initial_velocity(const ConnectionSpace& space, const ChartPoint& x,
                                            const VectorField& u_field,
                                            std::span<const double> xi0);

/// Pointwise data of the dragged-structure condition.
struct DraggedData {
  double w = 1.0;
  double dlnw_dr = 0.0;
  std::vector<double> grad_ln_w;  // (ln w)_{,j}
  std::vector<double> u, V, F, lie_F;
  TensorValue gamma;      // Gamma^i_{jk}
  TensorValue lie_gamma;  // Lie_xi Gamma^i_{jk}
  TensorValue grad_uV;    // (u + V)^i_{,j}
  TensorValue cov_V;      // V^i_{|j}
};

struct DraggedResidual {
  std::vector<double> printed;  // as displayed, with the parenthesis read as a sum
  std::vector<double> direct;   // from expanding the dragged transport law directly
  double disagreement = 0.0;    // max |printed - direct|
};

DraggedResidual dragged_condition_residual(const DraggedData& data);

/// Field-level form: V = D xi/dr along u, D ln w/dr = u(ln w).
DraggedResidual dragged_condition_residual(const ConnectionSpace& space, const ChartPoint& x,
                                           const DeviationFields& fields, const Field& w,
                                           LieSource source = LieSource::closed_form);

/// Data assembled for the field-level residual (exposed for checks).
DraggedData dragged_data(const ConnectionSpace& space, const ChartPoint& x,
                         const DeviationFields& fields, const Field& w,
                         LieSource source = LieSource::closed_form);

}  // namespace lndev
