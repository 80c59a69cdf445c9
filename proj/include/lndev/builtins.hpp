#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lndev/space.hpp"

namespace lndev {

/// Coordinate box for quasi-random sample points.
struct SampleBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct BuiltinParams {
  int n = 0;             // dimension where the builtin allows a choice (0: default)
  double a = 1.0;        // sphere radius
  double c = 0.5;        // constant torsion strength
  double M = 1.0;        // Schwarzschild mass
  double b = 0.5;        // Weyl example: conformal factor exp(b |x|^2)
  std::vector<double> w; // Weyl example: scale covector (default 0.3, -0.2, 0.1, ...)
};

/// A catalog space with the classification outcomes it was constructed to have.
/// Only properties that follow from the construction are listed.
struct BuiltinSpace {
  ConnectionSpace space;
  SampleBox box;
  std::map<std::string, bool> expected;
  std::map<std::string, std::vector<double>> expected_data;  // e.g. "einstein.f", "semi-metric.w"
};

/// Names: flat-cartesian, flat-polar-frame, constant-torsion, sphere,
/// schwarzschild, weyl-example, compensation.
BuiltinSpace make_builtin(const std::string& name, const BuiltinParams& params = {});
std::vector<std::string> builtin_names();

/// Levi-Civita connection of a coordinate metric, from its jets. The
/// coefficients carry one derivative level (enough for curvature, not for
/// its covariant derivative).
Field levi_civita(const Field& metric);

/// Data of the torsion-compensation space: at `point`, with tangent `u`
/// and deviation `xi` (and V = 0), the torsion part of the free-particle
/// relative acceleration cancels the curvature part.
struct CompensationSetup {
  std::vector<double> point;
  std::vector<double> u;
  std::vector<double> xi;
};
CompensationSetup compensation_setup();

}  // namespace lndev
