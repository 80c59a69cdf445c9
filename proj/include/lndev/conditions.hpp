#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lndev/builtins.hpp"
#include "lndev/field.hpp"
#include "lndev/space.hpp"

namespace lndev {

/// One checked property. `residual` is relative: the largest violation over
/// the sample points divided by max(1, size of the quantities compared).
struct PropertyRecord {
  std::string name;
  bool applicable = true;
  double residual = 0.0;
  double threshold = 0.0;
  bool holds = false;
  /// Recovered data per sample point (w_k, f, Phi, A_m, ...); empty unless holds.
  std::vector<std::vector<double>> recovered;
  std::string note;
};

struct ClassificationReport {
  std::vector<PropertyRecord> properties;
  std::vector<ChartPoint> sample_points;
  std::uint64_t seed = 0;

  const PropertyRecord& at(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// Cranley-Patterson shifted Halton points in the box; the shift comes from
/// a seeded generator, so identical seeds give identical points.
std::vector<ChartPoint> sample_points(const SampleBox& box, int count, std::uint64_t seed);

/// Thresholds on the relative residual by derivative regime.
struct Thresholds {
  double analytic = 1e-6;
  double finite_difference = 1e-3;
};

double holds_threshold(const ConnectionSpace& space, const Thresholds& t = {});

enum class SymmetryKind { projective, affine, isometric, conformal };
std::string to_string(SymmetryKind kind);
SymmetryKind parse_symmetry_kind(const std::string& name);

/// Whether xi generates the given kind of symmetry at the points. For
/// `conformal` the report carries Phi per point and a second record
/// "conformal-density" for the weight-normalized form.
std::vector<PropertyRecord> check_symmetry(const ConnectionSpace& space, const VectorField& xi,
                                           SymmetryKind kind, const std::vector<ChartPoint>& points,
                                           const Thresholds& thresholds = {});

struct ClassifyOptions {
  Thresholds thresholds;
  int recurrence_order = 1;  // 1 or 2
};

/// Property names: torsion-free, recurrent, flat, equiaffine, semi-metric,
/// einstein, metric-transport, conformally-euclidean (with the two
/// sub-residuals reported as conformally-euclidean.curvature and
/// conformally-euclidean.cotton). Metric-dependent entries are marked not
/// applicable when no metric is attached.
ClassificationReport classify_space(const ConnectionSpace& space, const std::vector<ChartPoint>& points,
                                    const ClassifyOptions& options = {});

}  // namespace lndev
