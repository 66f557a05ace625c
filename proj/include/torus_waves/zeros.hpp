#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "torus_waves/geometry.hpp"
#include "torus_waves/lattice.hpp"
#include "torus_waves/wave.hpp"

namespace torus_waves {

struct Interval {
  double lo;
  double hi;
  double length() const { return hi - lo; }
};

/// Zeros of g(t) = F(gamma(t)) on a half-open parameter interval.
struct ZeroCount {
  std::size_t count = 0;
  std::vector<double> roots;
  bool certified = true;
  std::optional<double> min_gap;
  /// Base grid nodes per unit of arc length.
  double grid_resolution = 0.0;
  /// Cells whose near-miss flag survived every escalation.
  std::size_t unresolved = 0;
  /// Number of cells that were subdivided at least once.
  std::size_t escalated = 0;
};

struct ZeroOptions {
  /// A cell without a sign change is a near miss when |g| at both ends is
  /// below near_threshold * max(|g'|) * h.
  double near_threshold = 0.5;
  int max_escalations = 3;
  int subdivision = 4;
  /// Bracket width at which bisection stops.
  double root_tolerance = 1e-13;
  /// Minimum base resolution in nodes per unit length, as a multiple of lambda.
  double min_grid_factor = 32.0;
};

/// Counts sign changes of g on the sampler grid, refines each bracket by
/// bisection and locally subdivides near-miss cells. A root at the left end
/// of the interval is counted, one at the right end is not. Throws
/// Error(InvalidSample) for non-finite coefficients.
ZeroCount count_zeros(const WaveSample& sample, const CurveSampler& curve,
                      std::optional<Interval> interval = std::nullopt,
                      const ZeroOptions& options = {});

/// True when count_zeros gives the same count for the sample scaled by c.
bool scaling_invariance_check(const WaveSample& sample, const CurveSampler& curve, double c);

/// Unit vectors of the distinct lines spanned by differences of lattice
/// points (antipodal directions identified); d = 2.
std::vector<Eigen::Vector2d> direction_lines(const LatticeSet& lattice);

/// kappa = N^{-3}.
double default_kappa(const LatticeSet& lattice);

/// Merged parameter intervals where the tangent makes an angle below kappa
/// with some direction line; d = 2.
std::vector<Interval> bad_intervals(const Curve& curve, const LatticeSet& lattice, double kappa);

/// The given intervals with the bad set removed.
std::vector<Interval> restrict_to_good_set(const Curve& curve, const LatticeSet& lattice,
                                           const std::vector<Interval>& intervals,
                                           std::optional<double> kappa = std::nullopt);

void to_json(nlohmann::json& j, const ZeroCount& zc);
ZeroCount zero_count_from_json(const nlohmann::json& j);

}  // namespace torus_waves
