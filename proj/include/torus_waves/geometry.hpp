#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "json.hpp"

namespace torus_waves {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

enum class CurveFamily { circle, helix, product, segment, warped_circle };

std::string_view to_string(CurveFamily family);
CurveFamily curve_family_from_string(std::string_view name);

/// Position and first two derivatives of a curve at one parameter value.
struct CurveJet {
  Vec3 position;
  Vec3 velocity;
  Vec3 acceleration;
};

struct ComplexCurveJet {
  CVec3 position;
  CVec3 velocity;
  CVec3 acceleration;
};

class ArcLengthMap;

/// Reference curve on T^d given by a closed-form analytic family.
///
/// The parameter runs over [0, length()]. Families flagged unit-speed are
/// parametrized by arc length natively; warped_circle is a raw
/// parametrization on [0,1] that must go through reparametrize_arclength
/// before it can drive a sampler. Points are returned on the unwrapped lift;
/// reduction mod Z^d happens when phases are formed.
class Curve {
 public:
  using Params = std::map<std::string, double>;

  /// Circle of radius rho traversed once; length 2 pi rho, curvature 1/rho.
  static Curve circle(double radius);
  /// (a cos(w t), a sin(w t), b t); requires a^2 w^2 + b^2 = 1.
  static Curve helix(double radius, double winding, double pitch, double length = 1.0);
  /// (gamma0(t/sqrt2), t/sqrt2) with gamma0 the unit-speed circle of radius r0.
  static Curve product(double base_radius);
  /// origin + t * direction (normalized), t in [0, length].
  static Curve segment(const Vec3& direction, double length = 1.0, int dim = 2,
                       const Vec3& origin = Vec3::Zero());
  /// rho (cos phi(s), sin phi(s)) with phi(s) = 2 pi (linear s + quadratic s^2), s in [0,1].
  static Curve warped_circle(double radius, double linear, double quadratic);

  /// Builds a curve from a family name and parameter map (manifest/CLI form).
  static Curve make(std::string_view family, const Params& params);
  /// Default length-one reference curve for dimension d.
  static Curve default_for(int dim);

  CurveFamily family() const noexcept { return family_; }
  int dim() const noexcept { return dim_; }
  const Params& params() const noexcept { return params_; }
  double length() const noexcept { return length_; }
  bool unit_speed() const noexcept { return unit_speed_; }
  bool reparametrized() const noexcept { return arclength_ != nullptr; }
  bool sub_unit_length() const noexcept { return length_ < 1.0 - 1e-12; }

  CurveJet jet(double t) const;
  Vec3 position(double t) const { return jet(t).position; }
  double speed(double t) const { return jet(t).velocity.norm(); }
  double curvature(double t) const;
  /// Zero for planar families.
  double torsion(double t) const;

  /// Analytic continuation to complex parameter values. Available for the
  /// native families only (not for arc-length reparametrized curves).
  bool has_complex_extension() const noexcept { return !reparametrized(); }
  ComplexCurveJet complex_jet(std::complex<double> t) const;

 private:
  friend Curve reparametrize_arclength(const Curve& curve);

  struct RawJet {
    Vec3 d0, d1, d2, d3;
  };
  RawJet raw_jet(double s) const;
  double raw_parameter(double t) const;

  CurveFamily family_ = CurveFamily::circle;
  int dim_ = 2;
  Params params_;
  double length_ = 1.0;
  bool unit_speed_ = true;
  std::shared_ptr<const ArcLengthMap> arclength_;
};

/// Arc-length reparametrization by adaptive quadrature of the speed and
/// monotone inversion. Unit-speed inputs are returned unchanged. Throws
/// Error(DegenerateSpeed) if the speed vanishes in the interior.
Curve reparametrize_arclength(const Curve& curve);

/// Optional ball non-confinement query: every parameter window of length
/// c0/lambda must escape every ball of radius N^{-alpha}/lambda.
struct NonconfinementQuery {
  double lambda;
  double n_points;
  double alpha;
  double c0 = 1.0;
};

struct Condition1Report {
  double unit_speed_err = 0.0;
  double min_curvature = 0.0;
  std::optional<double> min_torsion;
  bool planar = true;
  std::optional<bool> ball_nonconfinement;
  /// Smallest half-diameter of a window divided by the ball radius.
  std::optional<double> confinement_margin;
  bool passes = false;
};

Condition1Report validate_condition1(const Curve& curve,
                                     std::optional<NonconfinementQuery> query = std::nullopt,
                                     std::size_t grid = 4096);

/// Uniform grid over [0, length] with cached jets. Construction requires a
/// unit-speed curve.
class CurveSampler {
 public:
  CurveSampler(Curve curve, double nodes_per_unit);

  const Curve& curve() const noexcept { return curve_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  const CurveJet& cached(std::size_t i) const { return jets_[i]; }
  CurveJet jet(double t) const { return curve_.jet(t); }
  /// Grid nodes per unit of arc length.
  double resolution() const noexcept { return resolution_; }
  double step() const noexcept { return curve_.length() / static_cast<double>(nodes_.size() - 1); }

 private:
  Curve curve_;
  double resolution_;
  std::vector<double> nodes_;
  std::vector<CurveJet> jets_;
};

void to_json(nlohmann::json& j, const Curve& curve);
Curve curve_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Condition1Report& report);

}  // namespace torus_waves
