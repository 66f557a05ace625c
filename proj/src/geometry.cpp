#include "torus_waves/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include "torus_waves/errors.hpp"

namespace torus_waves {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnitSpeedTol = 1e-12;

template <class T>
using V3 = Eigen::Matrix<T, 3, 1>;

template <class T>
struct GenericJet {
  V3<T> d0, d1, d2, d3;
};

double param(const Curve::Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw Error(ErrorCode::InvalidArgument, "missing curve parameter " + key);
  return it->second;
}

// Closed-form derivatives of each family in its native parameter.
template <class T>
GenericJet<T> family_jet(CurveFamily family, const Curve::Params& p, T s) {
  using std::cos;
  using std::sin;
  GenericJet<T> j;
  switch (family) {
    case CurveFamily::circle: {
      const double r = param(p, "radius");
      const T c = cos(s / r), sn = sin(s / r);
      j.d0 << r * c, r * sn, T(0);
      j.d1 << -sn, c, T(0);
      j.d2 << -c / r, -sn / r, T(0);
      j.d3 << sn / (r * r), -c / (r * r), T(0);
      break;
    }
    case CurveFamily::helix:
    case CurveFamily::product: {
      double a, w, b;
      if (family == CurveFamily::helix) {
        a = param(p, "radius");
        w = param(p, "winding");
        b = param(p, "pitch");
      } else {
        a = param(p, "base_radius");
        w = 1.0 / (std::numbers::sqrt2 * a);
        b = 1.0 / std::numbers::sqrt2;
      }
      const T c = cos(w * s), sn = sin(w * s);
      j.d0 << a * c, a * sn, b * s;
      j.d1 << -a * w * sn, a * w * c, T(b);
      j.d2 << -a * w * w * c, -a * w * w * sn, T(0);
      j.d3 << a * w * w * w * sn, -a * w * w * w * c, T(0);
      break;
    }
    case CurveFamily::segment: {
      Vec3 u(param(p, "dx"), param(p, "dy"), param(p, "dz"));
      u.normalize();
      const Vec3 o(param(p, "x0"), param(p, "y0"), param(p, "z0"));
      j.d0 = o.cast<T>() + s * u.cast<T>();
      j.d1 = u.cast<T>();
      j.d2.setZero();
      j.d3.setZero();
      break;
    }
    case CurveFamily::warped_circle: {
      const double r = param(p, "radius");
      const double p1 = param(p, "linear");
      const double p2 = param(p, "quadratic");
      const T phi = 2.0 * kPi * (p1 * s + p2 * s * s);
      const T dphi = 2.0 * kPi * (p1 + 2.0 * p2 * s);
      const double ddphi = 4.0 * kPi * p2;
      const T c = cos(phi), sn = sin(phi);
      j.d0 << r * c, r * sn, T(0);
      j.d1 << -r * dphi * sn, r * dphi * c, T(0);
      j.d2 << r * (-ddphi * sn - dphi * dphi * c), r * (ddphi * c - dphi * dphi * sn), T(0);
      const T radial = -3.0 * dphi * ddphi;
      const T tangential = -dphi * dphi * dphi;
      j.d3 << r * (radial * c - tangential * sn), r * (radial * sn + tangential * c), T(0);
      break;
    }
  }
  return j;
}

}  // namespace

std::string_view to_string(CurveFamily family) {
  switch (family) {
    case CurveFamily::circle: return "circle";
    case CurveFamily::helix: return "helix";
    case CurveFamily::product: return "product";
    case CurveFamily::segment: return "segment";
    case CurveFamily::warped_circle: return "warped_circle";
  }
  return "unknown";
}

CurveFamily curve_family_from_string(std::string_view name) {
  for (auto f : {CurveFamily::circle, CurveFamily::helix, CurveFamily::product,
                 CurveFamily::segment, CurveFamily::warped_circle}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown curve family '" + std::string(name) + "'");
}

/// Cumulative arc length of a raw parametrization over [0,1] and its inverse.
class ArcLengthMap {
 public:
  explicit ArcLengthMap(Curve raw) : raw_(std::move(raw)) {
    constexpr std::size_t panels = 128;
    breaks_.resize(panels + 1);
    cumulative_.resize(panels + 1);
    cumulative_[0] = 0.0;
    for (std::size_t k = 0; k <= panels; ++k) breaks_[k] = static_cast<double>(k) / panels;
    for (std::size_t k = 0; k < panels; ++k) {
      cumulative_[k + 1] = cumulative_[k] + integrate(breaks_[k], breaks_[k + 1]);
    }
    for (double s : breaks_) max_speed_ = std::max(max_speed_, raw_.speed(s));
  }

  double total() const { return cumulative_.back(); }
  double max_speed() const { return max_speed_; }
  const Curve& raw() const { return raw_; }

  /// Raw parameter s with arc length S(s) = t.
  double to_raw(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= total()) return 1.0;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
    const auto k = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    const double target = t - cumulative_[k];
    double lo = breaks_[k];
    double hi = breaks_[k + 1];
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
      const double f = integrate(breaks_[k], x) - target;
      if (f == 0.0) return x;
      if (f > 0.0) hi = x; else lo = x;
      const double v = raw_.speed(x);
      double next = v > 0.0 ? x - f / v : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) <= 1e-17 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) {
        return next;
      }
      x = next;
    }
    return x;
  }

 private:
  double integrate(double a, double b) const {
    if (b <= a) return 0.0;
    // The speed is analytic on each panel, so a fixed 30-point rule is at
    // machine precision there; adaptive refinement only burns evaluations.
    auto speed = [this](double s) { return raw_.speed(s); };
    return boost::math::quadrature::gauss<double, 30>::integrate(speed, a, b);
  }

  Curve raw_;
  std::vector<double> breaks_;
  std::vector<double> cumulative_;
  double max_speed_ = 0.0;
};

Curve Curve::circle(double radius) {
  if (!(radius > 0.0) || radius > 1.0 / (2.0 * kPi) + 1e-15) {
    throw Error(ErrorCode::RadiusOutOfRange, "circle radius must lie in (0, 1/(2 pi)]");
  }
  Curve c;
  c.family_ = CurveFamily::circle;
  c.dim_ = 2;
  c.params_ = {{"radius", radius}};
  c.length_ = 2.0 * kPi * radius;
  return c;
}

Curve Curve::helix(double radius, double winding, double pitch, double length) {
  if (radius * winding == 0.0) {
    throw Error(ErrorCode::NotUnitSpeed, "helix needs radius * winding != 0");
  }
  const double speed2 = radius * radius * winding * winding + pitch * pitch;
  if (std::abs(speed2 - 1.0) > kUnitSpeedTol) {
    throw Error(ErrorCode::NotUnitSpeed, "helix requires a^2 w^2 + b^2 = 1");
  }
  if (!(length > 0.0)) throw Error(ErrorCode::InvalidArgument, "helix length must be positive");
  Curve c;
  c.family_ = CurveFamily::helix;
  c.dim_ = 3;
  c.params_ = {{"radius", radius}, {"winding", winding}, {"pitch", pitch}, {"length", length}};
  c.length_ = length;
  return c;
}

Curve Curve::product(double base_radius) {
  if (!(base_radius > 0.0)) {
    throw Error(ErrorCode::RadiusOutOfRange, "product curve base radius must be positive");
  }
  Curve c;
  c.family_ = CurveFamily::product;
  c.dim_ = 3;
  c.params_ = {{"base_radius", base_radius}};
  c.length_ = 1.0;
  return c;
}

Curve Curve::segment(const Vec3& direction, double length, int dim, const Vec3& origin) {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (direction.norm() == 0.0) throw Error(ErrorCode::DegenerateSpeed, "segment direction is zero");
  if (dim == 2 && (direction.z() != 0.0 || origin.z() != 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "planar segment with a z component");
  }
  if (!(length > 0.0)) throw Error(ErrorCode::InvalidArgument, "segment length must be positive");
  Curve c;
  c.family_ = CurveFamily::segment;
  c.dim_ = dim;
  c.params_ = {{"dx", direction.x()}, {"dy", direction.y()}, {"dz", direction.z()},
               {"length", length},    {"x0", origin.x()},    {"y0", origin.y()},
               {"z0", origin.z()},    {"dim", static_cast<double>(dim)}};
  c.length_ = length;
  return c;
}

Curve Curve::warped_circle(double radius, double linear, double quadratic) {
  if (!(radius > 0.0)) throw Error(ErrorCode::RadiusOutOfRange, "radius must be positive");
  Curve c;
  c.family_ = CurveFamily::warped_circle;
  c.dim_ = 2;
  c.params_ = {{"radius", radius}, {"linear", linear}, {"quadratic", quadratic}};
  c.length_ = 1.0;
  c.unit_speed_ = false;
  return c;
}

Curve Curve::make(std::string_view family, const Params& given) {
  const auto fam = curve_family_from_string(family);
  Params p;
  switch (fam) {
    case CurveFamily::circle: p = {{"radius", 1.0 / (2.0 * kPi)}}; break;
    case CurveFamily::helix:
      p = {{"radius", 1.0 / (2.0 * kPi * std::numbers::sqrt2)},
           {"winding", 2.0 * kPi},
           {"pitch", 1.0 / std::numbers::sqrt2},
           {"length", 1.0}};
      break;
    case CurveFamily::product: p = {{"base_radius", 1.0 / (2.0 * kPi)}}; break;
    case CurveFamily::segment:
      p = {{"dx", 1.0}, {"dy", 0.0}, {"dz", 0.0}, {"length", 1.0},
           {"x0", 0.0}, {"y0", 0.0}, {"z0", 0.0}, {"dim", 2.0}};
      break;
    case CurveFamily::warped_circle:
      p = {{"radius", 1.0 / (2.0 * kPi)}, {"linear", 0.0}, {"quadratic", 1.0}};
      break;
  }
  for (const auto& [key, value] : given) {
    if (!p.contains(key)) {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown parameter '" + key + "' for curve family " + std::string(family));
    }
    p[key] = value;
  }
  switch (fam) {
    case CurveFamily::circle: return circle(p["radius"]);
    case CurveFamily::helix: return helix(p["radius"], p["winding"], p["pitch"], p["length"]);
    case CurveFamily::product: return product(p["base_radius"]);
    case CurveFamily::segment: {
      int dim = static_cast<int>(p["dim"]);
      if (p["dz"] != 0.0 || p["z0"] != 0.0) dim = 3;
      return segment(Vec3(p["dx"], p["dy"], p["dz"]), p["length"], dim,
                     Vec3(p["x0"], p["y0"], p["z0"]));
    }
    case CurveFamily::warped_circle:
      return warped_circle(p["radius"], p["linear"], p["quadratic"]);
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled curve family");
}

Curve Curve::default_for(int dim) {
  if (dim == 2) return circle(1.0 / (2.0 * kPi));
  if (dim == 3) {
    return helix(1.0 / (2.0 * kPi * std::numbers::sqrt2), 2.0 * kPi, 1.0 / std::numbers::sqrt2);
  }
  throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
}

Curve::RawJet Curve::raw_jet(double s) const {
  const auto j = family_jet<double>(family_, params_, s);
  return {j.d0, j.d1, j.d2, j.d3};
}

double Curve::raw_parameter(double t) const {
  return arclength_ ? arclength_->to_raw(t) : t;
}

CurveJet Curve::jet(double t) const {
  if (!arclength_) {
    const auto r = raw_jet(t);
    return {r.d0, r.d1, r.d2};
  }
  const double s = arclength_->to_raw(t);
  const Vec3 pos = raw_jet(s).d0;
  // Where the raw speed vanishes at an end of the parameter range the tangent
  // is taken from a point 1e-7 inside; the arc length moved is O(1e-14).
  double s_eval = s;
  if (raw_jet(s).d1.norm() < 1e-9 * arclength_->max_speed()) {
    s_eval = s < 0.5 ? s + 1e-7 : s - 1e-7;
  }
  const auto r = raw_jet(s_eval);
  const double v = r.d1.norm();
  const Vec3 u = r.d1 / v;
  const Vec3 acc = (r.d2 - u * u.dot(r.d2)) / (v * v);
  return {pos, u, acc};
}

double Curve::curvature(double t) const {
  double s = raw_parameter(t);
  auto r = raw_jet(s);
  if (arclength_ && r.d1.norm() < 1e-9 * arclength_->max_speed()) {
    r = raw_jet(s < 0.5 ? s + 1e-7 : s - 1e-7);
  }
  const double v = r.d1.norm();
  return r.d1.cross(r.d2).norm() / (v * v * v);
}

double Curve::torsion(double t) const {
  if (dim_ == 2) return 0.0;
  const auto r = raw_jet(raw_parameter(t));
  const Vec3 b = r.d1.cross(r.d2);
  const double denom = b.squaredNorm();
  if (denom < 1e-300) return 0.0;
  return b.dot(r.d3) / denom;
}

ComplexCurveJet Curve::complex_jet(std::complex<double> t) const {
  if (arclength_) {
    throw Error(ErrorCode::InvalidArgument,
                "complex extension is not available for reparametrized curves");
  }
  const auto j = family_jet<std::complex<double>>(family_, params_, t);
  return {j.d0, j.d1, j.d2};
}

Curve reparametrize_arclength(const Curve& curve) {
  if (curve.unit_speed()) return curve;

  // Interior zeros of the speed make the inverse map singular. Endpoint
  // zeros are integrable and allowed.
  constexpr std::size_t grid = 4096;
  std::vector<double> sp(grid + 1);
  double vmax = 0.0;
  for (std::size_t i = 0; i <= grid; ++i) {
    sp[i] = curve.speed(static_cast<double>(i) / grid);
    vmax = std::max(vmax, sp[i]);
  }
  if (vmax < 1e-12) throw Error(ErrorCode::DegenerateSpeed, "curve speed vanishes identically");
  for (std::size_t i = 1; i < grid; ++i) {
    if (sp[i] <= sp[i - 1] && sp[i] <= sp[i + 1]) {
      auto speed2 = [&curve](double s) {
        const double v = curve.speed(s);
        return v * v;
      };
      const auto [smin, v2] = boost::math::tools::brent_find_minima(
          speed2, static_cast<double>(i - 1) / grid, static_cast<double>(i + 1) / grid, 52);
      if (std::sqrt(v2) < 1e-12 && smin > 0.0 && smin < 1.0) {
        throw Error(ErrorCode::DegenerateSpeed,
                    "curve speed vanishes at interior parameter " + std::to_string(smin));
      }
    }
  }

  auto map = std::make_shared<const ArcLengthMap>(curve);
  Curve out = curve;
  out.length_ = map->total();
  out.unit_speed_ = true;
  out.arclength_ = std::move(map);
  return out;
}

Condition1Report validate_condition1(const Curve& curve, std::optional<NonconfinementQuery> query,
                                     std::size_t grid) {
  Condition1Report rep;
  rep.min_curvature = std::numeric_limits<double>::infinity();
  double min_tau = std::numeric_limits<double>::infinity();
  double max_tau = 0.0;
  const double len = curve.length();
  for (std::size_t i = 0; i <= grid; ++i) {
    const double t = len * static_cast<double>(i) / static_cast<double>(grid);
    const auto j = curve.jet(t);
    rep.unit_speed_err = std::max(rep.unit_speed_err, std::abs(j.velocity.norm() - 1.0));
    rep.min_curvature = std::min(rep.min_curvature, curve.curvature(t));
    if (curve.dim() == 3) {
      const double tau = std::abs(curve.torsion(t));
      min_tau = std::min(min_tau, tau);
      max_tau = std::max(max_tau, tau);
    }
  }
  if (curve.dim() == 3) {
    rep.min_torsion = min_tau;
    rep.planar = max_tau < 1e-10;
  }

  if (query) {
    const double window = query->c0 / query->lambda;
    const double radius = std::pow(query->n_points, -query->alpha) / query->lambda;
    const double w = std::min(window, len);
    constexpr int samples = 17;
    double margin = std::numeric_limits<double>::infinity();
    std::vector<double> starts;
    for (double a = 0.0; a < len - w; a += w / 4.0) starts.push_back(a);
    starts.push_back(std::max(0.0, len - w));
    std::vector<Vec3> pts(samples);
    for (double a : starts) {
      for (int k = 0; k < samples; ++k) pts[k] = curve.position(a + w * k / (samples - 1));
      double diam = 0.0;
      for (int p = 0; p < samples; ++p)
        for (int q = p + 1; q < samples; ++q) diam = std::max(diam, (pts[p] - pts[q]).norm());
      margin = std::min(margin, 0.5 * diam / radius);
    }
    rep.confinement_margin = margin;
    rep.ball_nonconfinement = margin > 1.0;
  }

  rep.passes = rep.unit_speed_err < 1e-9 && rep.min_curvature > 1e-9 &&
               (curve.dim() == 2 || rep.planar || min_tau > 1e-9) &&
               rep.ball_nonconfinement.value_or(true);
  return rep;
}

CurveSampler::CurveSampler(Curve curve, double nodes_per_unit) : curve_(std::move(curve)) {
  if (!curve_.unit_speed()) {
    throw Error(ErrorCode::NotUnitSpeed, "sampler requires an arc-length parametrized curve");
  }
  if (!(nodes_per_unit > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sampler resolution must be positive");
  }
  const double len = curve_.length();
  const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil(nodes_per_unit * len)));
  resolution_ = static_cast<double>(cells) / len;
  nodes_.resize(cells + 1);
  jets_.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    nodes_[i] = len * static_cast<double>(i) / static_cast<double>(cells);
    jets_[i] = curve_.jet(nodes_[i]);
  }
}

void to_json(nlohmann::json& j, const Curve& curve) {
  j = nlohmann::json{{"family", std::string(to_string(curve.family()))},
                     {"params", curve.params()},
                     {"arclength", curve.reparametrized()}};
}

Curve curve_from_json(const nlohmann::json& j) {
  try {
    const auto family = j.at("family").get<std::string>();
    Curve::Params params;
    if (j.contains("params")) params = j.at("params").get<Curve::Params>();
    Curve c = Curve::make(family, params);
    if (j.value("arclength", false)) c = reparametrize_arclength(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IOFailure, std::string("malformed curve JSON: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const Condition1Report& r) {
  j = nlohmann::json{{"unit_speed_err", r.unit_speed_err},
                     {"min_curvature", r.min_curvature},
                     {"planar", r.planar},
                     {"passes", r.passes}};
  j["min_torsion"] = r.min_torsion ? nlohmann::json(*r.min_torsion) : nlohmann::json(nullptr);
  j["ball_nonconfinement"] =
      r.ball_nonconfinement ? nlohmann::json(*r.ball_nonconfinement) : nlohmann::json(nullptr);
  j["confinement_margin"] =
      r.confinement_margin ? nlohmann::json(*r.confinement_margin) : nlohmann::json(nullptr);
}

}  // namespace torus_waves
