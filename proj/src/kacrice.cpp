#include "torus_waves/kacrice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <Eigen/Dense>

#include "torus_waves/errors.hpp"

namespace torus_waves {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSingular = 1e-10;

void check_level(int d, std::int64_t m) {
  if (d != 2 && d != 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (m <= 0 || excluded_level(d, m)) {
    throw Error(ErrorCode::InvalidLevel, "level " + std::to_string(m) + " is not admissible");
  }
}

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite 8-point Gauss-Legendre on [0, len] with at least n nodes.
Rule composite_rule(double len, std::size_t n) {
  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  const std::size_t panels = (n + 7) / 8;
  const double h = len / static_cast<double>(panels);
  Rule r;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * h;
    for (std::size_t k = 0; k < x.size(); ++k) {
      r.nodes.push_back(mid - 0.5 * h * x[k]);
      r.weights.push_back(0.5 * h * w[k]);
      r.nodes.push_back(mid + 0.5 * h * x[k]);
      r.weights.push_back(0.5 * h * w[k]);
    }
  }
  return r;
}

struct Tensor {
  double value;
  double lo;
  double hi;
};

Tensor integrate(const LatticeSet& lattice, const Curve& curve, std::size_t n) {
  const Rule rule = composite_rule(curve.length(), n);
  const auto pts = lattice.points();
  const double N = static_cast<double>(pts.size());
  const double m = static_cast<double>(lattice.level());
  const double root_m = std::sqrt(m);
  // a(i, mu) = <mu/|mu|, g'(t_i)>^2
  Eigen::MatrixXd a(rule.nodes.size(), pts.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Vec3 v = curve.jet(rule.nodes[i]).velocity;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double p = (pts[k][0] * v.x() + pts[k][1] * v.y() + pts[k][2] * v.z()) / root_m;
      a(i, k) = p * p;
    }
  }
  const Eigen::MatrixXd inner = (a * a.transpose()) / N;
  const Eigen::ArrayXXd integrand = (m / N) * 4.0 * (inner.array() - 1.0);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), rule.weights.size());
  return {w.dot(integrand.matrix() * w), integrand.minCoeff(), integrand.maxCoeff()};
}

}  // namespace

double predict_mean(int d, std::int64_t m) {
  check_level(d, m);
  return 2.0 / std::sqrt(static_cast<double>(d)) * std::sqrt(static_cast<double>(m));
}

double first_intensity(int d, std::int64_t m) {
  check_level(d, m);
  const double alpha = 4.0 * kPi * kPi * static_cast<double>(m) / d;
  return std::sqrt(alpha) / kPi;
}

KacRicePrediction predict(const LatticeSet& lattice) {
  KacRicePrediction p;
  p.d = lattice.dim();
  p.m = lattice.level();
  p.N = lattice.size();
  p.mean = predict_mean(p.d, p.m);
  p.alpha = 4.0 * kPi * kPi * static_cast<double>(p.m) / p.d;
  if (p.d == 2 && !lattice.empty()) p.tau4 = fourth_fourier(lattice);
  return p;
}

VarianceIntegral variance_integral(const LatticeSet& lattice, const Curve& curve,
                                   std::size_t quad_nodes) {
  if (lattice.dim() != 2 || curve.dim() != 2) {
    throw Error(ErrorCode::InvalidArgument, "variance integral is implemented for d = 2");
  }
  if (quad_nodes < 64) throw Error(ErrorCode::InvalidArgument, "quad_nodes must be at least 64");
  if (lattice.empty()) throw Error(ErrorCode::InvalidArgument, "empty lattice");
  if (!curve.unit_speed()) throw Error(ErrorCode::NotUnitSpeed, "variance integral needs a unit-speed curve");
  const Tensor coarse = integrate(lattice, curve, quad_nodes);
  const Tensor fine = integrate(lattice, curve, 2 * quad_nodes);
  VarianceIntegral out;
  out.value = fine.value;
  out.nodes = 2 * ((quad_nodes + 7) / 8) * 8;
  out.change = std::abs(fine.value - coarse.value);
  out.integrand_min = fine.lo;
  out.integrand_max = fine.hi;
  if (out.change > 1e-6 * std::abs(fine.value) && out.change > 1e-300) {
    throw Error(ErrorCode::QuadratureUnconverged,
                "variance integral changed by " + std::to_string(out.change) + " on node doubling");
  }
  return out;
}

Eigen::Matrix4d covariance_matrix(const LatticeSet& lattice, const Curve& curve, double t1,
                                  double t2) {
  if (lattice.empty()) throw Error(ErrorCode::InvalidArgument, "empty lattice");
  const CurveJet j1 = curve.jet(t1);
  const CurveJet j2 = curve.jet(t2);
  const auto reps = lattice.representatives();
  const double scale = std::sqrt(2.0 / static_cast<double>(lattice.size()));
  // Rows: F(t1), F(t2), F'(t1), F'(t2); columns: (eps1, eps2) per representative.
  Eigen::Matrix<double, 4, Eigen::Dynamic> a(4, 2 * reps.size());
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const Vec3 mu(static_cast<double>(reps[k][0]), static_cast<double>(reps[k][1]),
                  static_cast<double>(reps[k][2]));
    const double p1 = 2.0 * kPi * mu.dot(j1.position);
    const double p2 = 2.0 * kPi * mu.dot(j2.position);
    const double w1 = 2.0 * kPi * mu.dot(j1.velocity);
    const double w2 = 2.0 * kPi * mu.dot(j2.velocity);
    a.col(2 * k) << std::cos(p1), std::cos(p2), -w1 * std::sin(p1), -w2 * std::sin(p2);
    a.col(2 * k + 1) << std::sin(p1), std::sin(p2), w1 * std::cos(p1), w2 * std::cos(p2);
  }
  a *= scale;
  return a * a.transpose();
}

double expected_abs_product(double s1, double s2, double rho) {
  if (s1 < 0.0 || s2 < 0.0 || !(std::abs(rho) <= 1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "invalid bivariate normal parameters");
  }
  rho = std::clamp(rho, -1.0, 1.0);
  return 2.0 * s1 * s2 / kPi * (rho * std::asin(rho) + std::sqrt(1.0 - rho * rho));
}

namespace {

// Second intensity from a covariance; nullopt for a singular cell.
std::optional<SecondIntensity> intensity_from(const Eigen::Matrix4d& sigma) {
  SecondIntensity out;
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(sigma, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .minCoeff();
  if (out.min_eigenvalue <= kSingular) return std::nullopt;
  const Eigen::Matrix2d s11 = sigma.topLeftCorner<2, 2>();
  const Eigen::Matrix2d s12 = sigma.topRightCorner<2, 2>();
  const Eigen::Matrix2d s22 = sigma.bottomRightCorner<2, 2>();
  const Eigen::Matrix2d cond = s22 - s12.transpose() * s11.inverse() * s12;
  out.density = 1.0 / (2.0 * kPi * std::sqrt(s11.determinant()));
  out.sigma1 = std::sqrt(cond(0, 0));
  out.sigma2 = std::sqrt(cond(1, 1));
  out.rho = std::clamp(cond(0, 1) / (out.sigma1 * out.sigma2), -1.0, 1.0);
  out.value = out.density * expected_abs_product(out.sigma1, out.sigma2, out.rho);
  return out;
}

struct KrPass {
  double second_moment = 0.0;
  double excluded = 0.0;
  std::size_t nodes = 0;
};

KrPass integrate_k2(const LatticeSet& lattice, const Curve& curve, std::size_t n) {
  const Rule rule = composite_rule(curve.length(), n);
  const std::size_t size = rule.nodes.size();
  KrPass p;
  p.nodes = size;
  // K2 is symmetric: upper triangle twice, the diagonal is excluded.
  for (std::size_t i = 0; i < size; ++i) {
    p.excluded += rule.weights[i] * rule.weights[i];
    for (std::size_t j = i + 1; j < size; ++j) {
      const double w = 2.0 * rule.weights[i] * rule.weights[j];
      const auto k2 = intensity_from(covariance_matrix(lattice, curve, rule.nodes[i], rule.nodes[j]));
      if (k2) p.second_moment += w * k2->value; else p.excluded += w;
    }
  }
  return p;
}

}  // namespace

SecondIntensity second_intensity_detail(const LatticeSet& lattice, const Curve& curve, double t1,
                                        double t2) {
  if (t1 == t2) throw Error(ErrorCode::InvalidArgument, "second intensity needs t1 != t2");
  const auto out = intensity_from(covariance_matrix(lattice, curve, t1, t2));
  if (!out) throw Error(ErrorCode::SingularCell, "covariance is singular at this cell");
  return *out;
}

KacRiceVariance kac_rice_variance(const LatticeSet& lattice, const Curve& curve,
                                  std::size_t quad_nodes, double rel_tol) {
  if (lattice.empty()) throw Error(ErrorCode::InvalidArgument, "empty lattice");
  if (curve.dim() != lattice.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (!curve.unit_speed()) throw Error(ErrorCode::NotUnitSpeed, "Kac-Rice variance needs a unit-speed curve");
  if (quad_nodes == 0) {
    quad_nodes = std::max<std::size_t>(256, static_cast<std::size_t>(std::ceil(16.0 * lattice.lambda() * curve.length())));
  }
  if (quad_nodes < 64) throw Error(ErrorCode::InvalidArgument, "quad_nodes must be at least 64");
  const double mean = first_intensity(lattice.dim(), lattice.level()) * curve.length();
  const KrPass coarse = integrate_k2(lattice, curve, quad_nodes);
  const KrPass fine = integrate_k2(lattice, curve, 2 * quad_nodes);
  KacRiceVariance out;
  out.mean = mean;
  out.second_moment = fine.second_moment;
  out.value = mean + fine.second_moment - mean * mean;
  out.excluded_measure = fine.excluded;
  out.nodes = fine.nodes;
  out.change = std::abs(fine.second_moment - coarse.second_moment);
  if (out.change > rel_tol * std::abs(out.value)) {
    throw Error(ErrorCode::QuadratureUnconverged,
                "Kac-Rice variance changed by " + std::to_string(out.change) + " on node doubling");
  }
  return out;
}

double second_intensity(const LatticeSet& lattice, const Curve& curve, double t1, double t2) {
  return second_intensity_detail(lattice, curve, t1, t2).value;
}

void to_json(nlohmann::json& j, const KacRicePrediction& p) {
  j = nlohmann::json{{"d", p.d}, {"m", p.m}, {"N", p.N}, {"mean", p.mean}, {"alpha", p.alpha}};
  j["tau4"] = p.tau4 ? nlohmann::json(*p.tau4) : nlohmann::json(nullptr);
  j["variance_leading"] =
      p.variance_leading ? nlohmann::json(*p.variance_leading) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const VarianceIntegral& v) {
  j = nlohmann::json{{"value", v.value},
                     {"nodes", v.nodes},
                     {"change", v.change},
                     {"integrand_min", v.integrand_min},
                     {"integrand_max", v.integrand_max}};
}

void to_json(nlohmann::json& j, const KacRiceVariance& v) {
  j = nlohmann::json{{"value", v.value},
                     {"mean", v.mean},
                     {"second_moment", v.second_moment},
                     {"excluded_measure", v.excluded_measure},
                     {"nodes", v.nodes},
                     {"change", v.change}};
}

KacRicePrediction kacrice_prediction_from_json(const nlohmann::json& j) {
  KacRicePrediction p;
  p.d = j.at("d").get<int>();
  p.m = j.at("m").get<std::int64_t>();
  p.N = j.at("N").get<std::size_t>();
  p.mean = j.at("mean").get<double>();
  p.alpha = j.at("alpha").get<double>();
  if (j.contains("tau4") && !j.at("tau4").is_null()) p.tau4 = j.at("tau4").get<double>();
  if (j.contains("variance_leading") && !j.at("variance_leading").is_null()) {
    p.variance_leading = j.at("variance_leading").get<double>();
  }
  return p;
}

}  // namespace torus_waves
