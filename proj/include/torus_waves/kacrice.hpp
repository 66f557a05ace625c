#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "json.hpp"
#include "torus_waves/geometry.hpp"
#include "torus_waves/lattice.hpp"

namespace torus_waves {

/// Gaussian predictions for the zero count of F along a unit-length curve.
struct KacRicePrediction {
  int d = 2;
  std::int64_t m = 0;
  std::size_t N = 0;
  double mean = 0.0;
  /// Variance of F', 4 pi^2 m / d.
  double alpha = 0.0;
  /// Planar lattices only.
  std::optional<double> tau4;
  /// Literal variance integral, when requested.
  std::optional<double> variance_leading;
};

/// (2/sqrt(d)) sqrt(m). Throws InvalidArgument / InvalidLevel for an
/// unsupported (d, m).
double predict_mean(int d, std::int64_t m);

/// K1 = sqrt(alpha)/pi, constant along a unit-speed curve.
double first_intensity(int d, std::int64_t m);

KacRicePrediction predict(const LatticeSet& lattice);

struct VarianceIntegral {
  double value = 0.0;
  /// Nodes per axis of the finer grid.
  std::size_t nodes = 0;
  /// |I(n) - I(2n)|.
  double change = 0.0;
  double integrand_min = 0.0;
  double integrand_max = 0.0;
};

/// (m/N) int int 4[(1/N) sum_mu <mu^, g'(t1)>^2 <mu^, g'(t2)>^2 - 1] dt1 dt2
/// over the curve domain, with the sum over mu taken inside the bracket.
/// Composite 8-point Gauss-Legendre per axis; quad_nodes >= 64. Throws
/// QuadratureUnconverged when doubling the nodes changes the value by more
/// than 1e-6 relative.
VarianceIntegral variance_integral(const LatticeSet& lattice, const Curve& curve,
                                   std::size_t quad_nodes = 128);

/// Covariance of (F(t1), F(t2), F'(t1), F'(t2)) for unit-variance
/// coefficients.
Eigen::Matrix4d covariance_matrix(const LatticeSet& lattice, const Curve& curve, double t1,
                                  double t2);

/// E|XY| for a centred bivariate normal with standard deviations s1, s2 and
/// correlation rho.
double expected_abs_product(double s1, double s2, double rho);

struct SecondIntensity {
  double value = 0.0;
  double density = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;
  double min_eigenvalue = 0.0;
};

/// Density of (F(t1), F(t2)) at the origin times E(|F'(t1) F'(t2)| | F(t1) = F(t2) = 0).
/// Throws SingularCell when the covariance has an eigenvalue <= 1e-10 and
/// InvalidArgument for t1 == t2.
SecondIntensity second_intensity_detail(const LatticeSet& lattice, const Curve& curve, double t1,
                                        double t2);
double second_intensity(const LatticeSet& lattice, const Curve& curve, double t1, double t2);

/// Gaussian variance of the zero count, E Z + int int K2 - (E Z)^2, with K2
/// integrated on a composite Gauss-Legendre tensor grid. Node pairs on the
/// diagonal or with a singular covariance are skipped and their weight is
/// reported as excluded measure.
struct KacRiceVariance {
  double value = 0.0;
  double mean = 0.0;
  /// int int K2 over the non-excluded node pairs.
  double second_moment = 0.0;
  double excluded_measure = 0.0;
  /// Nodes per axis of the finer grid.
  std::size_t nodes = 0;
  /// |V(n) - V(2n)|.
  double change = 0.0;
};

/// quad_nodes = 0 picks max(256, 16 lambda L). Throws QuadratureUnconverged
/// when doubling the nodes moves the variance by more than rel_tol relative;
/// the diagonal kink of K2 limits the convergence rate, hence the loose default.
KacRiceVariance kac_rice_variance(const LatticeSet& lattice, const Curve& curve,
                                  std::size_t quad_nodes = 0, double rel_tol = 1e-2);

void to_json(nlohmann::json& j, const KacRicePrediction& p);
void to_json(nlohmann::json& j, const VarianceIntegral& v);
void to_json(nlohmann::json& j, const KacRiceVariance& v);
KacRicePrediction kacrice_prediction_from_json(const nlohmann::json& j);

}  // namespace torus_waves
