#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "torus_waves/errors.hpp"
#include "torus_waves/harness.hpp"
#include "torus_waves/kacrice.hpp"

using namespace torus_waves;
using std::numbers::pi;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

// Lattice-sum covariance written out directly: E F(x)F(y) = (1/N) sum_mu cos(2 pi <mu, x - y>).
double oracle_r(const LatticeSet& l, const Vec3& x, const Vec3& y) {
  double acc = 0.0;
  for (const auto& p : l.points()) acc += std::cos(2.0 * pi * (p[0] * (x - y).x() + p[1] * (x - y).y() + p[2] * (x - y).z()));
  return acc / static_cast<double>(l.size());
}

}  // namespace

TEST_CASE("predicted means") {
  CHECK(predict_mean(2, 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(predict_mean(3, 3) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(predict_mean(2, 65) == doctest::Approx(11.4018).epsilon(1e-5));
  CHECK(predict_mean(2, 65) == doctest::Approx(std::sqrt(130.0)).epsilon(1e-15));
  for (int d : {2, 3})
    for (std::int64_t m : {1, 2, 3, 5, 6, 25, 65, 325, 1000001}) {
      if (excluded_level(d, m)) continue;
      const double mu = predict_mean(d, m);
      CHECK(std::abs(mu * mu * d / 4.0 - static_cast<double>(m)) <= 1e-12 * static_cast<double>(m));
    }
  CHECK(code_of([] { predict_mean(3, 7); }) == ErrorCode::InvalidLevel);
  CHECK(code_of([] { predict_mean(2, 0); }) == ErrorCode::InvalidLevel);
  CHECK(code_of([] { predict_mean(4, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("first intensity") {
  CHECK(first_intensity(2, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(first_intensity(3, 3) == doctest::Approx(2.0).epsilon(1e-15));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> um(1, 100000);
  for (int i = 0; i < 20; ++i) {
    const int d = i % 2 ? 3 : 2;
    std::int64_t m = um(rng);
    while (excluded_level(d, m)) ++m;
    CHECK(first_intensity(d, m) == doctest::Approx(predict_mean(d, m)).epsilon(1e-14));
  }
}

TEST_CASE("prediction record") {
  const auto p = predict(enumerate_lattice(2, 65));
  CHECK(p.N == 16);
  CHECK(p.mean == doctest::Approx(std::sqrt(130.0)));
  CHECK(p.alpha == doctest::Approx(4.0 * pi * pi * 65.0 / 2.0));
  REQUIRE(p.tau4.has_value());
  CHECK(*p.tau4 == doctest::Approx(fourth_fourier(enumerate_lattice(2, 65))));
  CHECK_FALSE(predict(enumerate_lattice(3, 3)).tau4.has_value());
  const auto back = kacrice_prediction_from_json(nlohmann::json(p));
  CHECK(back.mean == p.mean);
  CHECK(back.N == p.N);
  CHECK(back.tau4 == p.tau4);
}

TEST_CASE("variance integral converges on the circle") {
  const auto l = enumerate_lattice(2, 5);
  const auto v128 = variance_integral(l, Curve::default_for(2), 128);
  const auto v256 = variance_integral(l, Curve::default_for(2), 256);
  CHECK(std::abs(v128.value - v256.value) < 1e-6 * std::abs(v256.value));
  CHECK(std::isfinite(v128.value));
  CHECK(v128.integrand_min <= v128.integrand_max);
  CHECK(code_of([&] { variance_integral(l, Curve::default_for(2), 32); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { variance_integral(enumerate_lattice(3, 3), Curve::default_for(3)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("variance integral for a single direction along a segment") {
  for (std::int64_t k : {1, 3}) {
    const auto l = LatticeSet::from_points(2, k * k, {{k, 0, 0}, {-k, 0, 0}});
    for (double theta : {0.0, 0.4, 1.1}) {
      const double len = 0.7;
      const Curve seg = Curve::segment(Vec3(std::cos(theta), std::sin(theta), 0), len);
      const auto v = variance_integral(l, seg, 64);
      const double c4 = std::pow(std::cos(theta), 4);
      const double expect = (static_cast<double>(k * k) / 2.0) * 4.0 * (c4 - 1.0) * len * len;
      CHECK(v.value == doctest::Approx(expect).epsilon(1e-12));
      CHECK(v.integrand_min == doctest::Approx(v.integrand_max).epsilon(1e-12));
    }
  }
}

TEST_CASE("covariance matrix") {
  const auto l = enumerate_lattice(2, 65);
  const Curve c = Curve::default_for(2);
  const double alpha = 4.0 * pi * pi * 65.0 / 2.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double t1 = u(rng), t2 = u(rng);
    const Eigen::Matrix4d S = covariance_matrix(l, c, t1, t2);
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(S);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * alpha);
    CHECK(S(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(S(0, 2)) <= 1e-10 * std::sqrt(alpha));
    CHECK(S(2, 2) == doctest::Approx(alpha).epsilon(1e-10));
    CHECK(S(0, 1) == doctest::Approx(oracle_r(l, c.position(t1), c.position(t2))).epsilon(1e-10));
    // Cross entry E F(t1) F'(t2) against a numerical derivative of r.
    const double h = 1e-6;
    const double dr = (oracle_r(l, c.position(t1), c.position(t2 + h)) -
                       oracle_r(l, c.position(t1), c.position(t2 - h))) / (2.0 * h);
    CHECK(S(0, 3) == doctest::Approx(dr).epsilon(1e-6).scale(std::sqrt(alpha)));
  }
}

TEST_CASE("second intensity symmetry and consistency") {
  const auto l = enumerate_lattice(2, 65);
  const Curve c = Curve::default_for(2);
  for (auto [t1, t2] : {std::pair{0.1, 0.37}, {0.2, 0.9}, {0.05, 0.55}}) {
    const double a = second_intensity(l, c, t1, t2);
    const double b = second_intensity(l, c, t2, t1);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    const auto det = second_intensity_detail(l, c, t1, t2);
    CHECK(det.value == doctest::Approx(det.density * expected_abs_product(det.sigma1, det.sigma2, det.rho))
                           .epsilon(1e-14));
    CHECK(det.min_eigenvalue > 1e-10);
    CHECK(std::abs(det.rho) <= 1.0);
  }
}

TEST_CASE("independence limit") {
  // m = 5 * 13 * 17 * 29 * 37 has 128 points. Pick separated pairs whose
  // normalized cross covariances are all below 0.05; there K2 should be close to K1^2.
  const std::int64_t m = 1185665;
  const auto l = enumerate_lattice(2, m);
  const Curve c = Curve::default_for(2);
  const double k1 = first_intensity(2, m);
  const double sa = std::sqrt(4.0 * pi * pi * static_cast<double>(m) / 2.0);
  int used = 0;
  for (int i = 0; i < 200; ++i) {
    const double t1 = 0.5 * i / 200.0, t2 = t1 + 0.25 + 0.25 * ((i * 37) % 200) / 200.0;
    const auto S = covariance_matrix(l, c, t1, t2);
    const double worst = std::max({std::abs(S(0, 1)), std::abs(S(0, 3)) / sa, std::abs(S(1, 2)) / sa,
                                   std::abs(S(2, 3)) / (sa * sa)});
    if (worst >= 0.05) continue;
    ++used;
    CHECK(second_intensity(l, c, t1, t2) == doctest::Approx(k1 * k1).epsilon(0.05));
  }
  CHECK(used >= 3);
}

TEST_CASE("expected absolute product") {
  for (double s1 : {0.5, 1.0, 3.0})
    for (double s2 : {0.2, 2.0}) CHECK(expected_abs_product(s1, s2, 0.0) == doctest::Approx(2.0 / pi * s1 * s2));
  CHECK(expected_abs_product(1.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(expected_abs_product(1.0, 1.0, -1.0) == doctest::Approx(1.0));
  // Monte Carlo oracle at rho = 0.6.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  const double rho = 0.6;
  double acc = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = z(rng), y = rho * x + std::sqrt(1 - rho * rho) * z(rng);
    acc += std::abs(2.0 * x * 0.5 * y);
  }
  CHECK(expected_abs_product(2.0, 0.5, rho) == doctest::Approx(acc / n).epsilon(0.01));
}

TEST_CASE("singular and diagonal cells") {
  const auto pair = LatticeSet::from_points(2, 1, {{1, 0, 0}, {-1, 0, 0}});
  CHECK(code_of([&] { second_intensity(pair, Curve::default_for(2), 0.1, 0.3); }) == ErrorCode::SingularCell);
  const auto l = enumerate_lattice(2, 65);
  CHECK(code_of([&] { second_intensity(l, Curve::default_for(2), 0.3, 0.3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("prediction JSON") {
  KacRicePrediction p = predict(enumerate_lattice(2, 5));
  p.variance_leading = variance_integral(enumerate_lattice(2, 5), Curve::default_for(2)).value;
  const nlohmann::json j = p;
  CHECK(j.at("mean").get<double>() == doctest::Approx(std::sqrt(10.0)));
  CHECK(kacrice_prediction_from_json(j).variance_leading == p.variance_leading);
}

TEST_CASE("Kac-Rice variance agrees with simulated counts") {
  // Oracle: Monte Carlo sample variance with standard error sqrt((mu4 - var^2) / n).
  for (auto [d, m] : {std::pair{2, std::int64_t{5}}, {2, std::int64_t{65}}, {3, std::int64_t{3}}}) {
    const auto l = enumerate_lattice(d, m);
    const KacRiceVariance kv = kac_rice_variance(l, Curve::default_for(d));
    CHECK(kv.mean == doctest::Approx(predict_mean(d, m)));
    CHECK(kv.excluded_measure < 0.05);
    CHECK(kv.change <= 1e-2 * kv.value);
    RunConfig cfg;
    cfg.d = d;
    cfg.m = m;
    cfg.curve = Curve::default_for(d);
    cfg.trials = 4000;
    cfg.master_seed = 404;
    const MCReport r = run_trials(cfg);
    const double n = static_cast<double>(r.counts.size());
    const double se = std::sqrt((r.central_moments[3] - r.variance * r.variance) / n);
    CHECK(std::abs(r.variance - kv.value) <= 4.0 * se + kv.change);
  }
}

TEST_CASE("Kac-Rice variance preconditions") {
  const auto l = enumerate_lattice(2, 5);
  CHECK(code_of([&] { kac_rice_variance(l, Curve::default_for(3)); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { kac_rice_variance(l, Curve::warped_circle(0.1, 1.0, 0.2)); }) == ErrorCode::NotUnitSpeed);
  CHECK(code_of([&] { kac_rice_variance(l, Curve::default_for(2), 16); }) == ErrorCode::InvalidArgument);
  // A two-point lattice has a rank-two covariance everywhere: all cells are excluded.
  const auto pair = LatticeSet::from_points(2, 1, {{1, 0, 0}, {-1, 0, 0}});
  const KacRiceVariance kv = kac_rice_variance(pair, Curve::segment(Vec3(1, 0, 0)), 64, 1.0);
  CHECK(kv.second_moment == 0.0);
  CHECK(kv.excluded_measure == doctest::Approx(1.0));
  const nlohmann::json j = kv;
  CHECK(j.contains("excluded_measure"));
}
