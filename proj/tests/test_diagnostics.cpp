#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "torus_waves/diagnostics.hpp"
#include "torus_waves/errors.hpp"
#include "torus_waves/zeros.hpp"

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

}  // namespace

TEST_CASE("cover counts") {
  CHECK(min_cover_count({0.1, 0.2, 0.9}, 0.15) == 2);
  CHECK(min_cover_count({0.4}, 1e-9) == 1);
  CHECK(min_cover_count({}, 0.5) == 0);
  CHECK(min_cover_count({0.0, 0.5, 1.0}, 0.5) == 2);  // closed intervals
  CHECK(code_of([] { min_cover_count({1.0}, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("greedy cover equals the exhaustive minimum") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> un(1, 12);
  std::uniform_real_distribution<double> uv(0.0, 1.0), ul(0.01, 0.4);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> v(static_cast<std::size_t>(un(rng)));
    for (auto& x : v) x = uv(rng);
    const double len = ul(rng);
    CHECK(min_cover_count(v, len) == oracle::exhaustive_cover(v, len));
  }
}

TEST_CASE("cover report on level 5") {
  const auto r = check_assumption_equi(enumerate_lattice(2, 5), 360, 0.1);
  CHECK(r.counts.size() == 360);
  for (auto c : r.counts) CHECK(c >= 1);
  CHECK(r.radius == doctest::Approx(1.0 / (2.0 * pi * 2.0 * pi * std::sqrt(5.0))));
  CHECK(r.threshold == doctest::Approx(std::pow(8.0, 0.1)));
  CHECK(r.passes == (static_cast<double>(r.min_count) >= r.threshold));
  // r -> -r: direction k and k + 180 give the same count.
  for (std::size_t k = 0; k < 180; ++k) CHECK(r.counts[k] == r.counts[k + 180]);
}

TEST_CASE("two-point fixture gives one or two intervals") {
  const auto pair = LatticeSet::from_points(2, 1, {{1, 0, 0}, {-1, 0, 0}});
  // Projections are +-R cos(theta); cover length 1/2. With R = 1 they need two
  // intervals when 2 |cos theta| > 1/2.
  const auto r = check_assumption_equi(pair, 8, 0.1, 1.0);
  for (std::size_t k = 0; k < 8; ++k) {
    const double spread = 2.0 * std::abs(std::cos(2.0 * pi * k / 8.0));
    CHECK(r.counts[k] == (spread > 0.5 ? 2u : 1u));
  }
  CHECK(r.min_count == 1);
  CHECK(*std::max_element(r.counts.begin(), r.counts.end()) == 2);
  CHECK(code_of([&] { check_assumption_equi(enumerate_lattice(3, 3), 8, 0.1); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("discrepancy examples") {
  CHECK(discrepancy({0.0, 0.25, 0.5, 0.75}) == doctest::Approx(1.0));
  CHECK(discrepancy({0.3}) == doctest::Approx(1.0));
  CHECK(discrepancy({0.2, 0.2, 0.2, 0.2, 0.2}) == doctest::Approx(5.0));
  CHECK(code_of([] { discrepancy({}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("discrepancy matches the brute-force arc scan") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> un(1, 15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(static_cast<std::size_t>(un(rng)));
    for (auto& x : a) x = u(rng);
    if (i % 3 == 0 && a.size() > 2) a[1] = a[0];  // repeated angle
    CHECK(discrepancy(a) == doctest::Approx(oracle::brute_discrepancy(a)).epsilon(1e-12));
  }
  for (std::int64_t m : {5, 25, 65, 325, 1105}) {
    const auto a = angles(enumerate_lattice(2, m));
    CHECK(discrepancy(a) == doctest::Approx(oracle::brute_discrepancy(a)).epsilon(1e-12));
  }
}

TEST_CASE("discrepancy is rotation invariant and bounded") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> a(10);
    for (auto& x : a) x = u(rng);
    const double base = discrepancy(a);
    CHECK(base >= 0.0);
    CHECK(base <= 10.0);
    for (int s = 0; s < 10; ++s) {
      const double shift = u(rng);
      std::vector<double> b(a);
      for (auto& x : b) x += shift;
      CHECK(std::abs(discrepancy(b) - base) <= 1e-9);
    }
  }
}

TEST_CASE("assumption ratios") {
  const auto l5 = enumerate_lattice(2, 5);
  const auto r = assumption21_ratios(l5, Curve::default_for(2));
  CHECK(r.delocalization <= std::sqrt(2.0 / 8.0) * (1.0 + 1e-9));
  CHECK(r.delocalization > 0.0);
  CHECK(std::isfinite(r.derivative_growth_first));
  // In the scaled variable, sum <mu, g'>^2 / lambda^2 averages |mu|^2 / (2 lambda^2) * 4 pi^2 = 1/2 per pair.
  CHECK(r.derivative_growth_first <= 1.0 + 1e-9);
  CHECK(r.derivative_growth_second > 0.0);
  CHECK(r.complex_disk);

  const auto pair = LatticeSet::from_points(2, 1, {{1, 0, 0}, {-1, 0, 0}});
  // Along a segment from the origin the single cosine hits |f| = sqrt(sum f^2) at t = 0.
  CHECK(assumption21_ratios(pair, Curve::segment(Vec3(1, 0, 0))).delocalization == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(code_of([&] { assumption21_ratios(l5, Curve::default_for(2), 10); }) == ErrorCode::InvalidArgument);
  const auto l3 = enumerate_lattice(3, 3);
  const auto r3 = assumption21_ratios(l3, Curve::default_for(3));
  CHECK(r3.delocalization <= std::sqrt(2.0 / l3.size()) * (1.0 + 1e-9));
}

TEST_CASE("GAP probe examples") {
  GapSpec real_line{{0.0, 0.0}, {{0.5, 0.0}}, {10}};
  CHECK(gap_circle_probe(real_line, 0.5, 1e-3) <= 2);
  CHECK(gap_circle_probe(real_line, 0.5, 1e-3) == 2);  // n = +-2 gives +-1

  GapSpec generic{{0.1, 0.0}, {{std::sqrt(2.0) / 7.0, std::sqrt(3.0) / 11.0}}, {30}};
  CHECK(gap_circle_probe(generic, 0.3, 0.0) <= 2);

  // Rank one rotation fixture: g0 = 1, g1 = e^{2 pi i/M} - 1 puts 1 + n g1 on a
  // chord; with eps covering the chord sag, brute force counts the survivors.
  const int M = 12;
  const std::complex<double> g1 = std::polar(1.0, 2.0 * pi / M) - 1.0;
  GapSpec rot{{1.0, 0.0}, {g1}, {3}};
  const auto args = oracle::gap_circle_args(rot.offset, rot.generators, rot.dims, 0.01);
  const double delta = 2.0 * pi / (2.0 * M);
  CHECK(gap_circle_probe(rot, delta, 0.01) ==
        oracle::exhaustive_separated(args, 2.0 * std::asin(delta / 2.0)));
}

TEST_CASE("GAP probe equals the exhaustive separated subset") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ud(0.05, 0.9);
  int nontrivial = 0;
  for (int i = 0; i < 300; ++i) {
    GapSpec g;
    g.offset = {u(rng), u(rng)};
    const int rank = 1 + i % 2;
    for (int k = 0; k < rank; ++k) {
      g.generators.push_back({0.4 * u(rng), 0.4 * u(rng)});
      g.dims.push_back(rank == 1 ? 6 : 3);
    }
    const double delta = ud(rng);
    const double eps = std::min(0.2, delta * 0.9);
    const auto args = oracle::gap_circle_args(g.offset, g.generators, g.dims, eps);
    if (args.size() > 18) continue;
    if (args.size() > 2) ++nontrivial;
    CHECK(gap_circle_probe(g, delta, eps) == oracle::exhaustive_separated(args, 2.0 * std::asin(delta / 2.0)));
  }
  CHECK(nontrivial > 20);
}

TEST_CASE("GAP probe monotonicity") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    GapSpec g{{u(rng), u(rng)}, {{0.3 * u(rng), 0.3 * u(rng)}, {0.3 * u(rng), 0.3 * u(rng)}}, {5, 5}};
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double delta : {0.1, 0.2, 0.4, 0.8}) {
      const auto s = gap_circle_probe(g, delta, 0.05);
      CHECK(s <= prev);
      prev = s;
    }
    std::size_t low = 0;
    for (double eps : {0.0, 0.01, 0.05, 0.09}) {
      const auto s = gap_circle_probe(g, 0.1, eps);
      CHECK(s >= low);
      low = s;
    }
  }
}

TEST_CASE("GAP preconditions") {
  GapSpec big{{0.0, 0.0}, {{0.1, 0.0}, {0.0, 0.1}, {0.1, 0.1}}, {200, 200, 200}};
  CHECK(code_of([&] { gap_circle_probe(big, 0.5, 0.1); }) == ErrorCode::VolumeCapExceeded);
  GapSpec g{{0.0, 0.0}, {{0.5, 0.0}}, {4}};
  CHECK(code_of([&] { gap_circle_probe(g, 1.5, 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { gap_circle_probe(g, 0.5, 0.6); }) == ErrorCode::InvalidArgument);
  GapSpec zero{{0.0, 0.0}, {{0.5, 0.0}}, {0}};
  CHECK(code_of([&] { gap_circle_probe(zero, 0.5, 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(big.volume() == doctest::Approx(401.0 * 401.0 * 401.0));
}

TEST_CASE("GAP string form") {
  const GapSpec g = gap_spec_from_string("2:0.1,0.2;0.5,0;0,0.5:3,4");
  CHECK(g.rank() == 2);
  CHECK(g.offset == std::complex<double>(0.1, 0.2));
  CHECK(g.generators[0] == std::complex<double>(0.5, 0.0));
  CHECK(g.generators[1] == std::complex<double>(0.0, 0.5));
  CHECK(g.dims == std::vector<std::int64_t>{3, 4});
  CHECK(code_of([] { gap_spec_from_string("2:0.5,0:3"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { gap_spec_from_string("garbage"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("bad set measure") {
  const Curve c = Curve::default_for(2);
  const auto l = enumerate_lattice(2, 5);
  CHECK(bad_set_measure(c, l, 0.0) == 0.0);
  const double kappa = default_kappa(l);
  const double measure = bad_set_measure(c, l);
  const double D = static_cast<double>(direction_lines(l).size());
  CHECK(measure <= D * 2.0 * kappa / pi * (1.0 + 1e-9) + kappa / 8.0);
  CHECK(measure > 0.0);
  // No directions: a lattice whose single line is never tangent to a short segment.
  const auto pair = LatticeSet::from_points(2, 1, {{1, 0, 0}, {-1, 0, 0}});
  CHECK(bad_set_measure(Curve::segment(Vec3(0, 1, 0)), pair) == 0.0);
}

TEST_CASE("report, scan and histogram") {
  DiagnosticsOptions opt;
  opt.all = true;
  const auto r = diagnose(enumerate_lattice(2, 65), Curve::default_for(2), opt);
  CHECK(r.N == 16);
  REQUIRE(r.discrepancy.has_value());
  CHECK(*r.discrepancy >= 0.0);
  CHECK(*r.discrepancy <= 16.0);
  REQUIRE(r.cover.has_value());
  for (auto c : r.cover->counts) CHECK(c >= 1);
  REQUIRE(r.bad_set_measure.has_value());
  const nlohmann::json j = r;
  CHECK(j.at("N") == 16);

  const auto r3 = diagnose(enumerate_lattice(3, 3), Curve::default_for(3));
  CHECK_FALSE(r3.tau4.has_value());
  CHECK_FALSE(r3.discrepancy.has_value());

  const auto rows = scan_levels(30);
  for (const auto& row : rows) {
    CHECK(row.N == enumerate_lattice(2, row.m).size());
    CHECK(row.discrepancy <= static_cast<double>(row.N));
  }
  CHECK(rows.front().m == 1);
  CHECK(rows.size() == 15);  // sums of two squares in 1..30
  const std::string csv = scan_csv(rows);
  CHECK(csv.rfind("m,N,min_sep,normalized_sep,B_arc,tau4,discrepancy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rows.size() + 1));

  const auto h = histogram({0.0, 0.1, 0.5, 1.0}, 2);
  CHECK(h.counts == std::vector<std::size_t>{2, 2});
  CHECK(h.width == doctest::Approx(0.5));
  CHECK(histogram({}, 3).counts == std::vector<std::size_t>{0, 0, 0});
}
