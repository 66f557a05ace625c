#include "torus_waves/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "torus_waves/errors.hpp"

namespace torus_waves {

namespace {

std::int64_t isqrt(std::int64_t n) {
  if (n < 0) return -1;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::int64_t norm2(const LatticePoint& p) {
  return p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
}

LatticePoint negate(const LatticePoint& p) { return {-p[0], -p[1], -p[2]}; }

bool canonical_positive(const LatticePoint& p) {
  for (auto c : p) {
    if (c != 0) return c > 0;
  }
  return false;
}

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  }
}

}  // namespace

double LatticeSet::lambda() const {
  return 2.0 * std::numbers::pi * std::sqrt(static_cast<double>(level_));
}

LatticeSet LatticeSet::from_points(int dim, std::int64_t level,
                                   std::vector<LatticePoint> points) {
  check_dim(dim);
  if (level <= 0) throw Error(ErrorCode::InvalidLevel, "level must be positive");

  std::set<LatticePoint> seen;
  for (const auto& p : points) {
    if (dim == 2 && p[2] != 0) {
      throw Error(ErrorCode::InvalidArgument, "planar point with nonzero third coordinate");
    }
    if (norm2(p) != level) {
      throw Error(ErrorCode::InvalidArgument, "point does not lie on the level set");
    }
    if (!seen.insert(p).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate lattice point");
    }
  }
  for (const auto& p : points) {
    if (!seen.contains(negate(p))) {
      throw Error(ErrorCode::InvalidArgument, "point set is not closed under negation");
    }
  }

  std::vector<LatticePoint> reps;
  for (const auto& p : seen) {
    if (canonical_positive(p)) reps.push_back(p);
  }
  // std::set iteration is already lexicographic
  const std::size_t half = reps.size();
  std::vector<LatticePoint> ordered = reps;
  ordered.reserve(2 * half);
  for (const auto& p : reps) ordered.push_back(negate(p));

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(half);
  for (std::size_t i = 0; i < half; ++i) pairs.emplace_back(i, i + half);
  return LatticeSet(dim, level, std::move(ordered), std::move(pairs));
}

bool excluded_level(int dim, std::int64_t level) {
  if (dim != 3) return false;
  const auto r = ((level % 8) + 8) % 8;
  return r == 0 || r == 4 || r == 7;
}

LatticeSet enumerate_lattice(int dim, std::int64_t level) {
  check_dim(dim);
  if (level <= 0) throw Error(ErrorCode::InvalidLevel, "level must be positive");
  if (excluded_level(dim, level)) {
    throw Error(ErrorCode::InvalidLevel,
                "level " + std::to_string(level) + " is excluded in dimension 3 (m = 0, 4, 7 mod 8)");
  }

  std::vector<LatticePoint> points;
  const auto r = isqrt(level);
  if (dim == 2) {
    for (std::int64_t x = -r; x <= r; ++x) {
      const auto y = isqrt(level - x * x);
      if (y * y != level - x * x) continue;
      points.push_back({x, y, 0});
      if (y != 0) points.push_back({x, -y, 0});
    }
  } else {
    for (std::int64_t x = -r; x <= r; ++x) {
      const auto rest = level - x * x;
      const auto ry = isqrt(rest);
      for (std::int64_t y = -ry; y <= ry; ++y) {
        const auto zz = rest - y * y;
        const auto z = isqrt(zz);
        if (z * z != zz) continue;
        points.push_back({x, y, z});
        if (z != 0) points.push_back({x, y, -z});
      }
    }
  }
  if (points.empty()) {
    return LatticeSet::from_points(dim, level, {});
  }
  return LatticeSet::from_points(dim, level, std::move(points));
}

std::vector<double> angles(const LatticeSet& lattice) {
  if (lattice.dim() != 2) throw Error(ErrorCode::InvalidArgument, "angles require d = 2");
  std::vector<double> out;
  out.reserve(lattice.size());
  for (const auto& p : lattice.points()) {
    double a = std::atan2(static_cast<double>(p[1]), static_cast<double>(p[0])) /
               (2.0 * std::numbers::pi);
    if (a < 0.0) a += 1.0;
    if (a >= 1.0) a -= 1.0;
    out.push_back(a);
  }
  return out;
}

double min_separation(const LatticeSet& lattice) {
  if (lattice.size() < 2) {
    throw Error(ErrorCode::Degenerate, "minimum separation needs at least two points");
  }
  auto best = std::numeric_limits<std::int64_t>::max();
  const auto pts = lattice.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const LatticePoint d{pts[i][0] - pts[j][0], pts[i][1] - pts[j][1], pts[i][2] - pts[j][2]};
      best = std::min(best, norm2(d));
    }
  }
  return std::sqrt(static_cast<double>(best));
}

std::size_t arc_concentration(const LatticeSet& lattice, std::optional<double> arc_length) {
  if (lattice.dim() != 2) throw Error(ErrorCode::InvalidArgument, "arc concentration requires d = 2");
  if (lattice.empty()) throw Error(ErrorCode::Degenerate, "arc concentration needs a nonempty set");

  const double lambda = lattice.lambda();
  const double length = arc_length.value_or(std::sqrt(lambda));
  if (!(length >= 0.0)) throw Error(ErrorCode::InvalidArgument, "arc length must be nonnegative");
  const double width = length / lambda;  // radians on the circle of radius lambda
  const double two_pi = 2.0 * std::numbers::pi;
  const std::size_t n = lattice.size();
  if (width >= two_pi) return n;

  std::vector<double> phi;
  phi.reserve(2 * n);
  for (double a : angles(lattice)) phi.push_back(two_pi * a);
  std::sort(phi.begin(), phi.end());
  for (std::size_t i = 0; i < n; ++i) phi.push_back(phi[i] + two_pi);

  constexpr double slack = 1e-12;
  std::size_t best = 1;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    j = std::max(j, i);
    while (j + 1 < i + n && phi[j + 1] <= phi[i] + width + slack) ++j;
    best = std::max(best, j - i + 1);
  }
  return best;
}

double fourth_fourier(const LatticeSet& lattice) {
  if (lattice.dim() != 2) throw Error(ErrorCode::InvalidArgument, "fourth Fourier coefficient requires d = 2");
  if (lattice.empty()) throw Error(ErrorCode::Degenerate, "empty lattice");
  // Re and Im of (mu / |mu|)^4 are exact polynomials in the coordinates.
  const double m2 = static_cast<double>(lattice.level()) * static_cast<double>(lattice.level());
  double re = 0.0;
  double im = 0.0;
  for (const auto& p : lattice.points()) {
    const double x = static_cast<double>(p[0]);
    const double y = static_cast<double>(p[1]);
    re += (x * x * x * x - 6.0 * x * x * y * y + y * y * y * y) / m2;
    im += 4.0 * x * y * (x * x - y * y) / m2;
  }
  const double n = static_cast<double>(lattice.size());
  if (std::abs(im / n) >= 1e-12) {
    throw std::logic_error("fourth Fourier coefficient has a nonzero imaginary part");
  }
  return re / n;
}

std::int64_t gauss_circle_count(std::int64_t x) {
  if (x < 0) return 0;
  const auto r = isqrt(x);
  std::int64_t total = 0;
  for (std::int64_t a = -r; a <= r; ++a) total += 2 * isqrt(x - a * a) + 1;
  return total;
}

void to_json(nlohmann::json& j, const LatticeSet& lattice) {
  auto pts = nlohmann::json::array();
  for (const auto& p : lattice.points()) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < lattice.dim(); ++k) row.push_back(p[k]);
    pts.push_back(std::move(row));
  }
  j = nlohmann::json{{"d", lattice.dim()},
                     {"m", lattice.level()},
                     {"N", lattice.size()},
                     {"points", std::move(pts)}};
}

LatticeSet lattice_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("d").get<int>();
    const auto level = j.at("m").get<std::int64_t>();
    std::vector<LatticePoint> pts;
    for (const auto& row : j.at("points")) {
      if (row.size() != static_cast<std::size_t>(dim)) {
        throw Error(ErrorCode::IOFailure, "lattice point has wrong arity");
      }
      LatticePoint p{0, 0, 0};
      for (int k = 0; k < dim; ++k) p[k] = row.at(k).get<std::int64_t>();
      pts.push_back(p);
    }
    auto lattice = LatticeSet::from_points(dim, level, std::move(pts));
    if (j.contains("N") && j.at("N").get<std::size_t>() != lattice.size()) {
      throw Error(ErrorCode::IOFailure, "lattice file N does not match its point list");
    }
    return lattice;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IOFailure, std::string("malformed lattice JSON: ") + e.what());
  }
}

void save_lattice(const std::filesystem::path& path, const LatticeSet& lattice) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot open " + path.string() + " for writing");
  out << nlohmann::json(lattice).dump() << '\n';
  if (!out) throw Error(ErrorCode::IOFailure, "write failed for " + path.string());
}

LatticeSet load_lattice(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::IOFailure, path.string() + ": " + e.what());
  }
  return lattice_from_json(j);
}

}  // namespace torus_waves
