#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace torus_waves {

/// Integer frequency vector. Planar lattices leave the third entry at zero.
using LatticePoint = std::array<std::int64_t, 3>;

/// The frequency set {mu in Z^d : |mu|^2 = m} for a fixed level m.
///
/// Points are stored in canonical order: the first N/2 entries are the pair
/// representatives (first nonzero coordinate positive, lexicographically
/// sorted) and entry i + N/2 is the negation of entry i. Immutable once built.
class LatticeSet {
 public:
  int dim() const noexcept { return dim_; }
  std::int64_t level() const noexcept { return level_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  std::span<const LatticePoint> points() const noexcept { return points_; }
  std::span<const LatticePoint> representatives() const noexcept {
    return std::span<const LatticePoint>(points_).first(points_.size() / 2);
  }
  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const noexcept {
    return pairs_;
  }

  /// Eigenvalue frequency lambda = 2 pi sqrt(m).
  double lambda() const;

  /// Validating constructor: every point must lie on the sphere of radius
  /// sqrt(level), points must be distinct and the set closed under negation.
  /// Accepts points in any order; stores them canonically.
  static LatticeSet from_points(int dim, std::int64_t level,
                                std::vector<LatticePoint> points);

 private:
  LatticeSet(int dim, std::int64_t level, std::vector<LatticePoint> points,
             std::vector<std::pair<std::size_t, std::size_t>> pairs)
      : dim_(dim), level_(level), points_(std::move(points)), pairs_(std::move(pairs)) {}

  int dim_;
  std::int64_t level_;
  std::vector<LatticePoint> points_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

/// True when d = 3 and m is one of the residues 0, 4, 7 mod 8 that the
/// three-dimensional model excludes.
bool excluded_level(int dim, std::int64_t level);

/// Complete enumeration of the lattice points of norm m. Throws
/// Error(InvalidLevel) for m <= 0 or an excluded residue in d = 3; a level
/// with no representations yields an empty set.
LatticeSet enumerate_lattice(int dim, std::int64_t level);

/// Normalized angles theta in [0,1) with mu = sqrt(m) e^{2 pi i theta}; d = 2.
std::vector<double> angles(const LatticeSet& lattice);

/// Smallest Euclidean distance between two distinct points (all-pairs scan).
double min_separation(const LatticeSet& lattice);

/// Maximal number of points on one arc of the given length, measured on the
/// circle of radius lambda (points scaled by 2 pi). Defaults to sqrt(lambda).
std::size_t arc_concentration(const LatticeSet& lattice,
                              std::optional<double> arc_length = std::nullopt);

/// Fourth Fourier coefficient of the angular measure, (1/N) sum cos(8 pi theta).
double fourth_fourier(const LatticeSet& lattice);

/// Number of integer points p in Z^2 with |p|^2 <= x.
std::int64_t gauss_circle_count(std::int64_t x);

void to_json(nlohmann::json& j, const LatticeSet& lattice);
LatticeSet lattice_from_json(const nlohmann::json& j);

void save_lattice(const std::filesystem::path& path, const LatticeSet& lattice);
LatticeSet load_lattice(const std::filesystem::path& path);

}  // namespace torus_waves
