#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "torus_waves/geometry.hpp"
#include "torus_waves/lattice.hpp"

namespace torus_waves {

/// Fewest closed intervals of length len that cover the values.
std::size_t min_cover_count(std::vector<double> values, double len);

struct EquiReport {
  std::size_t directions = 0;
  double radius = 0.0;
  double eps0 = 0.0;
  /// N^{eps0}.
  double threshold = 0.0;
  std::vector<std::size_t> counts;
  std::size_t min_count = 0;
  double median_count = 0.0;
  bool passes = false;
};

/// Cover counts of the projections <r, mu> with intervals of length 1/N, for
/// `directions` evenly spaced directions r of length radius (default
/// 1/(2 pi lambda)); d = 2.
EquiReport check_assumption_equi(const LatticeSet& lattice, std::size_t directions, double eps0,
                                 std::optional<double> radius = std::nullopt);

/// sup over arcs I of the circle R/Z of |#(angles in I) - N |I||, taken
/// over closed and open arcs with endpoints at the data.
double discrepancy(const std::vector<double>& angles);

struct Assumption21Ratios {
  /// max |f_mu| / sqrt(sum f^2) over the grid.
  double delocalization = 0.0;
  /// max sum |f'|^2 / sum |f|^2 in the scaled variable x = lambda t.
  double derivative_growth_first = 0.0;
  /// max over x and mu of sup_{|z - x| <= 1} |f_mu''(z)|^2 / sum |f(x)|^2.
  double derivative_growth_second = 0.0;
  /// False when the supremum was taken over real points only.
  bool complex_disk = true;
};

/// Basis f_mu = cos, sin(2 pi <mu, gamma(x / lambda)>) over pair
/// representatives, sampled at grid points of the curve; grid >= 64.
Assumption21Ratios assumption21_ratios(const LatticeSet& lattice, const Curve& curve,
                                       std::size_t grid = 256);

/// Generalized arithmetic progression {g0 + sum n_i g_i : |n_i| <= N_i}.
struct GapSpec {
  std::complex<double> offset{0.0, 0.0};
  std::vector<std::complex<double>> generators;
  std::vector<std::int64_t> dims;

  std::size_t rank() const { return generators.size(); }
  /// prod (2 N_i + 1), saturating.
  double volume() const;
};

inline constexpr double kGapVolumeCap = 1e7;

/// Largest delta-separated subset of the GAP elements within eps of the unit
/// circle. Separation is measured along the circle (chord delta), and the
/// greedy sweep in argument order is run from every start, which gives the
/// exact maximum. Throws VolumeCapExceeded above kGapVolumeCap.
std::size_t gap_circle_probe(const GapSpec& gap, double delta, double eps);

/// Total length of the bad set for kappa (default N^{-3}); d = 2.
double bad_set_measure(const Curve& curve, const LatticeSet& lattice,
                       std::optional<double> kappa = std::nullopt);

struct DiagnosticsOptions {
  std::size_t directions = 360;
  double eps0 = 0.1;
  std::optional<double> cover_radius;
  std::size_t ratio_grid = 256;
  /// Include the slower bad-set scan.
  bool all = false;
};

struct DiagnosticsReport {
  std::int64_t m = 0;
  int d = 2;
  std::size_t N = 0;
  double min_sep = 0.0;
  /// Planar lattices only.
  std::optional<std::size_t> B_arc;
  std::optional<double> tau4;
  std::optional<double> discrepancy;
  std::optional<EquiReport> cover;
  double delocalization_ratio = 0.0;
  double derivative_growth_ratio = 0.0;
  double derivative_growth_second = 0.0;
  std::optional<double> bad_set_measure;
  std::optional<std::size_t> gap_probe;
};

DiagnosticsReport diagnose(const LatticeSet& lattice, const Curve& curve,
                           const DiagnosticsOptions& options = {});

struct ScanRow {
  std::int64_t m;
  std::size_t N;
  double min_sep;
  /// min_sep * log(m)^{3/2} / sqrt(m).
  double normalized_sep;
  std::size_t B_arc;
  double tau4;
  double discrepancy;
};

/// One row per m <= max_m with a nonempty planar lattice.
std::vector<ScanRow> scan_levels(std::int64_t max_m);
std::string scan_csv(const std::vector<ScanRow>& rows);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<std::size_t> counts;
};
Histogram histogram(const std::vector<double>& values, std::size_t bins);

void to_json(nlohmann::json& j, const EquiReport& r);
void to_json(nlohmann::json& j, const Assumption21Ratios& r);
void to_json(nlohmann::json& j, const DiagnosticsReport& r);
void to_json(nlohmann::json& j, const Histogram& h);
GapSpec gap_spec_from_string(const std::string& text);

}  // namespace torus_waves
