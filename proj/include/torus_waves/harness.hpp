#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "torus_waves/geometry.hpp"
#include "torus_waves/kacrice.hpp"
#include "torus_waves/wave.hpp"

namespace torus_waves {

struct RunConfig {
  int d = 2;
  std::int64_t m = 65;
  Curve curve = Curve::default_for(2);
  CoefficientModel model = CoefficientModel::make(Distribution::gaussian);
  std::size_t trials = 1000;
  std::uint64_t master_seed = 1;
  /// Base grid resolution in nodes per unit length, as a multiple of lambda.
  double grid_factor = 32.0;
  int k_max = 4;

  /// Throws InvalidArgument / InvalidLevel on an inconsistent config.
  void validate() const;
};

struct MCReport {
  int d = 2;
  std::int64_t m = 0;
  std::size_t N = 0;
  std::string curve_id;
  std::string model_id;
  std::vector<std::size_t> counts;
  std::vector<bool> certified;
  double mean = 0.0;
  /// Unbiased sample variance (0 for a single trial).
  double variance = 0.0;
  double mean_se = 0.0;
  /// Entry k-1 holds the k-th moment, k = 1..k_max.
  std::vector<double> central_moments;
  std::vector<double> raw_moments;
  /// Standard error of each raw moment, sqrt(var(Z^k) / trials).
  std::vector<double> raw_moment_se;
  std::size_t uncertified = 0;
  /// Trials that were re-run at double resolution.
  std::size_t rerun = 0;
  std::optional<double> wall_time;
};

/// Worker count: the requested value, else hardware concurrency, capped by
/// TORUS_WAVES_THREADS when set.
unsigned worker_count(std::optional<unsigned> requested = std::nullopt);

/// Runs cfg.trials independent trials with seeds derive_seed(master, i).
/// Counts are identical for any worker count. An uncertified trial is
/// re-run once at twice the grid factor and flagged if still uncertified.
MCReport run_trials(const RunConfig& cfg, std::optional<unsigned> threads = std::nullopt);

/// Moments and standard errors recomputed from the raw counts.
void summarize(MCReport& report, int k_max);

struct MomentGap {
  double gap = 0.0;
  double combined_se = 0.0;
};

/// Gap between the k-th raw moments of two reports. Throws ConfigMismatch
/// unless both share d, m and curve.
MomentGap universality_gap(const MCReport& a, const MCReport& b, int k);

struct VarianceComparison {
  double sample_variance = 0.0;
  double m_over_N = 0.0;
  double ratio = 0.0;
  double bound_constant = 10.0;
  bool within_bound = false;
  std::optional<double> variance_integral;
  std::optional<double> integral_ratio;
};

VarianceComparison variance_vs_prediction(const MCReport& report, const KacRicePrediction& pred,
                                          double C = 10.0);

struct FieldMoments {
  std::size_t samples = 0;
  double t0 = 0.0;
  double mean_F2 = 0.0;
  double se_F2 = 0.0;
  double var_Fprime = 0.0;
  /// Standard error of the F'^2 mean, used as the error of var_Fprime.
  double se_Fprime = 0.0;
  /// 4 pi^2 m / d times |gamma'(t0)|^2.
  double predicted_Fprime = 0.0;
};

/// Samples F(t0) and F'(t0) over cfg.trials coefficient draws.
FieldMoments field_moments(const RunConfig& cfg, double t0,
                           std::optional<unsigned> threads = std::nullopt);

inline constexpr const char* kManifestSchema = "torus-waves/run-manifest";
inline constexpr int kManifestVersion = 1;

struct Manifest {
  RunConfig config;
  MCReport report;
};

void to_json(nlohmann::json& j, const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
/// Wall time is written only when include_timing is set so that reports of
/// identical runs compare byte for byte.
nlohmann::json report_to_json(const MCReport& r, bool include_timing = false);
MCReport report_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const MomentGap& g);
void to_json(nlohmann::json& j, const VarianceComparison& v);
void to_json(nlohmann::json& j, const FieldMoments& f);

nlohmann::json manifest_to_json(const Manifest& m, bool include_timing = false);
/// Throws SchemaMismatch for a foreign schema or version.
Manifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const std::filesystem::path& path, const Manifest& m, bool include_timing = false);
/// Throws IOFailure (with the parse position) for unreadable or malformed files.
Manifest load_manifest(const std::filesystem::path& path);

/// trial,count,certified
std::string counts_csv(const MCReport& r);

}  // namespace torus_waves
