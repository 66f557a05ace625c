#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "torus_waves/geometry.hpp"
#include "torus_waves/lattice.hpp"

namespace torus_waves {

enum class Distribution { gaussian, bernoulli, uniform, mixed };

std::string_view to_string(Distribution kind);
Distribution distribution_from_string(std::string_view name);

/// Law of the real coefficient components. All kinds have mean 0 and
/// variance 1.
///
/// - gaussian: standard normal.
/// - bernoulli: +-1 with probability 1/2 each.
/// - uniform: uniform on [-sqrt3, sqrt3].
/// - mixed: +-atom_value with total mass atom_mass, otherwise uniform on
///   [-w, w] with w chosen so the variance stays 1.
struct CoefficientModel {
  Distribution kind = Distribution::gaussian;
  /// Density / small-value bound K of the coefficient conditions.
  double density_bound = 0.5;
  double atom_mass = 0.9;
  double atom_value = 1.0;

  static CoefficientModel make(Distribution kind);
  static CoefficientModel from_name(std::string_view name) {
    return make(distribution_from_string(name));
  }

  /// Half-width of the continuous component (uniform and mixed kinds).
  double half_width() const;
  std::string id() const { return std::string(to_string(kind)); }
};

using Rng = std::mt19937_64;

/// Draws from a CoefficientModel. Stateful (the normal generator caches).
class CoefficientDrawer {
 public:
  explicit CoefficientDrawer(const CoefficientModel& model);
  double operator()(Rng& rng);

 private:
  CoefficientModel model_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  double half_width_;
};

/// Trial seed derived from a master seed; a splitmix64 mix of both.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// One realization: real coefficient pairs (eps1, eps2) for each pair
/// representative of the lattice. The negated frequency carries the
/// conjugate coefficient implicitly, so the field is real by construction.
struct WaveSample {
  std::shared_ptr<const LatticeSet> lattice;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
  std::uint64_t seed = 0;
  std::string model_id;

  /// Copy with every coefficient multiplied by c.
  WaveSample scaled(double c) const;
};

/// Deterministic in (model, lattice, seed). Components are drawn in order
/// eps1, eps2 for each representative.
WaveSample sample_coefficients(const CoefficientModel& model,
                               std::shared_ptr<const LatticeSet> lattice, std::uint64_t seed);

struct FieldValue {
  double value;
  double derivative;
};

/// F and dF/dt at a curve point, where
/// F = sqrt(2/N) sum_reps [eps1 cos(2 pi <mu, gamma>) + eps2 sin(2 pi <mu, gamma>)].
FieldValue evaluate_field(const WaveSample& sample, const CurveJet& jet);

double evaluate_F(const WaveSample& sample, const CurveSampler& curve, double t);
double evaluate_F_prime(const WaveSample& sample, const CurveSampler& curve, double t);

struct Condition2Report {
  std::size_t draws = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  /// Empirical P(c1 <= |eps - eps'| <= c2) and its 95% normal interval.
  double probability = 0.0;
  double probability_low = 0.0;
  double probability_high = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double density_bound = 0.0;
  /// Histogram density peak of the continuous component (not set for
  /// purely atomic laws).
  std::optional<double> max_density;
  std::optional<bool> density_ok;
};

Condition2Report validate_condition2(const CoefficientModel& model, std::size_t draws, double c1,
                                     double c2, std::uint64_t seed = 1);

void to_json(nlohmann::json& j, const CoefficientModel& model);
CoefficientModel coefficient_model_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Condition2Report& report);

}  // namespace torus_waves
