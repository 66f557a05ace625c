#include "torus_waves/wave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "torus_waves/errors.hpp"

namespace torus_waves {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double frac(double x) { return x - std::floor(x); }

}  // namespace

std::string_view to_string(Distribution kind) {
  switch (kind) {
    case Distribution::gaussian: return "gaussian";
    case Distribution::bernoulli: return "bernoulli";
    case Distribution::uniform: return "uniform";
    case Distribution::mixed: return "mixed";
  }
  return "unknown";
}

Distribution distribution_from_string(std::string_view name) {
  for (auto d : {Distribution::gaussian, Distribution::bernoulli, Distribution::uniform,
                 Distribution::mixed}) {
    if (to_string(d) == name) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown distribution '" + std::string(name) + "'");
}

CoefficientModel CoefficientModel::make(Distribution kind) {
  CoefficientModel m;
  m.kind = kind;
  switch (kind) {
    case Distribution::gaussian:
    case Distribution::uniform: m.density_bound = 0.5; break;
    case Distribution::bernoulli:
    case Distribution::mixed: m.density_bound = 2.0; break;
  }
  return m;
}

double CoefficientModel::half_width() const {
  switch (kind) {
    case Distribution::uniform: return std::numbers::sqrt3;
    case Distribution::mixed: {
      const double rest = 1.0 - atom_mass * atom_value * atom_value;
      if (!(atom_mass >= 0.0 && atom_mass < 1.0) || rest < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "mixed model cannot reach unit variance");
      }
      return std::sqrt(3.0 * rest / (1.0 - atom_mass));
    }
    default: return 0.0;
  }
}

CoefficientDrawer::CoefficientDrawer(const CoefficientModel& model)
    : model_(model), half_width_(model.half_width()) {}

double CoefficientDrawer::operator()(Rng& rng) {
  switch (model_.kind) {
    case Distribution::gaussian: return normal_(rng);
    case Distribution::bernoulli: return (rng() >> 63) ? 1.0 : -1.0;
    case Distribution::uniform: return half_width_ * (2.0 * unit_(rng) - 1.0);
    case Distribution::mixed: {
      const double u = unit_(rng);
      if (u < model_.atom_mass) return (rng() >> 63) ? model_.atom_value : -model_.atom_value;
      return half_width_ * (2.0 * unit_(rng) - 1.0);
    }
  }
  return 0.0;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ (index + 0x632be59bd9b4e019ULL));
}

WaveSample WaveSample::scaled(double c) const {
  WaveSample out = *this;
  for (auto& v : out.cos_coeffs) v *= c;
  for (auto& v : out.sin_coeffs) v *= c;
  return out;
}

WaveSample sample_coefficients(const CoefficientModel& model,
                               std::shared_ptr<const LatticeSet> lattice, std::uint64_t seed) {
  if (!lattice || lattice->size() < 2 || lattice->size() % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "sampling needs a lattice with an even N >= 2");
  }
  Rng rng(seed);
  CoefficientDrawer draw(model);
  const std::size_t half = lattice->size() / 2;
  WaveSample s;
  s.cos_coeffs.resize(half);
  s.sin_coeffs.resize(half);
  for (std::size_t j = 0; j < half; ++j) {
    s.cos_coeffs[j] = draw(rng);
    s.sin_coeffs[j] = draw(rng);
  }
  s.lattice = std::move(lattice);
  s.seed = seed;
  s.model_id = model.id();
  return s;
}

FieldValue evaluate_field(const WaveSample& sample, const CurveJet& jet) {
  const auto reps = sample.lattice->representatives();
  const Vec3 wrapped(frac(jet.position.x()), frac(jet.position.y()), frac(jet.position.z()));
  double value = 0.0;
  double deriv = 0.0;
  for (std::size_t j = 0; j < reps.size(); ++j) {
    const auto& mu = reps[j];
    const double mx = static_cast<double>(mu[0]);
    const double my = static_cast<double>(mu[1]);
    const double mz = static_cast<double>(mu[2]);
    const double phase = kTwoPi * frac(mx * wrapped.x() + my * wrapped.y() + mz * wrapped.z());
    const double omega =
        kTwoPi * (mx * jet.velocity.x() + my * jet.velocity.y() + mz * jet.velocity.z());
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    value += sample.cos_coeffs[j] * c + sample.sin_coeffs[j] * s;
    deriv += omega * (sample.sin_coeffs[j] * c - sample.cos_coeffs[j] * s);
  }
  const double scale = std::sqrt(2.0 / static_cast<double>(sample.lattice->size()));
  return {scale * value, scale * deriv};
}

double evaluate_F(const WaveSample& sample, const CurveSampler& curve, double t) {
  return evaluate_field(sample, curve.jet(t)).value;
}

double evaluate_F_prime(const WaveSample& sample, const CurveSampler& curve, double t) {
  return evaluate_field(sample, curve.jet(t)).derivative;
}

Condition2Report validate_condition2(const CoefficientModel& model, std::size_t draws, double c1,
                                     double c2, std::uint64_t seed) {
  if (draws < 10000) throw Error(ErrorCode::InvalidArgument, "validate_condition2 needs >= 1e4 draws");
  Rng rng(seed);
  CoefficientDrawer draw(model);

  const bool continuous = model.kind == Distribution::gaussian ||
                          model.kind == Distribution::uniform ||
                          model.kind == Distribution::mixed;
  // Histogram of the continuous component: whole law for gaussian/uniform,
  // the part with |eps| <= 1/K for mixed.
  const double bin = 0.05;
  const double lo = model.kind == Distribution::mixed ? -1.0 / model.density_bound : -6.0;
  const double hi = -lo;
  std::vector<std::size_t> hist(static_cast<std::size_t>(std::ceil((hi - lo) / bin)), 0);

  std::size_t hits = 0;
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double a = draw(rng);
    const double b = draw(rng);
    const double diff = std::abs(a - b);
    if (diff >= c1 && diff <= c2) ++hits;
    for (double v : {a, b}) {
      sum += v;
      sum2 += v * v;
      if (continuous && v >= lo && v < hi) {
        const auto k = std::min(hist.size() - 1, static_cast<std::size_t>((v - lo) / bin));
        ++hist[k];
      }
    }
  }

  Condition2Report rep;
  rep.draws = draws;
  rep.c1 = c1;
  rep.c2 = c2;
  const double n = static_cast<double>(draws);
  rep.probability = static_cast<double>(hits) / n;
  const double half = 1.96 * std::sqrt(rep.probability * (1.0 - rep.probability) / n);
  rep.probability_low = std::max(0.0, rep.probability - half);
  rep.probability_high = std::min(1.0, rep.probability + half);

  const double values = 2.0 * n;
  rep.mean = sum / values;
  rep.variance = (sum2 - values * rep.mean * rep.mean) / (values - 1.0);
  rep.mean_se = std::sqrt(rep.variance / values);
  rep.density_bound = model.density_bound;
  if (continuous) {
    const auto peak = *std::max_element(hist.begin(), hist.end());
    const double density = static_cast<double>(peak) / (values * bin);
    const double se = std::sqrt(static_cast<double>(std::max<std::size_t>(peak, 1))) / (values * bin);
    rep.max_density = density;
    rep.density_ok = density <= model.density_bound + 4.0 * se;
  }
  return rep;
}

void to_json(nlohmann::json& j, const CoefficientModel& m) {
  nlohmann::json params = nlohmann::json::object();
  if (m.kind == Distribution::mixed) {
    params = {{"atom_mass", m.atom_mass}, {"atom_value", m.atom_value}, {"half_width", m.half_width()}};
  } else if (m.kind == Distribution::uniform) {
    params = {{"half_width", m.half_width()}};
  }
  j = nlohmann::json{{"kind", m.id()}, {"params", params}, {"K", m.density_bound}};
}

CoefficientModel coefficient_model_from_json(const nlohmann::json& j) {
  try {
    auto m = CoefficientModel::from_name(j.at("kind").get<std::string>());
    if (j.contains("K")) m.density_bound = j.at("K").get<double>();
    if (j.contains("params")) {
      const auto& p = j.at("params");
      m.atom_mass = p.value("atom_mass", m.atom_mass);
      m.atom_value = p.value("atom_value", m.atom_value);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IOFailure, std::string("malformed model JSON: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const Condition2Report& r) {
  j = nlohmann::json{{"draws", r.draws},
                     {"c1", r.c1},
                     {"c2", r.c2},
                     {"probability", r.probability},
                     {"probability_ci", {r.probability_low, r.probability_high}},
                     {"mean", r.mean},
                     {"mean_se", r.mean_se},
                     {"variance", r.variance},
                     {"K", r.density_bound}};
  j["max_density"] = r.max_density ? nlohmann::json(*r.max_density) : nlohmann::json(nullptr);
  j["density_ok"] = r.density_ok ? nlohmann::json(*r.density_ok) : nlohmann::json(nullptr);
}

}  // namespace torus_waves
