#include "torus_waves/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "torus_waves/errors.hpp"
#include "torus_waves/zeros.hpp"

namespace torus_waves {

namespace {

std::string curve_id(const Curve& c) { return nlohmann::json(c).dump(); }

// Runs body(i) for i in [0, n) on `workers` threads; rethrows the first failure.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

void RunConfig::validate() const {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
  if (k_max < 1 || k_max > 4) throw Error(ErrorCode::InvalidArgument, "k_max must lie in [1, 4]");
  if (!(grid_factor >= 1.0)) throw Error(ErrorCode::InvalidArgument, "grid factor must be at least 1");
  if (d != 2 && d != 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (curve.dim() != d) throw Error(ErrorCode::InvalidArgument, "curve dimension differs from d");
  if (!curve.unit_speed()) throw Error(ErrorCode::NotUnitSpeed, "curve must be unit speed");
  if (m <= 0 || excluded_level(d, m)) throw Error(ErrorCode::InvalidLevel, "level is not admissible");
}

unsigned worker_count(std::optional<unsigned> requested) {
  unsigned n = requested.value_or(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("TORUS_WAVES_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v >= 1) n = std::min(n, static_cast<unsigned>(v));
  }
  return std::max(1u, n);
}

MCReport run_trials(const RunConfig& cfg, std::optional<unsigned> threads) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto lattice = std::make_shared<const LatticeSet>(enumerate_lattice(cfg.d, cfg.m));
  if (lattice->empty()) throw Error(ErrorCode::InvalidLevel, "level has no lattice points");

  const double lambda = lattice->lambda();
  const CurveSampler base(cfg.curve, cfg.grid_factor * lambda);
  const CurveSampler fine(cfg.curve, 2.0 * cfg.grid_factor * lambda);
  ZeroOptions opts;
  opts.min_grid_factor = cfg.grid_factor;

  MCReport r;
  r.d = cfg.d;
  r.m = cfg.m;
  r.N = lattice->size();
  r.curve_id = curve_id(cfg.curve);
  r.model_id = cfg.model.id();
  r.counts.assign(cfg.trials, 0);
  std::vector<char> certified(cfg.trials, 0), rerun(cfg.trials, 0);

  parallel_for(cfg.trials, worker_count(threads), [&](std::size_t i) {
    const WaveSample s = sample_coefficients(cfg.model, lattice, derive_seed(cfg.master_seed, i));
    ZeroCount zc = count_zeros(s, base, std::nullopt, opts);
    if (!zc.certified) {
      rerun[i] = 1;
      zc = count_zeros(s, fine, std::nullopt, opts);
    }
    r.counts[i] = zc.count;
    certified[i] = zc.certified ? 1 : 0;
  });

  r.certified.assign(certified.begin(), certified.end());
  r.rerun = static_cast<std::size_t>(std::count(rerun.begin(), rerun.end(), 1));
  summarize(r, cfg.k_max);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void summarize(MCReport& r, int k_max) {
  if (r.counts.empty()) throw Error(ErrorCode::InvalidArgument, "no trials to summarize");
  const auto n = static_cast<double>(r.counts.size());
  std::vector<double> z(r.counts.begin(), r.counts.end());
  r.mean = mean_of(z);
  r.variance = sample_variance(z, r.mean);
  r.mean_se = std::sqrt(r.variance / n);
  r.uncertified = static_cast<std::size_t>(std::count(r.certified.begin(), r.certified.end(), false));
  r.central_moments.assign(k_max, 0.0);
  r.raw_moments.assign(k_max, 0.0);
  r.raw_moment_se.assign(k_max, 0.0);
  for (int k = 1; k <= k_max; ++k) {
    std::vector<double> zk(z.size()), ck(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      zk[i] = std::pow(z[i], k);
      ck[i] = std::pow(z[i] - r.mean, k);
    }
    r.raw_moments[k - 1] = mean_of(zk);
    r.central_moments[k - 1] = mean_of(ck);
    r.raw_moment_se[k - 1] = std::sqrt(sample_variance(zk, r.raw_moments[k - 1]) / n);
  }
}

MomentGap universality_gap(const MCReport& a, const MCReport& b, int k) {
  if (a.d != b.d || a.m != b.m || a.curve_id != b.curve_id) {
    throw Error(ErrorCode::ConfigMismatch, "reports differ in d, m or curve");
  }
  if (k < 1 || static_cast<std::size_t>(k) > a.raw_moments.size() ||
      static_cast<std::size_t>(k) > b.raw_moments.size()) {
    throw Error(ErrorCode::InvalidArgument, "moment order not available in both reports");
  }
  MomentGap g;
  g.gap = std::abs(a.raw_moments[k - 1] - b.raw_moments[k - 1]);
  g.combined_se = std::hypot(a.raw_moment_se[k - 1], b.raw_moment_se[k - 1]);
  return g;
}

VarianceComparison variance_vs_prediction(const MCReport& report, const KacRicePrediction& pred,
                                          double C) {
  VarianceComparison v;
  v.sample_variance = report.variance;
  v.m_over_N = static_cast<double>(pred.m) / static_cast<double>(pred.N);
  v.ratio = v.sample_variance / v.m_over_N;
  v.bound_constant = C;
  v.within_bound = v.sample_variance <= C * v.m_over_N;
  v.variance_integral = pred.variance_leading;
  if (pred.variance_leading && *pred.variance_leading != 0.0) {
    v.integral_ratio = v.sample_variance / *pred.variance_leading;
  }
  return v;
}

FieldMoments field_moments(const RunConfig& cfg, double t0, std::optional<unsigned> threads) {
  cfg.validate();
  if (!(t0 >= 0.0 && t0 <= cfg.curve.length())) {
    throw Error(ErrorCode::InvalidArgument, "t0 outside the curve domain");
  }
  auto lattice = std::make_shared<const LatticeSet>(enumerate_lattice(cfg.d, cfg.m));
  if (lattice->empty()) throw Error(ErrorCode::InvalidLevel, "level has no lattice points");
  const CurveJet jet = cfg.curve.jet(t0);
  std::vector<double> f2(cfg.trials), fp(cfg.trials), fp2(cfg.trials);
  parallel_for(cfg.trials, worker_count(threads), [&](std::size_t i) {
    const WaveSample s = sample_coefficients(cfg.model, lattice, derive_seed(cfg.master_seed, i));
    const FieldValue v = evaluate_field(s, jet);
    f2[i] = v.value * v.value;
    fp[i] = v.derivative;
    fp2[i] = v.derivative * v.derivative;
  });
  FieldMoments out;
  const auto n = static_cast<double>(cfg.trials);
  out.samples = cfg.trials;
  out.t0 = t0;
  out.mean_F2 = mean_of(f2);
  out.se_F2 = std::sqrt(sample_variance(f2, out.mean_F2) / n);
  out.var_Fprime = sample_variance(fp, mean_of(fp));
  out.se_Fprime = std::sqrt(sample_variance(fp2, mean_of(fp2)) / n);
  out.predicted_Fprime = 4.0 * std::numbers::pi * std::numbers::pi * static_cast<double>(cfg.m) /
                         cfg.d * jet.velocity.squaredNorm();
  return out;
}

void to_json(nlohmann::json& j, const RunConfig& cfg) {
  j = nlohmann::json{{"d", cfg.d},
                     {"m", cfg.m},
                     {"curve", cfg.curve},
                     {"model", cfg.model},
                     {"trials", cfg.trials},
                     {"master_seed", cfg.master_seed},
                     {"grid_factor", cfg.grid_factor},
                     {"k_max", cfg.k_max}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.m = j.at("m").get<std::int64_t>();
  cfg.curve = curve_from_json(j.at("curve"));
  cfg.model = coefficient_model_from_json(j.at("model"));
  cfg.trials = j.at("trials").get<std::size_t>();
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  cfg.grid_factor = j.at("grid_factor").get<double>();
  cfg.k_max = j.at("k_max").get<int>();
  return cfg;
}

nlohmann::json report_to_json(const MCReport& r, bool include_timing) {
  nlohmann::json j{{"d", r.d},
                   {"m", r.m},
                   {"N", r.N},
                   {"curve_id", r.curve_id},
                   {"model_id", r.model_id},
                   {"counts", r.counts},
                   {"certified", r.certified},
                   {"mean", r.mean},
                   {"variance", r.variance},
                   {"mean_se", r.mean_se},
                   {"central_moments", r.central_moments},
                   {"raw_moments", r.raw_moments},
                   {"raw_moment_se", r.raw_moment_se},
                   {"uncertified", r.uncertified},
                   {"rerun", r.rerun}};
  if (include_timing && r.wall_time) j["wall_time"] = *r.wall_time;
  return j;
}

MCReport report_from_json(const nlohmann::json& j) {
  MCReport r;
  r.d = j.at("d").get<int>();
  r.m = j.at("m").get<std::int64_t>();
  r.N = j.at("N").get<std::size_t>();
  r.curve_id = j.at("curve_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.counts = j.at("counts").get<std::vector<std::size_t>>();
  r.certified = j.at("certified").get<std::vector<bool>>();
  r.mean = j.at("mean").get<double>();
  r.variance = j.at("variance").get<double>();
  r.mean_se = j.at("mean_se").get<double>();
  r.central_moments = j.at("central_moments").get<std::vector<double>>();
  r.raw_moments = j.at("raw_moments").get<std::vector<double>>();
  r.raw_moment_se = j.at("raw_moment_se").get<std::vector<double>>();
  r.uncertified = j.at("uncertified").get<std::size_t>();
  r.rerun = j.value("rerun", std::size_t{0});
  if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
  if (r.counts.size() != r.certified.size()) {
    throw Error(ErrorCode::IOFailure, "counts and certified flags differ in length");
  }
  return r;
}

void to_json(nlohmann::json& j, const MomentGap& g) {
  j = nlohmann::json{{"gap", g.gap}, {"combined_se", g.combined_se}};
}

void to_json(nlohmann::json& j, const VarianceComparison& v) {
  auto opt = [](const std::optional<double>& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"sample_variance", v.sample_variance},
                     {"m_over_N", v.m_over_N},
                     {"ratio", v.ratio},
                     {"bound_constant", v.bound_constant},
                     {"within_bound", v.within_bound},
                     {"variance_integral", opt(v.variance_integral)},
                     {"integral_ratio", opt(v.integral_ratio)}};
}

void to_json(nlohmann::json& j, const FieldMoments& f) {
  j = nlohmann::json{{"samples", f.samples},       {"t0", f.t0},
                     {"mean_F2", f.mean_F2},       {"se_F2", f.se_F2},
                     {"var_Fprime", f.var_Fprime}, {"se_Fprime", f.se_Fprime},
                     {"predicted_Fprime", f.predicted_Fprime}};
}

nlohmann::json manifest_to_json(const Manifest& m, bool include_timing) {
  return nlohmann::json{{"schema", kManifestSchema},
                        {"version", kManifestVersion},
                        {"config", m.config},
                        {"report", report_to_json(m.report, include_timing)}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", std::string()) != kManifestSchema) {
    throw Error(ErrorCode::SchemaMismatch, "not a run manifest");
  }
  const auto version = j.value("version", -1);
  if (version != kManifestVersion) {
    throw Error(ErrorCode::SchemaMismatch, "manifest version " + std::to_string(version) +
                                               " is not supported (expected " +
                                               std::to_string(kManifestVersion) + ")");
  }
  try {
    return Manifest{run_config_from_json(j.at("config")), report_from_json(j.at("report"))};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IOFailure, std::string("malformed manifest: ") + e.what());
  }
}

void save_manifest(const std::filesystem::path& path, const Manifest& m, bool include_timing) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path.string());
  out << manifest_to_json(m, include_timing).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IOFailure, "write failed for " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::IOFailure, path.string() + ": parse error at byte " +
                                          std::to_string(e.byte) + ": " + e.what());
  }
  return manifest_from_json(j);
}

std::string counts_csv(const MCReport& r) {
  std::ostringstream out;
  out << "trial,count,certified\n";
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    out << i << ',' << r.counts[i] << ',' << (r.certified[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace torus_waves
