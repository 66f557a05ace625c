#include "torus_waves/cli.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "torus_waves/diagnostics.hpp"
#include "torus_waves/errors.hpp"
#include "torus_waves/harness.hpp"
#include "torus_waves/kacrice.hpp"
#include "torus_waves/lattice.hpp"
#include "torus_waves/zeros.hpp"

namespace torus_waves {

namespace {

using nlohmann::json;

// Flat JSON object -> CLI11 config items for the active subcommand. Keys
// name long options without the leading dashes; underscores and dashes are
// interchangeable.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::vector<std::string> section) : section_(std::move(section)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = section_;
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (value.is_object()) {
        throw CLI::ConversionError(key, "nested config sections are not supported");
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  std::vector<std::string> section_;
};

// Subcommand path named by the leading positional tokens.
std::vector<std::string> subcommand_path(const std::vector<std::string>& args) {
  std::vector<std::string> path;
  for (const auto& a : args) {
    if (a.empty() || a[0] == '-') break;
    path.push_back(a);
    if (a != "curve") break;
  }
  return path;
}

struct Common {
  std::string format = "json";
  std::string out_path;
};

std::string csv_cell(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string to_csv(const json& j) {
  std::ostringstream out;
  auto row_keys = [](const json& obj) {
    std::vector<std::string> keys;
    for (const auto& [k, v] : obj.items()) keys.push_back(k);
    return keys;
  };
  if (j.is_array() && !j.empty() && j.front().is_object()) {
    const auto keys = row_keys(j.front());
    for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
    out << '\n';
    for (const auto& row : j) {
      for (std::size_t i = 0; i < keys.size(); ++i) {
        out << (i ? "," : "") << csv_cell(row.value(keys[i], json(nullptr)));
      }
      out << '\n';
    }
  } else if (j.is_object()) {
    const auto keys = row_keys(j);
    for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
    out << '\n';
    for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << csv_cell(j.at(keys[i]));
    out << '\n';
  } else {
    out << csv_cell(j) << '\n';
  }
  return out.str();
}

void pretty(std::ostream& out, const json& j, int indent) {
  const std::string pad(indent, ' ');
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_structured() && !(v.is_array() && (v.empty() || !v.front().is_structured()))) {
        out << pad << k << ":\n";
        pretty(out, v, indent + 2);
      } else {
        out << pad << k << ": " << v.dump() << '\n';
      }
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (v.is_structured()) {
        out << pad << "-\n";
        pretty(out, v, indent + 2);
      } else {
        out << pad << "- " << v.dump() << '\n';
      }
    }
  } else {
    out << pad << j.dump() << '\n';
  }
}

void emit(std::ostream& out, const json& j, const std::string& format) {
  if (format == "csv") {
    out << to_csv(j);
  } else if (format == "pretty") {
    pretty(out, j, 0);
  } else {
    out << j.dump(2) << '\n';
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IOFailure, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorCode::IOFailure, "write failed for " + path);
}

Curve::Params parse_params(const std::string& text) {
  Curve::Params p;
  if (text.empty()) return p;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "curve parameter '" + item + "' is not key=value");
    }
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw Error(ErrorCode::InvalidArgument, "curve parameter '" + key + "' is not a number");
    }
    p[key] = v;
  }
  return p;
}

struct CurveArgs {
  std::string family;
  std::string params;
};

void add_curve_options(CLI::App* app, CurveArgs& c) {
  app->add_option("--curve", c.family, "Curve family (circle, helix, product, segment, warped_circle)")
      ->check(CLI::IsMember({"circle", "helix", "product", "segment", "warped_circle"}));
  app->add_option("--curve-params", c.params, "Curve parameters as key=value,key=value");
}

// The curve used by samplers: the family default when none is named, and
// the arc-length reparametrization for families that are not unit speed.
Curve build_curve(const CurveArgs& c, int d) {
  if (c.family.empty()) {
    if (!c.params.empty()) throw Error(ErrorCode::InvalidArgument, "--curve-params needs --curve");
    return Curve::default_for(d);
  }
  Curve curve = Curve::make(c.family, parse_params(c.params));
  if (curve.dim() != d) {
    throw Error(ErrorCode::InvalidArgument, "curve dimension differs from --d");
  }
  return curve.unit_speed() ? curve : reparametrize_arclength(curve);
}

void add_common(CLI::App* app, Common& c, bool with_out) {
  app->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "pretty"}));
  if (with_out) app->add_option("--out", c.out_path, "Also write the canonical JSON to this file");
  app->allow_config_extras(CLI::config_extras_mode::error);
  app->fallthrough();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nodal intersections of arithmetic random waves with curves on flat tori",
               "torus-waves"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON file of option values; explicit flags take precedence");
  app.config_formatter(std::make_shared<JsonConfig>(subcommand_path(args)));
  app.allow_config_extras(CLI::config_extras_mode::error);

  int d = 2;
  std::int64_t m = 0;
  CurveArgs curve_args;
  Common common;
  std::string dist = "gaussian";
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  double grid_factor = 32.0;
  std::optional<unsigned> threads;

  auto add_level = [&](CLI::App* sub, bool required) {
    sub->add_option("--d", d, "Torus dimension")->check(CLI::IsMember({2, 3}));
    auto* opt = sub->add_option("--m", m, "Level m = |mu|^2");
    if (required) opt->required();
  };
  auto add_dist = [&](CLI::App* sub) {
    sub->add_option("--dist", dist, "Coefficient distribution")
        ->check(CLI::IsMember({"gaussian", "bernoulli", "uniform", "mixed"}));
  };

  // lattice
  auto* lat = app.add_subcommand("lattice", "Enumerate the frequency set of level m");
  add_level(lat, true);
  bool stats = false;
  lat->add_flag("--stats", stats, "Add separation, arc concentration and tau4");
  add_common(lat, common, true);

  // curve validate
  auto* curve = app.add_subcommand("curve", "Reference curve tools");
  curve->require_subcommand(1);
  curve->fallthrough();
  auto* validate = curve->add_subcommand("validate", "Check the curvature and torsion conditions");
  std::string family = "circle";
  std::string params;
  bool arclength = false;
  std::size_t curve_grid = 4096;
  std::optional<std::int64_t> confine_m;
  double confine_alpha = 0.5, confine_c0 = 1.0;
  validate->add_option("--family", family, "Curve family")
      ->check(CLI::IsMember({"circle", "helix", "product", "segment", "warped_circle"}));
  validate->add_option("--params", params, "Curve parameters as key=value,key=value");
  validate->add_flag("--arclength", arclength, "Reparametrize by arc length first");
  validate->add_option("--grid", curve_grid, "Sample points")->check(CLI::Range(16, 1 << 22));
  validate->add_option("--confine-m", confine_m, "Also check ball non-confinement at this level");
  validate->add_option("--confine-alpha", confine_alpha, "Ball radius exponent");
  validate->add_option("--confine-c0", confine_c0, "Window length constant");
  add_common(validate, common, true);

  // zeros
  auto* zeros = app.add_subcommand("zeros", "Count zeros of sampled waves along the curve");
  add_level(zeros, true);
  add_dist(zeros);
  add_curve_options(zeros, curve_args);
  zeros->add_option("--trials", trials, "Number of samples")->check(CLI::PositiveNumber);
  zeros->add_option("--seed", seed, "Master seed");
  zeros->add_option("--grid-factor", grid_factor, "Grid nodes per unit length over lambda")
      ->check(CLI::Range(1.0, 1e4));
  add_common(zeros, common, true);

  // kacrice
  auto* kr = app.add_subcommand("kacrice", "Gaussian predictions for the zero count");
  add_level(kr, true);
  add_curve_options(kr, curve_args);
  bool with_variance = false;
  std::size_t quad_nodes = 128;
  kr->add_flag("--variance", with_variance, "Add the literal variance integral (d = 2) and the Kac-Rice variance");
  kr->add_option("--quad-nodes", quad_nodes, "Quadrature nodes per axis")->check(CLI::Range(64, 1 << 14));
  add_common(kr, common, true);

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Arithmetic structure diagnostics");
  add_level(diag, false);
  add_curve_options(diag, curve_args);
  DiagnosticsOptions dopt;
  bool all = false;
  std::string gap_text;
  double gap_delta = 0.1, gap_eps = 0.01;
  std::int64_t scan_max = 0;
  std::size_t bins = 0;
  std::optional<double> cover_radius;
  diag->add_flag("--all", all, "Include the bad-set measure");
  diag->add_option("--gap", gap_text, "GAP probe as rank:g0re,g0im;g1re,g1im;...:N1,...");
  diag->add_option("--gap-delta", gap_delta, "Separation for the GAP probe");
  diag->add_option("--gap-eps", gap_eps, "Distance to the unit circle for the GAP probe");
  diag->add_option("--directions", dopt.directions, "Directions for the cover check")
      ->check(CLI::PositiveNumber);
  diag->add_option("--eps0", dopt.eps0, "Exponent of the cover threshold N^eps0");
  diag->add_option("--cover-radius", cover_radius, "Override |r| in the cover check");
  diag->add_option("--grid", dopt.ratio_grid, "Grid for the ratio checks")->check(CLI::Range(64, 1 << 20));
  diag->add_option("--scan-max", scan_max, "Batch mode: one CSV row per level up to this bound");
  diag->add_option("--histogram", bins, "With --scan-max: histogram of the normalized separation");
  add_common(diag, common, false);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo moments of the zero count");
  add_level(sim, true);
  add_dist(sim);
  add_curve_options(sim, curve_args);
  std::size_t sim_trials = 1000;
  int k_max = 4;
  std::string csv_path;
  bool timing = false, with_prediction = false;
  std::optional<double> field_t0;
  sim->add_option("--trials", sim_trials, "Number of trials")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--grid-factor", grid_factor, "Grid nodes per unit length over lambda")
      ->check(CLI::Range(1.0, 1e4));
  sim->add_option("--k-max", k_max, "Highest moment")->check(CLI::Range(1, 4));
  sim->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  sim->add_option("--csv", csv_path, "Write per-trial counts as CSV");
  sim->add_flag("--timing", timing, "Record wall time in the report");
  sim->add_flag("--predict", with_prediction, "Compare the variance with the Gaussian prediction");
  sim->add_option("--field-moments", field_t0, "Sample F and F' at this parameter instead");
  add_common(sim, common, true);

  // compare
  auto* cmp = app.add_subcommand("compare", "Moment gap between two run manifests");
  std::string path_a, path_b;
  int k = 1;
  cmp->add_option("--a", path_a, "First manifest")->required();
  cmp->add_option("--b", path_b, "Second manifest")->required();
  cmp->add_option("--k", k, "Moment order")->check(CLI::Range(1, 4));
  add_common(cmp, common, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    auto finish = [&](const json& j) {
      if (!common.out_path.empty()) write_file(common.out_path, j.dump(2) + "\n");
      emit(out, j, common.format);
    };

    if (lat->parsed()) {
      const LatticeSet l = enumerate_lattice(d, m);
      json j = l;
      if (!common.out_path.empty()) save_lattice(common.out_path, l);
      if (stats) {
        j["min_sep"] = l.size() >= 2 ? json(min_separation(l)) : json(nullptr);
        j["B_arc"] = d == 2 && !l.empty() ? json(arc_concentration(l)) : json(nullptr);
        j["tau4"] = d == 2 && !l.empty() ? json(fourth_fourier(l)) : json(nullptr);
      }
      emit(out, j, common.format);
    } else if (validate->parsed()) {
      Curve c = Curve::make(family, parse_params(params));
      if (arclength) c = reparametrize_arclength(c);
      std::optional<NonconfinementQuery> q;
      if (confine_m) {
        const LatticeSet l = enumerate_lattice(c.dim(), *confine_m);
        q = NonconfinementQuery{l.lambda(), static_cast<double>(l.size()), confine_alpha, confine_c0};
      }
      const Condition1Report rep = validate_condition1(c, q, curve_grid);
      json j = rep;
      j["curve"] = c;
      j["length"] = c.length();
      if (!common.out_path.empty()) write_file(common.out_path, json(c).dump(2) + "\n");
      emit(out, j, common.format);
    } else if (zeros->parsed()) {
      auto l = std::make_shared<const LatticeSet>(enumerate_lattice(d, m));
      if (l->empty()) throw Error(ErrorCode::InvalidLevel, "level has no lattice points");
      const CurveSampler sampler(build_curve(curve_args, d), grid_factor * l->lambda());
      ZeroOptions zopt;
      zopt.min_grid_factor = grid_factor;
      const auto model = CoefficientModel::from_name(dist);
      json results = json::array();
      for (std::size_t i = 0; i < trials; ++i) {
        const std::uint64_t s = trials == 1 ? seed : derive_seed(seed, i);
        json zj = count_zeros(sample_coefficients(model, l, s), sampler, std::nullopt, zopt);
        zj["seed"] = s;
        results.push_back(std::move(zj));
      }
      finish(trials == 1 ? results.front() : results);
    } else if (kr->parsed()) {
      const LatticeSet l = enumerate_lattice(d, m);
      if (l.empty()) throw Error(ErrorCode::InvalidLevel, "level has no lattice points");
      KacRicePrediction p = predict(l);
      std::optional<VarianceIntegral> vi;
      std::optional<KacRiceVariance> kv;
      if (with_variance) {
        const Curve c = build_curve(curve_args, d);
        // The literal integral is planar; the Kac-Rice variance works in both dimensions.
        if (d == 2) {
          vi = variance_integral(l, c, quad_nodes);
          p.variance_leading = vi->value;
        }
        kv = kac_rice_variance(l, c);
      }
      json j = p;
      if (!common.out_path.empty()) write_file(common.out_path, j.dump(2) + "\n");
      j["first_intensity"] = first_intensity(d, m);
      if (vi) j["variance_integral"] = *vi;
      if (kv) j["kac_rice_variance"] = *kv;
      emit(out, j, common.format);
    } else if (diag->parsed()) {
      if (scan_max > 0) {
        const auto rows = scan_levels(scan_max);
        if (bins > 0) {
          std::vector<double> v;
          for (const auto& r : rows) v.push_back(r.normalized_sep);
          emit(out, json(histogram(v, bins)), common.format == "csv" ? "json" : common.format);
        } else {
          out << scan_csv(rows);
        }
        return 0;
      }
      if (m <= 0) throw CLI::RequiredError("--m");
      const LatticeSet l = enumerate_lattice(d, m);
      dopt.all = all;
      dopt.cover_radius = cover_radius;
      DiagnosticsReport rep = diagnose(l, build_curve(curve_args, d), dopt);
      if (!gap_text.empty()) rep.gap_probe = gap_circle_probe(gap_spec_from_string(gap_text), gap_delta, gap_eps);
      emit(out, json(rep), common.format);
    } else if (sim->parsed()) {
      RunConfig cfg;
      cfg.d = d;
      cfg.m = m;
      cfg.curve = build_curve(curve_args, d);
      cfg.model = CoefficientModel::from_name(dist);
      cfg.trials = sim_trials;
      cfg.master_seed = seed;
      cfg.grid_factor = grid_factor;
      cfg.k_max = k_max;
      if (field_t0) {
        finish(json(field_moments(cfg, *field_t0, threads)));
        return 0;
      }
      Manifest man{cfg, run_trials(cfg, threads)};
      if (!common.out_path.empty()) save_manifest(common.out_path, man, timing);
      if (!csv_path.empty()) write_file(csv_path, counts_csv(man.report));
      json j = manifest_to_json(man, timing);
      if (with_prediction) {
        const LatticeSet l = enumerate_lattice(d, m);
        KacRicePrediction p = predict(l);
        if (d == 2) p.variance_leading = variance_integral(l, cfg.curve).value;
        j["prediction"] = p;
        j["variance_comparison"] = variance_vs_prediction(man.report, p);
      }
      emit(out, j, common.format);
    } else if (cmp->parsed()) {
      const Manifest a = load_manifest(path_a);
      const Manifest b = load_manifest(path_b);
      json j = universality_gap(a.report, b.report, k);
      j["k"] = k;
      j["model_a"] = a.report.model_id;
      j["model_b"] = b.report.model_id;
      emit(out, j, common.format);
    }
  } catch (const Error& e) {
    err << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  return 0;
}

}  // namespace torus_waves
