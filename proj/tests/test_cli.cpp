#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "torus_waves/cli.hpp"
#include "torus_waves/geometry.hpp"
#include "torus_waves/harness.hpp"
#include "torus_waves/kacrice.hpp"
#include "torus_waves/zeros.hpp"

using namespace torus_waves;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
  json j() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("torus_waves_cli_" + name);
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("kacrice prints the mean") {
  const Run r = run({"kacrice", "--d", "2", "--m", "2"});
  CHECK(r.code == 0);
  CHECK(r.j().at("mean").get<double>() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.j().at("first_intensity").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("exit codes") {
  const Run bad_level = run({"lattice", "--d", "3", "--m", "7"});
  CHECK(bad_level.code == 1);
  const json e = json::parse(bad_level.err);
  CHECK(e.at("error") == "InvalidLevel");
  CHECK(e.contains("message"));

  const Run unknown = run({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({"lattice", "--d", "2", "--m", "5", "--bogus"}).code == 2);
  CHECK(run({"lattice", "--d", "4", "--m", "5"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"simulate", "--help"}).code == 0);
  CHECK(run({"compare", "--a", "/nonexistent/a.json", "--b", "/nonexistent/b.json"}).code == 1);
}

TEST_CASE("lattice output and cache round trip") {
  const auto p = temp_file("lattice.json");
  const Run r = run({"lattice", "--d", "2", "--m", "25", "--stats", "--out", p.string()});
  REQUIRE(r.code == 0);
  CHECK(r.j().at("points").size() == 12);
  CHECK(r.j().contains("tau4"));
  const LatticeSet back = load_lattice(p);
  CHECK(back.size() == 12);
  CHECK(back.level() == 25);
  fs::remove(p);
}

TEST_CASE("curve validate") {
  const auto p = temp_file("curve.json");
  const Run r = run({"curve", "validate", "--family", "helix", "--params", "radius=0.1,winding=8,pitch=0.6",
                     "--out", p.string()});
  REQUIRE(r.code == 0);
  CHECK(r.j().at("passes").get<bool>());
  std::ifstream in(p);
  const Curve c = curve_from_json(json::parse(in));
  CHECK(c.family() == CurveFamily::helix);
  CHECK(c.length() == doctest::Approx(1.0));
  fs::remove(p);

  const Run seg = run({"curve", "validate", "--family", "segment"});
  CHECK(seg.code == 0);
  CHECK_FALSE(seg.j().at("passes").get<bool>());
  CHECK(run({"curve", "validate", "--family", "circle", "--params", "radius=3"}).code == 1);
}

TEST_CASE("zeros is determined by the seed and round trips") {
  const auto p = temp_file("zeros.json");
  const Run a = run({"zeros", "--d", "2", "--m", "65", "--seed", "11", "--out", p.string()});
  const Run b = run({"zeros", "--d", "2", "--m", "65", "--seed", "11"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  std::ifstream in(p);
  const ZeroCount zc = zero_count_from_json(json::parse(in));
  CHECK(zc.count == a.j().at("count").get<std::size_t>());
  fs::remove(p);
  const Run many = run({"zeros", "--d", "3", "--m", "3", "--trials", "3", "--seed", "4"});
  REQUIRE(many.code == 0);
  CHECK(many.j().size() == 3);
}

TEST_CASE("simulate, config and compare") {
  const auto cfg = temp_file("config.json");
  const auto ma = temp_file("a.json");
  const auto mb = temp_file("b.json");
  const auto csv = temp_file("counts.csv");
  write(cfg, R"({"d": 2, "m": 25, "trials": 7, "seed": 3})");

  const Run a = run({"simulate", "--config", cfg.string(), "--out", ma.string(), "--csv", csv.string()});
  REQUIRE(a.code == 0);
  CHECK(a.j().at("config").at("trials") == 7);
  CHECK(a.j().at("config").at("m") == 25);
  const Manifest back = load_manifest(ma);
  CHECK(back.report.counts.size() == 7);
  CHECK(manifest_to_json(back).dump() == a.j().dump());
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "trial,count,certified");

  // Explicit flags win over the config file.
  const Run over = run({"simulate", "--config", cfg.string(), "--trials", "4", "--dist", "bernoulli",
                        "--out", mb.string()});
  REQUIRE(over.code == 0);
  CHECK(over.j().at("config").at("trials") == 4);
  CHECK(over.j().at("config").at("m") == 25);

  const Run cmp = run({"compare", "--a", ma.string(), "--b", mb.string(), "--k", "2"});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.j().at("gap").get<double>() >= 0.0);
  CHECK(cmp.j().at("model_b") == "bernoulli");

  write(cfg, R"({"m": 25, "no_such_option": 1})");
  CHECK(run({"simulate", "--config", cfg.string()}).code == 2);

  write(ma, R"({"schema": "torus-waves/run-manifest", "version": 0})");
  const Run old = run({"compare", "--a", ma.string(), "--b", mb.string()});
  CHECK(old.code == 1);
  CHECK(json::parse(old.err).at("error") == "SchemaMismatch");

  for (const auto& p : {cfg, ma, mb, csv}) fs::remove(p);
}

TEST_CASE("simulate output is independent of threads and hides timing") {
  const Run one = run({"simulate", "--d", "2", "--m", "65", "--trials", "20", "--seed", "5", "--threads", "1"});
  const Run eight = run({"simulate", "--d", "2", "--m", "65", "--trials", "20", "--seed", "5", "--threads", "8"});
  REQUIRE(one.code == 0);
  CHECK(one.out == eight.out);
  CHECK(one.out.find("wall_time") == std::string::npos);
  const Run timed = run({"simulate", "--d", "2", "--m", "65", "--trials", "2", "--timing"});
  CHECK(timed.out.find("wall_time") != std::string::npos);
  const Run pred = run({"simulate", "--d", "2", "--m", "65", "--trials", "20", "--predict"});
  REQUIRE(pred.code == 0);
  CHECK(pred.j().at("variance_comparison").contains("ratio"));
  const Run fm = run({"simulate", "--d", "3", "--m", "3", "--trials", "2000", "--field-moments", "0.25"});
  REQUIRE(fm.code == 0);
  CHECK(fm.j().at("samples") == 2000);
}

TEST_CASE("diagnose") {
  const Run r = run({"diagnose", "--d", "2", "--m", "65", "--all", "--gap", "1:0,0;0.5,0:4", "--gap-delta", "0.5",
                     "--gap-eps", "0.001"});
  REQUIRE(r.code == 0);
  CHECK(r.j().at("N") == 16);
  CHECK(r.j().at("gap_probe") == 2);
  CHECK(r.j().at("bad_set_measure").is_number());
  const Run scan = run({"diagnose", "--scan-max", "10"});
  REQUIRE(scan.code == 0);
  CHECK(scan.out.rfind("m,N,", 0) == 0);
  const Run hist = run({"diagnose", "--scan-max", "50", "--histogram", "5"});
  REQUIRE(hist.code == 0);
  CHECK(hist.j().at("counts").size() == 5);
}

TEST_CASE("output formats") {
  const Run pretty = run({"kacrice", "--d", "3", "--m", "3", "--format", "pretty"});
  CHECK(pretty.code == 0);
  CHECK(pretty.out.find("mean") != std::string::npos);
  CHECK_THROWS([&] { const json parsed = json::parse(pretty.out); }());
  const Run csv = run({"kacrice", "--d", "3", "--m", "3", "--format", "csv"});
  CHECK(csv.code == 0);
  CHECK(csv.out.find("mean") != std::string::npos);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 2);
  CHECK(run({"kacrice", "--d", "3", "--m", "3", "--format", "xml"}).code == 2);
}

TEST_CASE("kacrice with the variance integral writes a loadable record") {
  const auto p = temp_file("pred.json");
  const Run r = run({"kacrice", "--d", "2", "--m", "5", "--variance", "--out", p.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(p);
  const KacRicePrediction back = kacrice_prediction_from_json(json::parse(in));
  CHECK(back.variance_leading.has_value());
  CHECK(*back.variance_leading == r.j().at("variance_integral").at("value").get<double>());
  fs::remove(p);
}
