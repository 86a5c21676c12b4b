#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gen.hpp"
#include "kgibbs/config.hpp"
#include "kgibbs/run.hpp"

using namespace kg;
namespace fs = std::filesystem;

namespace {

bool has(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::string scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kgibbs_test_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  auto r = parse_config("[experiment]\nkind = sample\n[model]\nN = 3\n");
  REQUIRE(r.ok());
  CHECK(r.config.kind == ExperimentKind::sample);
  CHECK(r.config.k_value() == 2.0);
  CHECK(r.config.beta == 1.0);
  CHECK(r.config.grid_cells == 2048);
  CHECK(r.config.seed == 1);
  CHECK(r.config.chains == 4);
}

TEST_CASE("inconsistent N, k, m names the constraint") {
  auto r = parse_config("[model]\nN = 5\nk = 2\nm = 1\n");
  CHECK_FALSE(r.ok());
  CHECK(has(r.errors, "N must equal k·m + 1 = 3"));
}

TEST_CASE("duplicate keys report both lines; all errors are collected") {
  auto r = parse_config("[model]\nN = 3\nbeta = 1\n\nbeta = 2\n[numerics]\nchains = 0\nsigma = -1\n");
  CHECK(has(r.errors, "line 5: duplicate key 'model.beta' (first set on line 3)"));
  CHECK(has(r.errors, "chains must be positive"));
  CHECK(has(r.errors, "sigma must be positive"));
}

TEST_CASE("unknown keys: warning by default, error in strict mode") {
  const std::string text = "[model]\nN = 2\ncolour = red\n";
  auto lax = parse_config(text);
  CHECK(lax.ok());
  CHECK(has(lax.warnings, "unknown key 'model.colour'"));
  auto strict = parse_config(text, true);
  CHECK_FALSE(strict.ok());
  CHECK(has(strict.errors, "line 3: unknown key 'model.colour'"));
}

TEST_CASE("log-Fano configs check the degree against the weights") {
  auto bad = parse_config("[model]\nN = 2\nm = 1\nbase = log-fano\ndivisor = 0:0.5; 1:0.5; inf:0.5\n");
  CHECK(has(bad.errors, "m = 2 - Σw = 0.5"));
  auto good = parse_config("[model]\nN = 2\nm = 0.5\nbase = log-fano\ndivisor = 0:0.5; 1:0.5; inf:0.5\n");
  REQUIRE(good.ok());
  auto m = good.config.model();
  CHECK(m.k == doctest::Approx(2.0));
  CHECK(m.divisor->points.size() == 3);
}

TEST_CASE("property: canonical form round-trips exactly") {
  gen::Source g(51);
  const char* kinds[] = {"sample", "meanfield", "partition", "threshold", "scan", "probe"};
  for (int t = 0; t < 200; ++t) {
    ExperimentConfig c;
    c.kind = static_cast<ExperimentKind>(g.integer(0, 5));
    c.seed = g.rng();
    c.N = g.integer(2, 40);
    c.m = g.uniform(0.2, 3.0);
    c.beta = g.normal() * 3.0;
    c.sigma = g.uniform(0.01, 2.0);
    c.p_global = g.uniform();
    c.tolerance = std::exp(-g.uniform(5, 30));
    c.eps = {g.uniform(0.01, 1.0), g.uniform(1.0, 3.0)};
    c.Ns = {2, g.integer(3, 99)};
    c.orthonormal = g.integer(0, 1);
    if (g.integer(0, 2) == 0) c.perturbation = "zonal:" + std::to_string(g.uniform(-1, 1));
    std::string text = canonical(c);
    auto r = parse_config(text, true);
    REQUIRE_MESSAGE(r.ok(), text);
    CHECK(canonical(r.config) == text);
    CHECK(r.config.beta == c.beta);
    CHECK(r.config.m == c.m);
    CHECK(to_string(r.config.kind) == kinds[static_cast<int>(c.kind)]);
  }
}

TEST_CASE("sample runs are reproducible and their manifests verify") {
  const std::string text =
      "[experiment]\nkind = sample\nseed = 17\n[model]\nN = 4\nbeta = 1.5\n"
      "[numerics]\nsteps = 20000\nburn_in = 2000\nchains = 2\ngrid_cells = 512\n";
  auto cfg = parse_config(text).config;
  const std::string da = scratch("a"), db = scratch("b");
  cfg.out = da;
  auto a = run(cfg);
  cfg.out = db;
  auto b = run(cfg);
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (size_t i = 0; i < a.outputs.size(); ++i) CHECK(a.outputs[i].sha256 == b.outputs[i].sha256);
  CHECK(verify_manifest(a, da).empty());
  CHECK(verify_manifest(a, db).empty());
}

TEST_CASE("manifest round trip, checksums, and compare verdicts") {
  const std::string base =
      "[experiment]\nkind = sample\n[model]\nN = 3\nbeta = 1\n"
      "[numerics]\nsteps = 60000\nburn_in = 3000\nchains = 4\ngrid_cells = 512\n";
  auto cfg = parse_config(base).config;
  cfg.out = scratch("c1");
  cfg.seed = 1;
  auto a = run(cfg);
  auto back = read_manifest(cfg.out + "/manifest.json");
  CHECK(back.config_hash == a.config_hash);
  CHECK(verify_manifest(back, cfg.out).empty());
  {
    std::ofstream f(cfg.out + "/one_point.csv", std::ios::app);
    f << "tampered\n";
  }
  CHECK(has(verify_manifest(back, cfg.out), "one_point.csv: checksum mismatch"));

  CHECK(compare(a, a).verdict == "identical");
  CHECK(compare(a, a).diffs.empty());

  cfg.out = scratch("c2");
  cfg.seed = 2;
  auto b = run(cfg);
  auto rep = compare(a, b);
  CHECK(rep.verdict == "consistent");
  bool saw_energy = false;
  for (const auto& d : rep.diffs)
    if (d.field == "mean_energy") {
      saw_energy = true;
      CHECK(d.status == "consistent");
    }
  CHECK(saw_energy);

  cfg.out = scratch("c3");
  cfg.beta = 2.0;
  auto c = run(cfg);
  CHECK(compare(a, c).verdict == "incomparable");

  RunManifest other = a;
  other.kind = "partition";
  CHECK_THROWS(compare(a, other));
}

TEST_CASE("threshold run on weights (0.9, 0.1, 0.1) reports unstable") {
  auto r = parse_config(
      "[experiment]\nkind = threshold\n[model]\nN = 2\nm = 0.9\nbase = log-fano\n"
      "divisor = 0:0.9; 1:0.1; -1+0.3i:0.1\n");
  REQUIRE(r.ok());
  r.config.out = scratch("thr");
  auto m = run(r.config);
  CHECK(m.results["verdict"] == "unstable");
  std::ifstream f(r.config.out + "/threshold.json");
  auto j = json::parse(f);
  CHECK(j["verdict"] == "unstable");
  CHECK(j["quadrature_at_minus_one"] == "divergent");
  CHECK(j["weight_condition"]["stable"] == false);
}

TEST_CASE("scan run writes a gap column") {
  auto r = parse_config(
      "[experiment]\nkind = scan\n[model]\nN = 2\n"
      "[numerics]\nbeta_min = 0.2\nbeta_max = 2\nbeta_points = 3\nNs = 2,3,4\nti_sweeps = 2000\ngrid_cells = 512\n");
  REQUIRE(r.ok());
  r.config.out = scratch("scan");
  run(r.config);
  std::ifstream f(r.config.out + "/scan.csv");
  std::string header, line;
  std::getline(f, header);
  CHECK(header == "beta,N,f_N,err,infF,gap,method");
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("invalid configs raise errors with context") {
  ExperimentConfig c;
  c.N = 5;
  c.k = 2;
  try {
    run(c);
    FAIL("expected a throw");
  } catch (const RunError& e) {
    auto j = error_json(e);
    CHECK(j["error"].get<std::string>().find("N must equal") != std::string::npos);
    CHECK(j["context"].size() >= 1);
  }
}
