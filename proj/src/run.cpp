#include "kgibbs/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kgibbs/analysis.hpp"
#include "kgibbs/meanfield.hpp"
#include "kgibbs/sampler.hpp"
#include "kgibbs/thermo.hpp"
#include "kgibbs/transport.hpp"
#include "kgibbs/util.hpp"

namespace fs = std::filesystem;

namespace kg {

json error_json(const std::exception& e) {
  json j;
  j["error"] = e.what();
  j["context"] = json::array();
  if (auto* r = dynamic_cast<const RunError*>(&e))
    for (const auto& c : r->context()) j["context"].push_back(c);
  return j;
}

json to_json(const RunManifest& m) {
  json j;
  j["kind"] = m.kind;
  j["config_hash"] = m.config_hash;
  j["model_hash"] = m.model_hash;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["wall_clock"] = m.wall_clock;
  j["outputs"] = json::array();
  for (const auto& a : m.outputs) j["outputs"].push_back({{"file", a.file}, {"sha256", a.sha256}});
  j["results"] = m.results;
  return j;
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.kind = j.at("kind").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.model_hash = j.at("model_hash").get<std::string>();
  m.tool_version = j.value("tool_version", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.threads = j.value("threads", 1);
  m.wall_clock = j.value("wall_clock", 0.0);
  for (const auto& a : j.at("outputs")) m.outputs.push_back({a.at("file"), a.at("sha256")});
  m.results = j.value("results", json::object());
  return m;
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open manifest '" + path + "'");
  return manifest_from_json(json::parse(f));
}

std::vector<std::string> verify_manifest(const RunManifest& m, const std::string& dir) {
  std::vector<std::string> bad;
  for (const auto& a : m.outputs) {
    fs::path p = fs::path(dir) / a.file;
    if (!fs::exists(p)) bad.push_back(a.file + ": missing");
    else if (sha256_file(p.string()) != a.sha256) bad.push_back(a.file + ": checksum mismatch");
  }
  return bad;
}

namespace {

class Writer {
 public:
  Writer(const std::string& dir, RunManifest& m) : dir_(dir), m_(m) { fs::create_directories(dir); }
  template <class F>
  void file(const std::string& name, F&& body) {
    fs::path p = fs::path(dir_) / name;
    {
      std::ofstream os(p);
      if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
      os.precision(17);
      body(os);
    }
    m_.outputs.push_back({name, sha256_file(p.string())});
  }
  void json_file(const std::string& name, const json& j) {
    file(name, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  }

 private:
  std::string dir_;
  RunManifest& m_;
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

GridPtr grid_for(const ExperimentConfig& c) { return make_grid(SphereGrid::nearest_resolution(c.grid_cells)); }

ThermoOptions thermo_options(const ExperimentConfig& c) {
  ThermoOptions t;
  t.nodes = c.ti_nodes;
  t.sweeps = c.ti_sweeps;
  t.burn_sweeps = std::max(100, c.ti_sweeps / 10);
  t.chains = c.chains;
  t.threads = c.threads;
  t.seed = c.seed;
  t.proposal.p_global = c.p_global;
  t.proposal.sigma = c.sigma;
  return t;
}

PartitionOptions quad_options(const ExperimentConfig& c) {
  PartitionOptions q = default_partition_options();
  q.inner.gauss_order = q.outer.gauss_order = c.quad_order;
  q.inner.n_psi = q.outer.n_psi = c.quad_psi;
  return q;
}

json partition_json(const PartitionResult& r) {
  return {{"beta", r.beta},     {"N", r.N},
          {"log_z", std::isfinite(r.log_z) ? json(r.log_z) : json("inf")},
          {"error", r.error},   {"method", to_string(r.method)},
          {"status", to_string(r.status)}, {"stratum", r.stratum},
          {"evaluations", r.evaluations}, {"message", r.message}};
}

void run_sample(const ExperimentConfig& c, const ModelSpec& model, Writer& w, RunManifest& m, std::ostream* log) {
  ChainConfig cc;
  cc.model = model;
  cc.steps = c.steps;
  cc.burn_in = c.burn_in;
  cc.thinning = c.thinning;
  cc.proposal.p_global = c.p_global;
  cc.proposal.sigma = c.sigma;
  cc.seed = c.seed;
  cc.proposal_cells = c.grid_cells;
  cc.keep_samples = false;
  cc.histogram = grid_for(c);
  auto chains = run_chains(cc, c.chains, c.threads);
  std::vector<double> counts(cc.histogram->size(), 0.0);
  double mean = 0.0, var = 0.0, acc = 0.0, iat = 0.0;
  json per = json::array();
  for (size_t i = 0; i < chains.size(); ++i) {
    const auto& r = chains[i];
    w.file("trace_" + std::to_string(i) + ".csv", [&](std::ostream& os) { write_trace_csv(os, r); });
    for (size_t j = 0; j < counts.size(); ++j) counts[j] += r.histogram[j];
    mean += r.stats.mean_energy.mean;
    var += r.stats.mean_energy.se * r.stats.mean_energy.se;
    acc += r.stats.acceptance;
    iat += r.stats.iat;
    per.push_back({{"chain", i}, {"mean_energy", r.stats.mean_energy.mean}, {"se", r.stats.mean_energy.se},
                   {"acceptance", r.stats.acceptance}, {"iat", r.stats.iat}, {"thinning", r.stats.thinning},
                   {"sigma", r.stats.sigma}, {"kept", r.stats.energy.size()},
                   {"max_cache_error", r.stats.max_cache_error}, {"widened", r.stats.mean_energy.widened}});
    if (log) *log << "chain " << i << ": <E> = " << r.stats.mean_energy.mean << " +- " << r.stats.mean_energy.se << "\n";
  }
  const double n = chains.size();
  auto one = histogram_density(counts, cc.histogram);
  w.file("one_point.csv", [&](std::ostream& os) { write_density_csv(os, one); });
  std::vector<double> accs;
  for (const auto& r : chains) accs.push_back(r.stats.acceptance);
  m.results["mean_energy"] = mean / n;
  m.results["mean_energy_err"] = std::sqrt(var) / n;
  m.results["acceptance"] = acc / n;
  m.results["acceptance_err"] = n > 1 ? std::sqrt(variance(accs) / n) : 0.0;
  json summary = {{"seed", c.seed}, {"model_hash", m.model_hash}, {"chains", per}, {"mean_energy", mean / n},
                  {"mean_energy_err", std::sqrt(var) / n}, {"acceptance", acc / n}, {"iat", iat / n}};
  if (cc.histogram->size() <= 2000) {
    DensityGrid base(cc.histogram, model.base.cell_masses(*cc.histogram));
    summary["w2_to_base"] = wasserstein(one, base).w2;
  }
  w.json_file("summary.json", summary);
}

void run_meanfield(const ExperimentConfig& c, const ModelSpec& model, Writer& w, RunManifest& m, std::ostream* log) {
  auto g = grid_for(c);
  MeanField mf(g, model.metric, model.base);
  MASolveOptions o;
  o.tol = c.tolerance;
  auto r = ma_solve(mf, c.beta, o);
  if (log) *log << "ma_solve: " << (r.converged ? "converged" : "not converged") << " at beta " << r.beta << "\n";
  w.file("potential.csv", [&](std::ostream& os) { write_potential_csv(os, r.phi); });
  w.file("density.csv", [&](std::ostream& os) { write_density_csv(os, r.mu); });
  json steps = json::array();
  for (const auto& s : r.log) steps.push_back({{"beta", s.beta}, {"newton", s.newton_iterations}, {"residual", s.residual}, {"accepted", s.accepted}});
  m.results["converged"] = r.converged;
  m.results["beta_reached"] = r.beta;
  m.results["residual"] = r.residual;
  m.results["newton_iterations"] = r.newton_iterations;
  if (r.converged) {
    m.results["free_energy"] = free_energy(mf, r.mu, c.beta);
    m.results["energy"] = energy_of_measure(mf, r.mu, EnergyMethod::potential).value;
    m.results["entropy"] = entropy(r.mu, mf.base());
    m.results["phi_sup"] = r.phi.values.cwiseAbs().maxCoeff();
  }
  w.json_file("meanfield.json", {{"converged", r.converged}, {"beta", r.beta}, {"last_good_beta", r.last_good_beta},
                                 {"residual", r.residual}, {"log_z", r.log_z}, {"message", r.message},
                                 {"continuation", steps}});
}

void run_partition(const ExperimentConfig& c, const ModelSpec& model, Writer& w, RunManifest& m, std::ostream* log) {
  json out;
  PartitionResult best;
  bool have = false;
  if (model.N <= 3) {
    auto q = partition_quadrature(model, c.beta, quad_options(c));
    out["quadrature"] = partition_json(q);
    if (log) *log << "quadrature: " << to_string(q.status) << " log Z = " << q.log_z << "\n";
    if (q.status != QuadStatus::inconclusive) best = q, have = true;
  }
  if (!have) {
    if (!partition_finite(model, c.beta)) {
      best.beta = c.beta;
      best.N = model.N;
      best.status = QuadStatus::divergent;
      best.log_z = std::numeric_limits<double>::infinity();
      best.message = "oracle: Z is infinite at this beta";
    } else {
      auto t = thermo_integration(model, c.beta, thermo_options(c));
      out["thermo_integration"] = partition_json(t.partition);
      out["thermo_integration"]["mc_error"] = t.mc_error;
      out["thermo_integration"]["rule_error"] = t.rule_error;
      json pts = json::array();
      for (const auto& p : t.points) pts.push_back({{"beta", p.beta}, {"mean_energy", p.energy.mean}, {"se", p.energy.se}, {"acceptance", p.acceptance}});
      out["thermo_integration"]["nodes"] = pts;
      best = t.partition;
    }
  }
  m.results["log_z"] = std::isfinite(best.log_z) ? json(best.log_z) : json("inf");
  m.results["log_z_err"] = best.error;
  m.results["status"] = to_string(best.status);
  m.results["method"] = to_string(best.method);
  w.json_file("partition.json", out);
}

void run_threshold(const ExperimentConfig& c, const ModelSpec& model, Writer& w, RunManifest& m, std::ostream* log) {
  ThresholdOptions o;
  o.quad = quad_options(c);
  auto rep = gibbs_threshold(model, o);
  json j;
  j["oracle"] = std::isfinite(rep.oracle) ? json(rep.oracle) : json("inf");
  j["bracket"] = {rep.lo, std::isfinite(rep.hi) ? json(rep.hi) : json("inf")};
  j["numeric"] = rep.numeric;
  j["contains_oracle"] = rep.contains_oracle;
  j["discrepancy"] = rep.discrepancy;
  j["message"] = rep.message;
  j["strata"] = json::array();
  for (const auto& s : rep.strata)
    j["strata"].push_back({{"label", s.label()}, {"size", s.size}, {"point", s.point}, {"weight", s.weight},
                           {"gamma", std::isfinite(s.gamma) ? json(s.gamma) : json("inf")}});
  j["binding"] = json::array();
  for (const auto& s : rep.binding) j["binding"].push_back(s.label());
  j["probes"] = json::array();
  for (const auto& [g, st] : rep.probes) j["probes"].push_back({{"gamma", g}, {"status", to_string(st)}});
  // Gibbs stability: Z finite at β = -1
  bool oracle_stable = rep.oracle > 1.0;
  j["verdict"] = oracle_stable ? "stable" : "unstable";
  m.results["verdict"] = j["verdict"];
  m.results["oracle"] = j["oracle"];
  if (model.divisor) {
    auto wc = weight_condition(*model.divisor);
    j["weight_condition"] = {{"margin", wc.margin}, {"stable", wc.stable}, {"binding", wc.binding}};
    m.results["weight_margin"] = wc.margin;
  }
  if (model.N == 2 || (model.N == 3 && model.base.is_fubini_study() && !model.metric.has_perturbation())) {
    PartitionOptions q = quad_options(c);
    q.error_estimate = false;
    auto r = partition_quadrature(model, -1.0, q);
    j["quadrature_at_minus_one"] = to_string(r.status);
    m.results["quadrature_at_minus_one"] = to_string(r.status);
  }
  if (log) *log << "threshold: oracle " << rep.oracle << ", verdict " << j["verdict"].get<std::string>() << "\n";
  w.json_file("threshold.json", j);
}

void run_scan(const ExperimentConfig& c, Writer& w, RunManifest& m, std::ostream* log) {
  ScanOptions so;
  so.betas = linspace(c.beta_min, c.beta_max, c.beta_points);
  so.Ns = c.Ns;
  so.thermo = thermo_options(c);
  so.grid_cells = c.grid_cells;
  auto scan = free_energy_limit_scan(so);
  w.file("scan.csv", [&](std::ostream& os) { write_scan_csv(os, scan); });
  json j;
  j["flags"] = scan.flags;
  j["analyticity"] = json::array();
  for (int N : c.Ns) {
    std::vector<double> b, f, e;
    for (const auto& r : scan.rows)
      if (r.N == N) b.push_back(r.beta), f.push_back(r.f), e.push_back(r.err);
    if (b.size() < 20) continue;
    auto a = analyticity_probe(b, f, e);
    j["analyticity"].push_back({{"N", N}, {"flagged", a.flagged}, {"flagged_beta", a.flagged_beta}, {"max_ratio", a.max_ratio}});
  }
  for (const auto& r : scan.rows)
    if (r.beta == so.betas.back()) {
      std::string key = "gap_N" + std::to_string(r.N);
      m.results[key] = r.gap;
      m.results[key + "_err"] = r.err;
    }
  if (log) *log << "scan: " << scan.rows.size() << " rows, " << scan.flags.size() << " flags\n";
  w.json_file("scan.json", j);
}

void run_probe(const ExperimentConfig& c, const ModelSpec& model, Writer& w, RunManifest& m, std::ostream* log) {
  auto g = grid_for(c);
  json j;
  if (c.probe == "gamma") {
    MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
    GammaOptions o;
    o.Ns = c.Ns;
    o.samples = c.samples;
    o.seed = c.seed;
    auto rep = gamma_convergence_probe(mf, cap_measure(g, 0.125), o);
    j["energy"] = rep.energy;
    j["energy_green"] = rep.energy_green;
    j["rows"] = json::array();
    for (const auto& r : rep.rows) {
      j["rows"].push_back({{"N", r.N}, {"mean", r.energy.mean}, {"se", r.energy.se}, {"gap", r.gap}, {"offset", r.offset}, {"one_sided", r.one_sided}});
      m.results["gap_N" + std::to_string(r.N)] = r.gap;
      m.results["gap_N" + std::to_string(r.N) + "_err"] = r.energy.se;
    }
    j["gap_decreasing"] = rep.gap_decreasing;
    j["one_sided"] = rep.one_sided;
  } else if (c.probe == "diameter") {
    MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
    DiameterOptions o;
    o.ks.clear();
    for (int N : c.Ns) o.ks.push_back(N - 1);
    o.seed = c.seed;
    auto rep = transfinite_diameter_probe(mf, model.metric.perturbation, o);
    j["target"] = rep.target;
    j["rows"] = json::array();
    for (const auto& r : rep.rows) {
      j["rows"].push_back({{"k", r.k}, {"best", r.best}, {"normalized", r.normalized}, {"gap", r.gap}, {"stagnated", r.stagnated}});
      m.results["gap_k" + std::to_string(r.k)] = r.gap;
    }
  } else if (c.probe == "ldp") {
    MeanField mf(g, model.metric, model.base);
    LdpOptions o;
    o.eps = c.eps;
    auto rep = ldp_ball_probe(model, mf, cap_measure(g, 0.125), o);
    j["excess"] = rep.excess;
    j["rows"] = json::array();
    for (const auto& r : rep.rows) j["rows"].push_back({{"eps", r.eps}, {"requested", r.requested}, {"prob", r.prob}, {"rate", r.rate}, {"widened", r.widened}});
    m.results["excess"] = rep.excess;
  } else {
    auto d = wasserstein(cap_measure(g, 0.125), DensityGrid::uniform(g));
    j = {{"w2", d.w2}, {"solver", d.solver}, {"gap", d.gap}, {"regularization", d.regularization}};
    m.results["w2"] = d.w2;
  }
  if (log) *log << "probe " << c.probe << " done\n";
  w.json_file("probe_" + c.probe + ".json", j);
}

}  // namespace

RunManifest run(const ExperimentConfig& cfg, std::ostream* log) {
  auto t0 = std::chrono::steady_clock::now();
  RunManifest m;
  m.kind = to_string(cfg.kind);
  // the output location is not part of the experiment
  ExperimentConfig hashed = cfg;
  hashed.out = ".";
  const std::string canon = canonical(hashed);
  m.config_hash = sha256_hex(canon);
  m.model_hash = sha256_hex(canonical_model(cfg));
  m.seed = cfg.seed;
  m.threads = cfg.threads;
  std::vector<std::string> ctx{"run " + m.kind};
  auto bad = cfg.violations();
  if (!bad.empty()) {
    std::string s;
    for (auto& b : bad) s += (s.empty() ? "" : "; ") + b;
    throw RunError("invalid configuration: " + s, ctx);
  }
  try {
    ctx.push_back("model");
    ModelSpec model = cfg.model();
    ctx.back() = m.kind;
    Writer w(cfg.out, m);
    w.file("config.canonical", [&](std::ostream& os) { os << canon; });
    switch (cfg.kind) {
      case ExperimentKind::sample: run_sample(cfg, model, w, m, log); break;
      case ExperimentKind::meanfield: run_meanfield(cfg, model, w, m, log); break;
      case ExperimentKind::partition: run_partition(cfg, model, w, m, log); break;
      case ExperimentKind::threshold: run_threshold(cfg, model, w, m, log); break;
      case ExperimentKind::scan: run_scan(cfg, w, m, log); break;
      case ExperimentKind::probe: run_probe(cfg, model, w, m, log); break;
    }
  } catch (const RunError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError(e.what(), ctx);
  }
  m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream os(fs::path(cfg.out) / "manifest.json");
  os << to_json(m).dump(2) << "\n";
  return m;
}

CompareReport compare(const RunManifest& a, const RunManifest& b) {
  if (a.kind != b.kind) throw std::invalid_argument("compare: experiment kinds differ (" + a.kind + " vs " + b.kind + ")");
  CompareReport r;
  if (a.model_hash != b.model_hash) {
    r.verdict = "incomparable";
    r.message = "model hashes differ";
    return r;
  }
  auto err_of = [](const json& res, const std::string& k) {
    auto it = res.find(k + "_err");
    return it != res.end() && it->is_number() ? it->get<double>() : 0.0;
  };
  bool any_bad = false, any_diff = false;
  std::vector<std::string> keys;
  for (auto it = a.results.begin(); it != a.results.end(); ++it) keys.push_back(it.key());
  for (auto it = b.results.begin(); it != b.results.end(); ++it)
    if (!a.results.contains(it.key())) keys.push_back(it.key());
  for (const auto& k : keys) {
    if (k.size() > 4 && k.compare(k.size() - 4, 4, "_err") == 0) continue;
    FieldDiff d;
    d.field = k;
    d.a = a.results.value(k, json());
    d.b = b.results.value(k, json());
    if (d.a == d.b) continue;
    any_diff = true;
    if (d.a.is_null() || d.b.is_null()) {
      d.status = "missing";
      any_bad = true;
    } else if (d.a.is_number() && d.b.is_number() && !d.a.is_boolean()) {
      double x = d.a.get<double>(), y = d.b.get<double>();
      // 3σ when the field carries an error band; otherwise it is deterministic up to rounding
      d.tolerance = 3.0 * std::hypot(err_of(a.results, k), err_of(b.results, k)) + 1e-9 * std::max(std::abs(x), std::abs(y));
      d.status = std::abs(x - y) <= d.tolerance ? "consistent" : "inconsistent";
      any_bad = any_bad || d.status == "inconsistent";
    } else {
      d.status = "differs";
      any_bad = true;
    }
    r.diffs.push_back(d);
  }
  r.verdict = !any_diff ? "identical" : any_bad ? "inconsistent" : "consistent";
  return r;
}

json to_json(const CompareReport& r) {
  json j;
  j["verdict"] = r.verdict;
  j["message"] = r.message;
  j["diffs"] = json::array();
  for (const auto& d : r.diffs)
    j["diffs"].push_back({{"field", d.field}, {"a", d.a}, {"b", d.b}, {"tolerance", d.tolerance}, {"status", d.status}});
  return j;
}

}  // namespace kg
