#include "kgibbs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "kgibbs/thermo.hpp"

namespace kg {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::sample: return "sample";
    case ExperimentKind::meanfield: return "meanfield";
    case ExperimentKind::partition: return "partition";
    case ExperimentKind::threshold: return "threshold";
    case ExperimentKind::scan: return "scan";
    case ExperimentKind::probe: return "probe";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n"), b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

bool to_double(const std::string& s, double& v) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(v);
}

template <class I>
bool to_int(const std::string& s, I& v) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool to_bool(const std::string& s, bool& v) {
  if (s == "true" || s == "1" || s == "yes") return v = true, true;
  if (s == "false" || s == "0" || s == "no") return v = false, true;
  return false;
}

// "inf", "re", "re,im" or "re+imi" / "re-imi"
bool parse_point(const std::string& s, SpherePoint& p) {
  if (s == "inf" || s == "infinity") return p = SpherePoint::infinity(), true;
  double re = 0.0, im = 0.0;
  auto c = s.find(',');
  if (c != std::string::npos) {
    if (!to_double(trim(s.substr(0, c)), re) || !to_double(trim(s.substr(c + 1)), im)) return false;
  } else if (!s.empty() && s.back() == 'i') {
    size_t pos = s.find_last_of("+-", s.size() - 2);
    if (pos == std::string::npos || pos == 0) {
      std::string t = s.substr(0, s.size() - 1);
      if (!to_double(t.empty() || t == "+" ? "1" : t == "-" ? "-1" : t, im)) return false;
    } else {
      std::string t = s.substr(pos, s.size() - 1 - pos);
      if (t[0] == '+') t = t.substr(1);
      if (!to_double(trim(s.substr(0, pos)), re) || !to_double(t == "" ? "1" : t == "-" ? "-1" : t, im)) return false;
    }
  } else if (!to_double(s, re)) {
    return false;
  }
  p = SpherePoint::from_z({re, im});
  return true;
}

std::string point_text(const std::string& s) {
  SpherePoint p;
  if (!parse_point(s, p)) return s;
  if (p.chart == 1 && p.coord == cplx(0.0, 0.0)) return "inf";
  cplx z = p.chart == 0 ? p.coord : 1.0 / p.coord;
  return fmt(z.real()) + "," + fmt(z.imag());
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) s += fmt(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

std::function<double(const Vec3&)> perturbation_fn(const std::string& spec) {
  if (spec == "none") return {};
  auto c = spec.find(':');
  if (c == std::string::npos) throw std::invalid_argument("perturbation must be none, zonal:<a> or bump:<a>,<width>");
  std::string kind = spec.substr(0, c);
  auto args = split(spec.substr(c + 1), ',');
  std::vector<double> v;
  for (auto& a : args) {
    double x;
    if (!to_double(a, x)) throw std::invalid_argument("perturbation: bad number '" + a + "'");
    v.push_back(x);
  }
  if (kind == "zonal" && v.size() == 1) {
    double a = v[0];
    return [a](const Vec3& x) { return a * x.z(); };
  }
  if (kind == "bump" && v.size() == 2 && v[1] > 0.0) {
    double a = v[0], w = v[1];
    return [a, w](const Vec3& x) {
      double d = geodesic(x, Vec3(1, 0, 0));
      return a * std::exp(-d * d / (w * w));
    };
  }
  throw std::invalid_argument("perturbation must be none, zonal:<a> or bump:<a>,<width>");
}

}  // namespace

WeightedDivisor ExperimentConfig::weighted_divisor() const {
  WeightedDivisor d;
  for (const auto& e : divisor) {
    SpherePoint p;
    if (!parse_point(e.point, p)) throw std::invalid_argument("divisor: bad point '" + e.point + "'");
    d.points.push_back(p);
    d.weights.push_back(e.weight);
  }
  return d;
}

ModelSpec ExperimentConfig::model() const {
  ModelSpec s = ModelSpec::fubini_study(N, beta, m);
  s.k = k_value();
  if (base == "log-fano") {
    auto d = weighted_divisor();
    s.base = BaseMeasure::log_fano(d);
    s.divisor = d;
  } else if (base != "fubini-study") {
    throw std::invalid_argument("base must be fubini-study or log-fano");
  }
  s.metric.perturbation = perturbation_fn(perturbation);
  if (perturbation != "none") s.metric.label = perturbation;
  s.validate();
  if (orthonormal) s = orthonormalize_basis(s);
  return s;
}

std::vector<std::string> ExperimentConfig::violations() const {
  std::vector<std::string> v;
  if (!(m > 0.0)) v.push_back("m must be positive");
  if (N < 2) v.push_back("N must be at least 2");
  if (k > 0.0 && std::abs(k * m + 1.0 - N) > 1e-9) {
    std::ostringstream os;
    os.precision(12);
    os << "N must equal k·m + 1 = " << k * m + 1.0;
    v.push_back(os.str());
  }
  if (k < 0.0) v.push_back("k must be positive");
  if (!std::isfinite(beta)) v.push_back("beta must be finite");
  if (base != "fubini-study" && base != "log-fano") v.push_back("base must be fubini-study or log-fano");
  if (base == "log-fano" && divisor.empty()) v.push_back("log-fano base needs a divisor");
  if (base == "fubini-study" && !divisor.empty()) v.push_back("divisor given but base is fubini-study");
  if (base == "log-fano" && !divisor.empty()) {
    try {
      auto d = weighted_divisor();
      auto rep = divisor_validate(d);
      for (const auto& msg : rep.messages)
        if (!rep.klt || !rep.log_fano) v.push_back("divisor: " + msg);
      if (std::abs(m - (2.0 - d.total_weight())) > 1e-9)
        v.push_back("log-fano model needs m = 2 - Σw = " + fmt(2.0 - d.total_weight()));
    } catch (const std::exception& e) {
      v.push_back(e.what());
    }
  }
  try {
    perturbation_fn(perturbation);
  } catch (const std::exception& e) {
    v.push_back(e.what());
  }
  if (threads < 1) v.push_back("threads must be positive");
  if (grid_cells < 8) v.push_back("grid_cells must be at least 8");
  if (steps <= 0) v.push_back("steps must be positive");
  if (burn_in < 0 || burn_in >= steps) v.push_back("burn_in must lie in [0, steps)");
  if (thinning < 0) v.push_back("thinning must be nonnegative");
  if (!(p_global >= 0.0 && p_global <= 1.0)) v.push_back("p_global must lie in [0, 1]");
  if (!(sigma > 0.0)) v.push_back("sigma must be positive");
  if (chains < 1) v.push_back("chains must be positive");
  if (ti_nodes != 7 && ti_nodes != 10 && ti_nodes != 15 && ti_nodes != 20) v.push_back("ti_nodes must be 7, 10, 15 or 20");
  if (ti_sweeps < 100) v.push_back("ti_sweeps must be at least 100");
  if (quad_order != 7 && quad_order != 10 && quad_order != 15 && quad_order != 20)
    v.push_back("quad_order must be 7, 10, 15 or 20");
  if (quad_psi < 4) v.push_back("quad_psi must be at least 4");
  if (!(tolerance > 0.0)) v.push_back("tolerance must be positive");
  if (!(beta_max > beta_min)) v.push_back("beta_max must exceed beta_min");
  if (beta_points < 2) v.push_back("beta_points must be at least 2");
  if (Ns.empty()) v.push_back("Ns must not be empty");
  for (int n : Ns)
    if (n < 2) v.push_back("Ns entries must be at least 2");
  if (probe != "gamma" && probe != "diameter" && probe != "ldp" && probe != "wasserstein")
    v.push_back("probe must be gamma, diameter, ldp or wasserstein");
  for (double e : eps)
    if (!(e > 0.0)) v.push_back("eps entries must be positive");
  if (samples < 20) v.push_back("samples must be at least 20");
  return v;
}

ParseResult parse_config(const std::string& text, bool strict) {
  ParseResult res;
  ExperimentConfig& c = res.config;
  using Setter = std::function<bool(const std::string&)>;
  auto dbl = [](double& f) { return Setter([&f](const std::string& s) { return to_double(s, f); }); };
  auto integer = [](auto& f) { return Setter([&f](const std::string& s) { return to_int(s, f); }); };
  std::map<std::string, Setter> keys = {
      {"experiment.kind",
       [&](const std::string& s) {
         for (auto k : {ExperimentKind::sample, ExperimentKind::meanfield, ExperimentKind::partition,
                        ExperimentKind::threshold, ExperimentKind::scan, ExperimentKind::probe})
           if (s == to_string(k)) return c.kind = k, true;
         return false;
       }},
      {"experiment.seed", integer(c.seed)},
      {"experiment.out", [&](const std::string& s) { return c.out = s, !s.empty(); }},
      {"experiment.threads", integer(c.threads)},
      {"model.N", integer(c.N)},
      {"model.m", dbl(c.m)},
      {"model.k", dbl(c.k)},
      {"model.beta", dbl(c.beta)},
      {"model.base", [&](const std::string& s) { return c.base = s, true; }},
      {"model.divisor",
       [&](const std::string& s) {
         c.divisor.clear();
         for (auto& item : split(s, ';')) {
           auto p = item.rfind(':');
           DivisorEntry e;
           if (p == std::string::npos || !to_double(trim(item.substr(p + 1)), e.weight)) return false;
           e.point = trim(item.substr(0, p));
           SpherePoint sp;
           if (!parse_point(e.point, sp)) return false;
           c.divisor.push_back(e);
         }
         return true;
       }},
      {"model.perturbation", [&](const std::string& s) { return c.perturbation = s, true; }},
      {"model.orthonormal", [&](const std::string& s) { return to_bool(s, c.orthonormal); }},
      {"numerics.grid_cells", integer(c.grid_cells)},
      {"numerics.steps", integer(c.steps)},
      {"numerics.burn_in", integer(c.burn_in)},
      {"numerics.thinning", integer(c.thinning)},
      {"numerics.p_global", dbl(c.p_global)},
      {"numerics.sigma", dbl(c.sigma)},
      {"numerics.chains", integer(c.chains)},
      {"numerics.ti_nodes", integer(c.ti_nodes)},
      {"numerics.ti_sweeps", integer(c.ti_sweeps)},
      {"numerics.quad_order", integer(c.quad_order)},
      {"numerics.quad_psi", integer(c.quad_psi)},
      {"numerics.tolerance", dbl(c.tolerance)},
      {"numerics.beta_min", dbl(c.beta_min)},
      {"numerics.beta_max", dbl(c.beta_max)},
      {"numerics.beta_points", integer(c.beta_points)},
      {"numerics.Ns",
       [&](const std::string& s) {
         c.Ns.clear();
         for (auto& t : split(s, ',')) {
           int n;
           if (!to_int(t, n)) return false;
           c.Ns.push_back(n);
         }
         return true;
       }},
      {"numerics.probe", [&](const std::string& s) { return c.probe = s, true; }},
      {"numerics.eps",
       [&](const std::string& s) {
         c.eps.clear();
         for (auto& t : split(s, ',')) {
           double e;
           if (!to_double(t, e)) return false;
           c.eps.push_back(e);
         }
         return true;
       }},
      {"numerics.samples", integer(c.samples)},
  };
  const std::vector<std::string> sections{"experiment", "model", "numerics"};
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = "line " + std::to_string(ln) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        res.errors.push_back(where + "unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
        res.errors.push_back(where + "unknown section [" + section + "]");
        section = "?";
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      res.errors.push_back(where + "expected key = value");
      continue;
    }
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (section.empty()) {
      res.errors.push_back(where + "key '" + key + "' outside any section");
      continue;
    }
    if (section == "?") continue;
    std::string full = section + "." + key;
    auto it = keys.find(full);
    if (it == keys.end()) {
      std::string msg = where + "unknown key '" + full + "'";
      (strict ? res.errors : res.warnings).push_back(msg);
      continue;
    }
    if (auto s = seen.find(full); s != seen.end()) {
      res.errors.push_back(where + "duplicate key '" + full + "' (first set on line " + std::to_string(s->second) + ")");
      continue;
    }
    seen[full] = ln;
    if (!it->second(val)) res.errors.push_back(where + "bad value for '" + full + "': '" + val + "'");
  }
  for (auto& v : c.violations()) res.errors.push_back(v);
  if (strict && res.errors.empty()) {
    std::string canon = canonical(c);
    auto again = parse_config(canon, false);
    if (!again.ok() || canonical(again.config) != canon)
      res.errors.push_back("configuration does not round-trip to its canonical form");
  }
  return res;
}

ParseResult parse_config_file(const std::string& path, bool strict) {
  std::ifstream f(path);
  if (!f) {
    ParseResult r;
    r.errors.push_back("cannot open config file '" + path + "'");
    return r;
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), strict);
}

std::string canonical_model(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[model]\n";
  os << "N = " << c.N << "\n";
  os << "m = " << fmt(c.m) << "\n";
  os << "k = " << fmt(c.k_value()) << "\n";
  os << "beta = " << fmt(c.beta) << "\n";
  os << "base = " << c.base << "\n";
  if (!c.divisor.empty()) {
    os << "divisor = ";
    for (size_t i = 0; i < c.divisor.size(); ++i)
      os << (i ? "; " : "") << point_text(c.divisor[i].point) << ":" << fmt(c.divisor[i].weight);
    os << "\n";
  }
  os << "perturbation = " << c.perturbation << "\n";
  os << "orthonormal = " << (c.orthonormal ? "true" : "false") << "\n";
  return os.str();
}

std::string canonical(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "kind = " << to_string(c.kind) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "out = " << c.out << "\n";
  os << "threads = " << c.threads << "\n\n";
  os << canonical_model(c) << "\n";
  os << "[numerics]\n";
  os << "grid_cells = " << c.grid_cells << "\n";
  os << "steps = " << c.steps << "\n";
  os << "burn_in = " << c.burn_in << "\n";
  os << "thinning = " << c.thinning << "\n";
  os << "p_global = " << fmt(c.p_global) << "\n";
  os << "sigma = " << fmt(c.sigma) << "\n";
  os << "chains = " << c.chains << "\n";
  os << "ti_nodes = " << c.ti_nodes << "\n";
  os << "ti_sweeps = " << c.ti_sweeps << "\n";
  os << "quad_order = " << c.quad_order << "\n";
  os << "quad_psi = " << c.quad_psi << "\n";
  os << "tolerance = " << fmt(c.tolerance) << "\n";
  os << "beta_min = " << fmt(c.beta_min) << "\n";
  os << "beta_max = " << fmt(c.beta_max) << "\n";
  os << "beta_points = " << c.beta_points << "\n";
  os << "Ns = " << join(c.Ns) << "\n";
  os << "probe = " << c.probe << "\n";
  os << "eps = " << join(c.eps) << "\n";
  os << "samples = " << c.samples << "\n";
  return os.str();
}

}  // namespace kg
