#include "kgibbs/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "kgibbs/meanfield.hpp"

namespace kg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool rotation_invariant(const ModelSpec& m) {
  return m.base.is_fubini_study() && !m.metric.has_perturbation();
}

struct Dyadic {
  double value = 0.0;
  QuadStatus status = QuadStatus::ok;
  double margin = 0.0;
  double tail = 0.0;
};

// ∫_0^1 g(t) dt for g >= 0 with dyadic panels toward t = 0; same tail test as the sphere engine.
Dyadic dyadic_ratio(const std::function<double(double)>& g, int order, int max_panels, double rel_tol = 1e-12) {
  Dyadic r;
  std::vector<double> hist;
  double hi = 1.0;
  for (int j = 0; j < max_panels; ++j) {
    double lo = 0.5 * hi;
    double p = gauss_integrate(g, lo, hi, order);
    r.value += p;
    hist.push_back(p);
    if (j >= 3) {
      auto t = shell_tail(hist, r.value, rel_tol, 2e-3);
      if (t.verdict == TailVerdict::divergent) {
        r.status = QuadStatus::divergent;
        r.margin = t.margin;
        return r;
      }
      if (t.verdict == TailVerdict::converged) {
        r.value += p * t.factor;
        r.tail = rel_tol * r.value;
        r.margin = t.margin;
        return r;
      }
    }
    hi = lo;
  }
  r.status = QuadStatus::inconclusive;
  return r;
}

// N = 2, rotation invariant: t = chord^2(x1, x2) is uniform on [0, 1].
PartitionResult fs_two(const ModelSpec& m, double beta, const PartitionOptions& opt) {
  PartitionResult res;
  const double a = beta / m.k;
  auto g = [&](double t) { return std::pow(t, a); };
  auto d = dyadic_ratio(g, 20, opt.max_panels);
  res.status = d.status;
  res.margin = d.margin;
  if (d.status != QuadStatus::ok) {
    res.stratum = "pair collision at a generic point";
    return res;
  }
  double err = d.tail;
  if (opt.error_estimate) {
    auto d2 = dyadic_ratio(g, 30, opt.max_panels);
    err += std::abs(d2.value - d.value);
  }
  res.log_z = a * m.basis_log_shift + std::log(d.value);
  res.error = std::max(err / d.value, 1e-15);
  return res;
}

// N = 3, rotation invariant: x1 at the north pole, x2 at chord^2 t2 on a fixed meridian.
PartitionResult fs_three(const ModelSpec& m, double beta, const PartitionOptions& opt, int order,
                         const SphereQuadOptions& in) {
  PartitionResult res;
  const double a = beta / m.k;
  const Vec3 x1(0, 0, 1);
  bool inner_bad = false;
  QuadStatus inner_status = QuadStatus::ok;
  auto g = [&](double t2) {
    double th = 2.0 * std::asin(std::sqrt(t2));
    Vec3 x2(std::sin(th), 0.0, std::cos(th));
    auto J = integrate_sphere(
        [&](const Vec3& x3) { return std::pow(chord2(x1, x3) * chord2(x2, x3), a); }, {x1, x2}, in);
    res.evaluations += J.evaluations;
    if (J.status != QuadStatus::ok) {
      inner_bad = true;
      if (J.status == QuadStatus::divergent) inner_status = QuadStatus::divergent;
      else if (inner_status != QuadStatus::divergent) inner_status = QuadStatus::inconclusive;
    }
    return std::pow(t2, a) * J.value;
  };
  auto d = dyadic_ratio(g, order, opt.max_panels, 1e-10);
  if (inner_bad) {
    res.status = inner_status;
    res.stratum = "pair collision at a generic point";
    return res;
  }
  res.status = d.status;
  res.margin = d.margin;
  if (d.status != QuadStatus::ok) {
    res.stratum = "triple collision at a generic point";
    return res;
  }
  res.log_z = a * m.basis_log_shift + std::log(d.value);
  res.error = d.tail / d.value;
  return res;
}

PartitionResult general_two(const ModelSpec& m, double beta, const PartitionOptions&, const SphereQuadOptions& in,
                            const SphereQuadOptions& out) {
  PartitionResult res;
  const double a = beta / m.k;
  auto support = m.base.singular_points();
  auto w1 = [&](const Vec3& x) {
    double lr = m.base.log_density(x);
    if (m.metric.has_perturbation()) lr -= beta * m.metric.u(x);
    return lr;
  };
  QuadStatus inner_status = QuadStatus::ok;
  auto f1 = [&](const Vec3& x1) {
    double l1 = w1(x1);
    if (!std::isfinite(l1)) return 0.0;
    std::vector<Vec3> centers = support;
    centers.push_back(x1);
    auto J = integrate_sphere(
        [&](const Vec3& x2) {
          double c = chord2(x1, x2);
          if (c == 0.0) return 0.0;
          double l = w1(x2) + a * std::log(c);
          return std::isfinite(l) ? std::exp(l) : 0.0;
        },
        centers, in);
    res.evaluations += J.evaluations;
    if (J.status == QuadStatus::divergent) inner_status = QuadStatus::divergent;
    else if (J.status == QuadStatus::inconclusive && inner_status == QuadStatus::ok)
      inner_status = QuadStatus::inconclusive;
    return std::exp(l1) * J.value;
  };
  auto O = integrate_sphere(f1, support, out);
  res.evaluations += O.evaluations;
  if (inner_status == QuadStatus::divergent) {
    res.status = QuadStatus::divergent;
    res.stratum = "pair collision at a generic point";
    return res;
  }
  if (O.status != QuadStatus::ok) {
    res.status = O.status;
    res.margin = O.margin;
    std::ostringstream os;
    if (support.empty()) os << "pair collision";
    else os << "both particles at divisor point " << O.offending_center;
    res.stratum = os.str();
    return res;
  }
  if (inner_status != QuadStatus::ok) {
    res.status = QuadStatus::inconclusive;
    res.stratum = "pair collision (inner refinement did not settle)";
    return res;
  }
  res.log_z = a * m.basis_log_shift + std::log(O.value);
  return res;
}

}  // namespace

std::string to_string(PartitionMethod m) {
  return m == PartitionMethod::quadrature ? "quadrature" : "thermo-integration";
}

PartitionOptions default_partition_options() {
  PartitionOptions o;
  o.inner.gauss_order = 7;
  o.inner.n_psi = 12;
  o.inner.outer_panels = 2;
  o.inner.rel_tol = 1e-10;
  o.outer = o.inner;
  return o;
}

PartitionResult partition_quadrature(const ModelSpec& model, double beta, const PartitionOptions& opt) {
  model.validate();
  PartitionResult res;
  if (model.N > 3) throw std::invalid_argument("partition_quadrature: N must be at most 3");
  if (beta == 0.0) {
    res.N = model.N;
    res.error = 1e-16;  // exact: dV is a probability measure
    return res;
  }
  if (rotation_invariant(model)) {
    if (model.N == 2) {
      res = fs_two(model, beta, opt);
    } else {
      SphereQuadOptions in;
      in.gauss_order = 15;
      in.n_psi = 24;
      res = fs_three(model, beta, opt, 20, in);
      if (res.status == QuadStatus::ok && opt.error_estimate) {
        SphereQuadOptions in2 = in;
        in2.gauss_order = 20;
        in2.n_psi = 36;
        auto r2 = fs_three(model, beta, opt, 30, in2);
        if (r2.status == QuadStatus::ok) {
          res.error = std::max(r2.error + std::abs(r2.log_z - res.log_z), 1e-15);
          res.log_z = r2.log_z;
        } else {
          res.error = kInf;
          res.message = "finer pass did not settle";
        }
        res.evaluations += r2.evaluations;
      }
    }
  } else if (model.N == 2) {
    res = general_two(model, beta, opt, opt.inner, opt.outer);
    if (res.status == QuadStatus::ok && opt.error_estimate) {
      SphereQuadOptions in2 = opt.inner, out2 = opt.outer;
      in2.gauss_order = out2.gauss_order = 10;
      in2.n_psi = out2.n_psi = 18;
      auto r2 = general_two(model, beta, opt, in2, out2);
      if (r2.status == QuadStatus::ok) {
        // report the finer pass; the coarse one only sizes the error
        res.error = std::max(std::abs(r2.log_z - res.log_z), 1e-15);
        res.log_z = r2.log_z;
      } else {
        res.error = kInf;
        res.message = "finer pass did not settle";
      }
      res.evaluations += r2.evaluations;
    } else {
      res.error = 1e-8;
    }
  } else {
    res.status = QuadStatus::inconclusive;
    res.message = "N = 3 quadrature needs rotation-invariant data (FS base, no metric perturbation)";
  }
  res.beta = beta;
  res.N = model.N;
  res.method = PartitionMethod::quadrature;
  if (res.status == QuadStatus::divergent) {
    res.log_z = kInf;
    res.message = "divergent: " + res.stratum;
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

// mean energies at nodes s_i of [a, b]; returns the integral of <E> and its MC error
struct NodeSet {
  std::vector<ThermoPoint> pts;
  double integral = 0.0, mc = 0.0, rule = 0.0;
  bool widened = false;
};

NodeSet run_nodes(const ModelSpec& model, double a, double b, const ThermoOptions& opt, std::uint64_t stream) {
  NodeSet ns;
  const auto& g = gauss_rule(opt.nodes);
  const int N = model.N;
  double h = 0.5 * (b - a), mid = 0.5 * (a + b);
  std::vector<double> x, y;
  for (size_t i = 0; i < g.x.size(); ++i) {
    double s = mid + h * g.x[i];
    ChainConfig cfg;
    cfg.model = model;
    cfg.model.beta = s;
    cfg.burn_in = opt.burn_sweeps * N;
    cfg.steps = cfg.burn_in + opt.sweeps * N;
    cfg.thinning = N;
    cfg.keep_samples = false;
    cfg.proposal = opt.proposal;
    cfg.seed = derive_seed(opt.seed, stream * 1000 + i);
    auto chains = run_chains(cfg, opt.chains, opt.threads);
    double m = 0.0, v = 0.0, acc = 0.0;
    bool wide = false;
    for (const auto& c : chains) {
      m += c.stats.mean_energy.mean;
      v += c.stats.mean_energy.se * c.stats.mean_energy.se;
      acc += c.stats.acceptance;
      wide = wide || c.stats.mean_energy.widened;
    }
    const double nc = chains.size();
    MeanSE e;
    e.mean = m / nc;
    e.se = std::sqrt(v) / nc;
    e.widened = wide;
    ns.widened = ns.widened || wide;
    ns.pts.push_back({s, e, acc / nc});
    ns.integral += g.w[i] * h * e.mean;
    ns.mc += std::pow(g.w[i] * h * e.se, 2);
    x.push_back(g.x[i]);
    y.push_back(e.mean);
  }
  ns.mc = std::sqrt(ns.mc);
  // rule error: the Gauss value integrates the interpolant; compare with a
  // least-squares fit two degrees lower
  const int n = static_cast<int>(x.size());
  if (n >= 4) {
    int deg = n - 3;
    Eigen::MatrixXd V(n, deg + 1);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) {
      Y[i] = y[i];
      for (int p = 0; p <= deg; ++p) V(i, p) = std::pow(x[i], p);
    }
    Eigen::VectorXd c = V.colPivHouseholderQr().solve(Y);
    double low = 0.0;
    for (int p = 0; p <= deg; p += 2) low += c[p] * 2.0 / (p + 1);
    ns.rule = std::abs(h * low - ns.integral);
  }
  return ns;
}

}  // namespace

ThermoResult thermo_integration(const ModelSpec& model, double beta_target, const ThermoOptions& opt) {
  model.validate();
  ThermoResult tr;
  PartitionResult& r = tr.partition;
  r.beta = beta_target;
  r.N = model.N;
  r.method = PartitionMethod::thermo_integration;
  if (beta_target == 0.0) {
    r.error = 1e-16;
    return tr;
  }
  if (beta_target < 0.0 && !partition_finite(model, beta_target))
    throw std::invalid_argument("thermo_integration: Z is not finite along the path to the target beta");
  auto ns = run_nodes(model, 0.0, beta_target, opt, 1);
  tr.points = ns.pts;
  tr.mc_error = model.N * ns.mc;
  tr.rule_error = model.N * ns.rule;
  r.log_z = -model.N * ns.integral;
  r.error = std::hypot(tr.mc_error, tr.rule_error);
  r.widened = ns.widened;
  if (ns.widened) r.message = "fewer than 20 batches at some node; error widened";
  return tr;
}

WeightVerdict weight_condition(const WeightedDivisor& d) {
  WeightVerdict v;
  double tot = d.total_weight();
  v.margin = kInf;
  for (size_t i = 0; i < d.weights.size(); ++i) {
    double m = (tot - d.weights[i]) - d.weights[i];
    if (m < v.margin) {
      v.margin = m;
      v.binding = static_cast<int>(i);
    }
  }
  if (d.weights.empty()) v.margin = 0.0;  // no divisor: the condition is vacuous and fails strictly
  v.stable = v.margin > 0.0;
  return v;
}

std::string Stratum::label() const {
  std::ostringstream os;
  os << size << " particles at ";
  if (point < 0) os << "a generic point";
  else os << "divisor point " << point << " (w = " << weight << ")";
  return os.str();
}

ThresholdReport threshold_oracle(const ModelSpec& model) {
  model.validate();
  ThresholdReport rep;
  rep.N = model.N;
  const double k = model.k;
  for (int s = 2; s <= model.N; ++s) {
    // codim 2(s-1), ord = s(s-1)/2
    Stratum st;
    st.size = s;
    st.gamma = k * 2.0 * (s - 1) / (s * (s - 1.0));
    rep.strata.push_back(st);
  }
  if (model.base.kind() == BaseKind::log_fano) {
    const auto& d = model.base.divisor();
    for (size_t p = 0; p < d.weights.size(); ++p) {
      double w = d.weights[p];
      for (int s = 1; s <= model.N; ++s) {
        Stratum st;
        st.size = s;
        st.point = static_cast<int>(p);
        st.weight = w;
        if (s == 1) st.gamma = w < 1.0 ? kInf : 0.0;
        else st.gamma = std::max(0.0, k * 2.0 * s * (1.0 - w) / (s * (s - 1.0)));
        rep.strata.push_back(st);
      }
    }
  }
  std::stable_sort(rep.strata.begin(), rep.strata.end(),
                   [](const Stratum& a, const Stratum& b) { return a.gamma < b.gamma; });
  rep.oracle = rep.strata.empty() ? kInf : rep.strata.front().gamma;
  for (const auto& s : rep.strata)
    if (std::abs(s.gamma - rep.oracle) <= 1e-12 * std::max(1.0, rep.oracle)) rep.binding.push_back(s);
  return rep;
}

bool partition_finite(const ModelSpec& model, double beta) {
  if (beta >= 0.0) return true;
  return -beta < threshold_oracle(model).oracle;
}

ThresholdReport gibbs_threshold(const ModelSpec& model, const ThresholdOptions& opt) {
  ThresholdReport rep = threshold_oracle(model);
  const bool quad_ok = model.N == 2 || (model.N == 3 && rotation_invariant(model));
  if (!quad_ok) {
    rep.message = "no quadrature bracket: N = 3 needs rotation-invariant data, N > 3 is oracle only";
    return rep;
  }
  PartitionOptions q = opt.quad;
  q.error_estimate = false;
  auto verdict = [&](double g) {
    auto r = partition_quadrature(model, -g, q);
    rep.probes.push_back({g, r.status});
    return r.status;
  };
  double lo = 0.0;
  // 2.1 rather than 2 so that bisection does not land on the oracle value itself
  double hi = std::isfinite(rep.oracle) && rep.oracle > 0 ? 2.1 * rep.oracle : 2.0;
  int used = 0;
  QuadStatus s = verdict(hi);
  ++used;
  while (s == QuadStatus::ok && used < opt.max_probes) {
    lo = hi;
    hi *= 2.0;
    s = verdict(hi);
    ++used;
  }
  bool have_hi = s == QuadStatus::divergent;
  bool stuck = s == QuadStatus::inconclusive;
  while (have_hi && !stuck && hi - lo > opt.width && used < opt.max_probes) {
    double mid = 0.5 * (lo + hi);
    s = verdict(mid);
    ++used;
    if (s == QuadStatus::ok) lo = mid;
    else if (s == QuadStatus::divergent) hi = mid;
    else stuck = true;
  }
  rep.numeric = have_hi;
  rep.lo = lo;
  rep.hi = have_hi ? hi : kInf;
  rep.width = rep.hi - rep.lo;
  if (stuck) rep.message = "bisection stopped at an inconclusive verdict; bracket kept as is";
  const double tol = 1e-9;
  rep.contains_oracle = rep.oracle >= rep.lo - tol && rep.oracle <= rep.hi + tol;
  rep.discrepancy = rep.numeric && !rep.contains_oracle;
  if (rep.discrepancy) rep.message += (rep.message.empty() ? "" : "; ") + std::string("oracle outside numeric bracket");
  return rep;
}

ModelSpec symmetric_model(int N, double beta, double m) {
  return orthonormalize_basis(ModelSpec::fubini_study(N, beta, m));
}

BetaScan free_energy_limit_scan(const ScanOptions& opt) {
  BetaScan scan;
  std::vector<double> betas = opt.betas;
  std::sort(betas.begin(), betas.end());
  // mean-field side
  auto g = make_grid(SphereGrid::nearest_resolution(opt.grid_cells));
  BundleMetric metric;
  MeanField mf(g, metric, BaseMeasure::fubini_study());
  std::vector<double> infF;
  for (double b : betas) {
    if (b == 0.0) {
      infF.push_back(0.0);
      continue;
    }
    auto r = ma_solve(mf, b);
    infF.push_back(r.converged ? free_energy(mf, r.mu, b) : std::numeric_limits<double>::quiet_NaN());
  }
  for (int N : opt.Ns) {
    ModelSpec model = symmetric_model(N, 1.0);
    if (N <= 3) {
      for (size_t i = 0; i < betas.size(); ++i) {
        auto r = partition_quadrature(model, betas[i]);
        double f = -r.log_z / N;
        scan.rows.push_back({betas[i], N, f, r.error / N, infF[i], std::abs(f - infF[i]), "quadrature"});
      }
      continue;
    }
    // cumulative composite rule over the sorted β grid starting at 0
    double a = 0.0, acc = 0.0, mc2 = 0.0, rule = 0.0;
    for (size_t i = 0; i < betas.size(); ++i) {
      double b = betas[i];
      if (b != a) {
        ThermoOptions to = opt.thermo;
        auto ns = run_nodes(model, a, b, to, 10 + i);
        acc += ns.integral;
        mc2 += ns.mc * ns.mc;
        rule += ns.rule;
      }
      a = b;
      double err = std::hypot(std::sqrt(mc2), rule);
      scan.rows.push_back({b, N, acc, err, infF[i], std::abs(acc - infF[i]), "thermo-integration"});
    }
  }
  // trend: gap should not grow with N beyond error bars
  for (double b : betas) {
    const ScanRow* prev = nullptr;
    for (const auto& r : scan.rows) {
      if (r.beta != b) continue;
      if (prev && r.N > prev->N && r.gap > prev->gap + 2.0 * (r.err + prev->err)) {
        std::ostringstream os;
        os << "beta = " << b << ": gap grows from N = " << prev->N << " to N = " << r.N;
        scan.flags.push_back(os.str());
      }
      prev = &r;
    }
  }
  return scan;
}

void write_scan_csv(std::ostream& os, const BetaScan& s) {
  os << "beta,N,f_N,err,infF,gap,method\n" << std::setprecision(12);
  for (const auto& r : s.rows)
    os << r.beta << ',' << r.N << ',' << r.f << ',' << r.err << ',' << r.inf_f << ',' << r.gap << ',' << r.method
       << '\n';
}

AnalyticityReport analyticity_probe(const std::vector<double>& beta, const std::vector<double>& f,
                                    const std::vector<double>& err, int window) {
  const int n = static_cast<int>(beta.size());
  if (n < 20) throw std::invalid_argument("analyticity_probe: need at least 20 beta points");
  if (static_cast<int>(f.size()) != n || static_cast<int>(err.size()) != n)
    throw std::invalid_argument("analyticity_probe: size mismatch");
  AnalyticityReport rep;
  // one-sided cubic fit around x0 on [i0, i1]; (f', f'') at x0 and their variances
  auto fit = [&](int i0, int i1, double x0, double d[2], double v[2]) {
    const int m = i1 - i0 + 1, q = 4;
    Eigen::MatrixXd A(m, q);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
      double t = beta[i0 + i] - x0;
      for (int p = 0; p < q; ++p) A(i, p) = std::pow(t, p);
      y[i] = f[i0 + i];
    }
    Eigen::MatrixXd AtA = A.transpose() * A;
    Eigen::MatrixXd inv = AtA.inverse();
    Eigen::MatrixXd P = inv * A.transpose();
    Eigen::VectorXd c = P * y;
    double s2 = m > q ? (y - A * c).squaredNorm() / (m - q) : 0.0;
    double ve1 = 0.0, ve2 = 0.0;
    for (int i = 0; i < m; ++i) {
      double e2 = err[i0 + i] * err[i0 + i];
      ve1 += P(1, i) * P(1, i) * e2;
      ve2 += P(2, i) * P(2, i) * e2;
    }
    d[0] = c[1];
    d[1] = 2.0 * c[2];
    v[0] = ve1 + s2 * inv(1, 1);
    v[1] = 4.0 * (ve2 + s2 * inv(2, 2));
  };
  for (int j = window - 1; j + window - 1 < n; ++j) {
    double dl[2], vl[2], dr[2], vr[2];
    fit(j - window + 1, j, beta[j], dl, vl);
    fit(j, j + window - 1, beta[j], dr, vr);
    double j1 = std::abs(dl[0] - dr[0]), j2 = std::abs(dl[1] - dr[1]);
    // floor the error at rounding level of the data
    double scale = 0.0;
    for (int i = j - window + 1; i <= j + window - 1; ++i) scale = std::max(scale, std::abs(f[i]));
    double h = beta[j + 1] - beta[j];
    double e1 = std::sqrt(vl[0] + vr[0]) + 1e-10 * scale / h;
    double e2 = std::sqrt(vl[1] + vr[1]) + 1e-10 * scale / (h * h);
    rep.beta.push_back(beta[j]);
    rep.jump1.push_back(j1);
    rep.jump2.push_back(j2);
    rep.err1.push_back(e1);
    rep.err2.push_back(e2);
    double ratio = std::max(j1 / e1, j2 / e2);
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      if (ratio > 5.0) rep.flagged_beta = beta[j];
    }
    if (ratio > 5.0) rep.flagged = true;
  }
  return rep;
}

DensityGrid one_point_exact(const ModelSpec& model, GridPtr g) {
  model.validate();
  const int R = g->size();
  if (model.N == 3) {
    if (!rotation_invariant(model)) throw std::invalid_argument("one_point_exact: N = 3 needs rotation-invariant data");
    return DensityGrid::uniform(g);
  }
  if (model.N != 2) throw std::invalid_argument("one_point_exact: N must be 2 or 3");
  const double beta = model.beta, a = beta / model.k;
  if (!partition_finite(model, beta)) throw std::invalid_argument("one_point_exact: Z is infinite");
  auto support = model.base.singular_points();
  auto w1 = [&](const Vec3& x) {
    double lr = model.base.log_density(x);
    if (model.metric.has_perturbation()) lr -= beta * model.metric.u(x);
    return lr;
  };
  SphereQuadOptions in = default_partition_options().inner;
  in.gauss_order = 15;
  in.n_psi = 24;
  auto J = [&](const Vec3& x1) {
    std::vector<Vec3> centers = support;
    centers.push_back(x1);
    return integrate_sphere(
               [&](const Vec3& x2) {
                 double c = chord2(x1, x2);
                 if (c == 0.0) return 0.0;
                 double l = w1(x2) + a * std::log(c);
                 return std::isfinite(l) ? std::exp(l) : 0.0;
               },
               centers, in)
        .value;
  };
  std::vector<double> m(R);
  const auto& gr = gauss_rule(7);
  std::vector<SingularPoint> sing;
  if (model.base.kind() == BaseKind::log_fano)
    for (size_t j = 0; j < support.size(); ++j) sing.push_back({support[j], model.base.divisor().weights[j]});
  for (int i = 0; i < R; ++i) {
    bool near = false;
    for (const auto& s : sing)
      if (geodesic(g->center(i), s.p) < 3.0 * std::sqrt(4.0 * std::numbers::pi / R)) near = true;
    if (near) {
      std::vector<SingularPoint> close = sing;
      m[i] = integrate_cell(*g, i, [&](const Vec3& x) { return std::exp(w1(x)) * J(x); }, close);
      continue;
    }
    // 3x3 Gauss in the area-uniform cell coordinates
    double acc = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        static const double xs[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        Vec3 x = g->cell_point(i, 0.5 * (1 + xs[p]), 0.5 * (1 + xs[q]));
        acc += 0.25 * ws[p] * ws[q] * std::exp(w1(x)) * J(x);
      }
    m[i] = acc / R;
  }
  (void)gr;
  DensityGrid d(g, std::move(m));
  d.normalize();
  return d;
}

}  // namespace kg
