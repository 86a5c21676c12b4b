#include "kgibbs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kgibbs/thermo.hpp"

namespace kg {

DensityGrid cap_measure(GridPtr g, double a) {
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("cap_measure: area fraction must lie in (0, 1]");
  std::vector<double> m(g->size(), 0.0);
  const double zcut = 1.0 - 2.0 * a;
  for (int b = 0; b < g->bands(); ++b) {
    // fraction of the band above the cut, in u = cos(theta)
    double top = g->u_top(b), bot = g->u_bottom(b);
    double f = std::clamp((top - std::max(bot, zcut)) / (top - bot), 0.0, 1.0);
    for (int i = 0; i < g->band_cells(b); ++i) m[g->band_offset(b) + i] = f;
  }
  DensityGrid d(g, std::move(m));
  d.normalize();
  return d;
}

GridSampler::GridSampler(const DensityGrid& mu) : grid_(mu.grid), cdf_(mu.size()) {
  std::partial_sum(mu.mass.begin(), mu.mass.end(), cdf_.begin());
  if (!(cdf_.back() > 0.0)) throw std::invalid_argument("GridSampler: measure has no mass");
}

Vec3 GridSampler::operator()(Rng& rng) const {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double r = U(rng) * cdf_.back();
  int c = static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), r) - cdf_.begin());
  c = std::min(c, grid_->size() - 1);
  while (c > 0 && cdf_[c] == cdf_[c - 1]) --c;  // never land on an empty cell
  return grid_->cell_point(c, U(rng), U(rng));
}

// ---------------------------------------------------------------------------

GammaReport gamma_convergence_probe(const MeanField& mf, const DensityGrid& mu, const GammaOptions& opt) {
  GammaReport rep;
  rep.energy = energy_of_measure(mf, mu, EnergyMethod::potential).value;
  rep.energy_green = energy_of_measure(mf, mu, EnergyMethod::green).value;
  rep.discretization = std::abs(rep.energy - rep.energy_green);
  GridSampler draw(mu);
  for (int N : opt.Ns) {
    if (N < 2) throw std::invalid_argument("gamma_convergence_probe: N must be at least 2");
    ModelSpec model = symmetric_model(N, 1.0);
    Rng rng = make_rng(opt.seed, static_cast<std::uint64_t>(N));
    std::vector<double> e(opt.samples);
    std::vector<Vec3> x(N);
    for (int s = 0; s < opt.samples; ++s) {
      for (auto& p : x) p = draw(rng);
      e[s] = energy_per_particle(x, model).value();
    }
    GammaRow row;
    row.N = N;
    row.energy = batch_means(e);
    row.gap = row.energy.mean - rep.energy;
    // iid mean of E^(N) is E(μ) - C/2 - shift/(kN) for every μ
    row.offset = -0.5 * green_constant() - model.basis_log_shift / (model.k * N);
    row.one_sided = row.energy.mean >= rep.energy - 3.0 * row.energy.se - rep.discretization;
    rep.one_sided = rep.one_sided && row.one_sided;
    rep.rows.push_back(row);
  }
  if (rep.rows.size() >= 2) rep.gap_decreasing = std::abs(rep.rows.back().gap) < std::abs(rep.rows.front().gap);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// local objective of particle i at y: Σ_j log chord^2(y, x_j) - k u(y)
double local_value(const ModelSpec& m, const std::vector<Vec3>& x, int i, const Vec3& y) {
  double s = 0.0;
  for (size_t j = 0; j < x.size(); ++j)
    if (static_cast<int>(j) != i) s += std::log(chord2(y, x[j]));
  if (m.metric.has_perturbation()) s -= m.k * m.metric.u(y);
  return s;
}

Vec3 local_gradient(const ModelSpec& m, const std::vector<Vec3>& x, int i) {
  const Vec3& y = x[i];
  Vec3 g = Vec3::Zero();
  for (size_t j = 0; j < x.size(); ++j)
    if (static_cast<int>(j) != i) g -= x[j] / std::max(1e-300, 1.0 - y.dot(x[j]));
  g -= g.dot(y) * y;
  if (m.metric.has_perturbation()) {
    Vec3 e1, e2;
    tangent_frame(y, e1, e2);
    const double h = 1e-6;
    auto u = [&](const Vec3& p) { return m.metric.u(p.normalized()); };
    g -= m.k * ((u(y + h * e1) - u(y - h * e1)) / (2 * h) * e1 + (u(y + h * e2) - u(y - h * e2)) / (2 * h) * e2);
  }
  return g;
}

}  // namespace

double fekete_ascent(const ModelSpec& model, std::vector<Vec3>& x, int max_sweeps, double tol, int* sweeps,
                     bool* stagnated) {
  const int N = static_cast<int>(x.size());
  std::vector<double> step(N, 0.1);
  int s = 0;
  bool converged = false;
  for (; s < max_sweeps && !converged; ++s) {
    double gain = 0.0;
    for (int i = 0; i < N; ++i) {
      Vec3 g = local_gradient(model, x, i);
      double gn = g.norm();
      if (gn == 0.0) continue;
      double f0 = local_value(model, x, i, x[i]);
      double t = step[i];
      for (int b = 0; b < 40; ++b) {
        Vec3 y = (x[i] + t * g / gn).normalized();
        double f1 = local_value(model, x, i, y);
        if (f1 > f0) {
          gain += f1 - f0;
          x[i] = y;
          step[i] = std::min(1.0, 2.0 * t);
          break;
        }
        t *= 0.5;
      }
      if (t < step[i]) step[i] = std::max(t, 1e-12);
    }
    converged = gain < tol;
  }
  if (sweeps) *sweeps = s;
  if (stagnated) *stagnated = !converged;
  return slater_log_norm(x, model).value();
}

DiameterReport transfinite_diameter_probe(const MeanField& mf, const std::function<double(const Vec3&)>& u,
                                          const DiameterOptions& opt) {
  DiameterReport rep;
  const auto& g = mf.grid();
  Eigen::VectorXd ug(g.size());
  for (int i = 0; i < g.size(); ++i) ug[i] = u ? u(g.center(i)) : 0.0;
  auto proj = psh_projection(mf, ug);
  rep.target = mf.energy_of_potential(proj.phi.values);
  for (int k : opt.ks) {
    if (k < 1) throw std::invalid_argument("transfinite_diameter_probe: k must be positive");
    const int N = k + 1;
    ModelSpec model = symmetric_model(N, 1.0);
    if (u) model.metric.perturbation = u;
    DiameterRow row;
    row.k = k;
    row.N = N;
    row.best = -std::numeric_limits<double>::infinity();
    Rng rng = make_rng(opt.seed, static_cast<std::uint64_t>(k));
    std::normal_distribution<double> nd;
    for (int st = 0; st < opt.starts; ++st) {
      std::vector<Vec3> x(N);
      for (auto& p : x) p = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
      int sw = 0;
      bool stag = false;
      double v = fekete_ascent(model, x, opt.max_sweeps, opt.tol, &sw, &stag);
      row.sweeps += sw;
      if (v > row.best) {
        row.best = v;
        row.points = x;
        row.stagnated = stag;  // only the start that supplies the value matters
      }
    }
    row.normalized = row.best / (static_cast<double>(k) * N);
    row.gap = row.normalized - rep.target;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

double w2_two_atoms_costs(const double* ca, const double* cb, const std::vector<double>& m, std::vector<int>& idx,
                          std::vector<double>& d) {
  const int R = static_cast<int>(m.size());
  double base = 0.0;
  for (int j = 0; j < R; ++j) {
    base += m[j] * cb[j];
    d[j] = ca[j] - cb[j];
  }
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int p, int q) { return d[p] < d[q]; });
  // the cells with the smallest cost advantage go to atom a until it holds 1/2
  double left = 0.5;
  for (int j : idx) {
    if (left <= 0.0) break;
    double t = std::min(left, m[j]);
    base += t * d[j];
    left -= t;
  }
  return std::sqrt(std::max(0.0, base));
}

}  // namespace

double w2_two_atoms(const Vec3& a, const Vec3& b, const DensityGrid& mu, GroundMetric g) {
  const int R = mu.size();
  std::vector<double> ca(R), cb(R), d(R);
  std::vector<int> idx(R);
  for (int j = 0; j < R; ++j) {
    ca[j] = ground_cost(a, mu.grid->center(j), g);
    cb[j] = ground_cost(b, mu.grid->center(j), g);
  }
  return w2_two_atoms_costs(ca.data(), cb.data(), mu.mass, idx, d);
}

LdpReport ldp_ball_probe(const ModelSpec& model, const MeanField& mf, const DensityGrid& mu, const LdpOptions& opt) {
  model.validate();
  if (model.N != 2) throw std::invalid_argument("ldp_ball_probe: quadrature of ball probabilities needs N = 2");
  if (mu.size() != mf.size()) throw std::invalid_argument("ldp_ball_probe: resolution mismatch");
  LdpReport rep;
  const double beta = model.beta;
  rep.free_energy = free_energy(mf, mu, beta);
  auto sol = ma_solve(mf, beta);
  if (!sol.converged) throw std::runtime_error("ldp_ball_probe: ma_solve did not converge: " + sol.message);
  rep.inf_free_energy = free_energy(mf, sol.mu, beta);
  rep.excess = rep.free_energy - rep.inf_free_energy;

  const auto& g = mu.grid;
  const int R = g->size();
  std::vector<double> C(static_cast<size_t>(R) * R);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < R; ++j) C[static_cast<size_t>(i) * R + j] = ground_cost(g->center(i), g->center(j), GroundMetric::geodesic);
  // one-particle log weights w.r.t. FS area, and pair weights on cell centers
  std::vector<double> l1(R);
  for (int i = 0; i < R; ++i) {
    Vec3 x = g->center(i);
    l1[i] = model.base.log_density(x) - (model.metric.has_perturbation() ? beta * model.metric.u(x) : 0.0);
  }
  const double a = beta / model.k;
  // mean of log chord^2 for two uniform points in one cell, treating the cell as a disc
  const double self = std::log(1.0 / R) - 0.5;
  struct Pair {
    double logw, w2;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<size_t>(R) * (R + 1) / 2);
  std::vector<int> idx(R);
  std::vector<double> d(R);
  double lmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < R; ++i)
    for (int j = i; j < R; ++j) {
      double lc = i == j ? self : std::log(chord2(g->center(i), g->center(j)));
      double lw = a * (lc + model.basis_log_shift) + l1[i] + l1[j] + (i == j ? 0.0 : std::log(2.0));
      double w2 = w2_two_atoms_costs(&C[static_cast<size_t>(i) * R], &C[static_cast<size_t>(j) * R], mu.mass, idx, d);
      pairs.push_back({lw, w2});
      lmax = std::max(lmax, lw);
    }
  double total = 0.0;
  for (auto& p : pairs) total += std::exp(p.logw - lmax);
  for (double e0 : opt.eps) {
    LdpRow row;
    row.requested = e0;
    double e = e0;
    for (int w = 0; w <= opt.max_widen; ++w) {
      double in = 0.0;
      for (auto& p : pairs)
        if (p.w2 < e) in += std::exp(p.logw - lmax);
      row.prob = in / total;
      row.eps = e;
      if (row.prob > 0.0) break;
      e *= 2.0;
      row.widened = true;
    }
    row.rate = row.prob > 0.0 ? std::max(0.0, -std::log(row.prob) / model.N) : std::numeric_limits<double>::infinity();
    if (row.widened) rep.message = "some balls were empty and were widened";
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace kg
