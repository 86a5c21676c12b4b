#include "kgibbs/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "kgibbs/krylov.hpp"
#include "kgibbs/quadrature.hpp"

namespace kg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp_weighted(const Eigen::VectorXd& a, const Eigen::VectorXd& w) {
  double mx = -kInf;
  for (int i = 0; i < a.size(); ++i)
    if (w[i] > 0) mx = std::max(mx, a[i]);
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i)
    if (w[i] > 0) s += w[i] * std::exp(a[i] - mx);
  return mx + std::log(s);
}

Eigen::VectorXd project_mean_zero(Eigen::VectorXd v) {
  v.array() -= v.mean();
  return v;
}

}  // namespace

MeanField::MeanField(GridPtr g, const BundleMetric& metric, const BaseMeasure& base)
    : grid_(g), lap_(std::make_shared<Laplacian>(g)), V_(metric.degree) {
  const int R = g->size();
  omega0_ = Eigen::VectorXd::Constant(R, V_ / R);
  flat_ = !metric.has_perturbation();
  if (!flat_) {
    Eigen::VectorXd u(R);
    for (int i = 0; i < R; ++i) u[i] = metric.u(g->center(i));
    omega0_ += lap_->apply(u) / R;
  }
  auto b = base.cell_masses(*g);
  base_ = Eigen::Map<Eigen::VectorXd>(b.data(), R);
}

MeanField::MeanField(GridPtr g, double V, const Eigen::VectorXd& omega0, const Eigen::VectorXd& base_masses)
    : grid_(g), lap_(std::make_shared<Laplacian>(g)), V_(V), omega0_(omega0), base_(base_masses) {
  const int R = g->size();
  flat_ = (omega0_.array() - V_ / R).abs().maxCoeff() < 1e-15 * V_;
}

Eigen::VectorXd MeanField::monge_ampere(const Eigen::VectorXd& phi) const {
  return (omega0_ + lap_->apply(phi) / size()) / V_;
}

double MeanField::energy_of_potential(const Eigen::VectorXd& phi) const {
  Eigen::VectorXd Lp = lap_->apply(phi) / size();
  return phi.dot(2.0 * omega0_ + Lp) / (2.0 * V_);
}

PoissonResult poisson_solve(const MeanField& mf, const DensityGrid& rho) {
  if (rho.size() != mf.size()) throw std::invalid_argument("poisson_solve: density does not match the grid");
  rho.validate(1e-9);
  const int R = mf.size();
  Eigen::Map<const Eigen::VectorXd> r(rho.mass.data(), R);
  Eigen::VectorXd rhs = R * (mf.volume() * r - mf.omega0());
  PoissonResult out;
  out.phi.grid = mf.grid_ptr();
  out.phi.values = mf.laplacian().solve(rhs);
  Eigen::VectorXd ddc = mf.laplacian().apply(out.phi.values) / R;
  out.residual_l1 = (ddc - (mf.volume() * r - mf.omega0())).lpNorm<1>();
  return out;
}

namespace {

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = kInf;
  double max_mass = 0.0;  // max_i (p_i - b_i): mass pulled into one cell beyond dV
};

// F(φ) = ω0 + Lφ/R - V p(φ), p = e^{βφ} b / Σ
Eigen::VectorXd ma_residual(const MeanField& mf, const Eigen::VectorXd& phi, double beta, Eigen::VectorXd& p) {
  const int R = mf.size();
  Eigen::VectorXd a = beta * phi;
  double lz = log_sum_exp_weighted(a, mf.base());
  p.resize(R);
  for (int i = 0; i < R; ++i) p[i] = mf.base()[i] > 0 ? mf.base()[i] * std::exp(a[i] - lz) : 0.0;
  return mf.omega0() + mf.laplacian().apply(phi) / R - mf.volume() * p;
}

NewtonOutcome newton(const MeanField& mf, double beta, Eigen::VectorXd& phi, const MASolveOptions& opt) {
  const int R = mf.size();
  const double V = mf.volume();
  const Laplacian& L = mf.laplacian();
  NewtonOutcome out;
  Eigen::VectorXd p;
  Eigen::VectorXd F = ma_residual(mf, phi, beta, p);
  double fn = F.lpNorm<1>();
  // preconditioner R (-L + c)^{-1} on the mean-zero subspace
  double shift = std::max(std::abs(V * beta), 1.0);
  LinearOp M = [&](const Eigen::VectorXd& v) {
    return project_mean_zero(R * L.solve_shifted(project_mean_zero(v), shift));
  };
  for (int it = 0; it < opt.max_newton; ++it) {
    out.residual = fn;
    out.max_mass = (p - mf.base()).maxCoeff();
    if (!std::isfinite(fn)) return out;
    if (fn <= opt.tol) {
      out.converged = true;
      return out;
    }
    // -J δ = F with -J = -L/R + Vβ (diag p - p p^T)
    Eigen::VectorXd pc = p;
    LinearOp A = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd y = -L.apply(v) / R;
      y += V * beta * (pc.cwiseProduct(v) - pc * pc.dot(v));
      return project_mean_zero(y);
    };
    Eigen::VectorXd rhs = project_mean_zero(F);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(R);
    double rtol = std::max(opt.linear_rtol, std::min(1e-3, 1e-2 * fn));
    if (beta >= 0.0) pcg(A, M, rhs, delta, rtol, opt.max_linear);
    else minres(A, M, rhs, delta, rtol, opt.max_linear);
    delta = project_mean_zero(delta);
    // backtracking on ||F||_1
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd trial = phi + t * delta;
      Eigen::VectorXd pt;
      Eigen::VectorXd Ft = ma_residual(mf, trial, beta, pt);
      double ft = Ft.lpNorm<1>();
      if (std::isfinite(ft) && ft < (1.0 - 1e-4 * t) * fn) {
        phi = project_mean_zero(trial);
        F = Ft;
        p = pt;
        fn = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    out.iterations = it + 1;
    if (!moved) break;
  }
  out.residual = fn;
  out.max_mass = (p - mf.base()).maxCoeff();
  out.converged = fn <= opt.tol;
  return out;
}

void finish(const MeanField& mf, double beta, MASolveResult& r) {
  const int R = mf.size();
  Eigen::VectorXd a = beta * r.phi.values;
  r.log_z = log_sum_exp_weighted(a, mf.base());
  std::vector<double> m(R);
  for (int i = 0; i < R; ++i) m[i] = mf.base()[i] * std::exp(a[i] - r.log_z);
  r.mu = DensityGrid(mf.grid_ptr(), std::move(m));
  r.mu.normalize();
}

}  // namespace

MASolveResult ma_solve(const MeanField& mf, double beta, const MASolveOptions& opt) {
  const int R = mf.size();
  MASolveResult res;
  res.phi.grid = mf.grid_ptr();
  Eigen::VectorXd phi0;
  {
    // β = 0 solution: ω0 + dd^c φ = V dV
    Eigen::VectorXd rhs = R * (mf.volume() * mf.base() - mf.omega0());
    phi0 = mf.laplacian().solve(rhs);
  }
  if (beta == 0.0) {
    res.phi.values = phi0;
    res.converged = true;
    res.residual = (mf.omega0() + mf.laplacian().apply(phi0) / R - mf.volume() * mf.base()).lpNorm<1>();
    finish(mf, 0.0, res);
    return res;
  }
  if (beta > 0.0) {
    Eigen::VectorXd phi = opt.initial.size() == R ? project_mean_zero(opt.initial) : phi0;
    auto o = newton(mf, beta, phi, opt);
    res.log.push_back({beta, o.iterations, o.residual, o.converged});
    if (!o.converged) {
      // fall back to continuation from β = 0
      phi = phi0;
      double b = 0.0, step = 0.25;
      while (b < beta && step >= opt.dbeta_min) {
        double nb = std::min(beta, b + step);
        Eigen::VectorXd trial = phi;
        auto oc = newton(mf, nb, trial, opt);
        res.log.push_back({nb, oc.iterations, oc.residual, oc.converged});
        if (oc.converged) {
          phi = trial;
          b = nb;
          o = oc;
        } else {
          step *= 0.5;
        }
      }
      res.last_good_beta = b;
      if (b < beta) o.converged = false;
    }
    res.phi.values = phi;
    res.converged = o.converged;
    res.beta = o.converged ? beta : res.last_good_beta;
    res.residual = o.residual;
    res.newton_iterations = o.iterations;
    if (!res.converged) res.message = "newton did not converge";
    finish(mf, res.beta, res);
    return res;
  }
  // β < 0: Aubin-type continuation from β = 0
  Eigen::VectorXd phi = phi0;
  double b = 0.0, step = opt.dbeta;
  NewtonOutcome last;
  last.converged = true;
  last.residual = 0.0;
  while (b > beta) {
    if (step < opt.dbeta_min) break;
    // snap to the target so rounding in b - step cannot leave a sliver step
    double nb = b - step <= beta + 1e-12 ? beta : b - step;
    Eigen::VectorXd trial = phi;
    auto o = newton(mf, nb, trial, opt);
    bool ok = o.converged && o.max_mass <= opt.blowup_mass;
    res.log.push_back({nb, o.iterations, o.residual, ok});
    if (ok) {
      phi = trial;
      b = nb;
      last = o;
    } else {
      step *= 0.5;
    }
  }
  res.phi.values = phi;
  res.beta = b;
  res.last_good_beta = b;
  res.converged = b <= beta;
  res.residual = last.residual;
  res.newton_iterations = last.iterations;
  if (!res.converged) {
    std::ostringstream os;
    os << "no solution reached: continuation stalled at beta = " << b;
    res.message = os.str();
  }
  finish(mf, b, res);
  return res;
}

// ---------------------------------------------------------------------------
// Energy of measures

namespace {

struct CellGeom {
  std::vector<Vec3> nodes;  // 4x4 Gauss nodes, weights below
  Vec3 centroid;
  Eigen::Matrix3d second;   // Σ w (x - c)(x - c)^T
  double radius = 0.0;
};

}  // namespace

std::vector<double> energy_of_measures_green(const MeanField& mf, const std::vector<DensityGrid>& mus) {
  if (!mf.flat_reference())
    throw std::invalid_argument("green method needs omega0 = V ω_FS (no metric perturbation)");
  const SphereGrid& g = mf.grid();
  const int R = g.size();
  const int K = static_cast<int>(mus.size());
  for (const auto& m : mus)
    if (m.size() != R) throw std::invalid_argument("energy_of_measure: density does not match the grid");
  const double C = green_constant();

  // 4x4 Gauss-Legendre in (s, t); cell_point is area-uniform so weights are products
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                               0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                               0.3478548451374538};
  std::vector<double> w16;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) w16.push_back(gw[a] * gw[b] / 4.0);

  std::vector<CellGeom> geo(R);
  for (int i = 0; i < R; ++i) {
    auto& c = geo[i];
    Vec3 acc = Vec3::Zero();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        Vec3 x = g.cell_point(i, 0.5 * (1 + gx[a]), 0.5 * (1 + gx[b]));
        acc += w16[c.nodes.size()] * x;
        c.nodes.push_back(x);
      }
    c.centroid = acc.normalized();
    c.second.setZero();
    for (int k = 0; k < 16; ++k) {
      Vec3 d = c.nodes[k] - c.centroid;
      c.second += w16[k] * d * d.transpose();
    }
    double rad = 0.0;
    for (double s : {0.0, 1.0})
      for (double t : {0.0, 1.0}) rad = std::max(rad, (g.cell_point(i, s, t) - c.centroid).norm());
    rad = std::max(rad, (g.cell_point(i, 0.5, 0.0) - c.centroid).norm());
    rad = std::max(rad, (g.cell_point(i, 0.5, 1.0) - c.centroid).norm());
    c.radius = rad;
  }

  // self averages, one per band up to reflection
  std::vector<double> self_band(g.bands(), 0.0);
  CellQuadOptions cq;
  cq.angle_panels = 2;
  cq.angle_order = 10;
  cq.rmin = 1e-4;
  for (int b = 0; b < g.half_bands(); ++b) {
    int cell = g.band_offset(b);
    double acc = 0.0;
    for (int k = 0; k < 16; ++k) {
      const Vec3& x = geo[cell].nodes[k];
      double inner = integrate_cell(
          g, cell, [&](const Vec3& y) { return -std::log(chord2(x, y)) + C; }, {{x, 0.0}}, cq);
      acc += w16[k] * inner * R;
    }
    self_band[b] = acc;
    self_band[g.bands() - 1 - b] = acc;
  }

  std::vector<Eigen::VectorXd> m(K);
  for (int k = 0; k < K; ++k) m[k] = Eigen::Map<const Eigen::VectorXd>(mus[k].mass.data(), R);
  std::vector<double> total(K, 0.0);
  std::vector<double> row(K);
  for (int i = 0; i < R; ++i) {
    double gii = self_band[g.band_of(i)];
    for (int k = 0; k < K; ++k) total[k] += m[k][i] * m[k][i] * gii;
    std::fill(row.begin(), row.end(), 0.0);
    const CellGeom& ci = geo[i];
    const Vec3& x = ci.centroid;
    const double trx = ci.second.trace();
    for (int j = i + 1; j < R; ++j) {
      const CellGeom& cj = geo[j];
      const Vec3& y = cj.centroid;
      double xy = x.dot(y);
      double one_m = 1.0 - xy;
      double reach = 1.5 * (ci.radius + cj.radius);
      double gij;
      if (2.0 * one_m < reach * reach) {
        double s = 0.0;
        for (int a = 0; a < 16; ++a)
          for (int bq = 0; bq < 16; ++bq) s += w16[a] * w16[bq] * -std::log(chord2(ci.nodes[a], cj.nodes[bq]));
        gij = s + C;
      } else {
        // centroid value plus second-moment correction of both cells
        double inv = 1.0 / one_m;
        double hx = y.dot(ci.second * y) * inv * inv - xy * inv * trx;
        double hy = x.dot(cj.second * x) * inv * inv - xy * inv * cj.second.trace();
        gij = -std::log(0.5 * one_m) + C + 0.5 * (hx + hy);
      }
      for (int k = 0; k < K; ++k) row[k] += m[k][j] * gij;
    }
    for (int k = 0; k < K; ++k) total[k] += 2.0 * m[k][i] * row[k];
  }
  for (int k = 0; k < K; ++k) total[k] *= 0.5 * mf.volume();
  return total;
}

EnergyValue energy_of_measure(const MeanField& mf, const DensityGrid& mu, EnergyMethod method) {
  EnergyValue out;
  double mx = *std::max_element(mu.mass.begin(), mu.mass.end());
  if (mx > 0.5) {
    out.reliable = false;
    out.warning = "a single cell carries more than half of the mass";
  }
  if (method == EnergyMethod::green) {
    out.value = energy_of_measures_green(mf, {mu})[0];
    return out;
  }
  auto ps = poisson_solve(mf, mu);
  Eigen::Map<const Eigen::VectorXd> m(mu.mass.data(), mu.size());
  out.value = mf.energy_of_potential(ps.phi.values) - ps.phi.values.dot(m);
  return out;
}

double entropy(const DensityGrid& mu, const Eigen::VectorXd& base) {
  double s = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    double m = mu.mass[i];
    if (m <= 0.0) continue;
    if (base[i] <= 0.0) return kInf;
    s += m * std::log(m / base[i]);
  }
  return s;
}

double free_energy(const MeanField& mf, const DensityGrid& mu, double beta) {
  double D = entropy(mu, mf.base());
  if (beta == 0.0) return D;
  double E = energy_of_measure(mf, mu, EnergyMethod::potential).value;
  if (!std::isfinite(E)) return kInf;
  return beta * E + D;
}

// ---------------------------------------------------------------------------
// psh projection: LCP for ψ = u - φ ≥ 0, λ = q + Aψ ≥ 0, ψλ = 0 with A = -L/R.

ProjectionResult psh_projection(const MeanField& mf, const Eigen::VectorXd& u, const ProjectionOptions& opt) {
  const int R = mf.size();
  const Laplacian& L = mf.laplacian();
  auto A = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return -L.apply(v) / R; };
  Eigen::VectorXd q = mf.omega0() - A(u);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(R), lam = q;
  const double c = 1.0 / R;
  std::vector<char> active(R), prev;
  std::set<std::vector<char>> seen;
  ProjectionResult res;
  for (int it = 0; it < opt.max_iter; ++it) {
    for (int i = 0; i < R; ++i) active[i] = lam[i] - c * psi[i] > 0.0;
    if (active == prev) break;
    if (!seen.insert(active).second) throw std::runtime_error("psh_projection: active set cycled");
    prev = active;
    std::vector<int> inact;
    for (int i = 0; i < R; ++i)
      if (!active[i]) inact.push_back(i);
    const int n = static_cast<int>(inact.size());
    psi.setZero();
    if (n > 0) {
      if (n == R) throw std::runtime_error("psh_projection: empty contact set");
      auto ext = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(R);
        for (int k = 0; k < n; ++k) full[inact[k]] = v[k];
        return full;
      };
      LinearOp Aii = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd y = A(ext(v)), out(n);
        for (int k = 0; k < n; ++k) out[k] = y[inact[k]];
        return out;
      };
      LinearOp Mi = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd y = R * L.solve_shifted(ext(v), 1.0), out(n);
        for (int k = 0; k < n; ++k) out[k] = y[inact[k]];
        return out;
      };
      Eigen::VectorXd rhs(n), sol = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < n; ++k) rhs[k] = -q[inact[k]];
      auto kr = pcg(Aii, Mi, rhs, sol, 1e-13, opt.max_linear);
      if (!kr.converged && kr.residual > 1e-9)
        throw std::runtime_error("psh_projection: inner solve did not converge");
      psi = ext(sol);
    }
    lam = q + A(psi);
    for (int i = 0; i < R; ++i)
      if (!active[i]) lam[i] = 0.0;
    res.iterations = it + 1;
  }
  if (res.iterations >= opt.max_iter) throw std::runtime_error("psh_projection: iteration cap reached");
  res.phi.grid = mf.grid_ptr();
  res.phi.values = u - psi;
  res.contact.assign(R, 0);
  Eigen::VectorXd mass = q + A(psi);  // V MA(Pu)
  double off = 0.0, viol = 0.0;
  for (int i = 0; i < R; ++i) {
    res.contact[i] = active[i] || psi[i] <= opt.tol;
    if (!res.contact[i]) off += std::abs(mass[i]);
    viol = std::max({viol, -psi[i], -mass[i]});
  }
  res.complementarity = off / mf.volume();
  res.violation = viol;
  return res;
}

double functional_I(const MeanField& mf, const Eigen::VectorXd& phi) {
  return phi.dot(mf.omega0()) / mf.volume() - phi.dot(mf.monge_ampere(phi));
}

double functional_J(const MeanField& mf, const Eigen::VectorXd& phi) {
  return phi.dot(mf.omega0()) / mf.volume() - mf.energy_of_potential(phi);
}

FunctionalReport ding_mabuchi(const MeanField& mf, const Eigen::VectorXd& phi, double beta) {
  FunctionalReport r;
  const int R = mf.size();
  Eigen::VectorXd ma = mf.monge_ampere(phi);
  r.energy_potential = mf.energy_of_potential(phi);
  r.I = functional_I(mf, phi);
  r.J = functional_J(mf, phi);
  r.ding = -r.energy_potential - log_sum_exp_weighted(-phi, mf.base());
  r.g_functional = beta * r.energy_potential - log_sum_exp_weighted(beta * phi, mf.base());
  r.ma_positive = ma.minCoeff() >= 0.0;
  // E(MA φ) = 𝓔(φ) - <φ, MA φ>, exact for the discrete pair
  r.energy_measure = r.energy_potential - phi.dot(ma);
  if (r.ma_positive) {
    DensityGrid mu(mf.grid_ptr(), std::vector<double>(ma.data(), ma.data() + R));
    r.entropy = entropy(mu, mf.base());
    r.free_energy = beta * r.energy_measure + r.entropy;
  } else {
    r.entropy = kInf;
    r.free_energy = kInf;
  }
  r.mabuchi = r.free_energy;
  r.gap = r.free_energy - r.g_functional;
  return r;
}

CanonicalPotential canonical_potential(const MeanField& mf, const DensityGrid& one_point, double beta,
                                       double floor) {
  const int R = mf.size();
  if (one_point.size() != R) throw std::invalid_argument("canonical_potential: grid mismatch");
  CanonicalPotential out;
  out.floored.assign(R, 0);
  Eigen::VectorXd phi(R);
  for (int i = 0; i < R; ++i) {
    double d = one_point.mass[i];
    if (d < floor) {
      d = floor;
      out.floored[i] = 1;
    }
    phi[i] = std::log(d / mf.base()[i]);
  }
  phi.array() -= phi.mean();
  out.phi.grid = mf.grid_ptr();
  out.phi.values = phi;
  double bi = beta == 0.0 ? 1.0 : 1.0 / beta;
  out.curvature = mf.omega0() + bi * mf.laplacian().apply(phi) / R;
  for (int i = 0; i < R; ++i) {
    if (out.floored[i]) continue;
    out.total_curvature += out.curvature[i];
    if (out.curvature[i] <= 0.0) out.positive = false;
  }
  return out;
}

void write_potential_csv(std::ostream& os, const PotentialGrid& p) {
  os << "cell_index,phi\n" << std::setprecision(17);
  for (int i = 0; i < p.values.size(); ++i) os << i << ',' << p.values[i] << '\n';
}

}  // namespace kg
