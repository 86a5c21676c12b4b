#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "kgibbs/laplacian.hpp"
#include "kgibbs/meanfield.hpp"

using namespace kg;

namespace {

Eigen::VectorXd random_smooth(const SphereGrid& g, gen::Source& s, double amp) {
  double c[6];
  for (double& x : c) x = amp * s.normal();
  Eigen::VectorXd u(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& x = g.center(i);
    u[i] = c[0] * x.x() + c[1] * x.y() + c[2] * x.z() + c[3] * x.x() * x.y() + c[4] * x.y() * x.z() +
           c[5] * (x.z() * x.z() - 1.0 / 3.0);
  }
  return u;
}

}  // namespace

TEST_CASE("discrete Laplacian: spherical harmonics are eigenfunctions to second order") {
  std::vector<double> err;
  for (int n : {8, 16, 32}) {
    auto g = make_grid(8 * n * n);
    Laplacian L(g);
    Eigen::VectorXd f(g->size());
    for (int i = 0; i < g->size(); ++i) f[i] = g->center(i).x() * g->center(i).z();
    Eigen::VectorXd r = L.solve(-6.0 * f);  // Δ(xz) = -6 xz
    r.array() -= r.mean();
    err.push_back((r - f).lpNorm<Eigen::Infinity>());
  }
  CHECK(err[1] < err[0] / 3.0);
  CHECK(err[2] < err[1] / 3.0);
}

TEST_CASE("MA of zero is the reference form; MA integrates to one") {
  auto g = make_grid(512);
  MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
  gen::Source s(31);
  Eigen::VectorXd phi = random_smooth(*g, s, 0.1);
  CHECK(mf.monge_ampere(Eigen::VectorXd::Zero(g->size())).sum() == doctest::Approx(1.0));
  CHECK(mf.monge_ampere(phi).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("poisson solve inverts MA") {
  auto g = make_grid(2048);
  MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
  std::vector<double> m(g->size());
  for (int i = 0; i < g->size(); ++i) m[i] = std::exp(g->center(i).y());
  DensityGrid rho(g, m);
  rho.normalize();
  auto p = poisson_solve(mf, rho);
  CHECK(p.residual_l1 < 1e-10);
  Eigen::VectorXd ma = mf.monge_ampere(p.phi.values);
  for (int i = 0; i < g->size(); ++i) CHECK(ma[i] == doctest::Approx(rho.mass[i]).epsilon(1e-8));
}

TEST_CASE("property: entropy, I and J are nonnegative") {
  auto g = make_grid(512);
  MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
  gen::Source s(32);
  for (int t = 0; t < 30; ++t) {
    DensityGrid mu(g, std::vector<double>(g->size()));
    for (double& x : mu.mass) x = -std::log(s.uniform(1e-9, 1.0));
    mu.normalize();
    CHECK(entropy(mu, mf.base()) >= 0.0);
    Eigen::VectorXd phi = random_smooth(*g, s, 0.2);
    double I = functional_I(mf, phi), J = functional_J(mf, phi);
    CHECK(I >= -1e-14);
    CHECK(J >= -1e-14);
    CHECK(J <= I + 1e-14);
  }
}

TEST_CASE("psh projection fixes psh functions and lies below u") {
  auto g = make_grid(512);
  MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
  gen::Source s(33);
  Eigen::VectorXd u = random_smooth(*g, s, 0.02);
  auto P = psh_projection(mf, u);
  CHECK((P.phi.values - u).lpNorm<Eigen::Infinity>() < 1e-10);
  Eigen::VectorXd v = random_smooth(*g, s, 1.5);
  auto Q = psh_projection(mf, v);
  CHECK((Q.phi.values - v).maxCoeff() < 1e-10);
  CHECK(mf.monge_ampere(Q.phi.values).minCoeff() > -1e-12);
  CHECK(Q.complementarity < 1e-10);
}

TEST_CASE("mean-field solution satisfies its equation and the variational gap vanishes") {
  auto g = make_grid(2048);
  BundleMetric bm;
  bm.perturbation = [](const Vec3& x) { return 0.3 * x.z(); };
  MeanField mf(g, bm, BaseMeasure::fubini_study());
  for (double b : {1.0, -0.3}) {
    auto r = ma_solve(mf, b);
    REQUIRE(r.converged);
    Eigen::VectorXd ma = mf.monge_ampere(r.phi.values);
    for (int i = 0; i < g->size(); ++i) CHECK(ma[i] == doctest::Approx(r.mu.mass[i]).epsilon(1e-8));
    auto rep = ding_mabuchi(mf, r.phi.values, b);
    CHECK(std::abs(rep.gap) < 1e-8);
  }
}

TEST_CASE("property: free energy of any measure is at least its minimum") {
  auto g = make_grid(512);
  MeanField mf(g, BundleMetric{}, BaseMeasure::fubini_study());
  auto r = ma_solve(mf, 1.0);
  double fmin = free_energy(mf, r.mu, 1.0);
  gen::Source s(34);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> m(g->size());
    Eigen::VectorXd w = random_smooth(*g, s, 1.0);
    for (int i = 0; i < g->size(); ++i) m[i] = std::exp(w[i]);
    DensityGrid mu(g, m);
    mu.normalize();
    CHECK(free_energy(mf, mu, 1.0) >= fmin - 1e-12);
  }
}
