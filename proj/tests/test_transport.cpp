#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gen.hpp"
#include "kgibbs/analysis.hpp"
#include "kgibbs/transport.hpp"

using namespace kg;

namespace {

// uniform weights, equal counts: optimal plan is a permutation
double brute_force(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  std::vector<int> p(a.size());
  std::iota(p.begin(), p.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (size_t i = 0; i < a.size(); ++i) c += ground_cost(a[i], b[p[i]], GroundMetric::geodesic);
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return std::sqrt(best / a.size());
}

}  // namespace

TEST_CASE("property: exact W2 matches the permutation oracle") {
  gen::Source g(41);
  for (int t = 0; t < 40; ++t) {
    int n = g.integer(2, 6);
    auto a = g.points(n), b = g.points(n);
    std::vector<double> w(n, 1.0);
    auto r = wasserstein_points(a, w, b, w);
    CHECK(r.solver == "exact-network-simplex");
    CHECK(r.w2 == doctest::Approx(brute_force(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("property: W2 is a metric on weighted point sets") {
  gen::Source g(42);
  for (int t = 0; t < 30; ++t) {
    int n = g.integer(3, 12);
    auto x = g.points(n);
    auto wa = g.weights(n), wb = g.weights(n), wc = g.weights(n);
    double ab = wasserstein_points(x, wa, x, wb).w2, ba = wasserstein_points(x, wb, x, wa).w2;
    double bc = wasserstein_points(x, wb, x, wc).w2, ac = wasserstein_points(x, wa, x, wc).w2;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(wasserstein_points(x, wa, x, wa).w2 < 1e-12);
    CHECK(ac <= ab + bc + 1e-12);
  }
}

// mass on one meridian column only: transport reduces to the quantile coupling in latitude
TEST_CASE("meridian transport equals the one-dimensional quantile oracle") {
  const int n = 16;
  std::vector<Vec3> x;
  std::vector<double> a, b;
  for (int j = 0; j < n; ++j) {
    double th = M_PI * (j + 0.5) / n;
    x.emplace_back(std::sin(th), 0.0, std::cos(th));
    a.push_back(1.0 + j);
    b.push_back(std::exp(-0.3 * j));
  }
  double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
  for (double& v : a) v /= sa;
  for (double& v : b) v /= sb;
  // quantile coupling
  double cost = 0.0, ca = 0.0, cb = 0.0;
  int i = 0, j = 0;
  double pa = a[0], pb = b[0];
  while (i < n && j < n) {
    double m = std::min(pa, pb);
    double d = M_PI * (i - j) / n;
    cost += m * d * d;
    pa -= m, pb -= m, ca += m, cb += m;
    if (pa <= 1e-15 && ++i < n) pa = a[i];
    if (pb <= 1e-15 && ++j < n) pb = b[j];
  }
  CHECK(wasserstein_points(x, a, x, b).w2 == doctest::Approx(std::sqrt(cost)).epsilon(1e-10));
}

TEST_CASE("grid measures: identical inputs give zero; antipodal caps") {
  auto g = make_grid(8 * 8 * 8);
  auto u = DensityGrid::uniform(g);
  CHECK(wasserstein(u, u).w2 < 1e-12);
  auto cap = cap_measure(g, 0.125);
  std::vector<double> flipped(g->size());
  for (int c = 0; c < g->size(); ++c) flipped[g->locate(-g->center(c))] = cap.mass[c];
  DensityGrid other(g, flipped);
  double d = wasserstein(cap, other).w2;
  CHECK(d > 2.0);
  CHECK(d <= M_PI + 1e-12);
  auto g2 = make_grid(8 * 9 * 9);
  CHECK_THROWS(wasserstein(u, DensityGrid::uniform(g2)));
}

TEST_CASE("network simplex reports a zero duality gap") {
  gen::Source g(43);
  const int n = 30, m = 25;
  std::vector<double> a = g.weights(n), b = g.weights(m), cost(n * m);
  for (double& c : cost) c = g.uniform();
  double gap = 1.0;
  network_simplex(a, b, cost, &gap);
  CHECK(std::abs(gap) < 1e-12);
}
