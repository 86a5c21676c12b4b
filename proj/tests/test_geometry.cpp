#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "kgibbs/geometry.hpp"
#include "kgibbs/grid.hpp"
#include "kgibbs/quadrature.hpp"

using namespace kg;

TEST_CASE("north pole and infinity") {
  CHECK((SpherePoint::from_z(0.0).to_vec() - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((SpherePoint::infinity().to_vec() - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK(std::isinf(SpherePoint::infinity().log1p_abs2_z()));
}

TEST_CASE("property: chart transition preserves the point") {
  gen::Source g(1);
  for (int t = 0; t < 500; ++t) {
    auto p = SpherePoint::from_z(g.coordinate());
    CHECK(p.is_canonical());
    auto q = chart_transition(p);
    CHECK(q.chart != p.chart);
    CHECK((q.to_vec() - p.to_vec()).norm() < 1e-12);
    auto back = SpherePoint::from_vec(p.to_vec());
    CHECK((back.to_vec() - p.to_vec()).norm() < 1e-12);
  }
}

TEST_CASE("property: chordal distance in coordinates matches the embedding") {
  gen::Source g(2);
  for (int t = 0; t < 500; ++t) {
    cplx z = g.coordinate(), w = g.coordinate();
    // |z-w|^2 / ((1+|z|^2)(1+|w|^2)), evaluated directly when both are moderate
    if (std::abs(z) > 1e3 || std::abs(w) > 1e3) continue;
    double direct = std::norm(z - w) / ((1 + std::norm(z)) * (1 + std::norm(w)));
    auto a = SpherePoint::from_z(z), b = SpherePoint::from_z(w);
    CHECK(chord2(a, b) == doctest::Approx(direct).epsilon(1e-10));
    CHECK(chord2(a.to_vec(), b.to_vec()) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("green function integrates to zero against FS area") {
  gen::Source g(3);
  for (int t = 0; t < 5; ++t) {
    Vec3 x = g.point();
    auto r = integrate_sphere([&](const Vec3& y) { return green_function(x, y); }, {x});
    CHECK(r.status == QuadStatus::ok);
    CHECK(std::abs(r.value) < 1e-8);
  }
  CHECK(green_constant() == -1.0);
}

TEST_CASE("property: rotations preserve chord and geodesic distances") {
  gen::Source g(4);
  for (int t = 0; t < 200; ++t) {
    Vec3 a = g.point(), b = g.point();
    Eigen::Matrix3d R = Eigen::AngleAxisd(g.uniform(0, 6.3), g.point()).toRotationMatrix();
    CHECK(chord2(R * a, R * b) == doctest::Approx(chord2(a, b)).epsilon(1e-12));
    CHECK(geodesic(R * a, R * b) == doctest::Approx(geodesic(a, b)).epsilon(1e-10));
  }
}

TEST_CASE("divisor validation") {
  WeightedDivisor d;
  d.points = {SpherePoint::from_z(0.0), SpherePoint::from_z(0.0)};
  d.weights = {0.3, 0.3};
  CHECK_THROWS_AS(divisor_validate(d), std::invalid_argument);
  d.points = {SpherePoint::from_z(0.0), SpherePoint::infinity(), SpherePoint::from_z(1.0)};
  d.weights = {0.9, 0.9, 0.5};
  auto r = divisor_validate(d);
  CHECK(r.klt);
  CHECK_FALSE(r.log_fano);
  CHECK(divisor_validate(WeightedDivisor{}).automorphism_symmetric);
}

TEST_CASE("grid cells are equal-area and locate their own centers") {
  for (int n : {1, 3, 8, 16}) {
    auto g = make_grid(8 * n * n);
    REQUIRE(g->size() == 8 * n * n);
    double total = 0.0;
    for (int b = 0; b < g->bands(); ++b) {
      double area = (g->u_top(b) - g->u_bottom(b)) / 2.0 / g->band_cells(b);
      CHECK(area == doctest::Approx(1.0 / g->size()).epsilon(1e-12));
      total += area * g->band_cells(b);
    }
    CHECK(total == doctest::Approx(1.0));
    for (int c = 0; c < g->size(); ++c) CHECK(g->locate(g->center(c)) == c);
  }
  CHECK(SphereGrid::nearest_resolution(2000) == 2048);
}

TEST_CASE("property: cell_point stays in its cell") {
  gen::Source s(5);
  auto g = make_grid(8 * 12 * 12);
  for (int t = 0; t < 1000; ++t) {
    int c = s.integer(0, g->size() - 1);
    Vec3 x = g->cell_point(c, s.uniform(0.01, 0.99), s.uniform(0.01, 0.99));
    CHECK(std::abs(x.norm() - 1.0) < 1e-14);
    CHECK(g->locate(x) == c);
  }
}
