#include <doctest.h>

#include <cmath>

#include "kgibbs/thermo.hpp"

using namespace kg;

namespace {

ModelSpec log_fano_pair(const std::vector<double>& w) {
  WeightedDivisor d;
  const cplx zs[] = {0.0, 1.0, cplx(-1.0, 0.3)};
  double s = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    d.points.push_back(SpherePoint::from_z(zs[i]));
    d.weights.push_back(w[i]);
    s += w[i];
  }
  ModelSpec m = ModelSpec::fubini_study(2, -1.0, 2.0 - s);
  m.base = BaseMeasure::log_fano(d);
  m.divisor = d;
  return m;
}

}  // namespace

TEST_CASE("FS pair: log Z = -log(1+β), divergent at β <= -1") {
  for (double b : {-0.9, -0.5, 0.3, 1.0, 4.0}) {
    auto r = partition_quadrature(ModelSpec::fubini_study(2, b), b);
    CHECK(r.status == QuadStatus::ok);
    CHECK(r.log_z == doctest::Approx(-std::log1p(b)).epsilon(1e-10));
  }
  auto r = partition_quadrature(ModelSpec::fubini_study(2, -1.0), -1.0);
  CHECK(r.status == QuadStatus::divergent);
  CHECK(std::isinf(r.log_z));
  CHECK(partition_quadrature(ModelSpec::fubini_study(3, 0.0), 0.0).log_z == 0.0);
}

// N = 3, k = 2: log Z = log E exp((β/2) S), S = Σ_{i<j} log chord^2. Each log chord^2 is log of a
// uniform variable (mean -1, variance 1) and the three pair terms are pairwise independent, so
// log Z = -3β/2 + (β/2)^2 · 3/2 + O(β^3).
TEST_CASE("FS triple at small β follows the cumulant expansion") {
  const double b = 1e-3;
  auto r = partition_quadrature(ModelSpec::fubini_study(3, b), b);
  REQUIRE(r.status == QuadStatus::ok);
  double expect = -1.5 * b + 0.375 * b * b;
  CHECK(std::abs(r.log_z - expect) < 1e-8);
}

// at β = k the integrand is |det S|^2, so Z = N! det(Gram) = N! Π B(i+1, N-i)
TEST_CASE("FS partition at β = k equals N! times the Gram determinant") {
  CHECK(partition_quadrature(ModelSpec::fubini_study(2, 1.0), 1.0).log_z == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  auto r = partition_quadrature(ModelSpec::fubini_study(3, 2.0), 2.0);
  CHECK(std::abs(r.log_z + std::log(9.0)) < 1e-8);
  CHECK(r.error < 1e-6);
}

TEST_CASE("stratum oracle: hand-computed thresholds") {
  CHECK(threshold_oracle(ModelSpec::fubini_study(2, 1.0)).oracle == doctest::Approx(1.0));
  CHECK(threshold_oracle(ModelSpec::fubini_study(3, 1.0)).oracle == doctest::Approx(4.0 / 3.0));
  // divisor point of weight w, both particles: γ = 2k(1-w) with k = 1/(2 - Σw)
  CHECK(threshold_oracle(log_fano_pair({0.5, 0.5, 0.5})).oracle == doctest::Approx(2.0));
  CHECK(threshold_oracle(log_fano_pair({0.9, 0.1, 0.1})).oracle == doctest::Approx(2.0 / 9.0));
  CHECK(threshold_oracle(log_fano_pair({0.7, 0.7, 0.5})).oracle == doctest::Approx(6.0));
  CHECK(threshold_oracle(log_fano_pair({0.5})).oracle == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("weight condition") {
  auto v = weight_condition(*log_fano_pair({0.9, 0.1, 0.1}).divisor);
  CHECK_FALSE(v.stable);
  CHECK(v.binding == 0);
  CHECK(v.margin == doctest::Approx(-0.7));
  CHECK(weight_condition(*log_fano_pair({0.5, 0.5, 0.5}).divisor).stable);
  CHECK_FALSE(weight_condition(*log_fano_pair({0.5}).divisor).stable);
}

TEST_CASE("partition finiteness follows the oracle") {
  auto m = ModelSpec::fubini_study(2, 1.0);
  CHECK(partition_finite(m, -0.99));
  CHECK_FALSE(partition_finite(m, -1.0));
  CHECK(partition_finite(m, 50.0));
}

TEST_CASE("threshold bracket for the FS pair contains 1") {
  auto rep = gibbs_threshold(ModelSpec::fubini_study(2, 1.0));
  CHECK(rep.numeric);
  CHECK(rep.lo <= 1.0);
  CHECK(rep.hi >= 1.0);
  CHECK(rep.contains_oracle);
  CHECK_FALSE(rep.discrepancy);
}

TEST_CASE("analyticity probe: smooth curve passes, kink is flagged") {
  std::vector<double> b, f, k, e;
  for (int i = 0; i < 30; ++i) {
    double x = 0.2 + 1.8 * i / 29;
    b.push_back(x);
    f.push_back(0.5 * std::log1p(x));
    k.push_back(0.5 * std::abs(x - 1.1) + 0.1 * x * x);
    e.push_back(1e-4);
  }
  CHECK_FALSE(analyticity_probe(b, f, e).flagged);
  auto r = analyticity_probe(b, k, e);
  CHECK(r.flagged);
  CHECK(std::abs(r.flagged_beta - 1.1) < 0.15);
  CHECK_THROWS(analyticity_probe({0.1, 0.2}, {1, 2}, {0, 0}));
}

TEST_CASE("exact one-point density of the FS pair is uniform") {
  auto g = make_grid(128);
  auto d = one_point_exact(ModelSpec::fubini_study(2, 1.0), g);
  for (double m : d.mass) CHECK(m == doctest::Approx(1.0 / 128).epsilon(1e-8));
}
