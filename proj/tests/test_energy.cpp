#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gen.hpp"
#include "kgibbs/energy.hpp"

using namespace kg;

TEST_CASE("ExtReal keeps infinities explicit") {
  ExtReal a = ExtReal::pos_inf(), b = ExtReal::neg_inf(), c(2.0);
  CHECK((a + c).is_pos_inf());
  CHECK((a + b).kind == ExtReal::Kind::indeterminate);
  CHECK((-a).is_neg_inf());
  CHECK((-2.0 * a).is_neg_inf());
  CHECK(ExtReal(NAN).kind == ExtReal::Kind::indeterminate);
  CHECK(ExtReal(INFINITY).is_pos_inf());
  CHECK((c - ExtReal(0.5)).value() == 1.5);
}

TEST_CASE("model validation names the constraint") {
  ModelSpec m = ModelSpec::fubini_study(3, 1.0);
  m.N = 5;
  m.k = 2;
  try {
    m.validate();
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("N must equal k·m + 1 = 3") != std::string::npos);
  }
}

TEST_CASE("two points: slater is log chord^2") {
  auto m = ModelSpec::fubini_study(2, 1.0);
  auto c = Configuration::from_z({0.0, 1.0});
  CHECK(slater_log_norm(c, m).value() == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(energy_per_particle(c, m).value() == doctest::Approx(-0.5 * std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("collisions give +inf energy, not NaN") {
  auto m = ModelSpec::fubini_study(3, 1.0);
  auto c = Configuration::from_z({0.5, 0.5, 2.0});
  CHECK(energy_per_particle(c, m).is_pos_inf());
  auto d = gibbs_log_density(c, m);
  CHECK(d.value.is_neg_inf());
}

TEST_CASE("property: fast slater matches determinant and Vandermonde forms") {
  gen::Source g(11);
  for (int t = 0; t < 200; ++t) {
    int N = g.integer(2, 7);
    auto m = ModelSpec::fubini_study(N, 1.0);
    std::vector<cplx> z;
    for (int i = 0; i < N; ++i) z.push_back(g.coordinate());
    auto c = Configuration::from_z(z);
    double fast = slater_log_norm(c, m).value();
    double det = slater_log_norm_direct(c, m).value();
    CHECK(det == doctest::Approx(fast).epsilon(1e-9));
    // Vandermonde in chart 0 minus (N-1) Σ log(1+|z|^2), when all z are finite and moderate
    if (std::all_of(z.begin(), z.end(), [](cplx w) { return std::abs(w) < 1e3; })) {
      double v = vandermonde_log_abs(c).value();
      for (auto w : z) v -= (N - 1) * std::log1p(std::norm(w));
      CHECK(v == doctest::Approx(fast).epsilon(1e-9));
    }
  }
}

TEST_CASE("property: permutation invariance of the energy") {
  gen::Source g(12);
  for (int t = 0; t < 100; ++t) {
    int N = g.integer(2, 9);
    auto m = ModelSpec::fubini_study(N, 1.0);
    auto x = g.points(N);
    double e = energy_per_particle(x, m).value();
    std::shuffle(x.begin(), x.end(), g.rng);
    CHECK(energy_per_particle(x, m).value() == doctest::Approx(e).epsilon(1e-13));
  }
}

TEST_CASE("property: basis change shifts the log density by a constant") {
  gen::Source g(13);
  for (int t = 0; t < 20; ++t) {
    int N = g.integer(2, 5);
    auto m = ModelSpec::fubini_study(N, g.uniform(0.2, 2.0));
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) M(i, j) += 0.4 * cplx(g.normal(), g.normal());
    double logdet = basis_change(m, M);
    CHECK(logdet == doctest::Approx(2.0 * std::log(std::abs(M.determinant()))).epsilon(1e-10));
    auto m2 = with_basis(m, M);
    for (int s = 0; s < 10; ++s) {
      auto c = Configuration::from_vecs(g.points(N));
      double d = gibbs_log_density(c, m2).value.value() - gibbs_log_density(c, m).value.value();
      CHECK(d == doctest::Approx(m.beta / m.k * logdet).epsilon(1e-9));
      CHECK(slater_log_norm_direct(c, m2).value() == doctest::Approx(slater_log_norm(c, m2).value()).epsilon(1e-9));
    }
  }
}

TEST_CASE("Gram matrix of monomials: diagonal beta integrals") {
  for (int N : {2, 3, 6}) {
    auto gr = gram_matrix(ModelSpec::fubini_study(N, 1.0));
    CHECK(gr.radial);
    for (int i = 0; i < N; ++i)
      CHECK(gr.A(i, i).real() ==
            doctest::Approx(std::exp(std::lgamma(i + 1.0) + std::lgamma(double(N - i)) - std::lgamma(N + 1.0))));
  }
  // orthonormalized basis has identity Gram matrix
  auto m = orthonormalize_basis(ModelSpec::fubini_study(4, 1.0));
  auto gr = gram_matrix(m, {});
  CHECK((gr.A - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-9);
}

TEST_CASE("chart_lebesgue and fs_area references differ by the FS density only") {
  gen::Source g(14);
  auto m = ModelSpec::fubini_study(3, 1.0);
  for (int t = 0; t < 20; ++t) {
    auto c = Configuration::from_vecs(g.points(3));
    double a = gibbs_log_density(c, m, DensityReference::chart_lebesgue).value.value();
    double b = gibbs_log_density(c, m, DensityReference::fs_area).value.value();
    double shift = 0.0;
    for (const auto& p : c.points) shift += std::log(fs_density(p));
    CHECK(a == doctest::Approx(b + shift).epsilon(1e-10));
  }
}
