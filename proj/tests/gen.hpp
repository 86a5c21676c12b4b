// Small hand-rolled generators for property tests.
#pragma once

#include <random>
#include <vector>

#include "kgibbs/geometry.hpp"

namespace gen {

struct Source {
  std::mt19937_64 rng;
  explicit Source(std::uint64_t seed) : rng(seed) {}

  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng); }
  double normal() { return std::normal_distribution<double>()(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

  kg::Vec3 point() {
    kg::Vec3 v(normal(), normal(), normal());
    return v.normalized();
  }
  // points away from each other by at least min_chord2
  std::vector<kg::Vec3> points(int n, double min_chord2 = 0.0) {
    std::vector<kg::Vec3> x;
    while (static_cast<int>(x.size()) < n) {
      kg::Vec3 p = point();
      bool ok = true;
      for (const auto& q : x) ok = ok && kg::chord2(p, q) > min_chord2;
      if (ok) x.push_back(p);
    }
    return x;
  }
  // complex coordinate with a heavy tail, so both charts get exercised
  kg::cplx coordinate() {
    double r = std::exp(3.0 * normal()), a = uniform(0.0, 6.283185307179586);
    return std::polar(r, a);
  }
  std::vector<double> weights(int n) {
    std::vector<double> w(n);
    double s = 0.0;
    for (double& x : w) s += (x = -std::log(uniform(1e-12, 1.0)));
    for (double& x : w) x /= s;
    return w;
  }
};

}  // namespace gen
