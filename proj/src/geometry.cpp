#include "kgibbs/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kgibbs/quadrature.hpp"

namespace kg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// unit vector for chart-0 coordinate z (finite)
Vec3 vec_from_z(cplx z) {
  double a = std::norm(z);
  double s = 1.0 / (1.0 + a);
  return {2.0 * z.real() * s, 2.0 * z.imag() * s, (1.0 - a) * s};
}
// unit vector for chart-1 coordinate w (finite); w = 0 is the south pole
Vec3 vec_from_w(cplx w) {
  double a = std::norm(w);
  double s = 1.0 / (1.0 + a);
  return {2.0 * w.real() * s, -2.0 * w.imag() * s, (a - 1.0) * s};
}
}  // namespace

SpherePoint SpherePoint::from_z(cplx z) {
  if (std::isinf(z.real()) || std::isinf(z.imag())) return infinity();
  if (std::abs(z) <= 1.0) return {0, z};
  return {1, 1.0 / z};
}

SpherePoint SpherePoint::from_vec(const Vec3& x) {
  Vec3 v = x.normalized();
  // stereographic projection from whichever pole is farther
  if (v.z() >= 0.0) {
    double s = 1.0 / (1.0 + v.z());
    return SpherePoint{0, {v.x() * s, v.y() * s}}.canonical();
  }
  double s = 1.0 / (1.0 - v.z());
  return SpherePoint{1, {v.x() * s, -v.y() * s}}.canonical();
}

Vec3 SpherePoint::to_vec() const {
  if (std::isinf(coord.real()) || std::isinf(coord.imag()))
    return chart == 0 ? Vec3{0, 0, -1} : Vec3{0, 0, 1};
  return chart == 0 ? vec_from_z(coord) : vec_from_w(coord);
}

bool SpherePoint::is_canonical() const {
  if (!std::isfinite(coord.real()) || !std::isfinite(coord.imag())) return false;
  double r = std::abs(coord);
  if (chart == 0) return r <= 1.0 + 1e-9;
  return r < 1.0;  // ties go to chart 0
}

SpherePoint SpherePoint::canonical() const {
  if (std::isinf(coord.real()) || std::isinf(coord.imag()))
    return chart == 0 ? infinity() : SpherePoint{0, {0.0, 0.0}};
  double r = std::abs(coord);
  if (chart == 0) return r <= 1.0 ? *this : SpherePoint{1, 1.0 / coord};
  if (r >= 1.0) return SpherePoint{0, 1.0 / coord};
  return *this;
}

double SpherePoint::log1p_abs2_z() const {
  double a = std::norm(coord);
  if (std::isinf(a)) return chart == 0 ? kInf : 0.0;
  if (chart == 0) return std::log1p(a);
  if (a == 0.0) return kInf;
  return std::log1p(a) - std::log(a);
}

SpherePoint chart_transition(const SpherePoint& p) {
  if (p.coord == cplx(0.0, 0.0)) return {1 - p.chart, {kInf, 0.0}};
  if (std::isinf(p.coord.real()) || std::isinf(p.coord.imag())) return {1 - p.chart, {0.0, 0.0}};
  return {1 - p.chart, 1.0 / p.coord};
}

double fs_density(const SpherePoint& p) {
  double a = std::norm(p.coord);
  return 1.0 / (std::numbers::pi * (1.0 + a) * (1.0 + a));
}

double chord2(const SpherePoint& a, const SpherePoint& b) {
  if (a.chart == b.chart && std::isfinite(std::norm(a.coord)) && std::isfinite(std::norm(b.coord)))
    return std::norm(a.coord - b.coord) / ((1.0 + std::norm(a.coord)) * (1.0 + std::norm(b.coord)));
  return chord2(a.to_vec(), b.to_vec());
}

void tangent_frame(const Vec3& x, Vec3& e1, Vec3& e2) {
  Vec3 t = std::abs(x.x()) < 0.6 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  e1 = (t - t.dot(x) * x).normalized();
  e2 = x.cross(e1);
}

Vec3 polar_point(const Vec3& c, const Vec3& e1, const Vec3& e2, double theta, double psi) {
  double s = std::sin(theta);
  return std::cos(theta) * c + s * (std::cos(psi) * e1 + std::sin(psi) * e2);
}

double green_constant() {
  // C = -∫ -log chord^2(x,y) dω(x); in polar coordinates around y,
  // chord^2 = sin^2(θ/2) and dω = sinθ dθ dψ / 4π.
  static const double c = [] {
    double I = dyadic_integrate(
        [](double t) {
          double s = std::sin(0.5 * t);
          return -std::log(s * s) * 0.5 * std::sin(t);
        },
        std::numbers::pi, 60, 20);
    return -I;
  }();
  return c;
}

double green_function(const Vec3& x, const Vec3& y) {
  double c2 = chord2(x, y);
  if (c2 == 0.0) return kInf;
  return -std::log(c2) + green_constant();
}

double green_function(const SpherePoint& x, const SpherePoint& y) {
  double c2 = chord2(x, y);
  if (c2 == 0.0) return kInf;
  return -std::log(c2) + green_constant();
}

double WeightedDivisor::total_weight() const {
  double s = 0;
  for (double w : weights) s += w;
  return s;
}

std::vector<Vec3> WeightedDivisor::support() const {
  std::vector<Vec3> out;
  for (const auto& p : points) out.push_back(p.to_vec());
  return out;
}

DivisorReport divisor_validate(const WeightedDivisor& d) {
  if (d.points.size() != d.weights.size())
    throw std::invalid_argument("divisor: points and weights differ in length");
  DivisorReport r;
  auto sup = d.support();
  for (size_t i = 0; i < sup.size(); ++i)
    for (size_t j = i + 1; j < sup.size(); ++j)
      if (std::sqrt(chord2(sup[i], sup[j])) < 1e-9) {
        std::ostringstream os;
        os << "divisor: support points " << i << " and " << j << " coincide";
        throw std::invalid_argument(os.str());
      }
  for (size_t i = 0; i < d.weights.size(); ++i) {
    double w = d.weights[i];
    if (!(w > 0.0 && w < 1.0)) {
      r.klt = false;
      std::ostringstream os;
      os << "weight " << i << " = " << w << " outside (0,1)";
      r.messages.push_back(os.str());
    }
  }
  if (!(d.total_weight() < 2.0)) {
    r.log_fano = false;
    r.messages.push_back("total weight >= 2");
  }
  if (d.empty()) {
    r.automorphism_symmetric = true;
    r.messages.push_back("empty divisor: automorphism-symmetric");
  }
  return r;
}

}  // namespace kg
