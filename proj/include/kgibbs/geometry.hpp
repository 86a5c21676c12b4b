#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace kg {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;

// Point of the Riemann sphere in one of the two standard charts.
// chart 0 carries z, chart 1 carries w = 1/z. z = 0 is the north pole (0,0,1).
struct SpherePoint {
  int chart = 0;
  cplx coord{0.0, 0.0};

  static SpherePoint from_z(cplx z);  // canonical form
  static SpherePoint infinity() { return {1, {0.0, 0.0}}; }
  static SpherePoint from_vec(const Vec3& x);

  Vec3 to_vec() const;
  bool is_canonical() const;
  SpherePoint canonical() const;
  // log(1 + |z|^2) with z the chart-0 coordinate; +inf at z = infinity
  double log1p_abs2_z() const;
};

// Other-chart representation. coord 0 maps to the opposite chart's point at
// infinity, which has no finite coordinate; we return chart' with coord = inf
// and canonical() folds it back.
SpherePoint chart_transition(const SpherePoint& p);

// Density of normalized Fubini-Study area w.r.t. Lebesgue measure in the active chart.
double fs_density(const SpherePoint& p);

// |z-w|^2 / ((1+|z|^2)(1+|w|^2)) = |x-y|^2/4 on the unit sphere.
inline double chord2(const Vec3& a, const Vec3& b) { return 0.25 * (a - b).squaredNorm(); }
double chord2(const SpherePoint& a, const SpherePoint& b);
inline double geodesic(const Vec3& a, const Vec3& b) {
  double c = 0.5 * (a - b).norm();
  return 2.0 * std::asin(c > 1.0 ? 1.0 : c);
}

// Orthonormal tangent frame (e1, e2) at x.
void tangent_frame(const Vec3& x, Vec3& e1, Vec3& e2);
// Point at geodesic distance theta from c in direction angle psi of its frame.
Vec3 polar_point(const Vec3& c, const Vec3& e1, const Vec3& e2, double theta, double psi);

// Green function G(x,y) = -log chord^2 + C, normalized so that its FS average vanishes.
double green_constant();
double green_function(const Vec3& x, const Vec3& y);
double green_function(const SpherePoint& x, const SpherePoint& y);

struct WeightedDivisor {
  std::vector<SpherePoint> points;
  std::vector<double> weights;

  double total_weight() const;
  std::vector<Vec3> support() const;
  bool empty() const { return points.empty(); }
};

struct DivisorReport {
  bool klt = true;
  bool log_fano = true;
  bool automorphism_symmetric = false;  // empty divisor
  std::vector<std::string> messages;
};

// Throws std::invalid_argument on duplicate support points.
DivisorReport divisor_validate(const WeightedDivisor& d);

}  // namespace kg
