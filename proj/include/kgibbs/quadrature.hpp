#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kgibbs/geometry.hpp"

namespace kg {

// Gauss-Legendre rule on [-1, 1]. Supported orders: 7, 10, 15, 20, 25, 30.
struct GaussRule {
  std::vector<double> x, w;
};
const GaussRule& gauss_rule(int order);

// Integral of f over [a, b] with a Gauss rule.
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order = 20);

// Integral of f over [0, theta_max] split into dyadic panels toward 0, so that
// integrable power/log singularities at 0 are resolved.
double dyadic_integrate(const std::function<double(double)>& f, double theta_max, int depth = 60,
                        int order = 20);

enum class QuadStatus { ok, divergent, inconclusive };
std::string to_string(QuadStatus s);

struct SphereQuadOptions {
  int gauss_order = 15;
  int n_psi = 32;
  int max_shells = 24;          // shells inside the local regime; theta is floored at ~1e-13
  int min_shells = 4;
  double rel_tol = 1e-11;      // tail error allowed, relative to the running total
  double ratio_tol = 2e-3;     // shell-ratio stabilization for the tail model
  double blend_scale = 2.0;    // partition of unity sharpness, relative to the closest center pair
  int outer_panels = 4;        // panels covering [pi/2, pi]
};

struct SphereQuadResult {
  double value = 0.0;
  double abs_value = 0.0;  // integral of |f|
  QuadStatus status = QuadStatus::ok;
  int offending_center = -1;  // center whose shells failed to converge
  double margin = 0.0;         // estimated local exponent margin at that center
  long evaluations = 0;
  // deepest shell radius reached per center
  std::vector<double> depth;
};

// Integral of f over the sphere w.r.t. normalized area, using polar charts around
// each singular center blended by a partition of unity. Without centers the north
// pole is used. Shell contributions are tracked to detect divergence: when the
// ratio of successive dyadic shells approaches 1 in the local regime the integral
// is reported divergent.
using SphereFn = std::function<double(const Vec3&)>;
SphereQuadResult integrate_sphere(const SphereFn& f, const std::vector<Vec3>& centers,
                                  const SphereQuadOptions& opt = {});

// Vector-valued variant for smooth-times-integrable integrands: all components
// share node sets; the scalar envelope env drives shell termination and tail
// correction. Returns integrals of each component.
using SphereVecFn = std::function<void(const Vec3&, double* out)>;
std::vector<double> integrate_sphere_vec(const SphereVecFn& f, int dim, const std::vector<Vec3>& centers,
                                         const SphereQuadOptions& opt = {});

// Tail test for shell contributions h (nonnegative, outermost first) that decay
// geometrically toward a singular point. One or two geometric terms are fitted
// from the last few shells; a dominant ratio >= 1 means divergence.
enum class TailVerdict { unsettled, converged, divergent };
struct ShellTail {
  TailVerdict verdict = TailVerdict::unsettled;
  double factor = 0.0;  // remaining tail as a multiple of the last shell
  double margin = 0.0;  // -log2 of the dominant ratio
};
ShellTail shell_tail(const std::vector<double>& h, double scale, double rel_tol, double ratio_tol);

// Weight of center j in the partition of unity at x.
double blend_weight(const Vec3& x, const std::vector<Vec3>& centers, int j, double a);

}  // namespace kg
