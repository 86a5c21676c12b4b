#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "kgibbs/geometry.hpp"
#include "kgibbs/grid.hpp"

namespace kg {

enum class BaseKind { fubini_study, log_fano, custom };

// Probability measure dV = rho * (normalized FS area).
class BaseMeasure {
 public:
  BaseMeasure() = default;  // Fubini-Study
  static BaseMeasure fubini_study() { return {}; }
  // rho ∝ Π chord^2(x, p_m)^{-w_m}
  static BaseMeasure log_fano(const WeightedDivisor& d);
  // rho ∝ f, normalized by quadrature; f must be positive and continuous
  static BaseMeasure custom(std::function<double(const Vec3&)> f, std::string label = "custom");

  BaseKind kind() const { return kind_; }
  bool is_fubini_study() const { return kind_ == BaseKind::fubini_study; }
  const WeightedDivisor& divisor() const { return divisor_; }
  const std::string& label() const { return label_; }

  // log rho at x; +inf at divisor support
  double log_density(const Vec3& x) const;
  double density(const Vec3& x) const { return std::exp(log_density(x)); }
  std::vector<Vec3> singular_points() const { return support_; }
  double log_normalization() const { return log_norm_; }

  // Per-cell probabilities. Cells near divisor support get the integrated
  // singular mass; elsewhere center values are used. Normalized to sum 1.
  std::vector<double> cell_masses(const SphereGrid& g) const;

 private:
  BaseKind kind_ = BaseKind::fubini_study;
  WeightedDivisor divisor_;
  std::vector<Vec3> support_;
  std::function<double(const Vec3&)> custom_;
  double log_norm_ = 0.0;
  std::string label_ = "fubini-study";

  double log_unnormalized(const Vec3& x) const;
};

// Metric on O(m): weight φ = log(1+|z|^2) + u/m in chart 0.
struct BundleMetric {
  double degree = 1.0;
  std::function<double(const Vec3&)> perturbation;  // u; empty means u = 0
  std::string label = "fubini-study";

  bool has_perturbation() const { return static_cast<bool>(perturbation); }
  double u(const Vec3& x) const { return perturbation ? perturbation(x) : 0.0; }
};

// Point where the integrand behaves like chord^2(x, p)^{-w} times a smooth factor.
struct SingularPoint {
  Vec3 p;
  double w = 0.0;
};

// Integral of f over one grid cell w.r.t. normalized area. Singular points in
// the closed cell are integrated in polar coordinates with a radial change of
// variables that absorbs the power; nearby ones drive quadtree refinement.
struct CellQuadOptions {
  int angle_panels = 4;   // per edge triangle
  int angle_order = 15;   // Gauss order per panel
  double rmin = 1e-7;     // innermost radius in cell coordinates
};
double integrate_cell(const SphereGrid& g, int cell, const std::function<double(const Vec3&)>& f,
                      const std::vector<SingularPoint>& singular, const CellQuadOptions& opt = {});

}  // namespace kg
