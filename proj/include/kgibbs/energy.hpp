#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgibbs/geometry.hpp"
#include "kgibbs/measure.hpp"

namespace kg {

// Extended real with explicit infinities; never a silent NaN.
struct ExtReal {
  enum class Kind { finite, pos_inf, neg_inf, indeterminate };
  Kind kind = Kind::finite;
  double v = 0.0;

  ExtReal() = default;
  ExtReal(double x);  // maps ±inf to the flagged kinds, NaN to indeterminate
  static ExtReal pos_inf() { return {Kind::pos_inf, 0.0}; }
  static ExtReal neg_inf() { return {Kind::neg_inf, 0.0}; }
  static ExtReal indeterminate() { return {Kind::indeterminate, 0.0}; }

  bool finite() const { return kind == Kind::finite; }
  bool is_pos_inf() const { return kind == Kind::pos_inf; }
  bool is_neg_inf() const { return kind == Kind::neg_inf; }
  double value() const;  // ±inf / NaN for the flagged kinds
  std::string str() const;

 private:
  ExtReal(Kind k, double x) : kind(k), v(x) {}
};

ExtReal operator+(const ExtReal& a, const ExtReal& b);
ExtReal operator-(const ExtReal& a);
ExtReal operator-(const ExtReal& a, const ExtReal& b);
ExtReal operator*(double c, const ExtReal& a);

struct Configuration {
  std::vector<SpherePoint> points;

  Configuration() = default;
  explicit Configuration(std::vector<SpherePoint> p) : points(std::move(p)) {}
  static Configuration from_z(const std::vector<cplx>& z);
  static Configuration from_vecs(const std::vector<Vec3>& x);
  int size() const { return static_cast<int>(points.size()); }
  std::vector<Vec3> vecs() const;
};

// Gibbs ensemble data. Integer N = k m + 1; k is allowed to be a positive real
// so that log-Fano models of fractional degree fit.
struct ModelSpec {
  double m = 1.0;
  double k = 1.0;
  int N = 2;
  double beta = 1.0;
  BaseMeasure base;
  BundleMetric metric;
  std::optional<WeightedDivisor> divisor;
  // Optional change of basis T applied to the monomials (s' = T s). Its log
  // contribution 2 log|det T| is cached in basis_log_shift.
  Eigen::MatrixXcd basis;
  double basis_log_shift = 0.0;

  // throws std::invalid_argument naming the violated constraint
  void validate() const;
  static ModelSpec fubini_study(int N, double beta, double m = 1.0);
};

// Σ_{i<j} log|z_i - z_j|^2 in chart 0, evaluated as Σ log chord^2 + (N-1) Σ log(1+|z|^2).
ExtReal vandermonde_log_abs(const Configuration& c);

// log ||det S^(k)||^2 = Σ_{i<j} log chord^2 - k Σ u(x_i) + basis shift.
ExtReal slater_log_norm(const Configuration& c, const ModelSpec& model);
ExtReal slater_log_norm(const std::vector<Vec3>& x, const ModelSpec& model);
// Same quantity through an explicit N x N determinant of basis sections. For
// cross-checks at small N.
ExtReal slater_log_norm_direct(const Configuration& c, const ModelSpec& model);

// E^(N) = -slater / (k N)
ExtReal energy_per_particle(const Configuration& c, const ModelSpec& model);
ExtReal energy_per_particle(const std::vector<Vec3>& x, const ModelSpec& model);

enum class DensityReference { chart_lebesgue, fs_area };

struct LogDensityValue {
  ExtReal value;
  ExtReal pairwise;  // (β/k) Σ log chord^2 (+ basis shift)
  ExtReal weight;    // -β Σ u(x_i)
  ExtReal base;      // Σ log density of dV at x_i w.r.t. the reference
};

// Unnormalized log density of the Gibbs measure. chart_lebesgue uses planar
// Lebesgue measure in each point's canonical chart; fs_area the normalized
// Fubini-Study area.
LogDensityValue gibbs_log_density(const Configuration& c, const ModelSpec& model,
                                  DensityReference ref = DensityReference::chart_lebesgue);

// 2 log|det M|; throws on (numerically) singular M.
double basis_change(const ModelSpec& model, const Eigen::MatrixXcd& M);
// Model whose basis is M composed with the current one.
ModelSpec with_basis(const ModelSpec& model, const Eigen::MatrixXcd& M);

struct GramResult {
  Eigen::MatrixXcd A;
  double log_det = 0.0;
  bool radial = false;  // diagonal fast path used
};

// A_ij = ∫ s_i conj(s_j) e^{-(k m φ + k u)} dV for the model's basis.
GramResult gram_matrix(const ModelSpec& model, const std::function<double(const Vec3&)>& u = {});

// Lower-triangular T with T A T* = I; returns the model with that basis applied.
Eigen::MatrixXcd orthonormalize_factor(const Eigen::MatrixXcd& A);
ModelSpec orthonormalize_basis(const ModelSpec& model);

}  // namespace kg
