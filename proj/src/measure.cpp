#include "kgibbs/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kgibbs/quadrature.hpp"

namespace kg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// (s, t) coordinates of x relative to a cell; t is unwrapped toward the cell.
void cell_coords(const SphereGrid& g, int cell, const Vec3& x, double& s, double& t) {
  int b = g.band_of(cell);
  int i = cell - g.band_offset(b);
  double u = std::clamp(x.z(), -1.0, 1.0);
  s = (g.u_top(b) - u) / (g.u_top(b) - g.u_bottom(b));
  double ph = std::atan2(x.y(), x.x());
  double n = g.band_cells(b);
  t = ph * n / (2.0 * kPi) - i;
  // pick the branch closest to [0, 1]
  while (t < -0.5 * n + 0.5) t += n;
  while (t > 0.5 * n + 0.5) t -= n;
}

double gauss_2d(const SphereGrid& g, int cell, const std::function<double(const Vec3&)>& f, double s0,
                double s1, double t0, double t1) {
  const auto& r = gauss_rule(7);
  double hs = 0.5 * (s1 - s0), ms = 0.5 * (s1 + s0), ht = 0.5 * (t1 - t0), mt = 0.5 * (t1 + t0);
  double acc = 0.0;
  for (size_t a = 0; a < r.x.size(); ++a)
    for (size_t b = 0; b < r.x.size(); ++b)
      acc += r.w[a] * r.w[b] * f(g.cell_point(cell, ms + hs * r.x[a], mt + ht * r.x[b]));
  return acc * hs * ht;
}

// Quadtree toward points lying outside the rectangle but close to it.
double quadtree(const SphereGrid& g, int cell, const std::function<double(const Vec3&)>& f,
                const std::vector<Vec3>& near, double s0, double s1, double t0, double t1, int depth) {
  if (depth > 0) {
    Vec3 c = g.cell_point(cell, 0.5 * (s0 + s1), 0.5 * (t0 + t1));
    double diam = (g.cell_point(cell, s0, t0) - g.cell_point(cell, s1, t1)).norm() +
                  (g.cell_point(cell, s0, t1) - g.cell_point(cell, s1, t0)).norm();
    bool refine = false;
    for (const auto& p : near)
      if ((c - p).norm() < 1.5 * diam) refine = true;
    if (refine) {
      double sm = 0.5 * (s0 + s1), tm = 0.5 * (t0 + t1);
      return quadtree(g, cell, f, near, s0, sm, t0, tm, depth - 1) +
             quadtree(g, cell, f, near, sm, s1, t0, tm, depth - 1) +
             quadtree(g, cell, f, near, s0, sm, tm, t1, depth - 1) +
             quadtree(g, cell, f, near, sm, s1, tm, t1, depth - 1);
    }
  }
  return gauss_2d(g, cell, f, s0, s1, t0, t1);
}

// Integral over v in [0,1] with dyadic panels toward 0, stopping once the mapped
// radius v^q falls below rmin: closer to the pole, rounding of the point in R^3
// spoils the distance. The remainder uses the value at the innermost node; the
// integrand tends to a constant there by construction of the substitution.
template <class F>
double radial_dyadic(F&& h, double q, double rmin) {
  const auto& r = gauss_rule(10);
  int levels = std::clamp(static_cast<int>(std::ceil(-std::log2(rmin) / q)), 1, 60);
  double acc = 0.0, hi = 1.0, inner = 0.0;
  for (int j = 0; j < levels; ++j) {
    double lo = 0.5 * hi, hh = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
    for (size_t a = 0; a < r.x.size(); ++a) acc += r.w[a] * hh * h(m + hh * r.x[a]);
    inner = h(lo);
    hi = lo;
  }
  return acc + hi * inner;
}

// Unit square integral of f(x(s,t)) when f ~ |y - y_p|^{-2w} near y_p = (sp, tp),
// which lies in the closed square. Polar coordinates around y_p per edge triangle.
double polar_square(const SphereGrid& g, int cell, const std::function<double(const Vec3&)>& f, double sp,
                    double tp, double w, const CellQuadOptions& opt) {
  const double q = 1.0 / (2.0 - 2.0 * w);
  const double cs[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto& ang = gauss_rule(opt.angle_order);
  const int panels = opt.angle_panels;
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    double ax = cs[e][0] - sp, ay = cs[e][1] - tp;
    double bx = cs[(e + 1) % 4][0] - sp, by = cs[(e + 1) % 4][1] - tp;
    // distance from y_p to the edge line
    double ex = bx - ax, ey = by - ay, len = std::hypot(ex, ey);
    double d = std::abs(ax * ey - ay * ex) / len;
    if (d < 1e-15) continue;
    double nx = ey / len, ny = -ex / len;
    if (nx * ax + ny * ay < 0) nx = -nx, ny = -ny;
    double pa = std::atan2(ay, ax), pb = std::atan2(by, bx);
    double span = pb - pa;
    if (span > kPi) span -= 2 * kPi;
    if (span < -kPi) span += 2 * kPi;
    double pn = std::atan2(ny, nx);
    for (int k = 0; k < panels; ++k) {
      double lo = pa + span * k / panels, hi = pa + span * (k + 1) / panels;
      double hh = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
      for (size_t a = 0; a < ang.x.size(); ++a) {
        double phi = m + hh * ang.x[a];
        double rho = d / std::cos(phi - pn);
        double c = std::cos(phi), s = std::sin(phi);
        // r dr = rho^2 q v^{2q-1} dv
        double rad = radial_dyadic([&](double v) {
          double vq = std::pow(v, q);
          double r = rho * vq;
          double fx = f(g.cell_point(cell, sp + r * c, tp + r * s));
          return fx * rho * rho * q * vq * vq / v;
        }, q, opt.rmin);
        total += ang.w[a] * std::abs(hh) * rad;
      }
    }
  }
  return total;
}

// Cap cell touching a pole that carries the singular point: f ~ s^{-w}
// (north, s = 0) or (1-s)^{-w} (south, s = 1).
double pole_square(const SphereGrid& g, int cell, const std::function<double(const Vec3&)>& f, bool north,
                   double w) {
  const double q = 1.0 / (1.0 - w);
  const auto& rt = gauss_rule(15);
  const int panels = 4;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    double lo = double(k) / panels, hi = double(k + 1) / panels;
    double hh = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
    for (size_t a = 0; a < rt.x.size(); ++a) {
      double t = m + hh * rt.x[a];
      double rad = radial_dyadic([&](double v) {
        double vq = std::pow(v, q);
        double s = north ? vq : 1.0 - vq;
        return f(g.cell_point(cell, s, t)) * q * vq / v;
      }, q, 1e-8);
      total += rt.w[a] * hh * rad;
    }
  }
  return total;
}

}  // namespace

double integrate_cell(const SphereGrid& g, int cell, const std::function<double(const Vec3&)>& f,
                      const std::vector<SingularPoint>& singular, const CellQuadOptions& opt) {
  const double R = g.size();
  const int b = g.band_of(cell);
  const double tol = 1e-12;
  std::vector<Vec3> near;
  for (const auto& sp : singular) {
    const Vec3& p = sp.p;
    bool north_pole = p.z() > 1.0 - 1e-15 && b == 0;
    bool south_pole = p.z() < -1.0 + 1e-15 && b == g.bands() - 1;
    if (north_pole || south_pole) return pole_square(g, cell, f, north_pole, sp.w) / R;
    double s, t;
    cell_coords(g, cell, p, s, t);
    if (s > -tol && s < 1 + tol && t > -tol && t < 1 + tol)
      return polar_square(g, cell, f, std::clamp(s, 0.0, 1.0), std::clamp(t, 0.0, 1.0), sp.w, opt) / R;
    near.push_back(p);
  }
  return quadtree(g, cell, f, near, 0, 1, 0, 1, 18) / R;
}

BaseMeasure BaseMeasure::log_fano(const WeightedDivisor& d) {
  auto rep = divisor_validate(d);
  if (!rep.klt) throw std::invalid_argument("log-fano base measure needs klt weights in (0,1)");
  BaseMeasure m;
  m.kind_ = BaseKind::log_fano;
  m.divisor_ = d;
  m.support_ = d.support();
  m.label_ = "log-fano";
  if (d.empty()) {
    m.kind_ = BaseKind::fubini_study;
    m.label_ = "fubini-study";
    return m;
  }
  SphereQuadOptions opt;
  opt.gauss_order = 20;
  opt.n_psi = 64;
  opt.outer_panels = 8;
  auto r = integrate_sphere([&](const Vec3& x) { return std::exp(m.log_unnormalized(x)); }, m.support_, opt);
  if (r.status != QuadStatus::ok) throw std::runtime_error("log-fano base measure: normalization did not converge");
  m.log_norm_ = std::log(r.value);
  return m;
}

BaseMeasure BaseMeasure::custom(std::function<double(const Vec3&)> f, std::string label) {
  BaseMeasure m;
  m.kind_ = BaseKind::custom;
  m.custom_ = std::move(f);
  m.label_ = std::move(label);
  SphereQuadOptions opt;
  opt.gauss_order = 20;
  opt.n_psi = 48;
  opt.outer_panels = 8;
  auto r = integrate_sphere(m.custom_, {Vec3{0, 0, 1}, Vec3{0, 0, -1}}, opt);
  if (!(r.value > 0.0)) throw std::invalid_argument("custom base density must have positive mass");
  m.log_norm_ = std::log(r.value);
  return m;
}

double BaseMeasure::log_unnormalized(const Vec3& x) const {
  switch (kind_) {
    case BaseKind::fubini_study: return 0.0;
    case BaseKind::log_fano: {
      double s = 0.0;
      for (size_t i = 0; i < support_.size(); ++i) {
        double c = chord2(x, support_[i]);
        if (c == 0.0) return kInf;
        s -= divisor_.weights[i] * std::log(c);
      }
      return s;
    }
    case BaseKind::custom: {
      double v = custom_(x);
      return v > 0.0 ? std::log(v) : -kInf;
    }
  }
  return 0.0;
}

double BaseMeasure::log_density(const Vec3& x) const { return log_unnormalized(x) - log_norm_; }

std::vector<double> BaseMeasure::cell_masses(const SphereGrid& g) const {
  const int R = g.size();
  std::vector<double> m(R, 1.0 / R);
  if (kind_ == BaseKind::fubini_study) return m;
  for (int i = 0; i < R; ++i) m[i] = density(g.center(i)) / R;
  if (kind_ == BaseKind::log_fano) {
    std::vector<SingularPoint> sing;
    for (size_t j = 0; j < support_.size(); ++j) sing.push_back({support_[j], divisor_.weights[j]});
    // cells within a few diameters of the support get the integrated mass
    const double reach = 3.0 * std::sqrt(4.0 * kPi / R) * 1.5;
    auto dens = [&](const Vec3& x) { return density(x); };
    for (int i = 0; i < R; ++i) {
      std::vector<SingularPoint> close;
      for (const auto& s : sing)
        if (geodesic(g.center(i), s.p) < reach) close.push_back(s);
      if (!close.empty()) m[i] = integrate_cell(g, i, dens, close);
    }
  }
  double t = 0.0;
  for (double v : m) t += v;
  for (double& v : m) v /= t;
  return m;
}

}  // namespace kg
