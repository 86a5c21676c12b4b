#include "kgibbs/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace kg {

namespace {

template <unsigned N>
GaussRule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  GaussRule r;
  // boost stores the nonnegative half; for odd N the first entry is the origin
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(w[i]);
    } else {
      r.x.push_back(a[i]);
      r.w.push_back(w[i]);
      r.x.push_back(-a[i]);
      r.w.push_back(w[i]);
    }
  }
  return r;
}

}  // namespace

const GaussRule& gauss_rule(int order) {
  static const GaussRule r7 = make_rule<7>(), r10 = make_rule<10>(), r15 = make_rule<15>(),
                         r20 = make_rule<20>(), r25 = make_rule<25>(), r30 = make_rule<30>();
  switch (order) {
    case 7: return r7;
    case 10: return r10;
    case 15: return r15;
    case 20: return r20;
    case 25: return r25;
    case 30: return r30;
    default: throw std::invalid_argument("gauss_rule: unsupported order " + std::to_string(order));
  }
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order) {
  const auto& g = gauss_rule(order);
  double h = 0.5 * (b - a), m = 0.5 * (a + b), s = 0.0;
  for (size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(m + h * g.x[i]);
  return s * h;
}

double dyadic_integrate(const std::function<double(double)>& f, double theta_max, int depth, int order) {
  double s = 0.0, hi = theta_max;
  for (int d = 0; d < depth; ++d) {
    double lo = 0.5 * hi;
    s += gauss_integrate(f, lo, hi, order);
    hi = lo;
  }
  return s;
}

std::string to_string(QuadStatus s) {
  switch (s) {
    case QuadStatus::ok: return "ok";
    case QuadStatus::divergent: return "divergent";
    case QuadStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

double blend_weight(const Vec3& x, const std::vector<Vec3>& centers, int j, double a) {
  if (centers.size() <= 1) return 1.0;
  double dj = chord2(x, centers[j]);
  if (dj == 0.0) return 1.0;
  // chi_j = e^{a/d_j} / Σ_l e^{a/d_l}: flat to all orders at every center, so a
  // power singularity at c_l times chi_j stays smooth in the polar chart of c_j
  double s = 0.0;
  for (size_t l = 0; l < centers.size(); ++l) {
    double dl = chord2(x, centers[l]);
    if (dl == 0.0) return 0.0;
    double e = a * (1.0 / dl - 1.0 / dj);
    if (e > 700.0) return 0.0;
    s += std::exp(e);
  }
  return 1.0 / s;
}


ShellTail shell_tail(const std::vector<double>& h, double scale, double rel_tol, double ratio_tol) {
  ShellTail t;
  const size_t n = h.size();
  if (n < 3) return t;
  const double q4 = h[n - 1];
  if (q4 == 0.0) {
    t.verdict = TailVerdict::converged;
    return t;
  }
  const double r = h[n - 2] > 0.0 ? q4 / h[n - 2] : -1.0;
  const double rp = h[n - 3] > 0.0 ? h[n - 2] / h[n - 3] : -1.0;
  if (r >= 0.0 && rp >= 0.0) {
    double dr = std::abs(r - rp);
    if (r >= 1.0 - 1e-9 && dr < ratio_tol * 1e-3) {
      // shells stopped shrinking: not integrable here
      t.verdict = TailVerdict::divergent;
      t.margin = -std::log2(r);
      return t;
    }
    if (r < 1.0) {
      // one geometric term; its error is governed by how settled the ratio is
      double tail_err = q4 * dr / ((1.0 - r) * (1.0 - r));
      bool tiny = r < 0.9 && q4 <= rel_tol * scale;
      if (tiny || (dr < ratio_tol * (1.0 - r) && tail_err <= rel_tol * scale)) {
        t.verdict = TailVerdict::converged;
        t.factor = r / (1.0 - r);
        t.margin = -std::log2(std::max(r, 1e-300));
        return t;
      }
    }
  }
  if (n < 5) return t;
  // two geometric terms: P_{j+2} = c1 P_{j+1} + c0 P_j, fitted on 4 shells
  auto fit = [](const double* q, double& c1, double& c0) {
    double det = q[1] * q[1] - q[0] * q[2];
    if (std::abs(det) <= 1e-12 * q[1] * q[1]) return false;
    c1 = (q[2] * q[1] - q[0] * q[3]) / det;
    c0 = (q[1] * q[3] - q[2] * q[2]) / det;
    return true;
  };
  const double* q = h.data() + n - 5;
  double a1, a0, c1, c0;
  if (!fit(q, a1, a0) || !fit(q + 1, c1, c0)) return t;
  double pred = a1 * q[3] + a0 * q[2];
  double perr = std::abs(pred - q4);
  double disc = c1 * c1 + 4.0 * c0;
  if (disc < 0.0) return t;
  double r1 = 0.5 * (c1 + std::sqrt(disc)), r2 = 0.5 * (c1 - std::sqrt(disc));
  if (r1 <= 0.0 || std::abs(r2) >= r1 || r1 == r2) return t;
  // amplitudes at the last shell: a + b = P_j, a/r1 + b/r2 = P_{j-1}
  double b = r2 == 0.0 ? 0.0 : (h[n - 2] - q4 / r1) / (1.0 / r2 - 1.0 / r1);
  double a = q4 - b;
  if (r1 >= 1.0 - 1e-9) {
    if (a > 0.5 * q4 && perr < 1e-6 * q4) {
      t.verdict = TailVerdict::divergent;
      t.margin = -std::log2(r1);
    }
    return t;
  }
  if (r2 <= -1.0) return t;
  double tail = a * r1 / (1.0 - r1) + b * r2 / (1.0 - r2);
  double err = perr / (1.0 - r1);
  if (tail >= 0.0 && perr < 1e-3 * q4 && err <= rel_tol * scale) {
    t.verdict = TailVerdict::converged;
    t.factor = tail / q4;
    t.margin = -std::log2(r1);
  }
  return t;
}

namespace {

constexpr double kPi = std::numbers::pi;

struct CenterOutcome {
  QuadStatus status = QuadStatus::ok;
  double margin = 0.0;
  double depth = 0.0;
};

// Shared engine. eval(x, w, acc) adds w*f(x) into acc[0..dim) and returns w*|envelope|.
template <class Eval>
SphereQuadResult run_engine(Eval&& eval, int dim, const std::vector<Vec3>& centers_in,
                            const SphereQuadOptions& opt, std::vector<double>& total) {
  std::vector<Vec3> centers = centers_in;
  if (centers.empty()) centers.push_back(Vec3{0, 0, 1});
  const auto& g = gauss_rule(opt.gauss_order);
  const double dpsi = 2.0 * kPi / opt.n_psi;
  double cmin = 1.0;
  for (size_t j = 0; j < centers.size(); ++j)
    for (size_t l = j + 1; l < centers.size(); ++l) cmin = std::min(cmin, chord2(centers[j], centers[l]));
  const double blend_a = opt.blend_scale * cmin;

  SphereQuadResult res;
  res.depth.assign(centers.size(), 0.0);
  total.assign(dim, 0.0);
  double env_total = 0.0;
  std::vector<double> shell(dim);

  for (size_t j = 0; j < centers.size(); ++j) {
    const Vec3& c = centers[j];
    Vec3 e1, e2;
    tangent_frame(c, e1, e2);
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < centers.size(); ++l)
      if (l != j) dmin = std::min(dmin, geodesic(c, centers[l]));

    auto panel = [&](double lo, double hi, std::vector<double>& acc) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double env = 0.0;
      double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
      for (size_t a = 0; a < g.x.size(); ++a) {
        double th = m + h * g.x[a];
        double wt = g.w[a] * h * std::sin(th) / (4.0 * kPi) * dpsi;
        for (int l = 0; l < opt.n_psi; ++l) {
          double psi = (l + 0.5) * dpsi;
          Vec3 x = polar_point(c, e1, e2, th, psi);
          double chi = blend_weight(x, centers, static_cast<int>(j), blend_a);
          if (chi == 0.0) continue;
          env += eval(x, wt * chi, acc.data());
          ++res.evaluations;
        }
      }
      return env;
    };

    // far field: [pi/2, pi] in equal panels
    double env_j = 0.0;
    for (int p = 0; p < opt.outer_panels; ++p) {
      double lo = 0.5 * kPi * (1.0 + double(p) / opt.outer_panels);
      double hi = 0.5 * kPi * (1.0 + double(p + 1) / opt.outer_panels);
      env_j += panel(lo, hi, shell);
      for (int d = 0; d < dim; ++d) total[d] += shell[d];
    }

    // dyadic shells toward the center
    CenterOutcome out;
    double hi = 0.5 * kPi;
    std::vector<double> hist;
    bool done = false;
    // the budget counts shells inside the local regime, so nearly coincident
    // centers still get resolved; theta is floored to keep points distinct
    int local_shells = 0;
    while (local_shells < opt.max_shells && hi > 2e-13 && !done) {
      double lo = 0.5 * hi;
      double env = panel(lo, hi, shell);
      for (int d = 0; d < dim; ++d) total[d] += shell[d];
      env_j += env;
      out.depth = lo;
      if (hi < dmin / 8.0) {
        ++local_shells;
        hist.push_back(env);
      }
      if (local_shells >= opt.min_shells) {
        auto t = shell_tail(hist, env_total + env_j, opt.rel_tol, opt.ratio_tol);
        if (t.verdict == TailVerdict::divergent) {
          out.status = QuadStatus::divergent;
          out.margin = t.margin;
          done = true;
        } else if (t.verdict == TailVerdict::converged) {
          for (int d = 0; d < dim; ++d) total[d] += shell[d] * t.factor;
          env_j += env * t.factor;
          out.margin = t.margin;
          done = true;
        }
      }
      hi = lo;
    }
    if (!done) out.status = QuadStatus::inconclusive;
    env_total += env_j;
    res.depth[j] = out.depth;
    if (out.status != QuadStatus::ok && res.status != QuadStatus::divergent) {
      res.status = out.status;
      res.offending_center = static_cast<int>(j);
      res.margin = out.margin;
    }
  }
  res.abs_value = env_total;
  res.value = total[0];
  return res;
}

}  // namespace

SphereQuadResult integrate_sphere(const SphereFn& f, const std::vector<Vec3>& centers,
                                  const SphereQuadOptions& opt) {
  std::vector<double> total;
  return run_engine(
      [&](const Vec3& x, double w, double* acc) {
        double v = w * f(x);
        acc[0] += v;
        return std::abs(v);
      },
      1, centers, opt, total);
}

std::vector<double> integrate_sphere_vec(const SphereVecFn& f, int dim, const std::vector<Vec3>& centers,
                                         const SphereQuadOptions& opt) {
  std::vector<double> total, buf(dim);
  auto r = run_engine(
      [&](const Vec3& x, double w, double* acc) {
        f(x, buf.data());
        for (int d = 0; d < dim; ++d) acc[d] += w * buf[d];
        return std::abs(w * buf[0]);
      },
      dim, centers, opt, total);
  if (r.status == QuadStatus::divergent)
    throw std::runtime_error("integrate_sphere_vec: integrand not integrable near a center");
  return total;
}

}  // namespace kg
