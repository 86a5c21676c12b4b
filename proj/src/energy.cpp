#include "kgibbs/energy.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kgibbs/quadrature.hpp"

namespace kg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ExtReal::ExtReal(double x) {
  if (std::isnan(x)) {
    kind = Kind::indeterminate;
  } else if (std::isinf(x)) {
    kind = x > 0 ? Kind::pos_inf : Kind::neg_inf;
  } else {
    v = x;
  }
}

double ExtReal::value() const {
  switch (kind) {
    case Kind::finite: return v;
    case Kind::pos_inf: return kInf;
    case Kind::neg_inf: return -kInf;
    case Kind::indeterminate: return std::numeric_limits<double>::quiet_NaN();
  }
  return v;
}

std::string ExtReal::str() const {
  switch (kind) {
    case Kind::pos_inf: return "+inf";
    case Kind::neg_inf: return "-inf";
    case Kind::indeterminate: return "indeterminate";
    default: break;
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

ExtReal operator+(const ExtReal& a, const ExtReal& b) {
  using K = ExtReal::Kind;
  if (a.kind == K::indeterminate || b.kind == K::indeterminate) return ExtReal::indeterminate();
  if (a.finite() && b.finite()) return ExtReal(a.v + b.v);
  if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf())) return ExtReal::indeterminate();
  return a.finite() ? b : a;
}

ExtReal operator-(const ExtReal& a) {
  if (a.is_pos_inf()) return ExtReal::neg_inf();
  if (a.is_neg_inf()) return ExtReal::pos_inf();
  if (a.finite()) return ExtReal(-a.v);
  return a;
}

ExtReal operator-(const ExtReal& a, const ExtReal& b) { return a + (-b); }

ExtReal operator*(double c, const ExtReal& a) {
  if (a.finite()) return ExtReal(c * a.v);
  if (a.kind == ExtReal::Kind::indeterminate || c == 0.0) return ExtReal::indeterminate();
  return c > 0 ? a : -a;
}

Configuration Configuration::from_z(const std::vector<cplx>& z) {
  Configuration c;
  for (auto v : z) c.points.push_back(SpherePoint::from_z(v));
  return c;
}

Configuration Configuration::from_vecs(const std::vector<Vec3>& x) {
  Configuration c;
  for (const auto& v : x) c.points.push_back(SpherePoint::from_vec(v));
  return c;
}

std::vector<Vec3> Configuration::vecs() const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.to_vec());
  return out;
}

void ModelSpec::validate() const {
  std::ostringstream err;
  if (!(m > 0.0)) err << "degree m must be positive; ";
  if (!(k > 0.0)) err << "tensor power k must be positive; ";
  if (N < 2) err << "N must be at least 2; ";
  double km1 = k * m + 1.0;
  if (std::abs(km1 - N) > 1e-9) {
    std::ostringstream v;
    v.precision(12);
    v << km1;
    err << "N must equal k·m + 1 = " << v.str() << "; ";
  }
  if (basis.size() && (basis.rows() != N || basis.cols() != N)) err << "basis matrix must be N x N; ";
  std::string s = err.str();
  if (!s.empty()) throw std::invalid_argument(s.substr(0, s.size() - 2));
}

ModelSpec ModelSpec::fubini_study(int N, double beta, double m) {
  ModelSpec s;
  s.m = m;
  s.N = N;
  s.k = (N - 1) / m;
  s.beta = beta;
  s.metric.degree = m;
  return s;
}

ExtReal vandermonde_log_abs(const Configuration& c) {
  const int N = c.size();
  auto x = c.vecs();
  ExtReal acc(0.0);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) acc = acc + ExtReal(std::log(chord2(c.points[i], c.points[j])));
  for (int i = 0; i < N; ++i) acc = acc + (N - 1.0) * ExtReal(c.points[i].log1p_abs2_z());
  return acc;
}

ExtReal slater_log_norm(const std::vector<Vec3>& x, const ModelSpec& model) {
  const int N = static_cast<int>(x.size());
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double c = chord2(x[i], x[j]);
      if (c == 0.0) return ExtReal::neg_inf();
      s += std::log(c);
    }
  if (model.metric.has_perturbation())
    for (int i = 0; i < N; ++i) s -= model.k * model.metric.u(x[i]);
  return ExtReal(s + model.basis_log_shift);
}

ExtReal slater_log_norm(const Configuration& c, const ModelSpec& model) {
  // chord2 on SpherePoints avoids the round trip through R^3 when charts agree
  const int N = c.size();
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double d = chord2(c.points[i], c.points[j]);
      if (d == 0.0) return ExtReal::neg_inf();
      s += std::log(d);
    }
  if (model.metric.has_perturbation())
    for (int i = 0; i < N; ++i) s -= model.k * model.metric.u(c.points[i].to_vec());
  return ExtReal(s + model.basis_log_shift);
}

ExtReal slater_log_norm_direct(const Configuration& c, const ModelSpec& model) {
  const int N = c.size();
  if (N != model.N) throw std::invalid_argument("configuration size differs from model N");
  // column j: z_j^i (1+|z_j|^2)^{-(N-1)/2} up to a unit phase, built from the canonical chart
  Eigen::MatrixXcd S(N, N);
  for (int j = 0; j < N; ++j) {
    SpherePoint p = c.points[j].canonical();
    double a = std::norm(p.coord);
    double scale = std::pow(1.0 + a, -0.5 * (N - 1));
    std::vector<cplx> pw(N);
    pw[0] = 1.0;
    for (int e = 1; e < N; ++e) pw[e] = pw[e - 1] * p.coord;
    for (int i = 0; i < N; ++i) S(i, j) = pw[p.chart == 0 ? i : N - 1 - i] * scale;
  }
  if (model.basis.size()) S = model.basis * S;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
  const auto& LU = lu.matrixLU();
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    double d = std::abs(LU(i, i));
    if (d == 0.0) return ExtReal::neg_inf();
    s += 2.0 * std::log(d);
  }
  if (model.metric.has_perturbation())
    for (int i = 0; i < N; ++i) s -= model.k * model.metric.u(c.points[i].to_vec());
  return ExtReal(s);
}

ExtReal energy_per_particle(const Configuration& c, const ModelSpec& model) {
  return (-1.0 / (model.k * c.size())) * slater_log_norm(c, model);
}

ExtReal energy_per_particle(const std::vector<Vec3>& x, const ModelSpec& model) {
  return (-1.0 / (model.k * static_cast<double>(x.size()))) * slater_log_norm(x, model);
}

LogDensityValue gibbs_log_density(const Configuration& c, const ModelSpec& model, DensityReference ref) {
  const int N = c.size();
  LogDensityValue r;
  double pair = 0.0;
  bool coincident = false;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double d = chord2(c.points[i], c.points[j]);
      if (d == 0.0) coincident = true;
      else pair += std::log(d);
    }
  double bk = model.beta / model.k;
  if (coincident) {
    r.pairwise = model.beta == 0.0 ? ExtReal(0.0) : (bk > 0 ? ExtReal::neg_inf() : ExtReal::pos_inf());
  } else {
    r.pairwise = ExtReal(bk * (pair + model.basis_log_shift));
  }
  double w = 0.0;
  if (model.metric.has_perturbation())
    for (int i = 0; i < N; ++i) w -= model.beta * model.metric.u(c.points[i].to_vec());
  r.weight = ExtReal(w);
  ExtReal base(0.0);
  for (int i = 0; i < N; ++i) {
    base = base + ExtReal(model.base.log_density(c.points[i].to_vec()));
    if (ref == DensityReference::chart_lebesgue)
      base = base + ExtReal(std::log(fs_density(c.points[i].canonical())));
  }
  r.base = base;
  r.value = r.pairwise + r.weight + r.base;
  return r;
}

double basis_change(const ModelSpec& model, const Eigen::MatrixXcd& M) {
  if (M.rows() != model.N || M.cols() != model.N) throw std::invalid_argument("basis_change: matrix must be N x N");
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  double logdet = 0.0;
  for (int i = 0; i < model.N; ++i) logdet += std::log(std::abs(lu.matrixLU()(i, i)));
  double norm = M.norm();
  if (!std::isfinite(logdet) || logdet < std::log(1e-12) + model.N * std::log(norm))
    throw std::invalid_argument("basis_change: matrix is singular");
  return 2.0 * logdet;
}

ModelSpec with_basis(const ModelSpec& model, const Eigen::MatrixXcd& M) {
  ModelSpec out = model;
  double shift = basis_change(model, M);
  out.basis = model.basis.size() ? Eigen::MatrixXcd(M * model.basis) : M;
  out.basis_log_shift = model.basis_log_shift + shift;
  return out;
}

GramResult gram_matrix(const ModelSpec& model, const std::function<double(const Vec3&)>& u) {
  model.validate();
  const int N = model.N;
  GramResult res;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
  bool radial = model.base.is_fubini_study() && !model.metric.has_perturbation() && !u;
  if (radial) {
    // ∫ |z|^{2i} (1+|z|^2)^{-(N-1)} dFS = ∫_0^π sin^{2i}(θ/2) cos^{2(N-1-i)}(θ/2) sinθ/2 dθ
    for (int i = 0; i < N; ++i) {
      double v = 0.0;
      for (int p = 0; p < 16; ++p) {
        double lo = std::numbers::pi * p / 16, hi = std::numbers::pi * (p + 1) / 16;
        v += gauss_integrate(
            [&](double t) {
              double s = std::sin(0.5 * t), c = std::cos(0.5 * t);
              return std::exp(2.0 * i * std::log(s) + 2.0 * (N - 1 - i) * std::log(c)) * 0.5 * std::sin(t);
            },
            lo, hi, 30);
      }
      A(i, i) = v;
    }
    res.radial = true;
  } else {
    const int pairs = N * (N + 1) / 2;
    const double k = model.k;
    std::vector<double> out;
    auto integrand = [&](const Vec3& x, double* o) {
      double wgt = std::exp(model.base.log_density(x) - k * (model.metric.u(x) + (u ? u(x) : 0.0)));
      double a = 0.5 * (1.0 + x.z());            // 1/(1+|z|^2)
      double r2 = 0.5 * (1.0 - x.z());           // |z|^2/(1+|z|^2)
      double rho = std::hypot(x.x(), x.y());
      cplx ph = rho > 0 ? cplx(x.x() / rho, x.y() / rho) : cplx(1.0, 0.0);
      cplx zeta = ph * std::sqrt(r2);
      o[0] = wgt;
      std::vector<cplx> zp(N);
      zp[0] = 1.0;
      for (int i = 1; i < N; ++i) zp[i] = zp[i - 1] * zeta;
      int idx = 1;
      for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j) {
          double pw = (N - 1) - 0.5 * (i + j);
          double am = pw == 0.0 ? 1.0 : std::pow(a, pw);
          cplx v = zp[i] * std::conj(zp[j]) * am * wgt;
          o[idx++] = v.real();
          o[idx++] = v.imag();
        }
    };
    std::vector<Vec3> centers = model.base.singular_points();
    if (centers.empty()) centers = {Vec3{0, 0, 1}, Vec3{0, 0, -1}};
    SphereQuadOptions opt;
    opt.gauss_order = 20;
    opt.n_psi = std::max(32, 2 * N + 8);
    opt.outer_panels = 8;
    out = integrate_sphere_vec(integrand, 1 + 2 * pairs, centers, opt);
    int idx = 1;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) {
        cplx v(out[idx], out[idx + 1]);
        idx += 2;
        A(i, j) = v;
        A(j, i) = std::conj(v);
      }
  }
  if (model.basis.size()) A = model.basis * A * model.basis.adjoint();
  Eigen::LLT<Eigen::MatrixXcd> llt(A);
  if (llt.info() != Eigen::Success) throw std::runtime_error("gram_matrix: Gram matrix is not positive definite");
  double ld = 0.0;
  for (int i = 0; i < N; ++i) ld += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
  res.A = A;
  res.log_det = ld;
  return res;
}

Eigen::MatrixXcd orthonormalize_factor(const Eigen::MatrixXcd& A) {
  Eigen::LLT<Eigen::MatrixXcd> llt(A);
  if (llt.info() != Eigen::Success) throw std::runtime_error("orthonormalize: Gram matrix is not positive definite");
  const int N = static_cast<int>(A.rows());
  Eigen::MatrixXcd L = llt.matrixL();
  return L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXcd::Identity(N, N));
}

ModelSpec orthonormalize_basis(const ModelSpec& model) {
  auto g = gram_matrix(model);
  Eigen::MatrixXcd T = orthonormalize_factor(g.A);
  ModelSpec out = model;
  out.basis = model.basis.size() ? Eigen::MatrixXcd(T * model.basis) : T;
  // 2 log|det T| = -log det A
  out.basis_log_shift = model.basis_log_shift - g.log_det;
  return out;
}

}  // namespace kg
