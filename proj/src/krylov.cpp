#include "kgibbs/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kg {

KrylovResult pcg(const LinearOp& A, const LinearOp& M, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                 double rtol, int max_iter) {
  KrylovResult res;
  const double bn = b.norm();
  if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());
  if (bn == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  Eigen::VectorXd r = b - A(x);
  Eigen::VectorXd z = M(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    res.residual = r.norm() / bn;
    if (res.residual <= rtol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd Ap = A(p);
    double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) break;  // lost definiteness
    double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    z = M(r);
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    res.iterations = it + 1;
  }
  res.residual = (b - A(x)).norm() / bn;
  res.converged = res.converged || res.residual <= rtol * 10;
  return res;
}

// Paige-Saunders recurrences with a symmetric positive definite preconditioner.
KrylovResult minres(const LinearOp& A, const LinearOp& M, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                    double rtol, int max_iter) {
  KrylovResult res;
  const double bn = b.norm();
  if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());
  if (bn == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const int n = static_cast<int>(b.size());
  Eigen::VectorXd r1 = b - A(x);
  Eigen::VectorXd y = M(r1);
  double beta1 = r1.dot(y);
  if (beta1 <= 0.0) {
    res.converged = beta1 == 0.0;
    return res;
  }
  beta1 = std::sqrt(beta1);
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n), w1(n), w2 = Eigen::VectorXd::Zero(n), r2 = r1, v(n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < max_iter; ++it) {
    v = y / beta;
    y = A(v);
    if (it > 0) y -= (beta / oldb) * r1;
    double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = M(r2);
    oldb = beta;
    beta = r2.dot(y);
    if (beta < 0.0) break;  // preconditioner not positive definite
    beta = std::sqrt(beta);
    double oldeps = epsln;
    double delta = cs * dbar + sn * alfa;
    double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    double phi = cs * phibar;
    phibar = sn * phibar;
    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;
    res.iterations = it + 1;
    if (phibar / beta1 < rtol || beta == 0.0) break;
  }
  res.residual = (b - A(x)).norm() / bn;
  res.converged = res.residual <= std::max(rtol * 100, 1e-10);
  return res;
}

}  // namespace kg
