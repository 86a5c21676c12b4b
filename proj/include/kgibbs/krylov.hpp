#pragma once

#include <functional>

#include <Eigen/Core>

namespace kg {

using LinearOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovResult {
  int iterations = 0;
  double residual = 0.0;  // final ||b - A x|| / ||b||
  bool converged = false;
};

// Preconditioned conjugate gradients for symmetric positive (semi)definite A;
// M applies an SPD preconditioner. x holds the initial guess on entry.
KrylovResult pcg(const LinearOp& A, const LinearOp& M, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                 double rtol = 1e-12, int max_iter = 500);

// Preconditioned MINRES for symmetric indefinite A with SPD preconditioner M.
KrylovResult minres(const LinearOp& A, const LinearOp& M, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                    double rtol = 1e-12, int max_iter = 500);

}  // namespace kg
