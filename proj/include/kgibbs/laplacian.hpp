#pragma once

#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "kgibbs/grid.hpp"

namespace kg {

// Finite-volume Laplace-Beltrami operator on the unit sphere for the
// equal-area grid. Within a band it is diagonalized by the DFT; each
// longitudinal mode couples neighboring bands through a tridiagonal chain.
// With dd^c normalized to unit total mass of ω_FS, the dd^c mass of a cell is
// (L f)_i / R.
class Laplacian {
 public:
  explicit Laplacian(GridPtr g);

  const SphereGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int size() const { return grid_->size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
  // L x = rhs with rhs projected to mean zero; returns the mean-zero solution.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  // (-L + c) x = rhs, c > 0.
  Eigen::VectorXd solve_shifted(const Eigen::VectorXd& rhs, double c) const;

  // Real band-Fourier coefficients. Per band: [a0, a1, b1, ..., nyquist sin].
  void to_modes(const Eigen::VectorXd& f, Eigen::VectorXd& c) const;
  void from_modes(const Eigen::VectorXd& c, Eigen::VectorXd& f) const;

 private:
  struct Chain {
    int first_band = 0;
    std::vector<int> slot;  // coefficient index within each band's block
    std::vector<double> diag, lower, upper;
  };
  GridPtr grid_;
  std::vector<Chain> chains_;
  mutable Eigen::FFT<double> fft_;
  mutable std::vector<std::complex<double>> cbuf_;
  mutable std::vector<double> rbuf_;

  void build();
  void chain_solve(const Chain& ch, const Eigen::VectorXd& rhs, Eigen::VectorXd& x, double shift,
                   bool pin) const;
};

}  // namespace kg
