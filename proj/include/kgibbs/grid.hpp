#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "kgibbs/geometry.hpp"

namespace kg {

// Equal-area zonal grid with R = 8 n^2 cells. Northern band j = 1..n holds
// 4(2j-1) cells and the south mirrors it. Band boundaries in u = cos(theta)
// are u = 1 - 2 cum/R. Cell centers sit at the theta-midpoint of the band and
// at longitudes 2π(i + 1/2)/n_b.
class SphereGrid {
 public:
  explicit SphereGrid(int resolution);

  static bool valid_resolution(int resolution);
  static int nearest_resolution(int cells);  // closest 8 n^2

  int size() const { return R_; }
  int half_bands() const { return n_; }
  int bands() const { return 2 * n_; }
  int band_cells(int b) const { return count_[b]; }
  int band_offset(int b) const { return offset_[b]; }
  int band_of(int cell) const;
  int index_in_band(int cell) const { return cell - offset_[band_of(cell)]; }
  double u_top(int b) const { return ub_[b]; }
  double u_bottom(int b) const { return ub_[b + 1]; }
  double theta_top(int b) const { return tb_[b]; }
  double theta_bottom(int b) const { return tb_[b + 1]; }
  double theta_center(int b) const { return tc_[b]; }
  double phi_center(int b, int i) const;
  double cell_area() const { return 1.0 / R_; }

  const Vec3& center(int cell) const { return centers_[cell]; }
  const std::vector<Vec3>& centers() const { return centers_; }
  SpherePoint center_point(int cell) const { return SpherePoint::from_vec(centers_[cell]); }
  int locate(const Vec3& x) const;

  // Map (s, t) in [0,1]^2 to the point of cell `cell` that is uniform in area.
  Vec3 cell_point(int cell, double s, double t) const;

 private:
  int n_, R_;
  std::vector<int> count_, offset_;
  std::vector<double> ub_, tb_, tc_;
  std::vector<Vec3> centers_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;
GridPtr make_grid(int resolution);

// Probability measure on the grid.
struct DensityGrid {
  GridPtr grid;
  std::vector<double> mass;

  DensityGrid() = default;
  DensityGrid(GridPtr g, std::vector<double> m) : grid(std::move(g)), mass(std::move(m)) {}
  static DensityGrid uniform(GridPtr g);

  int size() const { return static_cast<int>(mass.size()); }
  double total() const;
  void normalize();
  // throws if not a probability vector within tol
  void validate(double tol = 1e-12) const;
};

void write_density_csv(std::ostream& os, const DensityGrid& d);
DensityGrid read_density_csv(std::istream& is);

}  // namespace kg
