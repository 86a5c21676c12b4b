#include "kgibbs/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace kg {

namespace {
constexpr double kPi = std::numbers::pi;
}

bool SphereGrid::valid_resolution(int resolution) {
  if (resolution < 8 || resolution % 8) return false;
  int n = static_cast<int>(std::lround(std::sqrt(resolution / 8.0)));
  return 8 * n * n == resolution;
}

int SphereGrid::nearest_resolution(int cells) {
  int n = std::max(1, static_cast<int>(std::lround(std::sqrt(cells / 8.0))));
  return 8 * n * n;
}

SphereGrid::SphereGrid(int resolution) {
  if (!valid_resolution(resolution)) {
    std::ostringstream os;
    os << "grid resolution " << resolution << " invalid: need 8 n^2 cells with n >= 1 (nearest "
       << nearest_resolution(std::max(resolution, 8)) << ")";
    throw std::invalid_argument(os.str());
  }
  R_ = resolution;
  n_ = static_cast<int>(std::lround(std::sqrt(resolution / 8.0)));
  const int B = 2 * n_;
  count_.resize(B);
  offset_.resize(B + 1);
  ub_.resize(B + 1);
  tb_.resize(B + 1);
  tc_.resize(B);
  const double sq2n = std::sqrt(2.0) * n_;
  for (int b = 0; b <= B; ++b) {
    if (b <= n_) {
      ub_[b] = 1.0 - double(b) * b / (double(n_) * n_);
      tb_[b] = 2.0 * std::asin(b / sq2n);
    } else {
      int j = B - b;
      ub_[b] = -(1.0 - double(j) * j / (double(n_) * n_));
      tb_[b] = kPi - 2.0 * std::asin(j / sq2n);
    }
  }
  offset_[0] = 0;
  for (int b = 0; b < B; ++b) {
    int j = b < n_ ? b + 1 : B - b;
    count_[b] = 4 * (2 * j - 1);
    offset_[b + 1] = offset_[b] + count_[b];
    tc_[b] = 0.5 * (tb_[b] + tb_[b + 1]);
  }
  centers_.resize(R_);
  for (int b = 0; b < B; ++b) {
    double st = std::sin(tc_[b]), ct = std::cos(tc_[b]);
    for (int i = 0; i < count_[b]; ++i) {
      double ph = phi_center(b, i);
      centers_[offset_[b] + i] = Vec3{st * std::cos(ph), st * std::sin(ph), ct};
    }
  }
}

int SphereGrid::band_of(int cell) const {
  auto it = std::upper_bound(offset_.begin(), offset_.end(), cell);
  return static_cast<int>(it - offset_.begin()) - 1;
}

double SphereGrid::phi_center(int b, int i) const { return 2.0 * kPi * (i + 0.5) / count_[b]; }

int SphereGrid::locate(const Vec3& x) const {
  double u = std::clamp(x.z() / x.norm(), -1.0, 1.0);
  int b;
  if (u >= 0.0) {
    b = static_cast<int>(std::floor(n_ * std::sqrt(1.0 - u)));
    b = std::clamp(b, 0, n_ - 1);
    // guard the floor against rounding at boundaries
    while (b > 0 && u > ub_[b]) --b;
    while (b < n_ - 1 && u < ub_[b + 1]) ++b;
  } else {
    int j = static_cast<int>(std::floor(n_ * std::sqrt(1.0 + u)));
    j = std::clamp(j, 0, n_ - 1);
    b = 2 * n_ - 1 - j;
    while (b > n_ && u > ub_[b]) --b;
    while (b < 2 * n_ - 1 && u < ub_[b + 1]) ++b;
  }
  double ph = std::atan2(x.y(), x.x());
  if (ph < 0) ph += 2.0 * kPi;
  int i = static_cast<int>(std::floor(ph * count_[b] / (2.0 * kPi)));
  i = std::clamp(i, 0, count_[b] - 1);
  return offset_[b] + i;
}

Vec3 SphereGrid::cell_point(int cell, double s, double t) const {
  int b = band_of(cell);
  int i = cell - offset_[b];
  double u = ub_[b] - s * (ub_[b] - ub_[b + 1]);
  double ph = 2.0 * kPi * (i + t) / count_[b];
  double r = std::sqrt(std::max(0.0, 1.0 - u * u));
  return Vec3{r * std::cos(ph), r * std::sin(ph), u};
}

GridPtr make_grid(int resolution) { return std::make_shared<const SphereGrid>(resolution); }

DensityGrid DensityGrid::uniform(GridPtr g) {
  int R = g->size();
  return DensityGrid(std::move(g), std::vector<double>(R, 1.0 / R));
}

double DensityGrid::total() const {
  double s = 0;
  for (double m : mass) s += m;
  return s;
}

void DensityGrid::normalize() {
  double t = total();
  if (!(t > 0.0)) throw std::invalid_argument("density grid has no mass");
  for (double& m : mass) m /= t;
}

void DensityGrid::validate(double tol) const {
  if (!grid || static_cast<int>(mass.size()) != grid->size())
    throw std::invalid_argument("density grid: mass vector does not match grid");
  for (double m : mass)
    if (!(m >= 0.0)) throw std::invalid_argument("density grid: negative or NaN mass");
  if (std::abs(total() - 1.0) > tol) throw std::invalid_argument("density grid: total mass is not 1");
}

void write_density_csv(std::ostream& os, const DensityGrid& d) {
  os << "cell_index,center_chart,center_re,center_im,mass\n";
  os << std::setprecision(17);
  for (int i = 0; i < d.size(); ++i) {
    SpherePoint p = d.grid->center_point(i);
    os << i << ',' << p.chart << ',' << p.coord.real() << ',' << p.coord.imag() << ',' << d.mass[i] << '\n';
  }
}

DensityGrid read_density_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("cell_index", 0) != 0)
    throw std::runtime_error("density csv: missing header");
  std::vector<double> mass;
  std::vector<SpherePoint> pts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 5) throw std::runtime_error("density csv: bad row '" + line + "'");
    if (std::stoi(f[0]) != static_cast<int>(mass.size()))
      throw std::runtime_error("density csv: cell indices must be consecutive");
    pts.push_back({std::stoi(f[1]), {std::stod(f[2]), std::stod(f[3])}});
    mass.push_back(std::stod(f[4]));
  }
  auto g = make_grid(static_cast<int>(mass.size()));
  for (size_t i = 0; i < pts.size(); ++i)
    if ((pts[i].to_vec() - g->center(static_cast<int>(i))).norm() > 1e-9)
      throw std::runtime_error("density csv: cell centers do not match the grid");
  return DensityGrid(g, std::move(mass));
}

}  // namespace kg
