#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kgibbs/energy.hpp"
#include "kgibbs/meanfield.hpp"
#include "kgibbs/transport.hpp"
#include "kgibbs/util.hpp"

namespace kg {

// Uniform measure on the polar cap {z >= 1 - 2a} (area fraction a), cell-wise.
// Exact when the cap boundary is a band boundary (a = j^2 / (4 n^2) style).
DensityGrid cap_measure(GridPtr g, double area_fraction);

// Point drawn from the piecewise-uniform measure of a grid density.
class GridSampler {
 public:
  explicit GridSampler(const DensityGrid& mu);
  Vec3 operator()(Rng& rng) const;

 private:
  GridPtr grid_;
  std::vector<double> cdf_;
};

// ---- Gamma-convergence ---------------------------------------------------

struct GammaOptions {
  std::vector<int> Ns{8, 16, 32, 64, 128};
  int samples = 4000;        // iid configurations per N; degree m = 1, k = N - 1
  std::uint64_t seed = 1;
};

struct GammaRow {
  int N = 0;
  MeanSE energy;             // mean of E^(N) over iid configurations
  double gap = 0.0;          // mean - E(μ)
  double offset = 0.0;       // c_N: exact iid mean minus E(μ) for this basis
  bool one_sided = true;     // mean >= E(μ) - 3σ - discretization
};

struct GammaReport {
  double energy = 0.0;            // E(μ), potential method
  double energy_green = 0.0;      // E(μ), green method
  double discretization = 0.0;    // |green - potential|
  std::vector<GammaRow> rows;
  bool gap_decreasing = false;    // |gap| at the largest N below that at the smallest
  bool one_sided = true;          // all rows
};

GammaReport gamma_convergence_probe(const MeanField& mf, const DensityGrid& mu, const GammaOptions& opt = {});

// ---- transfinite diameter -----------------------------------------------

struct DiameterOptions {
  std::vector<int> ks{2, 4, 8};
  int starts = 8;
  int max_sweeps = 3000;
  double tol = 1e-10;        // stop when a sweep gains less than this
  std::uint64_t seed = 1;
};

struct DiameterRow {
  int k = 0, N = 0;
  double best = 0.0;         // max of log||det S^(k)||^2 with weight u
  double normalized = 0.0;   // best / (k N)
  double gap = 0.0;          // normalized - 𝓔(P u)
  int sweeps = 0;
  bool stagnated = false;    // the best start hit the sweep budget
  std::vector<Vec3> points;
};

struct DiameterReport {
  double target = 0.0;       // 𝓔(P u)
  std::vector<DiameterRow> rows;
};

// u is given both as a function (for the configurations) and through the
// mean-field grid (for P u).
DiameterReport transfinite_diameter_probe(const MeanField& mf, const std::function<double(const Vec3&)>& u,
                                          const DiameterOptions& opt = {});

// Coordinate ascent of log||det S^(k)||^2 for a model, from x0. Returns the value.
double fekete_ascent(const ModelSpec& model, std::vector<Vec3>& x, int max_sweeps, double tol, int* sweeps = nullptr,
                     bool* stagnated = nullptr);

// ---- LDP ball probabilities --------------------------------------------

struct LdpOptions {
  std::vector<double> eps{0.3, 0.5, 0.8, 1.2, 2.0};
  int max_widen = 6;         // ε doublings when a ball has zero mass
};

struct LdpRow {
  double eps = 0.0;          // radius actually used
  double requested = 0.0;
  double prob = 0.0;
  double rate = 0.0;         // -(1/N) log prob
  bool widened = false;
};

struct LdpReport {
  double free_energy = 0.0;  // F_β(μ)
  double inf_free_energy = 0.0;
  double excess = 0.0;       // F_β(μ) - inf F_β
  std::vector<LdpRow> rows;
  std::string message;
};

// W2 between (δ_a + δ_b)/2 and the grid measure mu, by threshold filling.
double w2_two_atoms(const Vec3& a, const Vec3& b, const DensityGrid& mu, GroundMetric g = GroundMetric::geodesic);

// N = 2 only: Prob(δ_2 in B_ε(μ)) under the Gibbs measure, on the pair grid of
// μ's cells. mf carries the mean-field data of the same model.
LdpReport ldp_ball_probe(const ModelSpec& model, const MeanField& mf, const DensityGrid& mu, const LdpOptions& opt = {});

}  // namespace kg
