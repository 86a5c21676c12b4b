#pragma once

#include <string>
#include <vector>

#include "kgibbs/geometry.hpp"
#include "kgibbs/grid.hpp"

namespace kg {

enum class GroundMetric { geodesic, chordal };
std::string to_string(GroundMetric g);

struct TransportOptions {
  GroundMetric ground = GroundMetric::geodesic;
  int exact_max_cells = 2000;   // support size above which the entropic solver is used
  double sinkhorn_eps = 0.0;    // 0: 1e-3 times the largest cost
  int sinkhorn_iters = 3000;
  double sinkhorn_tol = 1e-10;  // marginal violation (l1)
};

struct DistanceReport {
  double w2 = 0.0;
  std::string ground;
  std::string solver;          // "exact-network-simplex" or "entropic-sinkhorn"
  double gap = 0.0;            // duality gap (exact) or marginal violation (entropic)
  double regularization = 0.0; // epsilon of the entropic solve, 0 for exact
  long iterations = 0;         // pivots or Sinkhorn sweeps
  int support_a = 0, support_b = 0;
};

// Squared ground cost between two points.
double ground_cost(const Vec3& a, const Vec3& b, GroundMetric g);

// W2 between weighted point sets (weights normalized internally).
DistanceReport wasserstein_points(const std::vector<Vec3>& xa, const std::vector<double>& wa,
                                  const std::vector<Vec3>& xb, const std::vector<double>& wb,
                                  const TransportOptions& opt = {});

// W2 between two grid measures at the same resolution; cells carrying no mass
// in a measure are dropped from its side of the problem.
DistanceReport wasserstein(const DensityGrid& mu, const DensityGrid& nu, const TransportOptions& opt = {});

// Exact min-cost transport between discrete marginals a (n) and b (m) with a
// dense row-major cost matrix. Returns the optimal cost; the duality gap is
// written to gap.
double network_simplex(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& cost,
                       double* gap = nullptr, long* pivots = nullptr);

}  // namespace kg
