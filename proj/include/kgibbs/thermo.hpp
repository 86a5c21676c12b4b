#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgibbs/energy.hpp"
#include "kgibbs/grid.hpp"
#include "kgibbs/quadrature.hpp"
#include "kgibbs/sampler.hpp"

namespace kg {

enum class PartitionMethod { quadrature, thermo_integration };
std::string to_string(PartitionMethod m);

struct PartitionResult {
  double beta = 0.0;
  int N = 0;
  double log_z = 0.0;
  double error = 0.0;  // absolute error on log Z
  PartitionMethod method = PartitionMethod::quadrature;
  QuadStatus status = QuadStatus::ok;
  std::string stratum;  // offending stratum when divergent / inconclusive
  double margin = 0.0;  // local exponent margin at the offending stratum (log2 shell ratio)
  long evaluations = 0;
  bool widened = false;
  std::string message;
};

struct PartitionOptions {
  bool error_estimate = true;  // second pass at higher resolution
  SphereQuadOptions inner;     // general N = 2 path
  SphereQuadOptions outer;
  int max_panels = 40;         // dyadic panels of the reduced 1-d integrals
};
PartitionOptions default_partition_options();

// Z_{N,β} = ∫ ||det S||^{2β/k} e^{-βΣu} dV^{⊗N}, N ≤ 3. Rotation-invariant data (FS
// base, no metric perturbation) reduce to 1-d (N = 2) or 1-d x sphere (N = 3)
// integrals; otherwise N = 2 uses nested singular sphere quadrature.
PartitionResult partition_quadrature(const ModelSpec& model, double beta,
                                     const PartitionOptions& opt = default_partition_options());

struct ThermoOptions {
  int nodes = 7;              // Gauss-Legendre nodes in β
  long sweeps = 20000;        // kept-sample budget per node, in sweeps
  long burn_sweeps = 2000;
  int chains = 1;
  int threads = 1;
  std::uint64_t seed = 1;
  ProposalConfig proposal;
};

struct ThermoPoint {
  double beta;
  MeanSE energy;
  double acceptance;
};

struct ThermoResult {
  PartitionResult partition;
  std::vector<ThermoPoint> points;
  double mc_error = 0.0, rule_error = 0.0;
};

// log Z_{N,β} = -N ∫_0^β <E^(N)>_s ds with chain estimates at Gauss nodes.
ThermoResult thermo_integration(const ModelSpec& model, double beta_target, const ThermoOptions& opt = {});

struct WeightVerdict {
  double margin = 0.0;  // min_i (Σ_{j≠i} w_j - w_i)
  bool stable = false;
  int binding = -1;
};
WeightVerdict weight_condition(const WeightedDivisor& d);

struct Stratum {
  int size = 0;        // particles merging
  int point = -1;      // divisor point index, -1 for a generic point
  double weight = 0.0;
  double gamma = 0.0;  // critical γ of this stratum (+inf when it never binds)
  std::string label() const;
};

struct ThresholdReport {
  int N = 0;
  double oracle = 0.0;
  std::vector<Stratum> strata;   // sorted by critical γ
  std::vector<Stratum> binding;
  bool numeric = false;          // quadrature bracket available
  double lo = 0.0, hi = 0.0;     // Z finite at -lo, divergent at -hi
  double width = 0.0;
  bool contains_oracle = true;
  bool discrepancy = false;
  std::vector<std::pair<double, QuadStatus>> probes;
  std::string message;
};

// Stratum oracle: scaling (2γ/k) ord_S + 2 Σ_{i∈S} w versus real codimension.
ThresholdReport threshold_oracle(const ModelSpec& model);
struct ThresholdOptions {
  double width = 0.02;
  int max_probes = 14;
  PartitionOptions quad = default_partition_options();
};
ThresholdReport gibbs_threshold(const ModelSpec& model, const ThresholdOptions& opt = {});

// Is Z_{N,β} finite? Uses the oracle; the quadrature verdict is attached for N ≤ 3.
bool partition_finite(const ModelSpec& model, double beta);

// FS model with orthonormalized monomial basis.
ModelSpec symmetric_model(int N, double beta, double m = 1.0);

struct ScanRow {
  double beta;
  int N;
  double f;      // -(1/N) log Z
  double err;
  double inf_f;  // mean-field inf F_β
  double gap;
  std::string method;
};

struct BetaScan {
  std::vector<ScanRow> rows;
  std::vector<std::string> flags;  // non-monotone trends beyond error bars
};

struct ScanOptions {
  std::vector<double> betas;
  std::vector<int> Ns;
  ThermoOptions thermo;
  int grid_cells = 2048;  // for the mean-field side
};

// Symmetric FS family: quadrature for N ≤ 3, thermodynamic integration above.
BetaScan free_energy_limit_scan(const ScanOptions& opt);
void write_scan_csv(std::ostream& os, const BetaScan& s);

struct AnalyticityReport {
  std::vector<double> beta;           // interior points probed
  std::vector<double> jump1, jump2;   // |f'_L - f'_R|, |f''_L - f''_R|
  std::vector<double> err1, err2;     // propagated errors
  bool flagged = false;
  double flagged_beta = 0.0;
  double max_ratio = 0.0;
};

// Sliding-window cubic fits; a derivative jump above 5x its propagated
// error is flagged as possible non-analyticity.
AnalyticityReport analyticity_probe(const std::vector<double>& beta, const std::vector<double>& f,
                                    const std::vector<double>& err, int window = 7);

// Exact one-point density on a grid for N = 2 (any data) or rotation-invariant
// N = 3 (uniform).
DensityGrid one_point_exact(const ModelSpec& model, GridPtr g);

}  // namespace kg
