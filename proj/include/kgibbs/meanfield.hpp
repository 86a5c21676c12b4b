#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kgibbs/grid.hpp"
#include "kgibbs/laplacian.hpp"
#include "kgibbs/measure.hpp"

namespace kg {

// Relative potential on the grid, mean zero against ω_FS unless stated.
struct PotentialGrid {
  GridPtr grid;
  Eigen::VectorXd values;
};

// Discrete data shared by the macroscopic functionals. Cell masses:
//   omega0_i = V/R + (L u)_i / R   (total V)
//   base_i   = dV(cell i)          (total 1)
// and MA(φ)_i = (omega0_i + (Lφ)_i / R) / V.
class MeanField {
 public:
  MeanField(GridPtr g, const BundleMetric& metric, const BaseMeasure& base);
  MeanField(GridPtr g, double V, const Eigen::VectorXd& omega0, const Eigen::VectorXd& base_masses);

  const SphereGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Laplacian& laplacian() const { return *lap_; }
  int size() const { return grid_->size(); }
  double volume() const { return V_; }
  const Eigen::VectorXd& omega0() const { return omega0_; }
  const Eigen::VectorXd& base() const { return base_; }
  bool flat_reference() const { return flat_; }  // omega0 = V ω_FS

  Eigen::VectorXd monge_ampere(const Eigen::VectorXd& phi) const;
  // (1/2V) Σ φ_i (2 omega0_i + (Lφ)_i / R)
  double energy_of_potential(const Eigen::VectorXd& phi) const;

 private:
  GridPtr grid_;
  std::shared_ptr<const Laplacian> lap_;
  double V_;
  Eigen::VectorXd omega0_, base_;
  bool flat_ = true;
};

struct PoissonResult {
  PotentialGrid phi;
  double residual_l1 = 0.0;  // ||dd^c φ - (Vρ - ω0)||_1
};
PoissonResult poisson_solve(const MeanField& mf, const DensityGrid& rho);

struct MASolveOptions {
  double tol = 1e-11;        // ||F||_1 on cell masses
  int max_newton = 40;
  double linear_rtol = 1e-12;
  int max_linear = 400;
  double dbeta = 0.05;       // continuation step for β < 0
  double dbeta_min = 1e-4;
  double blowup_mass = 0.5;  // stop once one cell holds this much more μ-mass than dV-mass
  Eigen::VectorXd initial;   // optional starting potential
};

struct ContinuationStep {
  double beta;
  int newton_iterations;
  double residual;
  bool accepted;
};

struct MASolveResult {
  bool converged = false;
  double beta = 0.0;            // β reached
  double last_good_beta = 0.0;  // for failed continuation
  PotentialGrid phi;
  DensityGrid mu;               // e^{βφ} dV / Z
  double log_z = 0.0;           // log Σ e^{βφ_i} base_i
  double residual = 0.0;
  int newton_iterations = 0;
  std::vector<ContinuationStep> log;
  std::string message;
};

// Solves ω0 + dd^c φ = V e^{βφ} dV / Z. β < 0 is reached by continuation from β = 0.
MASolveResult ma_solve(const MeanField& mf, double beta, const MASolveOptions& opt = {});

enum class EnergyMethod { green, potential };
struct EnergyValue {
  double value = 0.0;
  bool reliable = true;
  std::string warning;
};

// E(μ) = sup_φ 𝓔(φ) - <φ, μ>. The potential method solves for φ_μ; the Green
// method sums (V/2) Σ Ḡ_ij μ_i μ_j with cell-averaged Green function (flat
// reference only).
EnergyValue energy_of_measure(const MeanField& mf, const DensityGrid& mu, EnergyMethod method);
// Green method for many measures in one pass over cell pairs.
std::vector<double> energy_of_measures_green(const MeanField& mf, const std::vector<DensityGrid>& mus);

// Σ m_i log(m_i / b_i); +inf when some m_i > 0 sits on b_i = 0.
double entropy(const DensityGrid& mu, const Eigen::VectorXd& base);
double free_energy(const MeanField& mf, const DensityGrid& mu, double beta);

struct ProjectionOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int max_linear = 2000;
};
struct ProjectionResult {
  PotentialGrid phi;            // P u, not regauged
  std::vector<char> contact;    // cells with P u = u
  int iterations = 0;
  double complementarity = 0.0; // Σ MA mass off the contact set
  double violation = 0.0;       // max(max(φ - u), max(-V MA))
};
// Largest φ ≤ u with ω0 + dd^c φ ≥ 0 cellwise (primal-dual active set).
ProjectionResult psh_projection(const MeanField& mf, const Eigen::VectorXd& u,
                                const ProjectionOptions& opt = {});

struct FunctionalReport {
  double energy_potential = 0.0;  // 𝓔(φ)
  double energy_measure = 0.0;    // E(MA φ)
  double entropy = 0.0;           // D(MA φ)
  double free_energy = 0.0;       // F_β(MA φ)
  double ding = 0.0;              // 𝓓(φ) = -𝓔(φ) - log ∫ e^{-φ} dV
  double g_functional = 0.0;      // 𝓖_β(φ) = β𝓔(φ) - log ∫ e^{βφ} dV
  double mabuchi = 0.0;           // 𝓜_β(φ) = F_β(MA φ)
  double I = 0.0, J = 0.0;
  double gap = 0.0;               // F_β(MA φ) - 𝓖_β(φ) >= 0
  bool ma_positive = true;        // MA(φ) is a measure
};
FunctionalReport ding_mabuchi(const MeanField& mf, const Eigen::VectorXd& phi, double beta);

// I(φ) = (1/V) Σ φ ω0 - Σ φ MA(φ),  J(φ) = (1/V) Σ φ ω0 - 𝓔(φ)
double functional_I(const MeanField& mf, const Eigen::VectorXd& phi);
double functional_J(const MeanField& mf, const Eigen::VectorXd& phi);

// φ_k = log(density / reference) and the curvature of ω_k = ω0 + β^{-1} dd^c φ_k.
struct CanonicalPotential {
  PotentialGrid phi;
  Eigen::VectorXd curvature;      // cell masses of ω_k
  double total_curvature = 0.0;   // over unflagged cells
  std::vector<char> floored;
  bool positive = true;
};
CanonicalPotential canonical_potential(const MeanField& mf, const DensityGrid& one_point, double beta,
                                       double floor = 1e-12);

void write_potential_csv(std::ostream& os, const PotentialGrid& p);

}  // namespace kg
