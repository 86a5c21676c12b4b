#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kgibbs/energy.hpp"
#include "kgibbs/grid.hpp"
#include "kgibbs/util.hpp"

namespace kg {

struct ProposalConfig {
  double p_global = 0.2;  // independence proposal from dV
  double sigma = 0.5;     // tangent Gaussian scale of local moves
};

// steps, burn_in and thinning count single-particle updates.
struct ChainConfig {
  ModelSpec model;
  long steps = 100000;
  long burn_in = 10000;
  ProposalConfig proposal;
  std::uint64_t seed = 1;
  long thinning = 0;            // 0: adaptive, ceil(IAT) sweeps from a pilot after burn-in
  long verify_every = 10000;
  int proposal_cells = 2048;    // grid for the dV independence proposal (non-FS base)
  bool keep_samples = true;
  bool tune_sigma = true;       // adapt sigma toward 40% local acceptance during burn-in only
  GridPtr histogram;            // optional one-point histogram accumulated at kept samples

  void validate() const;
};

// Incremental state: pair = Σ_{i<j} log chord^2, usum = Σ u, bsum = Σ log ρ.
struct ChainState {
  std::vector<Vec3> x;
  double pair = 0.0, usum = 0.0, bsum = 0.0;
  double log_density = 0.0;  // w.r.t. FS area, includes the basis shift
};

ChainState make_state(const ModelSpec& model, std::vector<Vec3> x);
double state_energy(const ChainState& s, const ModelSpec& model);

class Proposer;

struct StepInfo {
  bool global = false;
  bool accepted = false;
  int particle = -1;
};

// One Metropolis-Hastings update of a uniformly chosen particle.
StepInfo metropolis_step(ChainState& s, const ModelSpec& model, const ProposalConfig& prop,
                         const Proposer& proposer, Rng& rng);

// dV independence proposal: exact for FS, grid-discretized otherwise.
class Proposer {
 public:
  Proposer(const BaseMeasure& base, int cells);
  Vec3 draw(Rng& rng) const;
  double log_density(const Vec3& x) const;  // w.r.t. FS area
  bool exact() const { return !grid_; }

 private:
  GridPtr grid_;
  std::vector<double> cum_, logq_;
};

Vec3 uniform_sphere(Rng& rng);

struct TraceStats {
  long proposed = 0, accepted = 0;
  long proposed_global = 0, accepted_global = 0;
  double acceptance = 0.0;
  std::vector<double> energy;  // E^(N) at kept samples
  double iat = 1.0;            // in kept samples
  MeanSE mean_energy;
  long thinning = 1;
  double sigma = 0.0;          // local scale used after burn-in
  long verifications = 0;
  double max_cache_error = 0.0;
};

struct ChainResult {
  std::vector<std::vector<Vec3>> samples;
  TraceStats stats;
  std::vector<double> histogram;  // raw counts on cfg.histogram
  std::vector<long> trace_step;     // step index of each kept sample
  std::vector<char> trace_accept;   // whether the update just before it was accepted
};

ChainResult run_chain(const ChainConfig& cfg);
// Independent chains with seeds derived from cfg.seed; merged by chain index.
std::vector<ChainResult> run_chains(const ChainConfig& cfg, int chains, int threads = 1);

DensityGrid empirical_measure(const std::vector<std::vector<Vec3>>& samples, GridPtr g);
DensityGrid histogram_density(const std::vector<double>& counts, GridPtr g);
MeanSE mean_energy(const std::vector<std::vector<Vec3>>& samples, const ModelSpec& model);

void write_trace_csv(std::ostream& os, const ChainResult& r);

}  // namespace kg
