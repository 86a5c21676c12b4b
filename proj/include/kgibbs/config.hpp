#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgibbs/energy.hpp"

namespace kg {

enum class ExperimentKind { sample, meanfield, partition, threshold, scan, probe };
std::string to_string(ExperimentKind k);

struct DivisorEntry {
  std::string point;  // "0", "1", "inf", "re,im" or "re+imi"
  double weight = 0.0;
};

// Grammar (one item per line, '#' starts a comment):
//   [section]
//   key = value
// Sections: experiment, model, numerics. See README for the key list.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sample;
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 1;

  // model
  int N = 2;
  double m = 1.0;
  double k = 0.0;     // 0: derived as (N - 1) / m
  double beta = 1.0;
  std::string base = "fubini-study";  // or "log-fano"
  std::vector<DivisorEntry> divisor;
  std::string perturbation = "none";  // none | zonal:<a> | bump:<a>,<width>
  bool orthonormal = false;

  // numerics
  int grid_cells = 2048;
  long steps = 100000;
  long burn_in = 10000;
  int thinning = 0;
  double p_global = 0.2;
  double sigma = 0.5;
  int chains = 4;
  int ti_nodes = 7;
  int ti_sweeps = 20000;
  int quad_order = 7;
  int quad_psi = 12;
  double tolerance = 1e-11;
  double beta_min = 0.2, beta_max = 2.0;
  int beta_points = 20;
  std::vector<int> Ns{2, 3, 8, 16};
  std::string probe = "gamma";        // gamma | diameter | ldp | wasserstein
  std::vector<double> eps{0.3, 0.5, 0.8, 1.2, 2.0};
  int samples = 4000;

  double k_value() const { return k > 0.0 ? k : (N - 1) / m; }
  // model assembled from the fields; throws std::invalid_argument
  ModelSpec model() const;
  WeightedDivisor weighted_divisor() const;
  // every constraint violation, empty when consistent
  std::vector<std::string> violations() const;
};

struct ParseResult {
  ExperimentConfig config;
  std::vector<std::string> errors;    // all violations, with line numbers where known
  std::vector<std::string> warnings;  // unknown keys in non-strict mode
  bool ok() const { return errors.empty(); }
};

ParseResult parse_config(const std::string& text, bool strict = false);
ParseResult parse_config_file(const std::string& path, bool strict = false);

// Canonical text: fixed key order, round-trip exact doubles.
std::string canonical(const ExperimentConfig& c);
// Canonical text of the [model] section only; its hash identifies the model.
std::string canonical_model(const ExperimentConfig& c);

}  // namespace kg
