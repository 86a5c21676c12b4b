#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace kg {

// splitmix64 step; derive(seed, stream) gives independent per-chain / per-probe seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

using Rng = std::mt19937_64;
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  int batches = 0;
  bool widened = false;  // fewer than 20 batches available
};

// Batch means with batch size ~ sqrt(n) and at least min_batches batches.
MeanSE batch_means(const std::vector<double>& x, int min_batches = 20);

// Sokal's windowed integrated autocorrelation time (window M >= c tau).
double sokal_iat(const std::vector<double>& x, double c = 5.0);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);

std::string hex(const unsigned char* data, std::size_t n);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace kg
