#include "kgibbs/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>
#include <openssl/evp.h>

namespace kg {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (stream * 0xd1b54a32d192ed03ULL);
  return splitmix64(s);
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = derive_seed(seed, stream);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

double mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / x.size();
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double m = mean(x), s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

MeanSE batch_means(const std::vector<double>& x, int min_batches) {
  MeanSE r;
  const std::size_t n = x.size();
  r.mean = mean(x);
  if (n < 2) {
    r.widened = true;
    r.se = std::numeric_limits<double>::infinity();
    return r;
  }
  std::size_t size = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(n))));
  std::size_t nb = n / size;
  if (nb < static_cast<std::size_t>(min_batches)) {
    size = std::max<std::size_t>(1, n / min_batches);
    nb = n / size;
  }
  r.batches = static_cast<int>(nb);
  if (nb < static_cast<std::size_t>(min_batches)) r.widened = true;
  if (nb < 2) {
    r.se = std::sqrt(variance(x));
    r.widened = true;
    return r;
  }
  std::vector<double> bm(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < size; ++i) bm[b] += x[b * size + i];
    bm[b] /= size;
  }
  r.se = std::sqrt(variance(bm) / nb);
  if (r.widened) r.se *= 2.0;
  return r;
}

double sokal_iat(const std::vector<double>& x, double c) {
  const int n = static_cast<int>(x.size());
  if (n < 4) return 1.0;
  double m = mean(x);
  // autocovariance by FFT with zero padding
  int L = 1;
  while (L < 2 * n) L <<= 1;
  std::vector<double> a(L, 0.0);
  for (int i = 0; i < n; ++i) a[i] = x[i] - m;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> f;
  fft.fwd(f, a);
  for (auto& z : f) z = std::norm(z);
  std::vector<double> ac;
  fft.inv(ac, f);
  if (!(ac[0] > 0.0)) return 1.0;
  double tau = 1.0;
  for (int t = 1; t < n; ++t) {
    tau += 2.0 * ac[t] / ac[0];
    if (t >= c * tau) break;
  }
  return std::max(tau, 1.0);
}

std::string hex(const unsigned char* data, std::size_t n) {
  static const char* d = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    s[2 * i] = d[data[i] >> 4];
    s[2 * i + 1] = d[data[i] & 15];
  }
  return s;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  return hex(md, len);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace kg
