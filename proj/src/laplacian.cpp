#include "kgibbs/laplacian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kg {

namespace {
constexpr double kPi = std::numbers::pi;
}

Laplacian::Laplacian(GridPtr g) : grid_(std::move(g)) { build(); }

void Laplacian::build() {
  const SphereGrid& g = *grid_;
  const int B = g.bands();
  int maxM = 0;
  for (int b = 0; b < B; ++b) maxM = std::max(maxM, g.band_cells(b) / 2);

  std::vector<double> area(B), face_w(B + 1, 0.0);
  for (int b = 0; b < B; ++b) area[b] = 2.0 * kPi * (g.u_top(b) - g.u_bottom(b));
  for (int f = 1; f < B; ++f)
    face_w[f] = 2.0 * kPi * std::sin(g.theta_top(f)) / (g.theta_center(f) - g.theta_center(f - 1));

  // slot of (m, sine?) in band b, or -1 when the band does not carry it
  auto slot = [&](int b, int m, bool sine) {
    int M = g.band_cells(b) / 2;
    if (m == 0) return sine ? -1 : 0;
    if (m < M) return sine ? 2 * m : 2 * m - 1;
    if (m == M && sine) return g.band_cells(b) - 1;
    return -1;
  };

  for (int m = 0; m <= maxM; ++m)
    for (int sine = 0; sine < 2; ++sine) {
      Chain ch;
      ch.first_band = -1;
      for (int b = 0; b < B; ++b) {
        int s = slot(b, m, sine);
        if (s < 0) continue;
        if (ch.first_band < 0) ch.first_band = b;
        if (b != ch.first_band + static_cast<int>(ch.slot.size()))
          throw std::logic_error("laplacian: mode support is not contiguous");
        ch.slot.push_back(s);
      }
      if (ch.first_band < 0) continue;
      const int n = static_cast<int>(ch.slot.size());
      ch.diag.assign(n, 0.0);
      ch.lower.assign(n, 0.0);
      ch.upper.assign(n, 0.0);
      for (int r = 0; r < n; ++r) {
        int b = ch.first_band + r;
        double st = std::sin(g.theta_center(b));
        bool nyq = sine && m > 0 && m == g.band_cells(b) / 2;
        double d = -double(m) * m * area[b] / (st * st);
        // faces above (b) and below (b+1); an unsupported neighbor acts as 0
        d -= face_w[b] + face_w[b + 1];
        ch.diag[r] = d / area[b];
        auto coupling = [&](int nb, double w) {
          bool nb_nyq = sine && m > 0 && m == g.band_cells(nb) / 2;
          // halving keeps the physical-space operator symmetric
          return (nyq && !nb_nyq ? 0.5 : 1.0) * w / area[b];
        };
        if (r > 0) ch.lower[r] = coupling(b - 1, face_w[b]);
        if (r + 1 < n) ch.upper[r] = coupling(b + 1, face_w[b + 1]);
      }
      chains_.push_back(std::move(ch));
    }
}

void Laplacian::to_modes(const Eigen::VectorXd& f, Eigen::VectorXd& c) const {
  const SphereGrid& g = *grid_;
  c.resize(g.size());
  for (int b = 0; b < g.bands(); ++b) {
    const int n = g.band_cells(b), off = g.band_offset(b), M = n / 2;
    rbuf_.assign(f.data() + off, f.data() + off + n);
    fft_.fwd(cbuf_, rbuf_);
    c[off] = cbuf_[0].real() / n;
    for (int m = 1; m <= M; ++m) {
      std::complex<double> G = std::polar(1.0, -kPi * m / n) * cbuf_[m];
      if (m < M) {
        c[off + 2 * m - 1] = 2.0 * G.real() / n;
        c[off + 2 * m] = -2.0 * G.imag() / n;
      } else {
        c[off + n - 1] = -G.imag() / n;
      }
    }
  }
}

void Laplacian::from_modes(const Eigen::VectorXd& c, Eigen::VectorXd& f) const {
  const SphereGrid& g = *grid_;
  f.resize(g.size());
  for (int b = 0; b < g.bands(); ++b) {
    const int n = g.band_cells(b), off = g.band_offset(b), M = n / 2;
    cbuf_.assign(n, {0.0, 0.0});
    // f_i = Re Σ c_m e^{i m φ_i}, φ_i = 2π(i + 1/2)/n; conjugate-symmetric fill
    cbuf_[0] = c[off];
    for (int m = 1; m <= M; ++m) {
      std::complex<double> cm = m < M ? std::complex<double>(c[off + 2 * m - 1], -c[off + 2 * m])
                                      : std::complex<double>(0.0, -c[off + n - 1]);
      std::complex<double> D = cm * std::polar(1.0, kPi * m / n);
      if (m < M) {
        cbuf_[m] = 0.5 * D;
        cbuf_[n - m] = std::conj(0.5 * D);
      } else {
        cbuf_[m] = std::complex<double>(D.real(), 0.0);
      }
    }
    fft_.inv(rbuf_, cbuf_);
    // Eigen's inverse divides by n
    for (int i = 0; i < n; ++i) f[off + i] = rbuf_[i] * n;
  }
}

Eigen::VectorXd Laplacian::apply(const Eigen::VectorXd& f) const {
  Eigen::VectorXd c, y;
  to_modes(f, c);
  Eigen::VectorXd out(c.size());
  const SphereGrid& g = *grid_;
  for (const auto& ch : chains_) {
    const int n = static_cast<int>(ch.slot.size());
    for (int r = 0; r < n; ++r) {
      int b = ch.first_band + r;
      double v = ch.diag[r] * c[g.band_offset(b) + ch.slot[r]];
      if (r > 0) v += ch.lower[r] * c[g.band_offset(b - 1) + ch.slot[r - 1]];
      if (r + 1 < n) v += ch.upper[r] * c[g.band_offset(b + 1) + ch.slot[r + 1]];
      out[g.band_offset(b) + ch.slot[r]] = v;
    }
  }
  from_modes(out, y);
  return y;
}

void Laplacian::chain_solve(const Chain& ch, const Eigen::VectorXd& rhs, Eigen::VectorXd& x, double shift,
                            bool pin) const {
  // solves (sgn M + shift) x = rhs along the chain; sgn = -1 when shift > 0
  const SphereGrid& g = *grid_;
  const int n = static_cast<int>(ch.slot.size());
  const double sgn = shift > 0.0 ? -1.0 : 1.0;
  const int start = pin ? 1 : 0;
  std::vector<double> cp(n, 0.0), dp(n, 0.0);
  auto idx = [&](int r) { return g.band_offset(ch.first_band + r) + ch.slot[r]; };
  for (int r = start; r < n; ++r) {
    double a = r > start ? sgn * ch.lower[r] : 0.0;
    double bdiag = sgn * ch.diag[r] + shift;
    double cc = r + 1 < n ? sgn * ch.upper[r] : 0.0;
    double denom = bdiag - a * (r > start ? cp[r - 1] : 0.0);
    cp[r] = cc / denom;
    dp[r] = (rhs[idx(r)] - a * (r > start ? dp[r - 1] : 0.0)) / denom;
  }
  if (pin) x[idx(0)] = 0.0;
  for (int r = n - 1; r >= start; --r) {
    double v = dp[r] - (r + 1 < n ? cp[r] * x[idx(r + 1)] : 0.0);
    x[idx(r)] = v;
  }
}

Eigen::VectorXd Laplacian::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd r = rhs.array() - rhs.mean();
  Eigen::VectorXd c, x(r.size()), out;
  to_modes(r, c);
  for (size_t i = 0; i < chains_.size(); ++i) {
    bool zero_mode = i == 0;  // m = 0, cosine: singular, pin the first band
    chain_solve(chains_[i], c, x, 0.0, zero_mode);
  }
  from_modes(x, out);
  out.array() -= out.mean();
  return out;
}

Eigen::VectorXd Laplacian::solve_shifted(const Eigen::VectorXd& rhs, double shift) const {
  if (!(shift > 0.0)) throw std::invalid_argument("solve_shifted: shift must be positive");
  Eigen::VectorXd c, x(rhs.size()), out;
  to_modes(rhs, c);
  for (const auto& ch : chains_) chain_solve(ch, c, x, shift, false);
  from_modes(x, out);
  return out;
}

}  // namespace kg
