#include "kgibbs/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace kg {

namespace {
constexpr double kPi = std::numbers::pi;
}

void ChainConfig::validate() const {
  std::ostringstream err;
  if (!(steps > burn_in)) err << "steps must exceed burn-in; ";
  if (burn_in < 0) err << "burn-in must be nonnegative; ";
  if (!(proposal.sigma > 0.0)) err << "proposal sigma must be positive; ";
  if (!(proposal.p_global >= 0.0 && proposal.p_global <= 1.0)) err << "p_global must lie in [0, 1]; ";
  if (thinning < 0) err << "thinning must be nonnegative; ";
  if (verify_every <= 0) err << "verify_every must be positive; ";
  std::string s = err.str();
  if (!s.empty()) throw std::invalid_argument(s.substr(0, s.size() - 2));
  model.validate();
}

Vec3 uniform_sphere(Rng& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double z = 2.0 * U(rng) - 1.0, ph = 2.0 * kPi * U(rng);
  double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(ph), r * std::sin(ph), z};
}

Proposer::Proposer(const BaseMeasure& base, int cells) {
  if (base.is_fubini_study()) return;
  grid_ = make_grid(SphereGrid::nearest_resolution(cells));
  auto m = base.cell_masses(*grid_);
  cum_.resize(m.size());
  logq_.resize(m.size());
  double acc = 0.0;
  for (size_t i = 0; i < m.size(); ++i) {
    acc += m[i];
    cum_[i] = acc;
    logq_[i] = m[i] > 0.0 ? std::log(m[i] * grid_->size()) : -std::numeric_limits<double>::infinity();
  }
  for (double& c : cum_) c /= acc;
}

Vec3 Proposer::draw(Rng& rng) const {
  if (!grid_) return uniform_sphere(rng);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double r = U(rng);
  int cell = static_cast<int>(std::lower_bound(cum_.begin(), cum_.end(), r) - cum_.begin());
  cell = std::min(cell, grid_->size() - 1);
  double s = U(rng), t = U(rng);
  return grid_->cell_point(cell, s, t);
}

double Proposer::log_density(const Vec3& x) const {
  if (!grid_) return 0.0;
  return logq_[grid_->locate(x)];
}

namespace {

double row_sum(const std::vector<Vec3>& x, int i, const Vec3& y, bool& hit) {
  double s = 0.0;
  for (int j = 0; j < static_cast<int>(x.size()); ++j) {
    if (j == i) continue;
    double d = chord2(y, x[j]);
    if (d == 0.0) hit = true;
    s += std::log(d);
  }
  return s;
}

double assemble(const ChainState& s, const ModelSpec& m) {
  return m.beta / m.k * (s.pair + m.basis_log_shift) - m.beta * s.usum + s.bsum;
}

double fresh_log_density(const ChainState& s, const ModelSpec& model) {
  return gibbs_log_density(Configuration::from_vecs(s.x), model, DensityReference::fs_area).value.value();
}

}  // namespace

ChainState make_state(const ModelSpec& model, std::vector<Vec3> x) {
  ChainState s;
  s.x = std::move(x);
  const int N = static_cast<int>(s.x.size());
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) s.pair += std::log(chord2(s.x[i], s.x[j]));
    s.usum += model.metric.u(s.x[i]);
    s.bsum += model.base.log_density(s.x[i]);
  }
  s.log_density = assemble(s, model);
  return s;
}

double state_energy(const ChainState& s, const ModelSpec& model) {
  return -(s.pair - model.k * s.usum + model.basis_log_shift) / (model.k * model.N);
}

StepInfo metropolis_step(ChainState& s, const ModelSpec& model, const ProposalConfig& prop,
                         const Proposer& proposer, Rng& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G(0.0, prop.sigma);
  const int N = static_cast<int>(s.x.size());
  StepInfo info;
  info.particle = std::min(N - 1, static_cast<int>(U(rng) * N));
  const int i = info.particle;
  const Vec3 old = s.x[i];
  Vec3 y;
  double log_q_ratio = 0.0;  // log q(old) - log q(new)
  info.global = U(rng) < prop.p_global;
  if (info.global) {
    y = proposer.draw(rng);
    if (!proposer.exact()) log_q_ratio = proposer.log_density(old) - proposer.log_density(y);
  } else {
    // exponential map of a tangent Gaussian; symmetric in (old, y)
    double v1 = G(rng), v2 = G(rng);
    Vec3 e1, e2;
    tangent_frame(old, e1, e2);
    y = polar_point(old, e1, e2, std::hypot(v1, v2), std::atan2(v2, v1));
  }
  bool hit = false;
  double new_row = row_sum(s.x, i, y, hit);
  double old_row = row_sum(s.x, i, old, hit);
  double du = model.metric.u(y) - model.metric.u(old);
  double db = model.base.log_density(y) - model.base.log_density(old);
  double dlog = model.beta / model.k * (new_row - old_row) - model.beta * du + db;
  double a = dlog + log_q_ratio;
  // exact hits on another particle or a divisor pole: measure zero, rejected
  if (hit || !std::isfinite(a) || !std::isfinite(new_row)) return info;
  if (a >= 0.0 || U(rng) < std::exp(a)) {
    s.x[i] = y;
    s.pair += new_row - old_row;
    s.usum += du;
    s.bsum += db;
    s.log_density += dlog;
    info.accepted = true;
  }
  return info;
}

ChainResult run_chain(const ChainConfig& cfg) {
  cfg.validate();
  const ModelSpec& model = cfg.model;
  const int N = model.N;
  Rng rng = make_rng(cfg.seed, 0);
  Proposer proposer(model.base, cfg.proposal_cells);
  std::vector<Vec3> x0(N);
  for (auto& v : x0) v = proposer.draw(rng);
  ChainState s = make_state(model, x0);
  if (!std::isfinite(s.log_density)) throw std::runtime_error("run_chain: initial configuration has zero density");

  ChainResult res;
  TraceStats& st = res.stats;
  if (cfg.histogram) res.histogram.assign(cfg.histogram->size(), 0.0);
  long since_verify = 0;
  auto verify = [&]() {
    double f = fresh_log_density(s, model);
    double e = std::abs(f - s.log_density);
    st.verifications++;
    st.max_cache_error = std::max(st.max_cache_error, e);
    if (!(e <= 1e-8 * std::max(1.0, std::abs(f)))) {
      std::ostringstream os;
      os << std::setprecision(17) << "cache consistency violated: cached " << s.log_density << ", recomputed " << f;
      throw std::runtime_error(os.str());
    }
    // resynchronize the sums from scratch
    s = make_state(model, s.x);
  };
  StepInfo last;
  ProposalConfig prop = cfg.proposal;
  long tune_prop = 0, tune_acc = 0;
  auto advance = [&]() {
    last = metropolis_step(s, model, prop, proposer, rng);
    st.proposed++;
    if (last.accepted) st.accepted++;
    if (last.global) {
      st.proposed_global++;
      if (last.accepted) st.accepted_global++;
    }
    if (++since_verify >= cfg.verify_every) {
      verify();
      since_verify = 0;
    }
  };
  long step = 0;
  for (; step < cfg.burn_in; ++step) {
    advance();
    if (!cfg.tune_sigma || last.global) continue;
    tune_prop++;
    tune_acc += last.accepted;
    if (tune_prop == 500) {
      double rate = double(tune_acc) / tune_prop;
      prop.sigma = std::clamp(prop.sigma * std::exp(rate - 0.4), 1e-4, kPi);
      tune_prop = tune_acc = 0;
    }
  }
  st.sigma = prop.sigma;

  long thin = cfg.thinning;
  if (thin == 0) {
    // pilot: energy per sweep over min(10% of the run, 200 sweeps), at least 50 sweeps
    long sweeps = std::clamp((cfg.steps - cfg.burn_in) / (10L * N), 50L, 200L);
    std::vector<double> e;
    for (long w = 0; w < sweeps; ++w) {
      for (int j = 0; j < N; ++j, ++step) advance();
      e.push_back(state_energy(s, model));
    }
    thin = std::max<long>(1, static_cast<long>(std::ceil(sokal_iat(e)))) * N;
  }
  st.thinning = thin;
  long count = 0;
  for (; step < cfg.steps; ++step) {
    advance();
    if (++count % thin) continue;
    st.energy.push_back(state_energy(s, model));
    res.trace_step.push_back(step + 1);
    res.trace_accept.push_back(last.accepted);
    if (cfg.keep_samples) res.samples.push_back(s.x);
    if (cfg.histogram)
      for (const auto& v : s.x) res.histogram[cfg.histogram->locate(v)] += 1.0;
  }
  verify();
  st.acceptance = st.proposed ? double(st.accepted) / st.proposed : 0.0;
  st.iat = sokal_iat(st.energy);
  st.mean_energy = batch_means(st.energy);
  return res;
}

std::vector<ChainResult> run_chains(const ChainConfig& cfg, int chains, int threads) {
  std::vector<ChainResult> out(chains);
  std::vector<std::exception_ptr> errs(chains);
  auto job = [&](int c) {
    try {
      ChainConfig cc = cfg;
      cc.seed = derive_seed(cfg.seed, 1000 + c);
      out[c] = run_chain(cc);
    } catch (...) {
      errs[c] = std::current_exception();
    }
  };
  threads = std::max(1, std::min(threads, chains));
  if (threads == 1) {
    for (int c = 0; c < chains; ++c) job(c);
  } else {
    for (int base = 0; base < chains; base += threads) {
      std::vector<std::thread> pool;
      for (int c = base; c < std::min(chains, base + threads); ++c) pool.emplace_back(job, c);
      for (auto& t : pool) t.join();
    }
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

DensityGrid empirical_measure(const std::vector<std::vector<Vec3>>& samples, GridPtr g) {
  if (samples.empty()) throw std::invalid_argument("empirical_measure: need at least one sample");
  std::vector<double> m(g->size(), 0.0);
  double n = 0.0;
  for (const auto& c : samples)
    for (const auto& v : c) {
      m[g->locate(v)] += 1.0;
      n += 1.0;
    }
  for (double& v : m) v /= n;
  return DensityGrid(g, std::move(m));
}

DensityGrid histogram_density(const std::vector<double>& counts, GridPtr g) {
  DensityGrid d(g, counts);
  d.normalize();
  return d;
}

MeanSE mean_energy(const std::vector<std::vector<Vec3>>& samples, const ModelSpec& model) {
  std::vector<double> e;
  e.reserve(samples.size());
  for (const auto& c : samples) e.push_back(energy_per_particle(c, model).value());
  return batch_means(e);
}

void write_trace_csv(std::ostream& os, const ChainResult& r) {
  os << "step,energy,accepted\n" << std::setprecision(17);
  for (size_t i = 0; i < r.stats.energy.size(); ++i)
    os << r.trace_step[i] << ',' << r.stats.energy[i] << ',' << int(r.trace_accept[i]) << '\n';
}

}  // namespace kg
