#include "kgibbs/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kg {

std::string to_string(GroundMetric g) { return g == GroundMetric::geodesic ? "geodesic" : "chordal"; }

double ground_cost(const Vec3& a, const Vec3& b, GroundMetric g) {
  if (g == GroundMetric::chordal) return (a - b).squaredNorm();
  double d = geodesic(a, b);
  return d * d;
}

namespace {

// Primal network simplex on the complete bipartite graph, after the LEMON
// implementation: artificial root, block-search pivoting, thread/succ-num tree.
class NetSimplex {
 public:
  NetSimplex(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& cost)
      : n1_(static_cast<int>(a.size())), n2_(static_cast<int>(b.size())), cost_in_(cost) {
    nodes_ = n1_ + n2_;
    arcs_ = static_cast<long>(n1_) * n2_;
    root_ = nodes_;
    const long all = arcs_ + nodes_;
    flow_.assign(all, 0.0);
    state_.assign(all, kLower);
    art_cost_.assign(nodes_, 0.0);
    art_src_.assign(nodes_, 0);
    art_tgt_.assign(nodes_, 0);
    parent_.assign(nodes_ + 1, 0);
    pred_.assign(nodes_ + 1, 0);
    thread_.assign(nodes_ + 1, 0);
    rev_thread_.assign(nodes_ + 1, 0);
    succ_num_.assign(nodes_ + 1, 0);
    last_succ_.assign(nodes_ + 1, 0);
    pred_dir_.assign(nodes_ + 1, 0);
    pi_.assign(nodes_ + 1, 0.0);
    supply_.resize(nodes_ + 1);
    double maxc = 0.0;
    for (double c : cost) maxc = std::max(maxc, c);
    double art = (maxc + 1.0) * nodes_;
    eps_ = 1e-12 * (maxc + 1.0);
    double tot = 0.0;
    for (int i = 0; i < n1_; ++i) supply_[i] = a[i], tot += a[i];
    for (int j = 0; j < n2_; ++j) supply_[n1_ + j] = -b[j], tot -= b[j];
    supply_[root_] = -tot;
    for (int u = 0; u < nodes_; ++u) {
      long e = arcs_ + u;
      parent_[u] = root_;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kTree;
      if (supply_[u] >= 0) {
        pred_dir_[u] = kUp;
        pi_[u] = 0.0;
        art_src_[u] = u;
        art_tgt_[u] = root_;
        flow_[e] = supply_[u];
        art_cost_[u] = 0.0;
      } else {
        pred_dir_[u] = kDown;
        pi_[u] = art;
        art_src_[u] = root_;
        art_tgt_[u] = u;
        flow_[e] = -supply_[u];
        art_cost_[u] = art;
      }
    }
    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = nodes_ + 1;
    last_succ_[root_] = root_ - 1;
    block_ = std::max(10L, static_cast<long>(std::sqrt(static_cast<double>(arcs_))));
  }

  double solve(double* gap, long* pivots) {
    long it = 0;
    while (find_entering()) {
      find_join();
      if (!find_leaving()) throw std::runtime_error("network_simplex: unbounded");
      change_flow();
      update_tree();
      update_potential();
      ++it;
    }
    double total = 0.0;
    for (long e = 0; e < arcs_; ++e)
      if (flow_[e] != 0.0) total += flow_[e] * cost_in_[e];
    if (gap) {
      double dual = 0.0;
      for (int u = 0; u <= nodes_; ++u) dual -= pi_[u] * supply_[u];
      *gap = std::abs(total - dual);
    }
    if (pivots) *pivots = it;
    return total;
  }

 private:
  static constexpr int kUp = 1, kDown = -1;
  static constexpr signed char kUpper = -1, kTree = 0, kLower = 1;

  int src(long e) const { return e < arcs_ ? static_cast<int>(e / n2_) : art_src_[e - arcs_]; }
  int tgt(long e) const { return e < arcs_ ? n1_ + static_cast<int>(e % n2_) : art_tgt_[e - arcs_]; }
  double cst(long e) const { return e < arcs_ ? cost_in_[e] : art_cost_[e - arcs_]; }

  bool find_entering() {
    double min = -eps_;
    bool found = false;
    long cnt = block_, e;
    for (e = next_arc_; e != arcs_; ++e) {
      double c = state_[e] * (cost_in_[e] + pi_[e / n2_] - pi_[n1_ + e % n2_]);
      if (c < min) min = c, in_arc_ = e, found = true;
      if (--cnt == 0) {
        if (found) goto done;
        cnt = block_;
      }
    }
    for (e = 0; e != next_arc_; ++e) {
      double c = state_[e] * (cost_in_[e] + pi_[e / n2_] - pi_[n1_ + e % n2_]);
      if (c < min) min = c, in_arc_ = e, found = true;
      if (--cnt == 0) {
        if (found) goto done;
        cnt = block_;
      }
    }
    if (!found) return false;
  done:
    next_arc_ = e;
    return true;
  }

  void find_join() {
    int u = src(in_arc_), v = tgt(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) u = parent_[u];
      else v = parent_[v];
    }
    join_ = u;
  }

  bool find_leaving() {
    int first, second;
    if (state_[in_arc_] == kLower) first = src(in_arc_), second = tgt(in_arc_);
    else first = tgt(in_arc_), second = src(in_arc_);
    const double inf = std::numeric_limits<double>::infinity();
    delta_ = inf;
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      double d = pred_dir_[u] == kDown ? inf : flow_[pred_[u]];
      if (d < delta_) delta_ = d, u_out_ = u, result = 1;
    }
    for (int u = second; u != join_; u = parent_[u]) {
      double d = pred_dir_[u] == kUp ? inf : flow_[pred_[u]];
      if (d <= delta_) delta_ = d, u_out_ = u, result = 2;
    }
    if (result == 1) u_in_ = first, v_in_ = second;
    else u_in_ = second, v_in_ = first;
    return result != 0 && delta_ < inf;
  }

  void change_flow() {
    double val = state_[in_arc_] * delta_;
    flow_[in_arc_] += val;
    for (int u = src(in_arc_); u != join_; u = parent_[u]) flow_[pred_[u]] -= pred_dir_[u] * val;
    for (int u = tgt(in_arc_); u != join_; u = parent_[u]) flow_[pred_[u]] += pred_dir_[u] * val;
    state_[in_arc_] = kTree;
    long out = pred_[u_out_];
    flow_[out] = 0.0;  // the blocking arc leaves at exactly zero flow
    state_[out] = kLower;
  }

  void update_tree() {
    int old_rev_thread = rev_thread_[u_out_];
    int old_succ_num = succ_num_[u_out_];
    int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
      int stem = u_in_, par_stem = v_in_, next_stem;
      int last = last_succ_[u_in_];
      int before, after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_.clear();
      dirty_.push_back(v_in_);
      while (stem != u_out_) {
        next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_.push_back(last);
        before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_) rev_thread_[thread_[u]] = u;
      int tmp_sc = 0, tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
      succ_num_[u_in_] = old_succ_num;
    }

    int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;
    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_out;
    }
    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cst(in_arc_);
    int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  int n1_, n2_, nodes_, root_;
  long arcs_, block_, next_arc_ = 0, in_arc_ = 0;
  const std::vector<double>& cost_in_;
  std::vector<double> flow_, art_cost_, pi_, supply_;
  std::vector<signed char> state_;
  std::vector<int> art_src_, art_tgt_, parent_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_, dirty_;
  std::vector<long> pred_;
  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0, eps_ = 0.0;
};

double log_sum_exp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// Log-domain Sinkhorn; returns <P, C> of the regularized plan.
double sinkhorn(const std::vector<Vec3>& xa, const std::vector<double>& a, const std::vector<Vec3>& xb,
                const std::vector<double>& b, const TransportOptions& opt, double& eps, double& viol, long& iters) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  double maxc = 0.0;
  for (int i = 0; i < n; i += std::max(1, n / 64))
    for (int j = 0; j < m; ++j) maxc = std::max(maxc, ground_cost(xa[i], xb[j], opt.ground));
  eps = opt.sinkhorn_eps > 0.0 ? opt.sinkhorn_eps : 1e-3 * maxc;
  // costs in float to keep n*m memory bounded
  std::vector<float> C(static_cast<size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) C[static_cast<size_t>(i) * m + j] = static_cast<float>(ground_cost(xa[i], xb[j], opt.ground));
  std::vector<double> f(n, 0.0), g(m, 0.0), la(n), lb(m), buf(std::max(n, m));
  for (int i = 0; i < n; ++i) la[i] = std::log(a[i]);
  for (int j = 0; j < m; ++j) lb[j] = std::log(b[j]);
  viol = 1.0;
  iters = 0;
  for (int it = 0; it < opt.sinkhorn_iters; ++it) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) buf[j] = (g[j] - C[static_cast<size_t>(i) * m + j]) / eps;
      f[i] = eps * (la[i] - log_sum_exp(buf.data(), m));
    }
    std::vector<double> col(m, 0.0);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) buf[i] = (f[i] - C[static_cast<size_t>(i) * m + j]) / eps;
      double lse = log_sum_exp(buf.data(), n);
      col[j] = std::exp(lse + g[j] / eps);
      g[j] = eps * (lb[j] - lse);
    }
    ++iters;
    viol = 0.0;
    for (int j = 0; j < m; ++j) viol += std::abs(col[j] - b[j]);
    if (viol < opt.sinkhorn_tol) break;
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double c = C[static_cast<size_t>(i) * m + j];
      total += std::exp((f[i] + g[j] - c) / eps) * c;
    }
  return total;
}

std::vector<double> normalized(const std::vector<double>& w) {
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(s > 0.0)) throw std::invalid_argument("wasserstein: measure has no mass");
  std::vector<double> r(w);
  for (auto& x : r) {
    if (x < 0.0) throw std::invalid_argument("wasserstein: negative mass");
    x /= s;
  }
  return r;
}

}  // namespace

double network_simplex(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& cost,
                       double* gap, long* pivots) {
  if (cost.size() != a.size() * b.size()) throw std::invalid_argument("network_simplex: cost size mismatch");
  if (a.empty() || b.empty()) throw std::invalid_argument("network_simplex: empty marginal");
  NetSimplex ns(a, b, cost);
  return ns.solve(gap, pivots);
}

DistanceReport wasserstein_points(const std::vector<Vec3>& xa, const std::vector<double>& wa,
                                  const std::vector<Vec3>& xb, const std::vector<double>& wb,
                                  const TransportOptions& opt) {
  if (xa.size() != wa.size() || xb.size() != wb.size()) throw std::invalid_argument("wasserstein: size mismatch");
  std::vector<Vec3> pa, pb;
  std::vector<double> a, b;
  auto wa_n = normalized(wa), wb_n = normalized(wb);
  for (size_t i = 0; i < xa.size(); ++i)
    if (wa_n[i] > 0.0) pa.push_back(xa[i]), a.push_back(wa_n[i]);
  for (size_t j = 0; j < xb.size(); ++j)
    if (wb_n[j] > 0.0) pb.push_back(xb[j]), b.push_back(wb_n[j]);
  DistanceReport r;
  r.ground = to_string(opt.ground);
  r.support_a = static_cast<int>(a.size());
  r.support_b = static_cast<int>(b.size());
  double w2sq;
  if (std::max(a.size(), b.size()) <= static_cast<size_t>(opt.exact_max_cells)) {
    std::vector<double> C(a.size() * b.size());
    for (size_t i = 0; i < a.size(); ++i)
      for (size_t j = 0; j < b.size(); ++j) C[i * b.size() + j] = ground_cost(pa[i], pb[j], opt.ground);
    w2sq = network_simplex(a, b, C, &r.gap, &r.iterations);
    r.solver = "exact-network-simplex";
  } else {
    w2sq = sinkhorn(pa, a, pb, b, opt, r.regularization, r.gap, r.iterations);
    r.solver = "entropic-sinkhorn";
  }
  r.w2 = std::sqrt(std::max(0.0, w2sq));
  return r;
}

DistanceReport wasserstein(const DensityGrid& mu, const DensityGrid& nu, const TransportOptions& opt) {
  if (!mu.grid || !nu.grid || mu.size() != nu.size() || mu.grid->size() != nu.grid->size())
    throw std::invalid_argument("wasserstein: resolution mismatch");
  const auto& c = mu.grid->centers();
  TransportOptions o = opt;
  // the exact/entropic switch is on grid resolution
  if (mu.size() > opt.exact_max_cells) o.exact_max_cells = 0;
  else o.exact_max_cells = mu.size();
  return wasserstein_points(c, mu.mass, c, nu.mass, o);
}

}  // namespace kg
