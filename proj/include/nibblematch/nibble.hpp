#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nibblematch/hypergraph.hpp"
#include "nibblematch/rng.hpp"

namespace nibblematch {

// ---- stage probabilities ----

// t(F): number of edges of the alive sub-hypergraph meeting F, not counting F.
// For a simple hypergraph this is exactly the sum over v in F of
// (alive degree of v minus one); on anything else the sum double-counts, so
// the call is rejected.
inline std::size_t count_intersecting_edges(const Hypergraph& h, EdgeId f,
                                            std::span<const char> alive = {}) {
  if (!h.is_simple())
    throw std::invalid_argument("count_intersecting_edges: hypergraph must be simple");
  if (f >= h.num_edges()) throw std::invalid_argument("count_intersecting_edges: bad edge id");
  auto is_alive = [&](VertexId v) { return alive.empty() || alive[v]; };
  auto edge_alive = [&](EdgeId e) {
    for (VertexId v : h.edge(e))
      if (!is_alive(v)) return false;
    return true;
  };
  if (!edge_alive(f)) throw std::invalid_argument("count_intersecting_edges: edge is not alive");
  std::size_t t = 0;
  for (VertexId v : h.edge(f)) {
    std::size_t deg = 0;
    for (EdgeId e : h.incident_edges(v)) deg += edge_alive(e);
    t += deg - 1;  // excludes f itself
  }
  return t;
}

// Probability that a fixed edge with t(F) = tf ends up isolated among the
// selected edges: (1/d)(1 - 1/d)^tf.
inline double edge_matching_prob(double d, std::size_t tf) {
  if (d < 1.0) throw std::invalid_argument("edge_matching_prob: d must be at least 1");
  return (1.0 / d) * std::pow(1.0 - 1.0 / d, static_cast<double>(tf));
}

// Probability that v is covered by the stage matching. Exact: the events
// "F isolated in the selection" for distinct F containing v are disjoint.
inline double vertex_matching_prob(const Hypergraph& h, double d, VertexId v,
                                   std::span<const char> alive = {}) {
  if (!h.is_simple())
    throw std::invalid_argument("vertex_matching_prob: hypergraph must be simple");
  if (v >= h.num_vertices()) throw std::invalid_argument("vertex_matching_prob: bad vertex id");
  if (!alive.empty() && !alive[v])
    throw std::invalid_argument("vertex_matching_prob: vertex is dead");
  auto is_alive = [&](VertexId u) { return alive.empty() || alive[u]; };
  double p = 0.0;
  for (EdgeId e : h.incident_edges(v)) {
    bool ok = true;
    for (VertexId u : h.edge(e))
      if (!is_alive(u)) { ok = false; break; }
    if (ok) p += edge_matching_prob(d, count_intersecting_edges(h, e, alive));
  }
  return p;
}

// Waste rate solving pm + pw - pm*pw = p_star, i.e. the survival probability
// of every vertex is equalized to 1 - p_star.
inline double waste_prob(double pm, double p_star) {
  if (pm < 0.0 || p_star >= 1.0 || pm > p_star)
    throw std::invalid_argument("waste_prob: need 0 <= pm <= p_star < 1");
  return (p_star - pm) / (1.0 - pm);
}

// ---- configuration / results ----

struct NibbleConfig {
  double gamma = 0.5;          // stop once the tracked degree drops to d0^gamma
  std::size_t max_stages = 1000;
  std::uint64_t seed = 0;
  std::vector<std::vector<VertexId>> tracked_sets;
  std::size_t stat_vertices = 64;  // sample size for the per-vertex edge statistics
  std::size_t stat_pairs = 8;      // sampled pairs for the triple statistics (0 disables)
  double declared_delta0 = -1.0;   // < 0: measure the spread from the input
};

struct StageRecord {
  std::size_t stage = 0;  // i
  std::size_t alive = 0;  // |U_i|
  double d = 0.0;         // tracked degree after the stage
  double delta = 0.0;     // tracked spread after the stage
  double p_star = 0.0;    // removal probability used by the stage
  std::size_t m_size = 0;
  std::size_t w_size = 0;
  double min_dx = 0.0, max_dx = 0.0;  // extremes of D_i(x) over all vertices
  double z_mean = std::numeric_limits<double>::quiet_NaN();
  double y_max = std::numeric_limits<double>::quiet_NaN();
  double x_max = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> tracked_alive;  // |S ∩ U_i| per tracked set
  std::vector<std::size_t> tracked_waste;  // |S ∩ W_i| per tracked set
};

struct TrajectoryLog {
  std::vector<StageRecord> stages;  // one record per executed stage

  void write_csv(std::ostream& os) const;
};

struct NibbleResult {
  Matching matching;           // M, always a valid matching
  std::vector<char> waste;     // W (mask)
  std::vector<char> leftover;  // U_omega = V minus (V(M) and W)
  TrajectoryLog log;
  double d0 = 0.0, delta0 = 0.0, d_omega = 0.0;
  std::size_t stages = 0;
  bool starved = false;         // all vertices died before the stop rule fired
  bool hit_max_stages = false;
  bool simple_input = true;     // which t(F) path was used
  std::vector<std::string> warnings;
};

// ---- per-vertex / per-pair statistics ----

// Edges at x whose other endpoints all lie in u.
inline std::size_t stat_d(const Hypergraph& h, std::span<const char> u, VertexId x) {
  std::size_t c = 0;
  for (EdgeId e : h.incident_edges(x)) {
    bool ok = true;
    for (VertexId v : h.edge(e))
      if (v != x && !u[v]) { ok = false; break; }
    c += ok;
  }
  return c;
}

// Edges at x with exactly one other endpoint covered by the matching and the
// remaining k-2 endpoints in u.
inline std::size_t stat_z(const Hypergraph& h, std::span<const char> u, const Matching& m,
                          VertexId x) {
  std::size_t c = 0;
  for (EdgeId e : h.incident_edges(x)) {
    std::size_t in_m = 0, in_u = 0, rest = 0;
    for (VertexId v : h.edge(e)) {
      if (v == x) continue;
      ++rest;
      if (m.covered[v]) ++in_m;
      else if (u[v]) ++in_u;
    }
    c += (in_m == 1 && in_u == rest - 1);
  }
  return c;
}

namespace detail {

template <typename CentralEdgeOk, typename SurvivalOk>
std::size_t count_linked_triples(const Hypergraph& h, VertexId x, VertexId y,
                                 CentralEdgeOk central_ok, SurvivalOk survival_ok) {
  if (x == y) throw std::invalid_argument("triple statistics: vertices must be distinct");
  std::size_t count = 0;
  for (EdgeId e1 : h.incident_edges(x)) {
    if (h.edge_contains(e1, y)) continue;
    for (VertexId xp : h.edge(e1)) {
      if (xp == x || xp == y) continue;
      for (EdgeId e3 : h.incident_edges(xp)) {
        if (e3 == e1 || !central_ok(e3)) continue;
        if (h.intersection_size(e3, e1) != 1) continue;
        for (VertexId yp : h.edge(e3)) {
          if (yp == xp || yp == x || yp == y) continue;
          for (EdgeId e2 : h.incident_edges(yp)) {
            if (!h.edge_contains(e2, y)) continue;
            if (h.edges_intersect(e2, e1)) continue;
            if (h.intersection_size(e2, e3) != 1) continue;
            if (survival_ok(e1, e2, e3, xp, yp)) ++count;
          }
        }
      }
    }
  }
  return count;
}

}  // namespace detail

// Ordered triples (e1,e2,e3) with x in e1, y in e2, e1 and e2 disjoint, e3
// meeting each of them in a single new vertex, and everything but x,y in u.
inline std::size_t stat_y(const Hypergraph& h, std::span<const char> u, VertexId x, VertexId y) {
  return detail::count_linked_triples(
      h, x, y, [](EdgeId) { return true; },
      [&](EdgeId e1, EdgeId e2, EdgeId e3, VertexId, VertexId) {
        for (EdgeId e : {e1, e2, e3})
          for (VertexId v : h.edge(e))
            if (v != x && v != y && !u[v]) return false;
        return true;
      });
}

// Same link pattern, but the central edge must belong to the matching and only
// the remainders of e1 and e2 are required to lie in u.
inline std::size_t stat_x(const Hypergraph& h, std::span<const char> u, const Matching& m,
                          VertexId x, VertexId y) {
  std::vector<char> in_matching(h.num_edges(), 0);
  for (EdgeId e : m.edges) in_matching[e] = 1;
  return detail::count_linked_triples(
      h, x, y, [&](EdgeId e3) { return in_matching[e3] != 0; },
      [&](EdgeId e1, EdgeId e2, EdgeId e3, VertexId xp, VertexId yp) {
        for (EdgeId e : {e1, e2})
          for (VertexId v : h.edge(e))
            if (v != x && v != y && v != xp && v != yp && !h.edge_contains(e3, v) && !u[v])
              return false;
        return true;
      });
}

// ---- the process ----

// Live state of one run. Single-writer; the frozen-stage sampler below never
// mutates, so Monte-Carlo resampling of a stage can share the state.
class NibbleState {
 public:
  NibbleState(const Hypergraph& h, NibbleConfig cfg) : h_(&h), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    if (!h.uniformity()) throw std::invalid_argument("nibble: input must be uniform");
    k_ = *h.uniformity();
    if (k_ < 2) throw std::invalid_argument("nibble: uniformity must be at least 2");
    simple_ = h.is_simple();
    for (const auto& s : cfg_.tracked_sets)
      for (VertexId v : s)
        if (v >= h.num_vertices()) throw std::invalid_argument("nibble: tracked set out of range");

    const std::size_t n = h.num_vertices();
    alive_.assign(n, 1);
    waste_.assign(n, 0);
    matching_.covered.assign(n, 0);
    in_matching_.assign(h.num_edges(), 0);
    alive_count_.assign(h.num_edges(), static_cast<std::uint8_t>(k_));
    alive_deg_.assign(n, 0);
    for (VertexId v = 0; v < n; ++v) alive_deg_[v] = static_cast<std::uint32_t>(h.degree(v));
    candidates_.resize(h.num_edges());
    std::iota(candidates_.begin(), candidates_.end(), 0);
    n_alive_ = n;

    const std::size_t min_deg = h.min_degree();
    const std::size_t max_deg = h.max_degree();
    d_cur_ = 0.5 * (static_cast<double>(min_deg) + static_cast<double>(max_deg));
    delta_cur_ = 0.5 * (static_cast<double>(max_deg) - static_cast<double>(min_deg));
    d0_ = d_cur_;
    delta0_ = delta_cur_;
    if (cfg_.declared_delta0 >= 0.0 && delta_cur_ > cfg_.declared_delta0)
      warnings_.push_back("measured degree spread " + std::to_string(delta_cur_) +
                          " exceeds declared spread " + std::to_string(cfg_.declared_delta0));
    d_hist_ = {d_cur_};
    delta_hist_ = {delta_cur_};
    q_ = {1.0};
    log_n_ = std::log(std::max<std::size_t>(n, 2));

    pick_stat_samples();
    prepare_stage();
  }

  // -- frozen-stage view --

  std::size_t stage() const { return stage_; }
  int uniformity() const { return k_; }
  bool simple_input() const { return simple_; }
  double d_current() const { return d_cur_; }
  double delta_current() const { return delta_cur_; }
  double d0() const { return d0_; }
  double delta0() const { return delta0_; }
  std::size_t alive_vertices() const { return n_alive_; }
  std::span<const char> alive() const { return alive_; }
  std::span<const char> waste() const { return waste_; }
  const Matching& matching() const { return matching_; }
  const std::vector<char>& edge_in_matching() const { return in_matching_; }
  const std::vector<double>& q_table() const { return q_; }
  const std::vector<double>& d_history() const { return d_hist_; }
  const std::vector<double>& p_star_history() const { return p_star_hist_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const Hypergraph& hypergraph() const { return *h_; }

  // Selection probability and exact per-vertex matching probabilities for the
  // stage about to run.
  double selection_prob() const { return prep_sel_; }
  double p_star() const { return prep_p_star_; }
  double vertex_match_prob(VertexId v) const {
    if (!alive_[v]) throw std::invalid_argument("vertex_match_prob: vertex is dead");
    return prep_pm_[v];
  }
  double waste_prob_of(VertexId v) const {
    if (!alive_[v]) throw std::invalid_argument("waste_prob_of: vertex is dead");
    return stage_waste_prob(prep_pm_[v]);
  }
  std::size_t alive_edge_count() const { return prep_edges_.size(); }

  bool stop_rule_met() const { return d_cur_ <= std::pow(d0_, cfg_.gamma); }
  bool starved() const { return prep_edges_.empty(); }
  bool clamped() const { return clamped_; }
  bool done() const {
    return finished_ || starved() ||
           (stage_ > 0 && stop_rule_met()) || stage_ >= cfg_.max_stages;
  }

  // One stage outcome sampled from the frozen state without committing it.
  struct StageSample {
    std::uint32_t epoch = 0;
    std::vector<std::uint32_t> m_stamp, w_stamp;
    std::vector<EdgeId> matched;

    bool in_matching(VertexId v) const { return m_stamp[v] == epoch; }
    bool in_waste(VertexId v) const { return w_stamp[v] == epoch; }
    bool removed(VertexId v) const { return in_matching(v) || in_waste(v); }
  };

  void sample_stage(Rng& rng, StageSample& out) const {
    const std::size_t n = h_->num_vertices();
    if (out.m_stamp.size() != n) {
      out.m_stamp.assign(n, 0);
      out.w_stamp.assign(n, 0);
      out.epoch = 0;
    }
    ++out.epoch;
    out.matched.clear();
    scratch_selected_.clear();
    for (EdgeId e : prep_edges_)
      if (rng.bernoulli(prep_sel_)) scratch_selected_.push_back(e);
    // isolated selected edges: every endpoint hit exactly once
    ++sel_epoch_;
    for (EdgeId e : scratch_selected_)
      for (VertexId v : h_->edge(e)) {
        if (sel_stamp_[v] != sel_epoch_) { sel_stamp_[v] = sel_epoch_; sel_count_[v] = 0; }
        ++sel_count_[v];
      }
    for (EdgeId e : scratch_selected_) {
      bool isolated = true;
      for (VertexId v : h_->edge(e))
        if (sel_count_[v] != 1) { isolated = false; break; }
      if (isolated) {
        out.matched.push_back(e);
        for (VertexId v : h_->edge(e)) out.m_stamp[v] = out.epoch;
      }
    }
    for (VertexId v = 0; v < n; ++v) {
      if (!alive_[v]) continue;
      const double pw = stage_waste_prob(prep_pm_[v]);
      if (pw > 0.0 && rng.bernoulli(pw)) out.w_stamp[v] = out.epoch;
    }
  }

  // Executes the next stage and returns its record.
  StageRecord step() {
    if (finished_) throw std::logic_error("nibble: step() after completion");
    StageSample sample;
    Rng stage_rng = rng_.split(0x100 + stage_);
    sample_stage(stage_rng, sample);

    StageRecord rec;
    rec.stage = stage_ + 1;
    rec.p_star = prep_p_star_;
    rec.m_size = sample.matched.size();

    // commit matching
    for (EdgeId e : sample.matched) {
      matching_.edges.push_back(e);
      in_matching_[e] = 1;
      for (VertexId v : h_->edge(e)) matching_.covered[v] = 1;
    }
    // commit deaths (matched vertices and waste)
    std::size_t wasted = 0;
    const std::size_t n = h_->num_vertices();
    for (VertexId v = 0; v < n; ++v) {
      if (!alive_[v]) continue;
      const bool in_w = sample.in_waste(v);
      if (in_w) { waste_[v] = 1; ++wasted; }
      if (in_w || sample.in_matching(v)) kill(v);
    }
    rec.w_size = wasted;
    rec.alive = n_alive_;

    // advance the tracked parameters
    const double keep = 1.0 - prep_p_star_;
    d_cur_ = std::pow(keep, k_ - 1) * d_cur_;
    delta_cur_ = std::pow(keep, k_ - 1) * delta_cur_ + std::sqrt(d_hist_.back()) * log_n_;
    for (auto& q : q_) q *= keep;
    q_.push_back(1.0);
    d_hist_.push_back(d_cur_);
    delta_hist_.push_back(delta_cur_);
    p_star_hist_.push_back(prep_p_star_);
    ++stage_;
    rec.d = d_cur_;
    rec.delta = delta_cur_;

    refresh_candidates();
    record_stats(rec, sample);
    if (clamped_next_ || stop_rule_met() || stage_ >= cfg_.max_stages) {
      finished_ = true;
    } else {
      prepare_stage();
      if (prep_edges_.empty()) finished_ = true;  // starved
    }
    return rec;
  }

 private:
  void pick_stat_samples() {
    Rng r = rng_.split(0xabcdef);
    const std::size_t n = h_->num_vertices();
    const std::size_t nv = std::min(cfg_.stat_vertices, n);
    std::vector<VertexId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < nv; ++i) {
      std::swap(ids[i], ids[i + r.below(n - i)]);
      stat_vertices_.push_back(ids[i]);
    }
    for (std::size_t i = 0; i < cfg_.stat_pairs && n >= 2; ++i) {
      VertexId x = static_cast<VertexId>(r.below(n));
      VertexId y = static_cast<VertexId>(r.below(n - 1));
      if (y >= x) ++y;
      stat_pairs_.emplace_back(x, y);
    }
    sel_stamp_.assign(n, 0);
    sel_count_.assign(n, 0);
    seen_edges_.assign(h_->num_edges(), 0);
    waste_seen_.assign(n, 0);
  }

  void kill(VertexId v) {
    alive_[v] = 0;
    --n_alive_;
    for (EdgeId e : h_->incident_edges(v)) {
      if (alive_count_[e] == k_) {
        for (VertexId u : h_->edge(e)) {
          if (alive_deg_[u] > 0) --alive_deg_[u];
        }
      }
      --alive_count_[e];
    }
  }

  void refresh_candidates() {
    std::size_t out = 0;
    for (EdgeId e : candidates_)
      if (alive_count_[e] + 1 >= k_) candidates_[out++] = e;
    candidates_.resize(out);
  }

  // Exact probabilities for the upcoming stage from the current alive state.
  void prepare_stage() {
    prep_edges_.clear();
    for (EdgeId e : candidates_)
      if (alive_count_[e] == k_) prep_edges_.push_back(e);
    prep_pm_.assign(h_->num_vertices(), 0.0);
    prep_p_star_ = 0.0;
    clamped_ = d_cur_ < 1.0;
    clamped_next_ = clamped_;
    const double d_eff = clamped_ ? 1.0 : d_cur_;
    prep_sel_ = 1.0 / d_eff;
    if (prep_edges_.empty()) return;
    for (EdgeId e : prep_edges_) {
      const std::size_t tf = simple_ ? t_simple(e) : t_direct(e);
      const double pe = edge_matching_prob(d_eff, tf);
      for (VertexId v : h_->edge(e)) prep_pm_[v] += pe;
    }
    for (VertexId v = 0; v < h_->num_vertices(); ++v)
      if (alive_[v]) prep_p_star_ = std::max(prep_p_star_, prep_pm_[v]);
  }

  // In-stage waste rate; the degenerate endpoints (pm at the maximum, or a
  // certain-removal stage) fall out of the equalization identity directly.
  double stage_waste_prob(double pm) const {
    if (pm >= prep_p_star_) return 0.0;
    if (prep_p_star_ >= 1.0) return 1.0;
    return (prep_p_star_ - pm) / (1.0 - pm);
  }

  std::size_t t_simple(EdgeId f) const {
    std::size_t t = 0;
    for (VertexId v : h_->edge(f)) t += alive_deg_[v] - 1;
    return t;
  }

  // Direct enumeration with dedup; used when the input is only
  // codegree-bounded and the degree-sum shortcut would double-count.
  std::size_t t_direct(EdgeId f) const {
    ++sel_epoch_;
    std::size_t t = 0;
    for (VertexId v : h_->edge(f)) {
      for (EdgeId e : h_->incident_edges(v)) {
        if (e == f || alive_count_[e] != k_) continue;
        if (seen_edges_[e] != sel_epoch_) {
          seen_edges_[e] = sel_epoch_;
          ++t;
        }
      }
    }
    return t;
  }

  void record_stats(StageRecord& rec, const StageSample&) {
    // extremes of D_i(x) over every vertex, dead or alive
    const std::size_t n = h_->num_vertices();
    dx_count_.assign(n, 0);
    for (EdgeId e : candidates_) {
      if (alive_count_[e] == k_) {
        for (VertexId v : h_->edge(e)) ++dx_count_[v];
      } else {  // exactly one dead endpoint: the edge witnesses that vertex
        for (VertexId v : h_->edge(e))
          if (!alive_[v]) { ++dx_count_[v]; break; }
      }
    }
    std::uint32_t lo = UINT32_MAX, hi = 0;
    for (VertexId v = 0; v < n; ++v) {
      lo = std::min(lo, dx_count_[v]);
      hi = std::max(hi, dx_count_[v]);
    }
    rec.min_dx = lo == UINT32_MAX ? 0.0 : lo;
    rec.max_dx = hi;

    if (!stat_vertices_.empty()) {
      double sum = 0.0;
      std::size_t cnt = 0;
      for (VertexId x : stat_vertices_) {
        if (!alive_[x]) continue;
        sum += static_cast<double>(stat_z(*h_, alive_, matching_, x));
        ++cnt;
      }
      if (cnt) rec.z_mean = sum / static_cast<double>(cnt);
    }
    if (!stat_pairs_.empty()) {
      double ymax = 0.0, xmax = 0.0;
      std::size_t cnt = 0;
      for (auto [x, y] : stat_pairs_) {
        if (!alive_[x] || !alive_[y]) continue;
        ymax = std::max(ymax, static_cast<double>(stat_y(*h_, alive_, x, y)));
        xmax = std::max(xmax, static_cast<double>(stat_x(*h_, alive_, matching_, x, y)));
        ++cnt;
      }
      if (cnt) { rec.y_max = ymax; rec.x_max = xmax; }
    }
    rec.tracked_alive.reserve(cfg_.tracked_sets.size());
    rec.tracked_waste.reserve(cfg_.tracked_sets.size());
    for (const auto& s : cfg_.tracked_sets) {
      std::size_t a = 0, w = 0;
      for (VertexId v : s) {
        a += alive_[v] != 0;
        w += waste_this_stage(v);
      }
      rec.tracked_alive.push_back(a);
      rec.tracked_waste.push_back(w);
    }
    // roll the per-stage waste marks forward
    for (const auto& s : cfg_.tracked_sets)
      for (VertexId v : s) waste_seen_[v] = waste_[v];
  }

  std::size_t waste_this_stage(VertexId v) const { return waste_[v] && !waste_seen_[v]; }

  const Hypergraph* h_;
  NibbleConfig cfg_;
  Rng rng_;
  int k_ = 0;
  bool simple_ = true;
  bool finished_ = false;
  bool clamped_ = false, clamped_next_ = false;

  std::vector<char> alive_, waste_;
  std::vector<char> waste_seen_;
  Matching matching_;
  std::vector<char> in_matching_;
  std::vector<std::uint8_t> alive_count_;
  std::vector<std::uint32_t> alive_deg_;
  std::vector<EdgeId> candidates_;
  std::size_t n_alive_ = 0;
  std::size_t stage_ = 0;

  double d0_ = 0.0, delta0_ = 0.0, d_cur_ = 0.0, delta_cur_ = 0.0, log_n_ = 0.0;
  std::vector<double> q_, d_hist_, delta_hist_, p_star_hist_;

  std::vector<EdgeId> prep_edges_;
  std::vector<double> prep_pm_;
  double prep_p_star_ = 0.0, prep_sel_ = 0.0;

  std::vector<VertexId> stat_vertices_;
  std::vector<std::pair<VertexId, VertexId>> stat_pairs_;
  std::vector<std::uint32_t> dx_count_;
  std::vector<std::string> warnings_;

  mutable std::vector<EdgeId> scratch_selected_;
  mutable std::vector<std::uint32_t> sel_stamp_, sel_count_;
  mutable std::vector<std::uint32_t> seen_edges_;
  mutable std::uint32_t sel_epoch_ = 0;
};

// Runs stages until the tracked degree first drops to d0^gamma (or the run
// starves / hits the stage cap) and returns the accumulated matching, waste
// set, leftover set and per-stage log.
inline NibbleResult run_nibble(const Hypergraph& h, const NibbleConfig& cfg) {
  NibbleState state(h, cfg);
  NibbleResult res;
  res.d0 = state.d0();
  res.delta0 = state.delta0();
  res.simple_input = state.simple_input();
  while (!state.done()) res.log.stages.push_back(state.step());
  res.matching = state.matching();
  res.waste.assign(state.waste().begin(), state.waste().end());
  res.leftover.assign(state.alive().begin(), state.alive().end());
  res.d_omega = state.d_current();
  res.stages = state.stage();
  res.starved = state.starved() && !state.stop_rule_met();
  res.hit_max_stages = state.stage() >= cfg.max_stages && !state.stop_rule_met();
  res.warnings = state.warnings();
  if (res.starved) res.warnings.push_back("run starved before the stop rule fired");
  return res;
}

// Deterministic recurrence with the idealized removal rate e^{-k}; `log_n`
// scales the spread growth term exactly as the live tracker does.
struct PredictedStage {
  double d = 0.0;             // tracked degree recurrence
  double delta = 0.0;         // tracked spread recurrence
  double alive_factor = 1.0;  // expected |U_i| / N
  double d_closed_form = 0.0; // (1 - e^{-k})^{i(k-1)} d0
};

inline std::vector<PredictedStage> predict_trajectory(double d0, double delta0, int k,
                                                      double gamma, double log_n) {
  if (d0 < 1.0) throw std::invalid_argument("predict_trajectory: d0 must be at least 1");
  const double p = std::exp(-static_cast<double>(k));
  const double keep = 1.0 - p;
  const double stop = std::pow(d0, gamma);
  std::vector<PredictedStage> out;
  out.push_back({d0, delta0, 1.0, d0});
  double d = d0, delta = delta0, factor = 1.0;
  for (std::size_t i = 1; i <= 100000; ++i) {
    const double d_prev = d;
    d = std::pow(keep, k - 1) * d;
    delta = std::pow(keep, k - 1) * delta + std::sqrt(d_prev) * log_n;
    factor *= keep;
    out.push_back({d, delta, factor, std::pow(keep, static_cast<double>(i * (k - 1))) * d0});
    if (d <= stop) break;
  }
  return out;
}

// Greedily extends a matching to a maximal one, scanning edges in id order.
inline void extend_matching_maximal(const Hypergraph& h, Matching& m) {
  if (m.covered.size() != h.num_vertices()) m.covered.assign(h.num_vertices(), 0);
  for (EdgeId e = 0; e < h.num_edges(); ++e) {
    bool free = true;
    for (VertexId v : h.edge(e))
      if (m.covered[v]) { free = false; break; }
    if (free) {
      m.edges.push_back(e);
      for (VertexId v : h.edge(e)) m.covered[v] = 1;
    }
  }
}

// ---- trajectory CSV ----

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

inline void TrajectoryLog::write_csv(std::ostream& os) const {
  os << "# nibble-match v1\n";
  os << "i,u_size,d_i,delta_i,p_star,m_size,w_size,z_mean,y_max,x_max\n";
  for (const auto& r : stages) {
    os << r.stage << ',' << r.alive << ',' << detail::fmt_double(r.d) << ','
       << detail::fmt_double(r.delta) << ',' << detail::fmt_double(r.p_star) << ',' << r.m_size
       << ',' << r.w_size << ',' << detail::fmt_double(r.z_mean) << ','
       << detail::fmt_double(r.y_max) << ',' << detail::fmt_double(r.x_max) << '\n';
  }
}

}  // namespace nibblematch
