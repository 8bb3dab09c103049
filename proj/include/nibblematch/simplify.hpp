#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "nibblematch/generators.hpp"
#include "nibblematch/hypergraph.hpp"
#include "nibblematch/rng.hpp"

namespace nibblematch {

struct LasVegasOptions {
  int budget = 50;          // attempts per stage before giving up
  double band_slack = 2.0;  // multiplier on the degree-band halfwidths
};

struct StageAudit {
  std::string stage;
  int attempts = 0;
  std::size_t codegree_before = 0;
  std::size_t codegree_after = 0;
  std::size_t codegree_target = 0;
  double degree_min = 0.0, degree_max = 0.0;
  double band_target = 0.0;  // main-term degree scale the band is centred on
  bool degrees_ok = true;
  bool codegree_ok = true;
  std::vector<std::string> notes;

  bool ok() const { return degrees_ok && codegree_ok; }
};

namespace detail {

inline void fill_degree_stats(const Hypergraph& h, std::span<const EdgeId> kept, StageAudit& a,
                              std::vector<std::uint32_t>& deg) {
  deg.assign(h.num_vertices(), 0);
  for (EdgeId e : kept)
    for (VertexId v : h.edge(e)) ++deg[v];
  std::uint32_t lo = UINT32_MAX, hi = 0;
  for (auto d : deg) { lo = std::min(lo, d); hi = std::max(hi, d); }
  a.degree_min = h.num_vertices() ? lo : 0;
  a.degree_max = hi;
}

inline std::size_t codegree_of_subset(const Hypergraph& h, std::span<const EdgeId> kept) {
  // pairwise counting over the kept edges only
  std::vector<std::uint32_t> count;
  std::vector<std::uint32_t> stamp;
  count.assign(h.num_vertices(), 0);
  stamp.assign(h.num_vertices(), UINT32_MAX);
  std::vector<std::vector<EdgeId>> inc(h.num_vertices());
  for (EdgeId e : kept)
    for (VertexId v : h.edge(e)) inc[v].push_back(e);
  std::size_t best = 0;
  for (VertexId u = 0; u < h.num_vertices(); ++u) {
    for (EdgeId e : inc[u])
      for (VertexId v : h.edge(e)) {
        if (v <= u) continue;
        if (stamp[v] != u) { stamp[v] = u; count[v] = 0; }
        best = std::max<std::size_t>(best, ++count[v]);
      }
  }
  return best;
}

// One random class out of `classes`, retried until the selected class meets
// the codegree target and per-vertex degree band. Shared by the split and
// thin stages, which differ only in their parameters.
inline std::vector<EdgeId> random_class_selection(const Hypergraph& h, std::size_t classes,
                                                  std::size_t codegree_target, double scale,
                                                  double log_d, std::uint64_t seed,
                                                  StageAudit& audit, const LasVegasOptions& opts) {
  const std::size_t m = h.num_edges();
  std::vector<EdgeId> all(m);
  std::iota(all.begin(), all.end(), 0);
  if (classes <= 1) {
    audit.attempts = 0;
    audit.codegree_after = audit.codegree_before;
    std::vector<std::uint32_t> deg;
    fill_degree_stats(h, all, audit, deg);
    return all;
  }

  Rng root(seed);
  std::vector<EdgeId> best;
  double best_score = -1.0;
  std::vector<std::uint32_t> deg;
  for (int attempt = 0; attempt < opts.budget; ++attempt) {
    Rng rng = root.split(attempt);
    std::vector<EdgeId> kept;
    kept.reserve(m / classes + 1);
    for (EdgeId e = 0; e < m; ++e)
      if (rng.below(classes) == 0) kept.push_back(e);

    const std::size_t codeg = codegree_of_subset(h, kept);
    deg.assign(h.num_vertices(), 0);
    for (EdgeId e : kept)
      for (VertexId v : h.edge(e)) ++deg[v];
    std::size_t in_band = 0;
    for (VertexId v = 0; v < h.num_vertices(); ++v) {
      const double mean = static_cast<double>(h.degree(v)) / scale;
      const double halfwidth = opts.band_slack * 4.0 * std::sqrt(std::max(0.0, mean * log_d));
      if (std::abs(deg[v] - mean) <= halfwidth) ++in_band;
    }
    const bool codeg_ok = codeg <= codegree_target;
    const bool deg_ok = in_band == h.num_vertices();
    const double score = (codeg_ok ? 1.0 : 0.0) +
                         static_cast<double>(in_band) / std::max<std::size_t>(1, h.num_vertices());
    if (score > best_score) {
      best_score = score;
      best = kept;
      audit.codegree_after = codeg;
      audit.degrees_ok = deg_ok;
      audit.codegree_ok = codeg_ok;
    }
    audit.attempts = attempt + 1;
    if (codeg_ok && deg_ok) {
      best = std::move(kept);
      audit.codegree_after = codeg;
      audit.degrees_ok = true;
      audit.codegree_ok = true;
      break;
    }
  }
  if (!audit.ok())
    audit.notes.push_back("retry budget exhausted, best attempt kept");
  StageAudit tmp;
  fill_degree_stats(h, best, tmp, deg);
  audit.degree_min = tmp.degree_min;
  audit.degree_max = tmp.degree_max;
  return best;
}

}  // namespace detail

namespace detail {

inline std::vector<EdgeId> color_split_ids(const Hypergraph& h, std::size_t classes,
                                           std::uint64_t seed, StageAudit& audit,
                                           const LasVegasOptions& opts) {
  audit.stage = "color_split";
  audit.codegree_before = h.max_codegree();
  const double d = static_cast<double>(std::max<std::size_t>(h.max_degree(), 1));
  const double log_d = std::log(std::max(d, 2.0));
  const double ratio = d / static_cast<double>(std::max<std::size_t>(classes, 1));
  audit.codegree_target =
      classes <= 1
          ? audit.codegree_before
          : std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(std::log(std::max(ratio, 1.01)))));
  audit.band_target = ratio;
  if (classes > 1 && std::log(d) > static_cast<double>(classes))
    audit.notes.push_back("class count below log D, outside the stated regime");
  return random_class_selection(h, classes, audit.codegree_target,
                                static_cast<double>(std::max<std::size_t>(classes, 1)), log_d,
                                seed, audit, opts);
}

inline std::vector<EdgeId> thin_ids(const Hypergraph& h, double delta, std::uint64_t seed,
                                    StageAudit& audit, const LasVegasOptions& opts) {
  if (delta <= 0.0 || delta >= 1.0 / 3.0)
    throw std::invalid_argument("thin: delta must lie in (0, 1/3)");
  audit.stage = "thin";
  audit.codegree_before = h.max_codegree();
  const double d = static_cast<double>(std::max<std::size_t>(h.max_degree(), 1));
  const double log_d = std::log(std::max(d, 2.0));
  const auto classes = static_cast<std::size_t>(std::ceil(std::pow(d, delta)));
  audit.codegree_target = static_cast<std::size_t>(std::ceil(2.0 / delta));
  audit.band_target = d / static_cast<double>(std::max<std::size_t>(classes, 1));
  if (audit.codegree_before > log_d + 1.0)
    audit.notes.push_back("input codegree above log D, outside the stated regime");
  return random_class_selection(h, classes, audit.codegree_target,
                                static_cast<double>(std::max<std::size_t>(classes, 1)), log_d,
                                seed, audit, opts);
}

}  // namespace detail

// Splits the edges into `classes` uniform color classes and keeps one whose
// codegree is at most ceil(log(D/classes)) and whose degrees stay within
// d(v)/classes +- 4 sqrt(d(v)/classes * log D).
inline Hypergraph color_split(const Hypergraph& h, std::size_t classes, std::uint64_t seed,
                              StageAudit* audit_out = nullptr, const LasVegasOptions& opts = {}) {
  StageAudit audit;
  auto kept = detail::color_split_ids(h, classes, seed, audit, opts);
  if (audit_out) *audit_out = audit;
  return h.subhypergraph(kept);
}

// Same mechanism with ceil(D^delta) classes: output codegree at most
// ceil(2/delta), degrees d(v)/D^delta +- 4 sqrt(d(v)/D^delta * log D).
inline Hypergraph thin(const Hypergraph& h, double delta, std::uint64_t seed,
                       StageAudit* audit_out = nullptr, const LasVegasOptions& opts = {}) {
  StageAudit audit;
  auto kept = detail::thin_ids(h, delta, seed, audit, opts);
  if (audit_out) *audit_out = audit;
  return h.subhypergraph(kept);
}

// Graph on the edge ids of a working hypergraph; two edges are adjacent
// exactly when they share at least two vertices.
struct ConflictGraph {
  std::size_t order = 0;
  std::vector<std::vector<std::uint32_t>> adj;  // sorted neighbor lists

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& a : adj) d = std::max(d, a.size());
    return d;
  }
  bool adjacent(std::uint32_t u, std::uint32_t v) const {
    const auto& a = adj[u];
    return std::binary_search(a.begin(), a.end(), v);
  }
  bool contains(const ConflictGraph& g) const {
    if (g.order != order) return false;
    for (std::uint32_t v = 0; v < order; ++v)
      for (std::uint32_t u : g.adj[v])
        if (!adjacent(v, u)) return false;
    return true;
  }
  bool is_regular(std::size_t s) const {
    for (const auto& a : adj)
      if (a.size() != s) return false;
    return true;
  }
};

inline ConflictGraph build_conflict_graph(const Hypergraph& h) {
  ConflictGraph g;
  g.order = h.num_edges();
  g.adj.assign(g.order, {});
  // bucket edges by contained vertex pair; edges sharing a bucket conflict
  std::vector<std::pair<std::uint64_t, std::uint32_t>> buckets;
  const std::uint64_t n = std::max<std::uint64_t>(h.num_vertices(), 1);
  for (EdgeId e = 0; e < h.num_edges(); ++e) {
    auto sp = h.edge(e);
    for (std::size_t i = 0; i < sp.size(); ++i)
      for (std::size_t j = i + 1; j < sp.size(); ++j)
        buckets.emplace_back(static_cast<std::uint64_t>(sp[i]) * n + sp[j], e);
  }
  std::sort(buckets.begin(), buckets.end());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;
  for (std::size_t lo = 0; lo < buckets.size();) {
    std::size_t hi = lo;
    while (hi < buckets.size() && buckets[hi].first == buckets[lo].first) ++hi;
    for (std::size_t a = lo; a < hi; ++a)
      for (std::size_t b = a + 1; b < hi; ++b) {
        arcs.emplace_back(buckets[a].second, buckets[b].second);
        arcs.emplace_back(buckets[b].second, buckets[a].second);
      }
    lo = hi;
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
  for (auto [u, v] : arcs) g.adj[u].push_back(v);
  return g;
}

// Supergraph of g on the same vertex set with every degree exactly s
// (s even, s > max degree of g). Greedy pairing of deficient vertices with a
// swap repair over previously added edges; deterministic given the seed.
inline ConflictGraph regularize(const ConflictGraph& g, std::size_t s, std::uint64_t seed) {
  if (s % 2 != 0) throw std::invalid_argument("regularize: s must be even");
  if (s == 0) return g.max_degree() == 0 ? g : throw std::invalid_argument("regularize: s=0 on a nonempty graph");
  if (s <= g.max_degree()) throw std::invalid_argument("regularize: s must exceed the max degree");
  if (s >= g.order) throw GenerationError("regularize: s too large for the vertex count");

  const std::uint32_t n = static_cast<std::uint32_t>(g.order);
  std::vector<std::unordered_set<std::uint32_t>> adj(n);
  for (std::uint32_t v = 0; v < n; ++v) adj[v].insert(g.adj[v].begin(), g.adj[v].end());
  std::vector<std::size_t> deficit(n);
  for (std::uint32_t v = 0; v < n; ++v) deficit[v] = s - adj[v].size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> added;
  Rng rng(seed ^ 0x5bd1e995u);

  auto add_edge = [&](std::uint32_t u, std::uint32_t v) {
    adj[u].insert(v);
    adj[v].insert(u);
    --deficit[u];
    --deficit[v];
    added.emplace_back(std::min(u, v), std::max(u, v));
  };
  auto linked = [&](std::uint32_t u, std::uint32_t v) { return adj[u].count(v) != 0; };

  std::vector<std::uint32_t> pool;
  for (std::uint32_t v = 0; v < n; ++v)
    if (deficit[v]) pool.push_back(v);

  std::size_t guard = 0;
  const std::size_t guard_limit = 64 * static_cast<std::size_t>(n) * s + 4096;
  while (!pool.empty()) {
    if (++guard > guard_limit) throw GenerationError("regularize: repair attempts exhausted");
    // drop satisfied vertices
    std::size_t out = 0;
    for (std::uint32_t v : pool)
      if (deficit[v]) pool[out++] = v;
    pool.resize(out);
    if (pool.empty()) break;

    std::uint32_t u = pool[0];
    for (std::uint32_t v : pool)
      if (deficit[v] > deficit[u] || (deficit[v] == deficit[u] && v < u)) u = v;

    // random partner first, full scan as fallback
    std::uint32_t partner = UINT32_MAX;
    if (pool.size() > 1) {
      for (int tries = 0; tries < 64 && partner == UINT32_MAX; ++tries) {
        std::uint32_t v = pool[rng.below(pool.size())];
        if (v != u && deficit[v] && !linked(u, v)) partner = v;
      }
      if (partner == UINT32_MAX) {
        for (std::uint32_t v : pool)
          if (v != u && deficit[v] && !linked(u, v)) { partner = v; break; }
      }
    }
    if (partner != UINT32_MAX) {
      add_edge(u, partner);
      continue;
    }

    // stuck: rewire through a previously added edge {a,b}
    bool repaired = false;
    if (deficit[u] >= 2) {
      // remove {a,b} away from u and wire u to both ends
      for (int tries = 0; tries < 4096 && !added.empty() && !repaired; ++tries) {
        const std::size_t idx = rng.below(added.size());
        auto [a, b] = added[idx];
        if (a == u || b == u || linked(u, a) || linked(u, b)) continue;
        adj[a].erase(b);
        adj[b].erase(a);
        added[idx] = added.back();
        added.pop_back();
        adj[u].insert(a);
        adj[a].insert(u);
        adj[u].insert(b);
        adj[b].insert(u);
        deficit[u] -= 2;
        added.emplace_back(std::min(u, a), std::max(u, a));
        added.emplace_back(std::min(u, b), std::max(u, b));
        repaired = true;
      }
    } else {
      // two deficit-one vertices blocked by an existing link: split an added
      // edge between them
      std::uint32_t w = UINT32_MAX;
      for (std::uint32_t v : pool)
        if (v != u && deficit[v]) { w = v; break; }
      for (int tries = 0; tries < 4096 && !added.empty() && !repaired && w != UINT32_MAX;
           ++tries) {
        const std::size_t idx = rng.below(added.size());
        auto [a, b] = added[idx];
        if (a == u || b == u || a == w || b == w) continue;
        if (linked(u, a) || linked(w, b)) std::swap(a, b);
        if (a == u || b == w || linked(u, a) || linked(w, b)) continue;
        adj[a].erase(b);
        adj[b].erase(a);
        added[idx] = added.back();
        added.pop_back();
        adj[u].insert(a);
        adj[a].insert(u);
        adj[w].insert(b);
        adj[b].insert(w);
        --deficit[u];
        --deficit[w];
        added.emplace_back(std::min(u, a), std::max(u, a));
        added.emplace_back(std::min(w, b), std::max(w, b));
        repaired = true;
      }
    }
    if (!repaired) throw GenerationError("regularize: no admissible repair found");
  }

  ConflictGraph out;
  out.order = g.order;
  out.adj.assign(n, {});
  for (std::uint32_t v = 0; v < n; ++v) {
    out.adj[v].assign(adj[v].begin(), adj[v].end());
    std::sort(out.adj[v].begin(), out.adj[v].end());
  }
  return out;
}

// Keeps each edge with probability 1/t and returns those isolated in the
// regularized conflict graph; retried until the per-vertex counts sit inside
// (d(v)/t)(1-1/t)^s +- 4s sqrt((s+1) d(v)/t * log D).
inline std::vector<EdgeId> isolate_select(const Hypergraph& h, const ConflictGraph& g_reg,
                                          std::size_t t, std::uint64_t seed,
                                          StageAudit* audit_out = nullptr,
                                          const LasVegasOptions& opts = {}) {
  if (t < 1) throw std::invalid_argument("isolate_select: t must be at least 1");
  if (g_reg.order != h.num_edges())
    throw std::invalid_argument("isolate_select: conflict graph order mismatch");
  StageAudit audit;
  audit.stage = "isolate_select";
  audit.codegree_before = h.max_codegree();
  const std::size_t s = g_reg.order ? g_reg.adj[0].size() : 0;
  const double d = static_cast<double>(std::max<std::size_t>(h.max_degree(), 2));
  const double log_d = std::log(d);
  const double keep = 1.0 / static_cast<double>(t);
  const double isolate_rate = std::pow(1.0 - keep, static_cast<double>(s));
  audit.band_target = d * keep * isolate_rate;
  if (static_cast<double>(t) < static_cast<double>(s) * std::sqrt(log_d) ||
      static_cast<double>(t) >= std::pow(d, 1.0 / 3.0))
    audit.notes.push_back("t outside [s sqrt(log D), D^{1/3}) regime");

  Rng root(seed);
  std::vector<EdgeId> best;
  double best_frac = -1.0;
  std::vector<char> kept(h.num_edges());
  std::vector<std::uint32_t> isolated_count;
  for (int attempt = 0; attempt < opts.budget; ++attempt) {
    Rng rng = root.split(attempt);
    for (EdgeId e = 0; e < h.num_edges(); ++e) kept[e] = rng.bernoulli(keep);
    std::vector<EdgeId> selected;
    for (EdgeId e = 0; e < h.num_edges(); ++e) {
      if (!kept[e]) continue;
      bool isolated = true;
      for (std::uint32_t nb : g_reg.adj[e])
        if (kept[nb]) { isolated = false; break; }
      if (isolated) selected.push_back(e);
    }
    isolated_count.assign(h.num_vertices(), 0);
    for (EdgeId e : selected)
      for (VertexId v : h.edge(e)) ++isolated_count[v];
    std::size_t in_band = 0;
    // the 4s halfwidth collapses at s = 0; fall back to the plain binomial
    // width for that control configuration
    const double s_w = std::max<double>(s, 1);
    for (VertexId v = 0; v < h.num_vertices(); ++v) {
      const double mean = static_cast<double>(h.degree(v)) * keep * isolate_rate;
      const double halfwidth =
          opts.band_slack * 4.0 * s_w *
          std::sqrt(std::max(0.0, (s_w + 1.0) * static_cast<double>(h.degree(v)) * keep * log_d));
      if (std::abs(isolated_count[v] - mean) <= halfwidth) ++in_band;
    }
    const double frac = static_cast<double>(in_band) / std::max<std::size_t>(1, h.num_vertices());
    if (frac > best_frac) {
      best_frac = frac;
      best = selected;
      audit.degrees_ok = in_band == h.num_vertices();
    }
    audit.attempts = attempt + 1;
    if (in_band == h.num_vertices()) {
      best = std::move(selected);
      audit.degrees_ok = true;
      break;
    }
  }
  if (!audit.degrees_ok) audit.notes.push_back("retry budget exhausted, best attempt kept");
  std::vector<std::uint32_t> deg;
  detail::fill_degree_stats(h, best, audit, deg);
  audit.codegree_after = detail::codegree_of_subset(h, best);
  audit.codegree_target = 1;
  if (audit_out) *audit_out = audit;
  return best;
}

struct SimplifyReport {
  std::vector<StageAudit> stages;
  std::size_t s = 0;        // conflict-graph regularity
  std::size_t t = 0;        // selection divisor
  std::size_t classes = 0;  // color classes of the first stage
  double d_star = 0.0;      // closed-form degree target of the output
  std::size_t edges_in = 0, edges_out = 0;
  bool simple = false;
  bool bands_ok = true;            // per-stage degree bands (with slack)
  bool codegree_targets_ok = true; // per-stage codegree targets, which hold
                                   // only for large degree/codegree ratios
  std::vector<std::string> warnings;
};

struct SimplifyResult {
  Hypergraph hypergraph;
  std::vector<EdgeId> edge_origin;  // output edge -> edge id of the input
  SimplifyReport report;
};

// Codegree reduction to a simple sub-hypergraph: color split, thinning,
// conflict-graph regularization, isolated selection. Each stage only deletes
// edges; the vertex set never changes. Output is simple by construction
// (selected edges are pairwise conflict-free and duplicates always conflict).
inline SimplifyResult simple_subhypergraph(const Hypergraph& h, double c, double delta,
                                           std::uint64_t seed, const LasVegasOptions& opts = {}) {
  if (!h.uniformity()) throw std::invalid_argument("simple_subhypergraph: input must be uniform");
  const int k = *h.uniformity();
  if (c < 1.0) throw std::invalid_argument("simple_subhypergraph: codegree bound must be >= 1");
  if (h.max_codegree() > static_cast<std::size_t>(c))
    throw std::invalid_argument("simple_subhypergraph: input codegree exceeds the stated bound");

  SimplifyResult res;
  auto& rep = res.report;
  rep.edges_in = h.num_edges();
  const double d = static_cast<double>(std::max<std::size_t>(h.max_degree(), 2));
  double c_eff = c;
  if (c_eff < std::log(d)) {
    c_eff = std::log(d);
    rep.warnings.push_back("codegree bound below log D, enlarged to log D");
  }

  Rng root(seed);
  StageAudit a1, a2, a3;
  const auto classes = static_cast<std::size_t>(std::ceil(c_eff));
  rep.classes = classes;
  auto ids1 = detail::color_split_ids(h, classes, root.split(1).next_u64(), a1, opts);
  Hypergraph h1 = h.subhypergraph(ids1);
  rep.stages.push_back(a1);

  auto ids2 = detail::thin_ids(h1, delta, root.split(2).next_u64(), a2, opts);
  Hypergraph h2 = h1.subhypergraph(ids2);
  rep.stages.push_back(a2);

  ConflictGraph g = build_conflict_graph(h2);
  const double binom = static_cast<double>(k) * (k - 1) / 2.0;
  std::size_t s = static_cast<std::size_t>(std::floor(1.0 + 2.0 * binom / delta)) + 1;
  if (s % 2 != 0) ++s;  // smallest even integer above 1 + 2 binom(k,2)/delta
  if (s <= g.max_degree()) {
    s = g.max_degree() + 1;
    if (s % 2 != 0) ++s;
    rep.warnings.push_back("conflict degree exceeded the window, s raised to fit");
  }
  if (g.order <= 2 * g.max_degree() * g.max_degree() * g.max_degree())
    rep.warnings.push_back("conflict graph below the 2*Delta^3 size hypothesis");
  rep.s = s;
  const std::size_t t = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::log(std::max(d / c_eff, 1.01)))));
  rep.t = t;

  std::vector<EdgeId> ids3;
  if (s >= g.order) {
    // too few edges left to host an s-regular conflict supergraph; the
    // selection rate (1-1/t)^s is negligible at this size anyway
    rep.warnings.push_back("conflict graph smaller than s, selection degenerates to empty");
    a3.stage = "isolate_select";
    a3.notes.push_back("skipped: regularization infeasible at this scale");
    rep.stages.push_back(a3);
  } else {
    ConflictGraph g_reg = regularize(g, s, root.split(3).next_u64());
    ids3 = isolate_select(h2, g_reg, t, root.split(4).next_u64(), &a3, opts);
    rep.stages.push_back(a3);
  }

  res.hypergraph = h2.subhypergraph(ids3);
  res.edge_origin.reserve(ids3.size());
  for (EdgeId e : ids3) res.edge_origin.push_back(ids1[ids2[e]]);
  rep.edges_out = res.hypergraph.num_edges();
  rep.d_star = std::pow(1.0 - 1.0 / static_cast<double>(t), static_cast<double>(s)) * d /
               (static_cast<double>(t) * std::pow(c_eff, 1.0 - delta) * std::pow(d, delta));
  rep.simple = res.hypergraph.is_simple();
  for (const auto& st : rep.stages) {
    if (!st.degrees_ok) rep.bands_ok = false;
    if (!st.codegree_ok) rep.codegree_targets_ok = false;
  }
  return res;
}

}  // namespace nibblematch
