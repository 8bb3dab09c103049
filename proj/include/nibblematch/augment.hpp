#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nibblematch/hypergraph.hpp"
#include "nibblematch/nibble.hpp"
#include "nibblematch/rng.hpp"
#include "nibblematch/simplify.hpp"

namespace nibblematch {

// ---- parameter formulas ----

// Largest admissible improvement exponent for uniformity k and degree
// regularity exponent epsilon.
inline double compute_eta0(int k, double epsilon) {
  if (k <= 3) throw std::invalid_argument("compute_eta0: k must exceed 3");
  if (epsilon <= 0.0 || epsilon >= 1.0 - 1.0 / (k - 1))
    throw std::invalid_argument("compute_eta0: epsilon must lie in (0, 1 - 1/(k-1))");
  const double kk = k;
  const double first = (kk - 3.0) / ((kk - 1.0) * (kk * kk * kk - 2.0 * kk * kk - kk + 4.0));
  const double second = 1.0 - 1.0 / (kk - 1.0) - epsilon;
  return std::min(first, second);
}

struct GammaPair {
  double gamma = 0.0;
  double gamma_prime = 0.0;
};

// Outer and inner stop exponents for the two-round process.
inline GammaPair compute_gamma(int k, double epsilon, double eta) {
  const double eta0 = compute_eta0(k, epsilon);
  if (eta <= 0.0 || eta >= eta0)
    throw std::invalid_argument("compute_gamma: eta must lie in (0, eta0)");
  const double kk = k;
  GammaPair g;
  g.gamma = std::min(2.0 / (kk * kk * kk - 2.0 * kk * kk - kk + 4.0),
                     (2.0 * (kk - 1.0) * (1.0 - epsilon) - 2.0) / (kk - 3.0));
  g.gamma_prime = std::min(1.0 / (4.0 * (kk - 1.0)), eta0 - eta);
  return g;
}

struct PipelineParams {
  int k = 4;
  double epsilon = 0.25;
  double eta = 0.0;
  double delta = 0.3;
  double mu = 0.5;
  // derived
  double eta0 = 0.0;
  double gamma = 0.0;
  double gamma_prime = 0.0;
  double gamma_override = -1.0;  // >= 0 replaces the formula value for the outer round

  static PipelineParams make(int k, double epsilon, double eta, double delta = 0.3,
                             double mu = 0.5) {
    PipelineParams p;
    p.k = k;
    p.epsilon = epsilon;
    p.eta = eta;
    p.delta = delta;
    p.mu = mu;
    p.eta0 = compute_eta0(k, epsilon);
    auto g = compute_gamma(k, epsilon, eta);
    p.gamma = g.gamma;
    p.gamma_prime = g.gamma_prime;
    return p;
  }

  double outer_gamma() const { return gamma_override >= 0.0 ? gamma_override : gamma; }
};

// ---- augmenting stars ----

// A matched edge plus k pairwise-disjoint edges, each meeting it in exactly
// one vertex and otherwise living in the leftover set. Swapping the matched
// edge for the k spokes grows a matching by k-1.
struct AugStar {
  EdgeId matched_edge = 0;
  std::vector<EdgeId> star_edges;  // k spokes, ordered by their anchor in the matched edge
};

// (1, k(k-1))-partite multi-hypergraph whose edges encode augmenting stars:
// one vertex per matching edge on the L side, the leftover vertices
// (optionally replicated) on the R side.
struct AugStarHypergraph {
  Hypergraph graph;
  PartiteTag partite;
  std::vector<EdgeId> l_matching_edge;       // L index -> matching edge id in the base hypergraph
  std::vector<VertexId> r_base_vertex;       // R index -> base vertex id
  std::vector<EdgeId> star_matched;          // star index -> matched edge id
  std::vector<EdgeId> star_spokes;           // k spokes per star, flat
  std::vector<std::uint32_t> edge_star;      // graph edge id -> star index
  std::vector<std::uint32_t> edge_copy;      // graph edge id -> R copy (0-based)
  std::vector<std::uint64_t> l_star_count;   // exact star count per L vertex
  std::size_t copies = 1;
  int base_k = 0;
  bool truncated = false;

  std::size_t l_size() const { return l_matching_edge.size(); }
  std::size_t r_size() const { return r_base_vertex.size(); }
  std::size_t star_count() const { return star_matched.size(); }
  VertexId r_vertex_id(std::size_t r_index, std::size_t copy = 0) const {
    return static_cast<VertexId>(l_size() + copy * r_size() + r_index);
  }
  // decoded back-map entry
  AugStar star(std::size_t idx) const {
    AugStar s;
    s.matched_edge = star_matched[idx];
    s.star_edges.assign(star_spokes.begin() + idx * base_k,
                        star_spokes.begin() + (idx + 1) * base_k);
    return s;
  }
};

namespace detail {

struct StarEnumerator {
  const Hypergraph& h;
  std::span<const char> leftover;
  std::size_t cap = 0;
  std::vector<char> marked;  // R vertices used by the partial star
  std::vector<std::vector<EdgeId>> spokes;
  std::vector<EdgeId> chosen;
  std::uint64_t count = 0;
  AugStarHypergraph* out = nullptr;
  EdgeId e_m = 0;

  void dfs(std::size_t j) {
    if (j == spokes.size()) {
      ++count;
      if (out && count <= cap) {
        out->star_matched.push_back(e_m);
        out->star_spokes.insert(out->star_spokes.end(), chosen.begin(), chosen.end());
      }
      return;
    }
    for (EdgeId e : spokes[j]) {
      bool clash = false;
      for (VertexId v : h.edge(e))
        if (leftover[v] && marked[v]) { clash = true; break; }
      if (clash) continue;
      for (VertexId v : h.edge(e))
        if (leftover[v]) marked[v] = 1;
      chosen.push_back(e);
      dfs(j + 1);
      chosen.pop_back();
      for (VertexId v : h.edge(e))
        if (leftover[v]) marked[v] = 0;
    }
  }
};

}  // namespace detail

// Emits every augmenting star of (h, m, waste), up to `cap_per_l` materialized
// stars per matched edge (exact counts are always recorded; truncation is
// flagged, never silent).
inline AugStarHypergraph enumerate_aug_stars(const Hypergraph& h, const Matching& m,
                                             std::span<const char> waste,
                                             std::size_t cap_per_l = 1u << 20) {
  if (!h.uniformity()) throw std::invalid_argument("enumerate_aug_stars: input must be uniform");
  const int k = *h.uniformity();
  const std::size_t n = h.num_vertices();
  if (m.covered.size() != n || waste.size() != n)
    throw std::invalid_argument("enumerate_aug_stars: mask size mismatch");

  AugStarHypergraph ha;
  ha.base_k = k;
  ha.l_matching_edge = m.edges;

  std::vector<char> leftover(n, 0);
  std::vector<std::uint32_t> r_index(n, UINT32_MAX);
  for (VertexId v = 0; v < n; ++v) {
    if (!m.covered[v] && !waste[v]) {
      leftover[v] = 1;
      r_index[v] = static_cast<std::uint32_t>(ha.r_base_vertex.size());
      ha.r_base_vertex.push_back(v);
    }
  }

  detail::StarEnumerator en{h, leftover, cap_per_l, std::vector<char>(n, 0), {}, {}, 0, &ha, 0};
  const int edge_width = 1 + k * (k - 1);
  std::vector<VertexId> flat;
  for (std::size_t l = 0; l < m.edges.size(); ++l) {
    const EdgeId e_m = m.edges[l];
    auto anchors = h.edge(e_m);
    en.spokes.assign(anchors.size(), {});
    bool feasible = true;
    for (std::size_t j = 0; j < anchors.size() && feasible; ++j) {
      const VertexId a = anchors[j];
      for (EdgeId e : h.incident_edges(a)) {
        if (e == e_m) continue;
        bool ok = true;
        for (VertexId v : h.edge(e)) {
          if (v == a) continue;
          if (!leftover[v]) { ok = false; break; }  // must avoid V(M), W and the rest of e_m
        }
        if (ok) en.spokes[j].push_back(e);
      }
      if (en.spokes[j].empty()) feasible = false;
    }
    const std::size_t first_star = ha.star_count();
    en.count = 0;
    if (feasible) {
      en.e_m = e_m;
      en.dfs(0);
    }
    ha.l_star_count.push_back(en.count);
    if (en.count > cap_per_l) ha.truncated = true;
    for (std::size_t s = first_star; s < ha.star_count(); ++s) {
      flat.push_back(static_cast<VertexId>(l));
      for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j)
        for (VertexId v : h.edge(ha.star_spokes[s * k + j]))
          if (leftover[v]) flat.push_back(ha.r_vertex_id(r_index[v]));
      ha.edge_star.push_back(static_cast<std::uint32_t>(s));
      ha.edge_copy.push_back(0);
    }
  }

  ha.graph = Hypergraph(ha.l_size() + ha.r_size(), std::move(flat), edge_width);
  ha.partite.a = 1;
  ha.partite.b = static_cast<std::size_t>(k) * (k - 1);
  ha.partite.part_of.assign(ha.graph.num_vertices(), 0);
  for (std::size_t r = 0; r < ha.r_size(); ++r) ha.partite.part_of[ha.l_size() + r] = 1;
  return ha;
}

// Vertex-disjoint replication of the R side so the two sides' mean degrees
// come together: floor(mean_R / mean_L) copies, each star edge replicated once
// per copy. Never increases the codegree.
inline AugStarHypergraph boost(const AugStarHypergraph& ha) {
  if (ha.copies != 1) throw std::invalid_argument("boost: already boosted");
  const std::size_t e_cnt = ha.graph.num_edges();
  if (ha.l_size() == 0 || e_cnt == 0)
    throw std::invalid_argument("boost: mean L degree is zero");
  const double mean_l = static_cast<double>(e_cnt) / static_cast<double>(ha.l_size());
  const double mean_r = ha.r_size() == 0
                            ? 0.0
                            : static_cast<double>(e_cnt) * ha.partite.b / static_cast<double>(ha.r_size());
  const std::size_t copies = std::max<std::size_t>(1, static_cast<std::size_t>(mean_r / mean_l));

  AugStarHypergraph out;
  out.base_k = ha.base_k;
  out.l_matching_edge = ha.l_matching_edge;
  out.r_base_vertex = ha.r_base_vertex;
  out.star_matched = ha.star_matched;
  out.star_spokes = ha.star_spokes;
  out.l_star_count = ha.l_star_count;
  out.truncated = ha.truncated;
  out.copies = copies;
  out.partite = ha.partite;
  out.partite.part_of.assign(ha.l_size() + copies * ha.r_size(), 0);
  for (std::size_t c = 0; c < copies; ++c)
    for (std::size_t r = 0; r < ha.r_size(); ++r)
      out.partite.part_of[ha.l_size() + c * ha.r_size() + r] = static_cast<std::uint32_t>(c + 1);

  const std::size_t width = 1 + ha.partite.b;
  std::vector<VertexId> flat;
  flat.reserve(e_cnt * copies * width);
  const VertexId r_lo = static_cast<VertexId>(ha.l_size());
  for (EdgeId e = 0; e < e_cnt; ++e) {
    auto sp = ha.graph.edge(e);
    for (std::size_t c = 0; c < copies; ++c) {
      for (VertexId v : sp)
        flat.push_back(v >= r_lo ? static_cast<VertexId>(v + c * ha.r_size()) : v);
      out.edge_star.push_back(ha.edge_star[e]);
      out.edge_copy.push_back(static_cast<std::uint32_t>(c));
    }
  }
  out.graph = Hypergraph(ha.l_size() + copies * ha.r_size(), std::move(flat),
                         static_cast<int>(width));
  return out;
}

// ---- structure audit of the star hypergraph ----

struct M3Report {
  std::size_t l_count = 0, r_count = 0, edge_count = 0;
  double l_min = 0, l_max = 0, r_min = 0, r_max = 0;
  std::size_t codegree_ll = 0, codegree_lr = 0, codegree_rr = 0, max_codegree = 0;
  double d_l_expected = 0;      // d_omega^k
  double l_ratio_min = 0, l_ratio_max = 0;
  double r_ratio_min = 0, r_ratio_max = 0;  // degree over measured z(x) * d_omega^{k-1}
  double codegree_bound = 0;    // band * d_omega^{k-1} * log^2 n
  bool l_ok = false, r_ok = false, codegree_ok = false, ll_zero_ok = false;
  bool sampled = false;  // R-side statistics come from a truncated enumeration
};

// Audits degree and codegree structure of an (unboosted) star hypergraph
// against the expected scales: L degrees against d_omega^k, R degrees against
// the measured per-vertex z count times d_omega^{k-1}, codegree against
// band * d_omega^{k-1} * log^2 n.
inline M3Report verify_m3(const AugStarHypergraph& ha, double d_omega,
                          std::span<const double> z_measured, double band, double log_n) {
  if (ha.l_size() == 0 || ha.r_size() == 0)
    throw std::invalid_argument("verify_m3: a side of the star hypergraph is empty");
  M3Report rep;
  rep.l_count = ha.l_size();
  rep.r_count = ha.r_size();
  rep.edge_count = ha.graph.num_edges();
  rep.sampled = ha.truncated;
  rep.d_l_expected = std::pow(d_omega, ha.base_k);

  // L degrees from the exact counts (valid even when materialization was capped)
  double l_lo = 1e300, l_hi = 0;
  for (std::uint64_t c : ha.l_star_count) {
    l_lo = std::min(l_lo, static_cast<double>(c));
    l_hi = std::max(l_hi, static_cast<double>(c));
  }
  rep.l_min = l_lo;
  rep.l_max = l_hi;
  rep.l_ratio_min = l_lo / rep.d_l_expected;
  rep.l_ratio_max = l_hi / rep.d_l_expected;
  rep.l_ok = rep.l_ratio_min >= 1.0 / band && rep.l_ratio_max <= band;

  // R degrees and ratios against the measured z statistic
  const double d_pow = std::pow(d_omega, ha.base_k - 1);
  std::vector<std::uint64_t> r_deg(ha.r_size(), 0);
  for (EdgeId e = 0; e < ha.graph.num_edges(); ++e)
    for (VertexId v : ha.graph.edge(e))
      if (v >= ha.l_size()) ++r_deg[v - ha.l_size()];
  double r_lo = 1e300, r_hi = 0, ratio_lo = 1e300, ratio_hi = 0;
  std::size_t compared = 0;
  for (std::size_t r = 0; r < ha.r_size(); ++r) {
    const double d = static_cast<double>(r_deg[r]);
    r_lo = std::min(r_lo, d);
    r_hi = std::max(r_hi, d);
    if (!z_measured.empty()) {
      if (z_measured[r] <= 0.0 && r_deg[r] == 0) continue;  // vacuous pair
      const double expected = std::max(z_measured[r], 1e-12) * d_pow;
      ratio_lo = std::min(ratio_lo, d / expected);
      ratio_hi = std::max(ratio_hi, d / expected);
      ++compared;
    }
  }
  rep.r_min = r_lo;
  rep.r_max = r_hi;
  rep.r_ratio_min = compared ? ratio_lo : 0.0;
  rep.r_ratio_max = compared ? ratio_hi : 0.0;
  rep.r_ok = compared > 0 && ratio_lo >= 1.0 / band && ratio_hi <= band;

  // codegrees split by side pairing; the L/L codegree is structurally zero
  // because every edge holds exactly one L vertex
  rep.ll_zero_ok = ha.partite.check(ha.graph);
  rep.codegree_ll = 0;
  const std::size_t n_all = ha.graph.num_vertices();
  std::vector<std::uint32_t> count(n_all, 0), stamp(n_all, UINT32_MAX);
  std::size_t lr = 0, rr = 0;
  for (VertexId u = 0; u < n_all; ++u) {
    for (EdgeId e : ha.graph.incident_edges(u)) {
      for (VertexId v : ha.graph.edge(e)) {
        if (v <= u) continue;
        if (stamp[v] != u) { stamp[v] = u; count[v] = 0; }
        const std::uint32_t c = ++count[v];
        const bool u_l = u < ha.l_size(), v_l = v < ha.l_size();
        if (u_l != v_l) lr = std::max<std::size_t>(lr, c);
        else if (!u_l) rr = std::max<std::size_t>(rr, c);
      }
    }
  }
  rep.codegree_lr = lr;
  rep.codegree_rr = rr;
  rep.max_codegree = std::max(lr, rr);
  rep.codegree_bound = band * d_pow * log_n * log_n;
  rep.codegree_ok = static_cast<double>(rep.max_codegree) <= rep.codegree_bound;
  return rep;
}

// Sidecar back-map for offline inspection: one row per star-hypergraph edge,
// "edge_id copy matched_edge spoke_1 ... spoke_k".
inline void write_star_backmap(const AugStarHypergraph& ha, std::ostream& os) {
  os << ha.graph.num_edges() << ' ' << ha.base_k << '\n';
  for (EdgeId e = 0; e < ha.graph.num_edges(); ++e) {
    const std::size_t s = ha.edge_star[e];
    os << e << ' ' << ha.edge_copy[e] << ' ' << ha.star_matched[s];
    for (int j = 0; j < ha.base_k; ++j) os << ' ' << ha.star_spokes[s * ha.base_k + j];
    os << '\n';
  }
}

// ---- applying a star matching ----

// Swaps each selected star's matched edge for its k spokes. Star edges must
// come from copy 0 of the (possibly boosted) star hypergraph and form a valid
// matching there.
inline Matching augment_matching(const Hypergraph& h, const Matching& m,
                                 const AugStarHypergraph& ha,
                                 const std::vector<EdgeId>& ma_edges) {
  if (ha.edge_star.size() != ha.graph.num_edges())
    throw std::invalid_argument("augment_matching: star back-map missing");
  auto rep = verify_matching(ha.graph, ma_edges);
  if (!rep.valid) throw std::invalid_argument("augment_matching: star matching is invalid");
  std::vector<char> replaced(h.num_edges(), 0);
  std::vector<EdgeId> additions;
  for (EdgeId e : ma_edges) {
    if (ha.edge_copy[e] != 0)
      throw std::invalid_argument("augment_matching: star edge outside copy 0");
    const AugStar star = ha.star(ha.edge_star[e]);
    replaced[star.matched_edge] = 1;
    for (EdgeId spoke : star.star_edges) additions.push_back(spoke);
  }
  std::vector<EdgeId> result;
  result.reserve(m.edges.size() + additions.size());
  for (EdgeId e : m.edges)
    if (!replaced[e]) result.push_back(e);
  result.insert(result.end(), additions.begin(), additions.end());
  return make_matching(h, std::move(result));
}

// ---- the end-to-end simple-input pipeline ----

struct PipelineOptions {
  std::size_t cap_per_l = 1u << 18;
  std::size_t outer_max_stages = 4000;
  std::size_t inner_max_stages = 400;
  std::size_t stat_vertices = 48;
  std::size_t stat_pairs = 0;
  double m3_band = 2.0;
  LasVegasOptions las_vegas{};
  bool maximalize_star_matching = true;  // greedy completion of the inner matching
};

struct PipelineReport {
  double d0 = 0, delta0 = 0, d_omega = 0;
  std::size_t stages = 0;
  std::size_t m_size = 0, ma_size = 0, m_star_size = 0;
  std::size_t leftover_m = 0, leftover_m_star = 0;  // vertices uncovered by each matching
  std::size_t waste_size = 0;
  double baseline_plain = 0;     // n * d^{-1/(k-1)}
  double baseline_improved = 0;  // n * d^{-1/(k-1)-eta}
  std::vector<std::array<std::size_t, 2>> tracked_leftover;  // per set: {by M, by M*}
  std::size_t ha_edges = 0, ha_boost_edges = 0, ha_simple_edges = 0;
  std::size_t boost_copies = 0;
  bool truncated_enumeration = false;
  SimplifyReport simplify;
  std::vector<std::string> warnings;
  std::string failed_stage;  // set when a stage threw
};

namespace detail {

inline std::size_t uncovered_in(std::span<const char> covered, const std::vector<VertexId>& set) {
  std::size_t c = 0;
  for (VertexId v : set) c += covered[v] == 0;
  return c;
}

}  // namespace detail

// Nibble, star enumeration, boost, codegree reduction, inner nibble on the
// star hypergraph, restriction to copy 0 and the final swap. Any stage error
// is rethrown with its stage tag; the output always verifies as a matching.
inline std::pair<Matching, PipelineReport> full_simple_pipeline(
    const Hypergraph& h, const PipelineParams& params, std::uint64_t seed,
    const std::vector<std::vector<VertexId>>& tracked = {}, const PipelineOptions& opts = {}) {
  if (!h.is_simple()) throw std::invalid_argument("full_simple_pipeline: input must be simple");
  PipelineReport rep;
  const std::size_t n = h.num_vertices();
  Rng root(seed);

  std::string stage = "outer_nibble";
  try {
    NibbleConfig cfg;
    cfg.gamma = params.outer_gamma();
    cfg.max_stages = opts.outer_max_stages;
    cfg.seed = root.split(1).next_u64();
    cfg.tracked_sets = tracked;
    cfg.stat_vertices = opts.stat_vertices;
    cfg.stat_pairs = opts.stat_pairs;
    NibbleResult nib = run_nibble(h, cfg);
    rep.d0 = nib.d0;
    rep.delta0 = nib.delta0;
    rep.d_omega = nib.d_omega;
    rep.stages = nib.stages;
    rep.m_size = nib.matching.size();
    rep.waste_size = 0;
    for (char w : nib.waste) rep.waste_size += (w != 0);
    rep.warnings = nib.warnings;
    const int k = *h.uniformity();
    rep.baseline_plain = n * std::pow(rep.d0, -1.0 / (k - 1));
    rep.baseline_improved = n * std::pow(rep.d0, -1.0 / (k - 1) - params.eta);

    stage = "enumerate_stars";
    AugStarHypergraph ha = enumerate_aug_stars(h, nib.matching, nib.waste, opts.cap_per_l);
    rep.ha_edges = ha.graph.num_edges();
    rep.truncated_enumeration = ha.truncated;
    if (ha.truncated)
      rep.warnings.push_back("star enumeration truncated at the per-vertex cap");

    std::vector<EdgeId> star_choice;  // copy-0 edges of the boosted hypergraph
    AugStarHypergraph hb;
    if (ha.graph.num_edges() == 0) {
      rep.warnings.push_back("no augmenting stars found; matching left unchanged");
      hb = std::move(ha);
    } else {
      stage = "boost";
      hb = boost(ha);
      rep.boost_copies = hb.copies;
      rep.ha_boost_edges = hb.graph.num_edges();

      stage = "simplify";
      const auto c_ha = std::max<std::size_t>(1, hb.graph.max_codegree());
      SimplifyResult simp = simple_subhypergraph(hb.graph, static_cast<double>(c_ha),
                                                 params.delta, root.split(2).next_u64(),
                                                 opts.las_vegas);
      rep.simplify = simp.report;
      rep.ha_simple_edges = simp.hypergraph.num_edges();

      stage = "inner_nibble";
      Matching inner;
      inner.covered.assign(hb.graph.num_vertices(), 0);
      if (simp.hypergraph.num_edges() > 0) {
        NibbleConfig icfg;
        icfg.gamma = params.gamma_prime;
        icfg.max_stages = opts.inner_max_stages;
        icfg.seed = root.split(3).next_u64();
        icfg.stat_vertices = 0;
        icfg.stat_pairs = 0;
        // R copy-1 images of the tracked sets
        std::vector<std::uint32_t> r_index(n, UINT32_MAX);
        for (std::size_t r = 0; r < hb.r_size(); ++r) r_index[hb.r_base_vertex[r]] = r;
        const double inner_d0 = static_cast<double>(simp.hypergraph.max_degree());
        for (const auto& s : tracked) {
          std::vector<VertexId> image;
          for (VertexId v : s)
            if (v < n && r_index[v] != UINT32_MAX) image.push_back(hb.r_vertex_id(r_index[v], 0));
          if (image.empty()) continue;
          if (static_cast<double>(image.size()) <
              std::sqrt(inner_d0) * std::log(std::max<std::size_t>(hb.graph.num_vertices(), 2)))
            rep.warnings.push_back("tracked set image outside-hypothesis (too small); kept anyway");
          icfg.tracked_sets.push_back(std::move(image));
        }
        NibbleResult inner_nib = run_nibble(simp.hypergraph, icfg);
        // map the matching back to boosted-hypergraph ids
        std::vector<EdgeId> mapped;
        mapped.reserve(inner_nib.matching.size());
        for (EdgeId e : inner_nib.matching.edges) mapped.push_back(simp.edge_origin[e]);
        inner = make_matching(hb.graph, std::move(mapped));
      }

      stage = "restrict_and_extend";
      for (EdgeId e : inner.edges)
        if (hb.edge_copy[e] == 0) star_choice.push_back(e);
      if (opts.maximalize_star_matching) {
        // greedy completion within copy 0, never breaking disjointness
        std::vector<char> used(hb.graph.num_vertices(), 0);
        for (EdgeId e : star_choice)
          for (VertexId v : hb.graph.edge(e)) used[v] = 1;
        for (EdgeId e = 0; e < hb.graph.num_edges(); ++e) {
          if (hb.edge_copy[e] != 0) continue;
          bool free = true;
          for (VertexId v : hb.graph.edge(e))
            if (used[v]) { free = false; break; }
          if (!free) continue;
          star_choice.push_back(e);
          for (VertexId v : hb.graph.edge(e)) used[v] = 1;
        }
      }
    }

    stage = "augment";
    Matching m_star = star_choice.empty()
                          ? nib.matching
                          : augment_matching(h, nib.matching, hb, star_choice);
    rep.ma_size = star_choice.size();
    rep.m_star_size = m_star.size();
    rep.leftover_m = n - nib.matching.covered_count();
    rep.leftover_m_star = n - m_star.covered_count();
    rep.tracked_leftover.reserve(tracked.size());
    for (const auto& s : tracked)
      rep.tracked_leftover.push_back(
          {detail::uncovered_in(nib.matching.covered, s), detail::uncovered_in(m_star.covered, s)});
    return {std::move(m_star), std::move(rep)};
  } catch (const std::exception& ex) {
    rep.failed_stage = stage;
    throw std::runtime_error("pipeline stage '" + stage + "' failed: " + ex.what());
  }
}

// ---- codegree-bounded inputs: reduce, then run the simple pipeline ----

struct CodegreeMatchResult {
  Matching matching;  // on the input hypergraph
  PipelineReport pipeline;
  SimplifyReport simplify;
  double d_star = 0, eta_star = 0, epsilon_star = 0;
  std::vector<std::string> warnings;
};

// Matching in an almost regular multi-hypergraph with codegree at most c:
// extract a simple sub-hypergraph first, then run the two-round process on it
// with the adjusted exponents.
inline CodegreeMatchResult codegree_matching_pipeline(
    const Hypergraph& h, double c, const PipelineParams& params, std::uint64_t seed,
    const std::vector<std::vector<VertexId>>& tracked = {}, const PipelineOptions& opts = {}) {
  if (!h.uniformity()) throw std::invalid_argument("codegree_matching_pipeline: input must be uniform");
  const int k = *h.uniformity();
  const double delta = params.delta;
  CodegreeMatchResult res;
  Rng root(seed);

  // a simple input needs no reduction round; the two-round process applies
  // to it directly
  if (h.max_codegree() <= 1 && !h.has_duplicate_edges()) {
    auto [m, prep] = full_simple_pipeline(h, params, root.split(2).next_u64(), tracked, opts);
    res.pipeline = std::move(prep);
    res.matching = std::move(m);
    res.eta_star = params.eta;
    res.epsilon_star = params.epsilon;
    for (const auto& w : res.pipeline.warnings) res.warnings.push_back(w);
    return res;
  }

  SimplifyResult simp =
      simple_subhypergraph(h, c, delta / 2.0, root.split(1).next_u64(), opts.las_vegas);
  res.simplify = simp.report;
  res.d_star = simp.report.d_star;
  if (simp.hypergraph.num_edges() == 0) {
    res.warnings.push_back("reduction produced an empty hypergraph at this scale");
    res.matching.covered.assign(h.num_vertices(), 0);
    return res;
  }

  // exponent bookkeeping for the reduced instance
  double eps_star = params.epsilon <= 0.5 ? 0.5 + delta / 4.0
                                          : (params.epsilon - delta / 2.0) / (1.0 - delta / 2.0);
  if (eps_star >= 1.0 - 1.0 / (k - 1.0)) {
    eps_star = 0.5 * (1.0 - 1.0 / (k - 1.0));
    res.warnings.push_back("adjusted epsilon clamped into its admissible range");
  }
  const double eta0_tilde = compute_eta0(k, eps_star);
  double eta_star = (1.0 / (k - 1.0) + params.eta) / (1.0 - delta) - 1.0 / (k - 1.0);
  if (eta_star >= eta0_tilde) {
    eta_star = 0.9 * eta0_tilde;
    res.warnings.push_back("adjusted eta clamped below its admissible bound at this scale");
  }
  res.eta_star = eta_star;
  res.epsilon_star = eps_star;

  PipelineParams inner = PipelineParams::make(k, eps_star, eta_star, delta, params.mu / 2.0);
  inner.gamma_override = params.gamma_override;
  auto [m_simp, prep] =
      full_simple_pipeline(simp.hypergraph, inner, root.split(2).next_u64(), tracked, opts);
  res.pipeline = std::move(prep);
  for (const auto& w : res.pipeline.warnings) res.warnings.push_back(w);

  std::vector<EdgeId> mapped;
  mapped.reserve(m_simp.size());
  for (EdgeId e : m_simp.edges) mapped.push_back(simp.edge_origin[e]);
  res.matching = make_matching(h, std::move(mapped));
  return res;
}

}  // namespace nibblematch
