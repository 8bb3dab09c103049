#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nibblematch/augment.hpp"
#include "nibblematch/generators.hpp"
#include "nibblematch/hypergraph.hpp"

namespace nibblematch {

// Counting lower bound on the chromatic index of a triple system: a color
// class holds at most floor(n/3) edges.
inline std::size_t g_lower_bound(std::size_t n) {
  if (n % 6 == 1) return (n + 1) / 2;
  if (n % 6 == 3) return (n - 1) / 2;
  throw std::invalid_argument("g_lower_bound: order must be 1 or 3 mod 6");
}

// Proper partial/total edge coloring. Color 0 means uncolored; base colors
// live in [1, base_colors], fresh colors above.
struct EdgeColoring {
  std::vector<int> color;
  int base_colors = 0;

  bool total() const {
    for (int c : color)
      if (c == 0) return false;
    return true;
  }
  std::size_t palette_size() const {
    std::set<int> used;
    for (int c : color)
      if (c != 0) used.insert(c);
    return used.size();
  }
};

// Independent audit: no two intersecting edges share a color (and totality on
// request). Never trusts the construction path.
inline bool audit_proper_coloring(const Hypergraph& h, const EdgeColoring& col,
                                  bool require_total = false) {
  if (col.color.size() != h.num_edges()) return false;
  if (require_total && !col.total()) return false;
  std::vector<std::vector<int>> at_vertex(h.num_vertices());
  for (EdgeId e = 0; e < h.num_edges(); ++e) {
    if (col.color[e] == 0) continue;
    for (VertexId v : h.edge(e)) at_vertex[v].push_back(col.color[e]);
  }
  for (auto& cols : at_vertex) {
    std::sort(cols.begin(), cols.end());
    if (std::adjacent_find(cols.begin(), cols.end()) != cols.end()) return false;
  }
  return true;
}

// (k+1)-uniform incidence hypergraph: one vertex per edge of the base, d
// disjoint copies of its vertex set, and one edge {e} u {v^i : v in e} per
// (edge, color slot). A matching here is exactly a proper partial coloring.
struct IncidenceHypergraph {
  Hypergraph graph;
  std::size_t base_edges = 0;     // edge-vertex ids are [0, base_edges)
  std::size_t base_vertices = 0;  // per color copy
  int colors = 0;

  // incidence edge id -> (base edge, color in [1, colors])
  std::pair<EdgeId, int> decode(EdgeId e0) const {
    return {static_cast<EdgeId>(e0 / colors), 1 + static_cast<int>(e0 % colors)};
  }
  VertexId copy_vertex(VertexId v, int color) const {
    return static_cast<VertexId>(base_edges + static_cast<std::size_t>(color - 1) * base_vertices + v);
  }
};

inline IncidenceHypergraph build_incidence_hypergraph(const Hypergraph& hp, int d) {
  if (!hp.uniformity()) throw std::invalid_argument("build_incidence_hypergraph: input must be uniform");
  if (hp.max_degree() > static_cast<std::size_t>(d))
    throw std::invalid_argument("build_incidence_hypergraph: max degree exceeds d");
  IncidenceHypergraph inc;
  inc.base_edges = hp.num_edges();
  inc.base_vertices = hp.num_vertices();
  inc.colors = d;
  std::vector<std::vector<VertexId>> edges;
  edges.reserve(hp.num_edges() * static_cast<std::size_t>(d));
  for (EdgeId e = 0; e < hp.num_edges(); ++e) {
    auto sp = hp.edge(e);
    for (int i = 1; i <= d; ++i) {
      std::vector<VertexId> ne;
      ne.reserve(sp.size() + 1);
      ne.push_back(static_cast<VertexId>(e));
      for (VertexId v : sp) ne.push_back(inc.copy_vertex(v, i));
      edges.push_back(std::move(ne));
    }
  }
  inc.graph = Hypergraph(inc.base_edges + static_cast<std::size_t>(d) * inc.base_vertices, edges);
  return inc;
}

// Decodes a matching of the incidence hypergraph into a proper partial
// coloring of the base: matched (e, i) colors e with i.
inline EdgeColoring matching_to_partial_coloring(const IncidenceHypergraph& inc,
                                                 const std::vector<EdgeId>& m0) {
  EdgeColoring col;
  col.color.assign(inc.base_edges, 0);
  col.base_colors = inc.colors;
  for (EdgeId e0 : m0) {
    if (e0 >= inc.graph.num_edges())
      throw std::invalid_argument("matching_to_partial_coloring: dangling incidence edge");
    auto [e, i] = inc.decode(e0);
    if (col.color[e] != 0)
      throw std::invalid_argument("matching_to_partial_coloring: edge colored twice");
    col.color[e] = i;
  }
  return col;
}

struct GreedyStats {
  std::size_t fresh_used = 0;
  std::size_t uncolored_max_degree = 0;  // max degree of the uncolored sub-hypergraph
};

// First-fit completion with fresh colors only (a palette disjoint from the
// base). Deterministic given the edge order; uses at most
// k*(uncolored max degree - 1) + 1 new colors.
inline GreedyStats greedy_complete(const Hypergraph& hp, EdgeColoring& col) {
  GreedyStats st;
  std::vector<std::uint32_t> uncolored_deg(hp.num_vertices(), 0);
  for (EdgeId e = 0; e < hp.num_edges(); ++e)
    if (col.color[e] == 0)
      for (VertexId v : hp.edge(e)) ++uncolored_deg[v];
  for (auto d : uncolored_deg)
    st.uncolored_max_degree = std::max<std::size_t>(st.uncolored_max_degree, d);

  const int fresh_base = col.base_colors;
  int fresh_count = 0;
  std::vector<char> blocked;
  for (EdgeId e = 0; e < hp.num_edges(); ++e) {
    if (col.color[e] != 0) continue;
    blocked.assign(fresh_count + 2, 0);
    for (VertexId v : hp.edge(e))
      for (EdgeId f : hp.incident_edges(v)) {
        const int c = col.color[f];
        if (c > fresh_base && c - fresh_base < static_cast<int>(blocked.size()))
          blocked[c - fresh_base] = 1;
      }
    int pick = 1;
    while (blocked[pick]) ++pick;
    fresh_count = std::max(fresh_count, pick);
    col.color[e] = fresh_base + pick;
  }
  st.fresh_used = fresh_count;
  return st;
}

struct ColoringReport {
  std::size_t n = 0, m = 0;
  int d = 0;
  std::size_t palette = 0;            // distinct colors on the working host
  std::size_t palette_restricted = 0; // distinct colors on the input's edges
  std::size_t base_used = 0, fresh_used = 0;
  std::size_t uncolored_max_degree = 0;  // audited before completion
  std::size_t fresh_bound = 0;           // k*(that - 1) + 1
  std::size_t g_n = 0;                   // counting bound when the order admits one
  bool proper = false, total = false;
  bool embedded = false;
  std::size_t host_vertices = 0;
  PipelineReport pipeline;
  SimplifyReport simplify;
  std::vector<std::string> warnings;
};

struct ColoringOptions {
  PipelineOptions pipeline{};
  std::size_t tracked_sample = 24;  // color-slot sets handed to the inner process
  std::size_t embed_min_order = kSteinerMinOrder;
};

// End-to-end coloring: raise the input to a near-regular host if needed,
// build the incidence hypergraph, extract a matching through the
// codegree-reduction + nibble + star pipeline, maximalize it, decode to a
// partial coloring and finish first-fit with fresh colors. Properness is
// audited independently of the construction.
inline std::pair<EdgeColoring, ColoringReport> chromatic_index_coloring(
    const Hypergraph& h, int d, int c, const PipelineParams& params, std::uint64_t seed,
    const ColoringOptions& opts = {}) {
  if (!h.uniformity()) throw std::invalid_argument("chromatic_index_coloring: input must be uniform");
  const int k = *h.uniformity();
  if (k < 3) throw std::invalid_argument("chromatic_index_coloring: k must be at least 3");
  ColoringReport rep;
  rep.n = h.num_vertices();
  rep.m = h.num_edges();
  rep.d = d;
  if (rep.n % 6 == 1 || rep.n % 6 == 3) rep.g_n = g_lower_bound(rep.n);
  Rng root(seed);

  // embed only when the degrees do not already sit in the band the host
  // construction itself would deliver
  const std::size_t band = std::max<std::size_t>(opts.embed_min_order,
                                                 static_cast<std::size_t>((k + 1) * (k - 1)));
  const Hypergraph* host = &h;
  Hypergraph embedded_host;
  if (h.min_degree() + band < static_cast<std::size_t>(d)) {
    auto emb = embed_into_near_regular(h, d, c, opts.embed_min_order, root.split(1).next_u64());
    embedded_host = std::move(emb.host);
    host = &embedded_host;
    rep.embedded = true;
    rep.warnings.push_back("input embedded into a near-regular host (K=" +
                           std::to_string(emb.achieved_k) + ")");
  }
  rep.host_vertices = host->num_vertices();

  IncidenceHypergraph inc = build_incidence_hypergraph(*host, d);
  const std::size_t c0 = std::max<std::size_t>(1, host->max_codegree());

  // inner process runs at uniformity k+1 with the midpoint improvement target
  const double eta0_inc = compute_eta0(k + 1, 0.25);
  double eta = params.eta;
  if (eta <= 0.0 || eta >= eta0_inc) {
    eta = eta0_inc / 2.0;
    rep.warnings.push_back("eta clamped into the admissible range of the incidence process");
  }
  const double eta_prime = (eta0_inc + eta) / 2.0;
  PipelineParams inner = PipelineParams::make(k + 1, 0.25, eta_prime, params.delta, params.mu / 2.0);
  inner.gamma_override = params.gamma_override;

  // a sample of the per-vertex color-slot sets is tracked through the process
  std::vector<std::vector<VertexId>> tracked;
  Rng pick = root.split(2);
  const std::size_t sample = std::min<std::size_t>(opts.tracked_sample, host->num_vertices());
  for (std::size_t i = 0; i < sample; ++i) {
    const VertexId v = static_cast<VertexId>(pick.below(host->num_vertices()));
    std::vector<VertexId> slots;
    slots.reserve(d);
    for (int color = 1; color <= d; ++color) slots.push_back(inc.copy_vertex(v, color));
    tracked.push_back(std::move(slots));
  }

  CodegreeMatchResult match = codegree_matching_pipeline(inc.graph, static_cast<double>(c0),
                                                         inner, root.split(3).next_u64(),
                                                         tracked, opts.pipeline);
  rep.pipeline = match.pipeline;
  rep.simplify = match.simplify;
  for (const auto& w : match.warnings) rep.warnings.push_back(w);

  Matching m0 = std::move(match.matching);
  extend_matching_maximal(inc.graph, m0);

  EdgeColoring col = matching_to_partial_coloring(inc, m0.edges);
  GreedyStats greedy = greedy_complete(*host, col);
  rep.uncolored_max_degree = greedy.uncolored_max_degree;
  rep.fresh_used = greedy.fresh_used;
  rep.fresh_bound = greedy.uncolored_max_degree == 0
                        ? 0
                        : static_cast<std::size_t>(k) * (greedy.uncolored_max_degree - 1) + 1;

  rep.proper = audit_proper_coloring(*host, col, true);
  rep.total = col.total();
  rep.palette = col.palette_size();
  std::set<int> base_used;
  for (EdgeId e = 0; e < inc.base_edges; ++e)
    if (col.color[e] != 0 && col.color[e] <= col.base_colors) base_used.insert(col.color[e]);
  rep.base_used = base_used.size();

  // restriction to the input: copy 0 of the host keeps the original edge ids
  EdgeColoring restricted;
  restricted.base_colors = col.base_colors;
  restricted.color.assign(col.color.begin(), col.color.begin() + h.num_edges());
  rep.palette_restricted = restricted.palette_size();
  if (!audit_proper_coloring(h, restricted, true)) rep.proper = false;

  return {std::move(restricted), std::move(rep)};
}

// ---- coloring CSV: edge_id,color ----

inline void write_coloring_csv(const EdgeColoring& col, std::ostream& os) {
  os << "# nibble-match v1\n";
  os << "edge_id,color\n";
  for (std::size_t e = 0; e < col.color.size(); ++e) os << e << ',' << col.color[e] << '\n';
}

inline EdgeColoring read_coloring_csv(std::istream& is, int base_colors) {
  EdgeColoring col;
  col.base_colors = base_colors;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("edge_id", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("read_coloring_csv: bad row");
    const std::size_t e = std::stoul(line.substr(0, comma));
    const int c = std::stoi(line.substr(comma + 1));
    if (col.color.size() <= e) col.color.resize(e + 1, 0);
    col.color[e] = c;
  }
  return col;
}

}  // namespace nibblematch
