#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace nibblematch {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

// Vertex/edge incidence structure over dense integer vertex ids. Multi-edges
// are stored as repeated entries; vertex lists are kept sorted so that
// intersection tests run in O(k). Immutable after construction, so instances
// can be shared freely across concurrent trials.
class Hypergraph {
 public:
  Hypergraph() = default;

  Hypergraph(std::size_t num_vertices, const std::vector<std::vector<VertexId>>& edges)
      : n_(num_vertices) {
    edge_offsets_.reserve(edges.size() + 1);
    edge_offsets_.push_back(0);
    std::size_t total = 0;
    for (const auto& e : edges) total += e.size();
    edge_vertices_.reserve(total);
    for (const auto& e : edges) {
      if (e.empty()) throw std::invalid_argument("hypergraph: empty edge");
      std::vector<VertexId> sorted(e.begin(), e.end());
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] >= n_) throw std::invalid_argument("hypergraph: vertex id out of range");
        if (i > 0 && sorted[i] == sorted[i - 1])
          throw std::invalid_argument("hypergraph: repeated vertex inside an edge");
      }
      edge_vertices_.insert(edge_vertices_.end(), sorted.begin(), sorted.end());
      edge_offsets_.push_back(static_cast<std::uint32_t>(edge_vertices_.size()));
    }
    infer_uniformity();
    build_incidence();
  }

  // Flat k-uniform constructor: `flat` holds m*k vertex ids, edge after edge.
  // Avoids per-edge allocations for very large edge sets.
  Hypergraph(std::size_t num_vertices, std::vector<VertexId>&& flat, int k) : n_(num_vertices) {
    if (k < 1 || flat.size() % k != 0)
      throw std::invalid_argument("hypergraph: flat buffer size must be a multiple of k");
    edge_vertices_ = std::move(flat);
    const std::size_t m = edge_vertices_.size() / k;
    edge_offsets_.resize(m + 1);
    for (std::size_t e = 0; e <= m; ++e) edge_offsets_[e] = static_cast<std::uint32_t>(e * k);
    for (std::size_t e = 0; e < m; ++e) {
      auto* lo = edge_vertices_.data() + e * k;
      std::sort(lo, lo + k);
      for (int i = 0; i < k; ++i) {
        if (lo[i] >= n_) throw std::invalid_argument("hypergraph: vertex id out of range");
        if (i > 0 && lo[i] == lo[i - 1])
          throw std::invalid_argument("hypergraph: repeated vertex inside an edge");
      }
    }
    uniformity_ = m ? std::optional<int>(k) : std::nullopt;
    build_incidence();
  }

  std::size_t num_vertices() const { return n_; }
  std::size_t num_edges() const { return edge_offsets_.empty() ? 0 : edge_offsets_.size() - 1; }
  std::optional<int> uniformity() const { return uniformity_; }

  std::span<const VertexId> edge(EdgeId e) const {
    return {edge_vertices_.data() + edge_offsets_[e],
            edge_vertices_.data() + edge_offsets_[e + 1]};
  }

  std::span<const EdgeId> incident_edges(VertexId v) const {
    return {inc_edges_.data() + inc_offsets_[v], inc_edges_.data() + inc_offsets_[v + 1]};
  }

  std::size_t degree(VertexId v) const {
    if (v >= n_) throw std::invalid_argument("degree: vertex id out of range");
    return inc_offsets_[v + 1] - inc_offsets_[v];
  }

  std::size_t min_degree() const {
    std::size_t d = num_edges() ? SIZE_MAX : 0;
    for (VertexId v = 0; v < n_; ++v) d = std::min(d, degree(v));
    return n_ ? d : 0;
  }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (VertexId v = 0; v < n_; ++v) d = std::max(d, degree(v));
    return d;
  }

  // Number of edges containing both u and v.
  std::size_t codegree(VertexId u, VertexId v) const {
    if (u == v) throw std::invalid_argument("codegree: vertices must be distinct");
    if (u >= n_ || v >= n_) throw std::invalid_argument("codegree: vertex id out of range");
    if (degree(u) > degree(v)) std::swap(u, v);
    std::size_t c = 0;
    for (EdgeId e : incident_edges(u)) c += edge_contains(e, v);
    return c;
  }

  // Maximum codegree over all pairs, computed pairwise within edges rather
  // than over all n^2 pairs.
  std::size_t max_codegree() const {
    if (num_edges() == 0 || n_ == 0) return 0;
    std::vector<std::uint32_t> count(n_, 0);
    std::vector<std::uint32_t> stamp(n_, UINT32_MAX);
    std::size_t best = 0;
    for (VertexId u = 0; u < n_; ++u) {
      for (EdgeId e : incident_edges(u)) {
        for (VertexId v : edge(e)) {
          if (v <= u) continue;
          if (stamp[v] != u) {
            stamp[v] = u;
            count[v] = 0;
          }
          best = std::max<std::size_t>(best, ++count[v]);
        }
      }
    }
    return best;
  }

  bool has_duplicate_edges() const {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(num_edges() * 2);
    std::vector<std::uint64_t> collisions;
    for (EdgeId e = 0; e < num_edges(); ++e) {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (VertexId v : edge(e)) {
        h ^= v + 1;
        h *= 0x100000001b3ULL;
      }
      if (!seen.insert(h).second) {
        // hash hit: confirm by direct comparison against all earlier edges
        for (EdgeId f = 0; f < e; ++f) {
          auto a = edge(e), b = edge(f);
          if (a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin())) return true;
        }
      }
    }
    return false;
  }

  // Codegree at most 1 and no duplicate edges.
  bool is_simple() const { return max_codegree() <= 1 && !has_duplicate_edges(); }

  bool edge_contains(EdgeId e, VertexId v) const {
    auto sp = edge(e);
    return std::binary_search(sp.begin(), sp.end(), v);
  }

  bool edges_intersect(EdgeId a, EdgeId b) const {
    auto ea = edge(a), eb = edge(b);
    std::size_t i = 0, j = 0;
    while (i < ea.size() && j < eb.size()) {
      if (ea[i] == eb[j]) return true;
      if (ea[i] < eb[j]) ++i; else ++j;
    }
    return false;
  }

  std::size_t intersection_size(EdgeId a, EdgeId b) const {
    auto ea = edge(a), eb = edge(b);
    std::size_t i = 0, j = 0, c = 0;
    while (i < ea.size() && j < eb.size()) {
      if (ea[i] == eb[j]) { ++c; ++i; ++j; }
      else if (ea[i] < eb[j]) ++i;
      else ++j;
    }
    return c;
  }

  // Sub-hypergraph induced by the alive set: keeps exactly the edges fully
  // inside it, vertex ids preserved.
  Hypergraph induced(std::span<const char> alive) const {
    if (alive.size() != n_) throw std::invalid_argument("induced: mask size mismatch");
    std::vector<std::vector<VertexId>> kept;
    for (EdgeId e = 0; e < num_edges(); ++e) {
      bool all = true;
      for (VertexId v : edge(e)) {
        if (!alive[v]) { all = false; break; }
      }
      if (all) kept.emplace_back(edge(e).begin(), edge(e).end());
    }
    return Hypergraph(n_, kept);
  }

  Hypergraph subhypergraph(std::span<const EdgeId> edge_ids) const {
    std::vector<std::vector<VertexId>> kept;
    kept.reserve(edge_ids.size());
    for (EdgeId e : edge_ids) {
      if (e >= num_edges()) throw std::invalid_argument("subhypergraph: dangling edge id");
      kept.emplace_back(edge(e).begin(), edge(e).end());
    }
    return Hypergraph(n_, kept);
  }

  // Rebuilds the incidence index from scratch and compares with the stored
  // one; used by consistency tests.
  bool incidence_consistent() const {
    std::vector<std::uint32_t> deg(n_, 0);
    for (VertexId v : edge_vertices_) ++deg[v];
    for (VertexId v = 0; v < n_; ++v)
      if (deg[v] != degree(v)) return false;
    for (VertexId v = 0; v < n_; ++v)
      for (EdgeId e : incident_edges(v))
        if (!edge_contains(e, v)) return false;
    return true;
  }

 private:
  void infer_uniformity() {
    uniformity_.reset();
    if (num_edges() == 0) return;
    std::size_t k = edge(0).size();
    for (EdgeId e = 1; e < num_edges(); ++e)
      if (edge(e).size() != k) return;
    uniformity_ = static_cast<int>(k);
  }

  void build_incidence() {
    inc_offsets_.assign(n_ + 1, 0);
    for (VertexId v : edge_vertices_) ++inc_offsets_[v + 1];
    for (std::size_t v = 0; v < n_; ++v) inc_offsets_[v + 1] += inc_offsets_[v];
    inc_edges_.resize(edge_vertices_.size());
    std::vector<std::uint32_t> cursor(inc_offsets_.begin(), inc_offsets_.end() - 1);
    for (EdgeId e = 0; e < num_edges(); ++e)
      for (VertexId v : edge(e)) inc_edges_[cursor[v]++] = e;
  }

  std::size_t n_ = 0;
  std::optional<int> uniformity_;
  std::vector<std::uint32_t> edge_offsets_;
  std::vector<VertexId> edge_vertices_;
  std::vector<std::uint32_t> inc_offsets_;
  std::vector<EdgeId> inc_edges_;
};

// A set of pairwise-disjoint edge ids plus the covered-vertex index.
struct Matching {
  std::vector<EdgeId> edges;
  std::vector<char> covered;  // size num_vertices

  std::size_t size() const { return edges.size(); }
  std::size_t covered_count() const {
    std::size_t c = 0;
    for (char f : covered) c += (f != 0);
    return c;
  }
};

inline Matching make_matching(const Hypergraph& h, std::vector<EdgeId> edge_ids) {
  Matching m;
  m.edges = std::move(edge_ids);
  m.covered.assign(h.num_vertices(), 0);
  for (EdgeId e : m.edges) {
    if (e >= h.num_edges()) throw std::invalid_argument("matching: dangling edge id");
    for (VertexId v : h.edge(e)) m.covered[v] = 1;
  }
  return m;
}

struct MatchingReport {
  bool valid = false;
  std::size_t size = 0;
  std::size_t covered_count = 0;
};

// Valid iff the referenced edges are pairwise disjoint. Throws on dangling ids.
inline MatchingReport verify_matching(const Hypergraph& h, const std::vector<EdgeId>& edge_ids) {
  MatchingReport r;
  r.size = edge_ids.size();
  std::vector<char> covered(h.num_vertices(), 0);
  r.valid = true;
  for (EdgeId e : edge_ids) {
    if (e >= h.num_edges()) throw std::invalid_argument("verify_matching: dangling edge id");
    for (VertexId v : h.edge(e)) {
      if (covered[v]) r.valid = false;
      covered[v] = 1;
    }
  }
  for (char f : covered) r.covered_count += (f != 0);
  return r;
}

inline MatchingReport verify_matching(const Hypergraph& h, const Matching& m) {
  return verify_matching(h, m.edges);
}

// Partition of the vertex set into one L side and replicated R sides.
// part_of[v] == 0 means L; part_of[v] == i >= 1 means copy i of R.
struct PartiteTag {
  std::vector<std::uint32_t> part_of;
  std::size_t a = 1;  // vertices of L per edge
  std::size_t b = 0;  // R-side vertices per edge

  bool check(const Hypergraph& h) const {
    if (part_of.size() != h.num_vertices()) return false;
    for (EdgeId e = 0; e < h.num_edges(); ++e) {
      std::size_t in_l = 0, in_r = 0;
      for (VertexId v : h.edge(e)) (part_of[v] == 0 ? in_l : in_r)++;
      if (in_l != a || in_r != b) return false;
    }
    return true;
  }
};

// ---- plain-text format: first line "n m k", then m lines of k ids ----

inline void write_text(const Hypergraph& h, std::ostream& os) {
  int k = h.uniformity().value_or(0);
  if (h.num_edges() > 0 && k == 0)
    throw std::invalid_argument("write_text: format requires a uniform hypergraph");
  os << h.num_vertices() << ' ' << h.num_edges() << ' ' << k << '\n';
  for (EdgeId e = 0; e < h.num_edges(); ++e) {
    auto sp = h.edge(e);
    for (std::size_t i = 0; i < sp.size(); ++i) os << (i ? " " : "") << sp[i];
    os << '\n';
  }
}

inline Hypergraph read_text(std::istream& is) {
  std::size_t n = 0, m = 0;
  int k = 0;
  if (!(is >> n >> m >> k)) throw std::runtime_error("read_text: bad header");
  std::vector<std::vector<VertexId>> edges(m);
  for (std::size_t e = 0; e < m; ++e) {
    edges[e].resize(k);
    for (int i = 0; i < k; ++i) {
      if (!(is >> edges[e][i])) throw std::runtime_error("read_text: truncated edge list");
    }
  }
  return Hypergraph(n, edges);
}

}  // namespace nibblematch
