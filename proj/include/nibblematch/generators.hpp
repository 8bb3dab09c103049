#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "nibblematch/hypergraph.hpp"
#include "nibblematch/rng.hpp"

namespace nibblematch {

// Las Vegas construction ran out of retries or was handed infeasible
// parameters; never silent.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Smallest admissible order of a triple system; also the default threshold
// below which the block constructions refuse to run.
inline constexpr std::size_t kSteinerMinOrder = 7;

namespace detail {

// Idempotent commutative quasigroup on Z_m (m odd): x*y = (x+y)(m+1)/2 mod m.
inline std::size_t bose_mul(std::size_t x, std::size_t y, std::size_t m) {
  return ((x + y) % m) * ((m + 1) / 2) % m;
}

// Half-idempotent commutative quasigroup on {0,..,2t-1}: relabel the addition
// table of Z_{2t} so the first t diagonal entries are fixed points.
inline std::size_t skolem_mul(std::size_t x, std::size_t y, std::size_t t) {
  std::size_t s = (x + y) % (2 * t);
  return (s % 2 == 0) ? s / 2 : t + (s - 1) / 2;
}

inline std::vector<std::vector<VertexId>> bose_triples(std::size_t n) {
  const std::size_t m = n / 3;  // n = 6t+3, m = 2t+1 odd
  auto id = [m](std::size_t x, std::size_t j) { return static_cast<VertexId>(x + j * m); };
  std::vector<std::vector<VertexId>> triples;
  triples.reserve(n * (n - 1) / 6);
  for (std::size_t x = 0; x < m; ++x)
    triples.push_back({id(x, 0), id(x, 1), id(x, 2)});
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t y = x + 1; y < m; ++y)
      for (std::size_t j = 0; j < 3; ++j)
        triples.push_back({id(x, j), id(y, j), id(bose_mul(x, y, m), (j + 1) % 3)});
  return triples;
}

inline std::vector<std::vector<VertexId>> skolem_triples(std::size_t n) {
  const std::size_t t = n / 6;  // n = 6t+1
  const std::size_t q = 2 * t;
  const VertexId inf = static_cast<VertexId>(n - 1);
  auto id = [q](std::size_t x, std::size_t j) { return static_cast<VertexId>(x + j * q); };
  std::vector<std::vector<VertexId>> triples;
  triples.reserve(n * (n - 1) / 6);
  for (std::size_t x = 0; x < t; ++x)
    triples.push_back({id(x, 0), id(x, 1), id(x, 2)});
  for (std::size_t x = 0; x < t; ++x)
    for (std::size_t j = 0; j < 3; ++j)
      triples.push_back({inf, id(t + x, j), id(x, (j + 1) % 3)});
  for (std::size_t x = 0; x < q; ++x)
    for (std::size_t y = x + 1; y < q; ++y)
      for (std::size_t j = 0; j < 3; ++j)
        triples.push_back({id(x, j), id(y, j), id(skolem_mul(x, y, t), (j + 1) % 3)});
  return triples;
}

inline Hypergraph canonical(std::size_t n, std::vector<std::vector<VertexId>> edges) {
  for (auto& e : edges) std::sort(e.begin(), e.end());
  std::sort(edges.begin(), edges.end());
  return Hypergraph(n, edges);
}

}  // namespace detail

// Triple system in which every vertex pair is covered exactly once. Explicit
// and deterministic (n = 3 mod 6 and n = 1 mod 6 take different routes); the
// seed only permutes vertex labels.
inline Hypergraph steiner_triple_system(std::size_t n, std::uint64_t seed = 0) {
  if (n < kSteinerMinOrder || (n % 6 != 1 && n % 6 != 3))
    throw GenerationError("steiner_triple_system: order must be 1 or 3 mod 6 and at least 7, got " +
                          std::to_string(n));
  auto triples = (n % 6 == 3) ? detail::bose_triples(n) : detail::skolem_triples(n);
  std::vector<VertexId> relabel(n);
  std::iota(relabel.begin(), relabel.end(), 0);
  if (seed != 0) {
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i)
      std::swap(relabel[i - 1], relabel[rng.below(i)]);
  }
  for (auto& e : triples)
    for (auto& v : e) v = relabel[v];
  return detail::canonical(n, std::move(triples));
}

// Simple k-uniform hypergraph with every degree in [d - tolerance, d].
// Random greedy insertion rejecting codegree violations, then a focused pass
// over deficient vertices; retried from fresh substreams.
inline Hypergraph random_regular_simple(int k, int d, std::size_t n, int tolerance,
                                        std::uint64_t seed, int retry_budget = 40) {
  if (k < 2) throw GenerationError("random_regular_simple: k must be at least 2");
  if (d < 0 || tolerance < 0) throw GenerationError("random_regular_simple: bad parameters");
  if (d == 0) return Hypergraph(n, {});
  if (static_cast<std::size_t>(k) * static_cast<std::size_t>(d) > n - 1)
    throw GenerationError("random_regular_simple: infeasible, k*d exceeds n-1");

  Rng root(seed);
  auto pair_key = [n](VertexId a, VertexId b) {
    if (a > b) std::swap(a, b);
    return static_cast<std::uint64_t>(a) * n + b;
  };

  for (int attempt = 0; attempt < retry_budget; ++attempt) {
    Rng rng = root.split(attempt);
    std::vector<int> deg(n, 0);
    std::vector<VertexId> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    std::unordered_set<std::uint64_t> covered;
    covered.reserve(n * static_cast<std::size_t>(d));
    std::vector<std::vector<VertexId>> edges;
    edges.reserve(n * static_cast<std::size_t>(d) / k + 1);

    auto remove_full = [&](VertexId v) {
      std::size_t p = pos[v];
      VertexId last = pool.back();
      pool[p] = last;
      pos[last] = p;
      pool.pop_back();
    };
    auto try_add = [&](std::vector<VertexId>& verts) {
      std::sort(verts.begin(), verts.end());
      for (std::size_t i = 0; i + 1 < verts.size(); ++i)
        if (verts[i] == verts[i + 1]) return false;
      for (std::size_t i = 0; i < verts.size(); ++i)
        for (std::size_t j = i + 1; j < verts.size(); ++j)
          if (covered.count(pair_key(verts[i], verts[j]))) return false;
      for (std::size_t i = 0; i < verts.size(); ++i)
        for (std::size_t j = i + 1; j < verts.size(); ++j)
          covered.insert(pair_key(verts[i], verts[j]));
      edges.push_back(verts);
      for (VertexId v : verts)
        if (++deg[v] >= d) remove_full(v);
      return true;
    };

    const std::size_t target_edges = n * static_cast<std::size_t>(d) / k;
    std::size_t stall = 0;
    const std::size_t stall_limit = 4000 + 40 * n;
    std::vector<VertexId> verts(k);
    while (pool.size() >= static_cast<std::size_t>(k) && edges.size() < target_edges + n &&
           stall < stall_limit) {
      // tournament pick keeps the degree profile tight, so the endgame never
      // concentrates deficiency on a few saturated neighborhoods
      VertexId lead = pool[rng.below(pool.size())];
      for (int p = 0; p < 7; ++p) {
        VertexId cand = pool[rng.below(pool.size())];
        if (deg[cand] < deg[lead]) lead = cand;
      }
      verts[0] = lead;
      for (int i = 1; i < k; ++i) verts[i] = pool[rng.below(pool.size())];
      if (try_add(verts)) stall = 0; else ++stall;
    }
    // focused pass: complete the most deficient vertices first
    for (int round = 0; round < 6 && pool.size() >= static_cast<std::size_t>(k); ++round) {
      std::vector<VertexId> deficient(pool.begin(), pool.end());
      std::sort(deficient.begin(), deficient.end(),
                [&](VertexId a, VertexId b) { return deg[a] < deg[b] || (deg[a] == deg[b] && a < b); });
      for (VertexId v : deficient) {
        while (deg[v] < d - tolerance && pool.size() >= static_cast<std::size_t>(k)) {
          bool ok = false;
          for (int tries = 0; tries < 400 && !ok; ++tries) {
            verts[0] = v;
            for (int i = 1; i < k; ++i) verts[i] = pool[rng.below(pool.size())];
            ok = try_add(verts);
          }
          if (!ok) break;
        }
        if (pool.size() < static_cast<std::size_t>(k)) break;
      }
    }

    int min_deg = d;
    for (std::size_t v = 0; v < n; ++v) min_deg = std::min(min_deg, deg[v]);
    if (min_deg >= d - tolerance) {
      std::sort(edges.begin(), edges.end());
      return Hypergraph(n, edges);
    }
  }
  throw GenerationError("random_regular_simple: degree band not reached within " +
                        std::to_string(retry_budget) + " retries");
}

// Near-regular triple block on m vertices: exact triple system when the order
// is admissible, otherwise the admissible system on m+t vertices (t < 6) with
// the last t vertices removed. Degrees stay within (m-1)/2 +- 3.
inline Hypergraph near_regular_steiner_block(std::size_t m, std::size_t min_order = kSteinerMinOrder) {
  if (m < min_order)
    throw GenerationError("near_regular_steiner_block: order below threshold " +
                          std::to_string(min_order));
  std::size_t t = 0;
  while ((m + t) % 6 != 1 && (m + t) % 6 != 3) ++t;
  Hypergraph full = steiner_triple_system(m + t, 0);
  if (t == 0) return full;
  std::vector<std::vector<VertexId>> kept;
  for (EdgeId e = 0; e < full.num_edges(); ++e) {
    auto sp = full.edge(e);
    if (sp.back() < m) kept.emplace_back(sp.begin(), sp.end());
  }
  return Hypergraph(m, kept);
}

struct EmbedResult {
  Hypergraph host;            // H with every degree raised into [d - K, d]
  std::size_t copies = 0;     // disjoint copies of the input inside the host
  std::size_t base_vertices = 0;
  int achieved_k = 0;         // K: largest degree deficiency left in the host
};

namespace detail {

// Simple k-uniform filler on `span` vertices with degrees in
// [d - (k+1)(k-1), d], realized as a disjoint union of near-regular triple
// blocks for k = 3 and as one random regular simple layer otherwise.
inline std::vector<std::vector<VertexId>> filler_edges(int k, int d, std::size_t span,
                                                       std::size_t min_order, std::uint64_t seed) {
  std::vector<std::vector<VertexId>> out;
  if (k == 3) {
    const std::size_t big = static_cast<std::size_t>(k - 1) * (d - k);
    if (big < min_order + 1)
      throw GenerationError("embed filler: deficiency too small for triple blocks");
    const std::size_t blocks = (span + big - 1) / big;
    if (blocks * (big - 1) > span)
      throw GenerationError("embed filler: block sizes cannot tile the copy span");
    const std::size_t n_big = span - blocks * (big - 1);  // blocks of size `big`
    std::size_t base = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t sz = (b < n_big) ? big : big - 1;
      Hypergraph block = near_regular_steiner_block(sz, min_order);
      for (EdgeId e = 0; e < block.num_edges(); ++e) {
        auto sp = block.edge(e);
        std::vector<VertexId> shifted(sp.begin(), sp.end());
        for (auto& v : shifted) v += static_cast<VertexId>(base);
        out.push_back(std::move(shifted));
      }
      base += sz;
    }
  } else {
    const int band = (k + 1) * (k - 1);
    Hypergraph layer = random_regular_simple(k, d, span, band, seed);
    for (EdgeId e = 0; e < layer.num_edges(); ++e)
      out.emplace_back(layer.edge(e).begin(), layer.edge(e).end());
  }
  return out;
}

}  // namespace detail

// Host construction: (k-1)^2 d^2 disjoint copies of the input, with each
// deficient clone class {v^0,...,v^{T-1}} topped up by a simple filler so
// every host degree lands in [d - K, d]. Copy 0 keeps the original vertex and
// edge ids. Codegree never exceeds the input's; multi-edge-free inputs give
// multi-edge-free hosts.
inline EmbedResult embed_into_near_regular(const Hypergraph& h, int d, int c,
                                           std::size_t min_order = kSteinerMinOrder,
                                           std::uint64_t seed = 0) {
  if (!h.uniformity()) throw GenerationError("embed_into_near_regular: input must be uniform");
  const int k = *h.uniformity();
  if (k < 3) throw GenerationError("embed_into_near_regular: k must be at least 3");
  if (h.max_degree() > static_cast<std::size_t>(d))
    throw GenerationError("embed_into_near_regular: input max degree exceeds d");
  if (h.max_codegree() > static_cast<std::size_t>(c))
    throw GenerationError("embed_into_near_regular: input codegree exceeds c");

  const std::size_t n = h.num_vertices();
  const std::size_t t = static_cast<std::size_t>(k - 1) * (k - 1) * d * d;
  std::vector<std::vector<VertexId>> edges;
  edges.reserve(t * h.num_edges());
  for (std::size_t copy = 0; copy < t; ++copy) {
    const VertexId off = static_cast<VertexId>(copy * n);
    for (EdgeId e = 0; e < h.num_edges(); ++e) {
      auto sp = h.edge(e);
      std::vector<VertexId> shifted(sp.begin(), sp.end());
      for (auto& v : shifted) v += off;
      edges.push_back(std::move(shifted));
    }
  }

  Rng root(seed ^ 0x9d2c5680u);
  for (VertexId v = 0; v < n; ++v) {
    const std::size_t dv = h.degree(v);
    if (dv + min_order > static_cast<std::size_t>(d)) continue;  // deficiency below threshold
    const int deficiency = d - static_cast<int>(dv);
    auto filler = detail::filler_edges(k, deficiency, t, min_order, root.split(v).next_u64());
    for (auto& fe : filler) {
      for (auto& clone : fe) clone = static_cast<VertexId>(clone * n + v);
      edges.push_back(std::move(fe));
    }
  }

  EmbedResult res;
  res.host = Hypergraph(t * n, edges);
  res.copies = t;
  res.base_vertices = n;
  std::size_t min_deg = res.host.min_degree();
  res.achieved_k = d - static_cast<int>(min_deg);
  return res;
}

// ---- generator specs for the experiment harness ----

enum class Family { Sts, RandomRegularSimple, NearRegularBlock, EmbedHost };

struct GeneratorSpec {
  Family family = Family::Sts;
  std::size_t n = 9;      // vertices (Sts, RandomRegularSimple) or block order (NearRegularBlock)
  int k = 3;
  int d = 0;              // target degree (RandomRegularSimple, EmbedHost)
  int c = 1;              // codegree bound (EmbedHost)
  int base_d = 0;         // base-instance degree for EmbedHost
  int tolerance = 2;
  std::uint64_t seed = 0; // combined with the run seed
};

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Sts: return "sts";
    case Family::RandomRegularSimple: return "random_regular_simple";
    case Family::NearRegularBlock: return "near_regular_block";
    case Family::EmbedHost: return "embed_host";
  }
  return "?";
}

inline Family family_from_name(const std::string& s) {
  if (s == "sts") return Family::Sts;
  if (s == "random_regular_simple") return Family::RandomRegularSimple;
  if (s == "near_regular_block") return Family::NearRegularBlock;
  if (s == "embed_host") return Family::EmbedHost;
  throw std::invalid_argument("unknown generator family: " + s);
}

inline Hypergraph instantiate(const GeneratorSpec& spec, std::uint64_t run_seed) {
  const std::uint64_t seed = spec.seed ^ (run_seed * 0x9e3779b97f4a7c15ULL);
  switch (spec.family) {
    case Family::Sts:
      return steiner_triple_system(spec.n, seed);
    case Family::RandomRegularSimple:
      return random_regular_simple(spec.k, spec.d, spec.n, spec.tolerance, seed);
    case Family::NearRegularBlock:
      return near_regular_steiner_block(spec.n);
    case Family::EmbedHost: {
      Hypergraph base = random_regular_simple(spec.k, spec.base_d, spec.n, spec.tolerance, seed);
      return embed_into_near_regular(base, spec.d, spec.c, kSteinerMinOrder, seed).host;
    }
  }
  throw std::invalid_argument("instantiate: unknown family");
}

}  // namespace nibblematch
