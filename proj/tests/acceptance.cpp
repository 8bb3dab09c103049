// Acceptance suite: one test case per release criterion, each printing a
// single PASS/FAIL line. Every tolerance is pinned here in code; the
// randomized checks run on fixed seeds, so the whole suite is deterministic.

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nibblematch/harness.hpp"

using namespace nibblematch;
namespace fs = std::filesystem;

namespace {

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return 0.5 * (v[v.size() / 2] + v[(v.size() - 1) / 2]);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// Exact stage-one probabilities against Monte-Carlo frequencies, on the Fano
// plane and on a 3-uniform degree-10 random simple instance. 1e5 trials,
// agreement within 4 standard errors.
TEST_CASE("exact probability oracle", "[c1]") {
  const std::size_t trials = 100000;
  bool all_ok = true;
  std::size_t checks = 0;

  auto run = [&](const Hypergraph& h, std::uint64_t seed, std::size_t probe_edges,
                 std::size_t probe_vertices) {
    NibbleConfig cfg;
    cfg.seed = seed;
    cfg.stat_vertices = 0;
    NibbleState state(h, cfg);
    std::vector<std::size_t> edge_hits(h.num_edges(), 0), vertex_hits(h.num_vertices(), 0);
    Rng rng(seed ^ 0xace1);
    NibbleState::StageSample sample;
    for (std::size_t t = 0; t < trials; ++t) {
      state.sample_stage(rng, sample);
      for (EdgeId e : sample.matched) ++edge_hits[e];
      for (VertexId v = 0; v < h.num_vertices(); ++v)
        if (sample.in_matching(v)) ++vertex_hits[v];
    }
    const double d = state.d_current();
    for (std::size_t i = 0; i < probe_edges; ++i) {
      const EdgeId e = static_cast<EdgeId>(i * (h.num_edges() / probe_edges));
      const double p = edge_matching_prob(d, count_intersecting_edges(h, e));
      const double se = std::sqrt(p * (1 - p) / trials);
      all_ok = all_ok && std::abs(static_cast<double>(edge_hits[e]) / trials - p) <= 4 * se;
      ++checks;
    }
    for (std::size_t i = 0; i < probe_vertices; ++i) {
      const VertexId v = static_cast<VertexId>(i * (h.num_vertices() / probe_vertices));
      const double p = state.vertex_match_prob(v);
      const double se = std::sqrt(p * (1 - p) / trials);
      all_ok = all_ok && std::abs(static_cast<double>(vertex_hits[v]) / trials - p) <= 4 * se;
      ++checks;
    }
  };

  const std::vector<std::vector<VertexId>> fano = {{0, 1, 2}, {0, 3, 4}, {0, 5, 6}, {1, 3, 5},
                                                   {1, 4, 6}, {2, 3, 6}, {2, 4, 5}};
  run(Hypergraph(7, fano), 11, 7, 7);
  run(random_regular_simple(3, 10, 1000, 2, 19), 13, 20, 20);

  report(1, all_ok, "edge/vertex matching frequencies within 4 SE of the exact formulas (" +
                        std::to_string(checks) + " probes, 1e5 trials each instance)");
  CHECK(all_ok);
}

// The waste mechanism equalizes survival: empirical P(v in U1) = 1 - p*
// within 4 SE for every vertex of a 200-vertex instance.
TEST_CASE("waste equalization", "[c2]") {
  const std::size_t trials = 100000;
  Hypergraph h = random_regular_simple(3, 12, 200, 2, 23);
  NibbleConfig cfg;
  cfg.seed = 29;
  cfg.stat_vertices = 0;
  NibbleState state(h, cfg);
  const double target = 1.0 - state.p_star();
  std::vector<std::size_t> survive(h.num_vertices(), 0);
  Rng rng(0xbeef);
  NibbleState::StageSample sample;
  for (std::size_t t = 0; t < trials; ++t) {
    state.sample_stage(rng, sample);
    for (VertexId v = 0; v < h.num_vertices(); ++v)
      if (!sample.removed(v)) ++survive[v];
  }
  const double se = std::sqrt(target * (1 - target) / trials);
  std::size_t bad = 0;
  double worst = 0;
  for (VertexId v = 0; v < h.num_vertices(); ++v) {
    const double dev = std::abs(static_cast<double>(survive[v]) / trials - target);
    worst = std::max(worst, dev);
    if (dev > 4 * se) ++bad;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "all 200 vertices at 1-p*=%.4f within 4 SE (worst dev %.5f, 4SE=%.5f)", target,
                worst, 4 * se);
  report(2, bad == 0, buf);
  CHECK(bad == 0);
}

// Trajectory concentration across three instance scales: the alive count
// tracks n*prod(1-p*_j) within 10% through all stages on at least 18 of 20
// seeded runs, and the final tracked degree lands in the stated window on
// every run.
TEST_CASE("trajectory concentration", "[c3]") {
  struct Scale {
    std::size_t n;
    double gamma;
  };
  // depth per scale is limited by the multiplicative sampling noise the 10%
  // band can absorb; the largest instance carries the deep trajectory
  const std::vector<Scale> scales = {{199, 0.96}, {999, 0.88}, {3999, 0.80}};
  bool all_ok = true;
  std::string detail;
  for (const auto& sc : scales) {
    int pass = 0, window = 0;
    std::size_t stages = 0;
    for (int s = 1; s <= 20; ++s) {
      Hypergraph h = steiner_triple_system(sc.n, s);
      NibbleConfig cfg;
      cfg.gamma = sc.gamma;
      cfg.seed = 1000 + s;
      cfg.stat_vertices = 8;
      cfg.stat_pairs = 0;
      NibbleResult res = run_nibble(h, cfg);
      auto rep = check_concentration(res, sc.n, 3, sc.gamma, 0.10);
      pass += rep.alive_ok;
      window += rep.window_ok;
      stages = res.stages;
    }
    const bool ok = pass >= 18 && window == 20;
    all_ok = all_ok && ok;
    detail += "n=" + std::to_string(sc.n) + ": " + std::to_string(pass) + "/20 in 10% band, " +
              std::to_string(window) + "/20 in degree window, " + std::to_string(stages) +
              " stages; ";
  }
  report(3, all_ok, detail);
  CHECK(all_ok);
}

// Structure audit of the star hypergraph on 4-uniform desk instances. Two
// instance classes split the audits: a fully materialized class carries the
// codegree and R-side checks, and a counts-only class (capped enumeration,
// marked sampled) carries the L-side check at a degree scale where the
// factor-2 band is meaningful. Both center on the measured final degree.
TEST_CASE("star hypergraph structure", "[c4]") {
  auto measured_final_degree = [](const Hypergraph& h, const NibbleResult& nib) {
    double sum = 0;
    std::size_t cnt = 0;
    for (VertexId v = 0; v < h.num_vertices(); ++v)
      if (nib.leftover[v]) {
        sum += static_cast<double>(stat_d(h, nib.leftover, v));
        ++cnt;
      }
    return cnt ? sum / cnt : 0.0;
  };

  // class one: full enumeration; L/L codegree, global codegree bound, R band
  int ll_ok = 0, co_ok = 0, r_ok = 0;
  for (int s = 1; s <= 20; ++s) {
    Hypergraph h = random_regular_simple(4, 28, 400, 2, 100 + s);
    NibbleConfig cfg;
    cfg.gamma = 0.88;
    cfg.seed = 7000 + s;
    cfg.stat_vertices = 0;
    NibbleResult nib = run_nibble(h, cfg);
    AugStarHypergraph ha = enumerate_aug_stars(h, nib.matching, nib.waste, 1u << 21);
    if (ha.l_size() == 0 || ha.r_size() == 0) continue;
    std::vector<double> z(ha.r_size());
    for (std::size_t r = 0; r < ha.r_size(); ++r)
      z[r] = static_cast<double>(stat_z(h, nib.leftover, nib.matching, ha.r_base_vertex[r]));
    auto rep = verify_m3(ha, measured_final_degree(h, nib), z, 2.0,
                         std::log(static_cast<double>(h.num_vertices())));
    ll_ok += rep.ll_zero_ok && rep.codegree_ll == 0;
    co_ok += rep.codegree_ok;
    r_ok += rep.r_ok;
  }

  // class two: one/two-stage runs with exact per-vertex star counts
  int l_ok = 0, ll2_ok = 0;
  for (int s = 1; s <= 20; ++s) {
    Hypergraph h = random_regular_simple(4, 56, 900, 2, 200 + s);
    NibbleConfig cfg;
    cfg.gamma = 0.985;
    cfg.seed = 8000 + s;
    cfg.stat_vertices = 0;
    NibbleResult nib = run_nibble(h, cfg);
    AugStarHypergraph ha = enumerate_aug_stars(h, nib.matching, nib.waste, 4);
    if (ha.l_size() == 0 || ha.r_size() == 0) continue;
    auto rep = verify_m3(ha, measured_final_degree(h, nib), {}, 2.0,
                         std::log(static_cast<double>(h.num_vertices())));
    l_ok += rep.l_ok;
    ll2_ok += rep.ll_zero_ok;
  }

  const bool ok = ll_ok == 20 && co_ok == 20 && r_ok >= 18 && l_ok >= 18 && ll2_ok == 20;
  report(4, ok,
         "L/L codegree zero " + std::to_string(ll_ok) + "/20, codegree bound " +
             std::to_string(co_ok) + "/20, R factor-2 " + std::to_string(r_ok) +
             "/20 (full class); L factor-2 " + std::to_string(l_ok) + "/20 (counts class)");
  CHECK(ok);
}

// The reduction chain always delivers a simple duplicate-free sub-hypergraph
// over boosted star hypergraphs, with per-stage degree bands at slack 2; a
// denser low-uniformity multigraph demonstrates a nonempty reduction.
TEST_CASE("simplification contract", "[c5]") {
  int simple_cnt = 0, bands_cnt = 0;
  for (int s = 1; s <= 20; ++s) {
    Hypergraph h = steiner_triple_system(201, 300 + s);
    NibbleConfig cfg;
    cfg.gamma = 0.75;
    cfg.seed = 400 + s;
    cfg.stat_vertices = 0;
    NibbleResult nib = run_nibble(h, cfg);
    AugStarHypergraph ha = enumerate_aug_stars(h, nib.matching, nib.waste);
    if (ha.graph.num_edges() == 0) continue;
    AugStarHypergraph hb = boost(ha);
    const double c = static_cast<double>(std::max<std::size_t>(1, hb.graph.max_codegree()));
    auto res = simple_subhypergraph(hb.graph, c, 0.3, 500 + s);
    simple_cnt += res.report.simple && !res.hypergraph.has_duplicate_edges();
    bands_cnt += res.report.bands_ok;
  }

  // nonempty demonstration: union of thirty relabeled triple systems
  std::vector<std::vector<VertexId>> edges;
  for (int l = 0; l < 30; ++l) {
    Hypergraph sts = steiner_triple_system(999, 600 + l);
    for (EdgeId e = 0; e < sts.num_edges(); ++e)
      edges.emplace_back(sts.edge(e).begin(), sts.edge(e).end());
  }
  Hypergraph target(999, edges);
  auto big = simple_subhypergraph(target, 30.0, 0.3, 77);
  const bool nonempty_ok = big.report.simple && big.hypergraph.num_edges() > 0;

  const bool ok = simple_cnt == 20 && bands_cnt >= 18 && nonempty_ok;
  report(5, ok,
         "simple+duplicate-free " + std::to_string(simple_cnt) + "/20, stage bands " +
             std::to_string(bands_cnt) + "/20 over boosted star instances; dense multigraph kept " +
             std::to_string(big.hypergraph.num_edges()) + " simple edges");
  CHECK(ok);
}

// Augmentation exactness on every pipeline run: |M*| - |M| = (k-1)|M_A|, the
// output verifies as a matching, and coverage never shrinks.
TEST_CASE("augmentation exactness", "[c6]") {
  bool all_ok = true;
  int runs = 0;
  for (int s = 1; s <= 10; ++s) {
    const int d = 16 + 8 * (s % 3);
    Hypergraph h = random_regular_simple(4, d, 30 * static_cast<std::size_t>(d), 2, 900 + s);
    PipelineParams p = PipelineParams::make(4, 0.25, compute_eta0(4, 0.25) / 2);
    if (s % 2 == 0) p.gamma_override = 0.5;  // alternate formula and custom depth
    auto [m_star, rep] = full_simple_pipeline(h, p, 950 + s);
    const bool exact = rep.m_star_size == rep.m_size + 3 * rep.ma_size;
    const bool valid = verify_matching(h, m_star).valid;
    const bool monotone = rep.leftover_m_star <= rep.leftover_m;
    all_ok = all_ok && exact && valid && monotone;
    ++runs;
  }
  report(6, all_ok,
         "|M*|-|M| = (k-1)|M_A|, matching valid, leftover monotone on all " +
             std::to_string(runs) + " pipeline runs");
  CHECK(all_ok);
}

// Qualitative decay: over a degree sweep at fixed n/d, the median leftover
// fraction of the augmented matching strictly decreases in d.
TEST_CASE("decay trend", "[c7]") {
  PipelineParams p = PipelineParams::make(4, 0.25, compute_eta0(4, 0.25) / 2);
  std::string detail = "medians";
  double prev = 1e9;
  bool ok = true;
  for (int d : {20, 40, 80, 160}) {
    const std::size_t n = 25 * static_cast<std::size_t>(d);
    std::vector<double> fracs;
    for (int s = 1; s <= 20; ++s) {
      Hypergraph h = random_regular_simple(4, d, n, 2, 40 + s);
      auto [m_star, rep] = full_simple_pipeline(h, p, 9000 + s);
      fracs.push_back(static_cast<double>(rep.leftover_m_star) / static_cast<double>(n));
    }
    const double med = median(fracs);
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %.4f", med);
    detail += buf;
    ok = ok && med < prev;
    prev = med;
  }
  report(7, ok, detail + " strictly decreasing over d in {20,40,80,160}, 20 seeds each");
  CHECK(ok);
}

// Chromatic pipeline: proper and total on every run, palette at least the
// counting bound and at most d + k(delta''-1)+1 colors in total, and the
// palette/n ratio non-increasing across orders.
TEST_CASE("chromatic pipeline", "[c8]") {
  bool ok = true;
  double prev_ratio = 1e9;
  std::string detail;
  for (std::size_t n : {std::size_t{99}, std::size_t{201}, std::size_t{399}}) {
    Hypergraph sts = steiner_triple_system(n, 17);
    const int d = static_cast<int>(sts.max_degree());
    PipelineParams params;
    auto [col, rep] = chromatic_index_coloring(sts, d, 1, params, 55);
    const double ratio = static_cast<double>(rep.palette_restricted) / static_cast<double>(n);
    const bool run_ok = rep.proper && rep.total && audit_proper_coloring(sts, col, true) &&
                        rep.palette_restricted >= rep.g_n &&
                        rep.fresh_used <= (rep.uncolored_max_degree == 0
                                               ? 0
                                               : 3 * (rep.uncolored_max_degree - 1) + 1) &&
                        ratio <= prev_ratio + 1e-12;
    ok = ok && run_ok;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "n=%zu palette=%zu ratio=%.4f; ", n, rep.palette_restricted,
                  ratio);
    detail += buf;
    prev_ratio = ratio;
  }
  report(8, ok, detail + "proper/total everywhere, palette >= g(n), ratio non-increasing");
  CHECK(ok);
}

// Host embedding audited by brute force at small scale for both uniformity
// routes: exact vertex count, containment, degree band, codegree.
TEST_CASE("embedding host", "[c9]") {
  bool ok = true;
  std::string detail;
  struct Case {
    int k, d, c;
    std::size_t n;
  };
  for (const Case& tc : {Case{3, 12, 1, 50}, Case{3, 10, 2, 30}, Case{4, 10, 1, 45}}) {
    Hypergraph base = tc.c == 1 ? random_regular_simple(tc.k, tc.d / 2, tc.n, 2, 31 + tc.k)
                                : Hypergraph(tc.n, {{0, 1, 2}, {0, 1, 3}, {4, 5, 6}});
    auto res = embed_into_near_regular(base, tc.d, tc.c, kSteinerMinOrder, 7);
    const std::size_t expect_v =
        static_cast<std::size_t>(tc.k - 1) * (tc.k - 1) * tc.d * tc.d * tc.n;
    bool contain = true;
    for (EdgeId e = 0; e < base.num_edges(); ++e) {
      auto a = base.edge(e), b = res.host.edge(e);
      contain = contain && std::equal(a.begin(), a.end(), b.begin());
    }
    const bool run_ok = res.host.num_vertices() == expect_v && contain &&
                        res.host.max_degree() <= static_cast<std::size_t>(tc.d) &&
                        res.host.min_degree() + res.achieved_k >= static_cast<std::size_t>(tc.d) &&
                        res.host.max_codegree() <= static_cast<std::size_t>(tc.c);
    ok = ok && run_ok;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "k=%d d=%d: |V|=%zu K=%d codeg<=%d %s; ", tc.k, tc.d,
                  res.host.num_vertices(), res.achieved_k, tc.c, run_ok ? "ok" : "BAD");
    detail += buf;
  }
  report(9, ok, detail);
  CHECK(ok);
}

// Almost independence: the measured joint-vs-product deviation for in-edge
// tuples shrinks as the degree grows (medians at 1e5 samples per tuple).
TEST_CASE("almost independence decay", "[c10]") {
  const std::size_t samples = 100000;
  const int tuples = 16;
  std::vector<double> med2, med3;
  for (int d : {25, 50, 100}) {
    const std::size_t n = 8 * static_cast<std::size_t>(d);
    Hypergraph h = random_regular_simple(3, d, n, 1, 70 + d);
    NibbleConfig cfg;
    cfg.seed = 31 + d;
    cfg.stat_vertices = 0;
    NibbleState state(h, cfg);

    // one shared batch of stage samples scores all tuples
    struct Tuple {
      std::array<VertexId, 3> v;
      std::size_t joint2 = 0, joint3 = 0;
      std::array<std::size_t, 3> marg{0, 0, 0};
    };
    std::vector<Tuple> ts(tuples);
    for (int t = 0; t < tuples; ++t) {
      auto e = h.edge(static_cast<EdgeId>((t * 131) % h.num_edges()));
      ts[t].v = {e[0], e[1], e[2]};
    }
    Rng rng(500 + d);
    NibbleState::StageSample sample;
    for (std::size_t it = 0; it < samples; ++it) {
      state.sample_stage(rng, sample);
      for (auto& t : ts) {
        const bool u0 = !sample.removed(t.v[0]);
        const bool u1 = !sample.removed(t.v[1]);
        const bool m2 = sample.in_matching(t.v[2]);
        t.marg[0] += u0;
        t.marg[1] += u1;
        t.marg[2] += m2;
        t.joint2 += u0 && u1;
        t.joint3 += u0 && u1 && m2;
      }
    }
    std::vector<double> dev2, dev3;
    for (const auto& t : ts) {
      const double p0 = static_cast<double>(t.marg[0]) / samples;
      const double p1 = static_cast<double>(t.marg[1]) / samples;
      const double p2 = static_cast<double>(t.marg[2]) / samples;
      dev2.push_back(std::abs(static_cast<double>(t.joint2) / samples - p0 * p1) / (p0 * p1));
      if (p2 > 0)
        dev3.push_back(std::abs(static_cast<double>(t.joint3) / samples - p0 * p1 * p2) /
                       (p0 * p1 * p2));
    }
    med2.push_back(median(dev2));
    med3.push_back(median(dev3));
  }
  const bool ok = med2.back() < med2.front() && med3.back() < med3.front();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "pair medians %.5f/%.5f/%.5f, triple medians %.5f/%.5f/%.5f for d=25/50/100",
                med2[0], med2[1], med2[2], med3[0], med3[1], med3[2]);
  report(10, ok, buf);
  CHECK(ok);
}

// Every CLI verb is byte-deterministic: identical config and seed give
// identical artifacts across two consecutive runs.
TEST_CASE("cli determinism", "[c11]") {
  const std::string cli = NM_CLI_PATH;
  const fs::path work = fs::temp_directory_path() / "nm_acceptance_c11";
  fs::remove_all(work);
  fs::create_directories(work);

  // an instance file and an experiment config shared by the verbs
  {
    std::ofstream cfg(work / "exp.json");
    cfg << R"({"mode":"nibble","instances":[{"family":"sts","n":99}],
               "seeds":[3,4],"trials":1,"gamma":0.8,"concentration_tol":0.5})";
  }
  auto run = [&](const std::string& args, const std::string& out) {
    const std::string cmd =
        cli + " " + args + " --out " + (work / out).string() + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  REQUIRE(run("generate --family sts --n 99 --seed 5", "gen") == 0);
  REQUIRE(run("generate --family random_regular_simple --n 200 --k 4 --d 16 --seed 5", "gen4") ==
          0);
  const std::string instance = (work / "gen" / "instance.txt").string();
  const std::string instance4 = (work / "gen4" / "instance.txt").string();

  struct Verb {
    std::string name, args;
    std::vector<std::string> artifacts;
  };
  const std::vector<Verb> verbs = {
      {"generate", "generate --family random_regular_simple --n 150 --k 3 --d 8 --seed 9",
       {"instance.txt"}},
      {"nibble", "nibble --in " + instance + " --gamma 0.8 --seed 7",
       {"trajectory.csv", "matching.txt", "summary.json"}},
      {"augment", "augment --in " + instance4 + " --gamma 0.6 --seed 7 --epsilon 0.25",
       {"matching.txt", "report.json"}},
      {"simplify", "simplify --in " + instance + " --delta 0.3 --seed 7",
       {"simple.txt", "report.json"}},
      {"color", "color --in " + instance + " --seed 7", {"coloring.csv", "report.json"}},
      {"experiment", "experiment --config " + (work / "exp.json").string(),
       {"records.csv", "report.json"}},
  };

  bool ok = true;
  std::string detail;
  for (const auto& v : verbs) {
    const int rc1 = run(v.args, v.name + "_a");
    const int rc2 = run(v.args, v.name + "_b");
    bool same = rc1 == rc2;
    for (const auto& art : v.artifacts) {
      const auto a = read_file(work / (v.name + "_a") / art);
      const auto b = read_file(work / (v.name + "_b") / art);
      same = same && !a.empty() && a == b;
    }
    ok = ok && same;
    detail += v.name + (same ? " ok; " : " DIFFERS; ");
  }

  // verify reads artifacts back and exits cleanly
  const std::string vcmd = cli + " verify --in " + instance + " --matching " +
                           (work / "nibble_a" / "matching.txt").string() + " >/dev/null 2>&1";
  const bool verify_ok = std::system(vcmd.c_str()) == 0;
  ok = ok && verify_ok;
  detail += std::string("verify ") + (verify_ok ? "ok" : "FAILED");

  report(11, ok, detail);
  CHECK(ok);
  fs::remove_all(work);
}
