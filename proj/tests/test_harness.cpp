#include <catch_amalgamated.hpp>

#include <sstream>

#include "nibblematch/harness.hpp"

using namespace nibblematch;

TEST_CASE("experiment config round-trips through JSON", "[harness][io]") {
  ExperimentConfig cfg;
  cfg.mode = "pipeline";
  cfg.instances.push_back({Family::RandomRegularSimple, 500, 4, 20, 1, 0, 2, 0});
  cfg.seeds = {3, 5, 8};
  cfg.trials = 2;
  cfg.gamma = 0.45;
  cfg.eta = 0.004;
  json j = cfg;
  ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(back.mode == cfg.mode);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.trials == cfg.trials);
  CHECK(back.gamma == cfg.gamma);
  REQUIRE(back.instances.size() == 1);
  CHECK(back.instances[0].family == Family::RandomRegularSimple);
  CHECK(back.instances[0].d == 20);

  json bad = j;
  bad["seeds"] = json::array();
  CHECK_THROWS_AS(bad.get<ExperimentConfig>(), std::invalid_argument);
}

TEST_CASE("tiny experiment completes with all audits present", "[harness]") {
  ExperimentConfig cfg;
  cfg.mode = "nibble";
  cfg.instances.push_back({Family::Sts, 21, 3, 0, 1, 0, 0, 0});
  cfg.seeds = {1};
  cfg.trials = 1;
  cfg.gamma = 0.7;
  cfg.concentration_tol = 0.9;  // a 21-point instance is extremely noisy
  ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.records.size() == 1);
  CHECK(rep.records[0].error.empty());
  CHECK(rep.records[0].m_size > 0);
  CHECK(rep.records[0].n == 21);
}

TEST_CASE("reports are byte-identical for identical configs", "[harness][determinism]") {
  ExperimentConfig cfg;
  cfg.mode = "nibble";
  cfg.instances.push_back({Family::RandomRegularSimple, 150, 3, 8, 1, 0, 1, 0});
  cfg.seeds = {11, 12};
  cfg.trials = 2;
  cfg.gamma = 0.5;
  std::ostringstream a, b;
  run_experiment(cfg).write_csv(a);
  run_experiment(cfg).write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# nibble-match v1\n", 0) == 0);
}

TEST_CASE("per-trial failures are recorded, not fatal", "[harness]") {
  ExperimentConfig cfg;
  cfg.mode = "nibble";
  cfg.instances.push_back({Family::Sts, 8, 3, 0, 1, 0, 0, 0});   // inadmissible order
  cfg.instances.push_back({Family::Sts, 13, 3, 0, 1, 0, 0, 0});  // fine
  cfg.seeds = {1};
  cfg.gamma = 0.7;
  cfg.concentration_tol = 0.9;
  ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.records.size() == 2);
  CHECK_FALSE(rep.records[0].error.empty());
  CHECK(rep.records[1].error.empty());
  CHECK(rep.failures == 1);
  CHECK_FALSE(rep.all_audits_ok);
}

TEST_CASE("concentration report tracks the product formula", "[harness]") {
  Hypergraph h = steiner_triple_system(99, 2);
  NibbleConfig cfg;
  cfg.gamma = 0.8;
  cfg.seed = 4;
  NibbleResult res = run_nibble(h, cfg);
  auto rep = check_concentration(res, 99, 3, 0.8, 0.15);
  REQUIRE(rep.rows.size() == res.log.stages.size());
  // the product prediction is anchored at n
  double expected = 99.0;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    expected *= 1.0 - res.log.stages[i].p_star;
    CHECK(rep.rows[i].alive_expected == Catch::Approx(expected));
  }
  CHECK(rep.window_hi == Catch::Approx(std::pow(res.d0, 0.8)));
  CHECK(rep.window_lo < rep.window_hi);
}

TEST_CASE("joint equals marginal for a single event", "[harness][independence]") {
  Hypergraph h = steiner_triple_system(25, 6);
  NibbleConfig cfg;
  cfg.seed = 9;
  NibbleState state(h, cfg);
  auto rep = check_almost_independence(state, {3}, {}, 20000, 55);
  CHECK(rep.deviation == 0.0);  // same counter on both sides
  CHECK(rep.pass);
}

TEST_CASE("events in disjoint components are independent", "[harness][independence]") {
  // two disjoint triple systems glued into one vertex set
  Hypergraph a = steiner_triple_system(13, 1);
  std::vector<std::vector<VertexId>> edges;
  for (EdgeId e = 0; e < a.num_edges(); ++e)
    edges.emplace_back(a.edge(e).begin(), a.edge(e).end());
  for (EdgeId e = 0; e < a.num_edges(); ++e) {
    std::vector<VertexId> shifted(a.edge(e).begin(), a.edge(e).end());
    for (auto& v : shifted) v += 13;
    edges.push_back(shifted);
  }
  Hypergraph h(26, edges);
  NibbleConfig cfg;
  cfg.seed = 77;
  NibbleState state(h, cfg);
  auto rep = check_almost_independence(state, {2, 15}, {}, 60000, 3);
  CHECK(rep.pass);  // true independence: deviation within noise of zero
  CHECK(rep.deviation <= 0.05);
}

TEST_CASE("dependent events inside one edge carry a 1/d deviation", "[harness][independence]") {
  Hypergraph h = random_regular_simple(3, 25, 300, 1, 31);
  NibbleConfig cfg;
  cfg.seed = 8;
  NibbleState state(h, cfg);
  auto e0 = h.edge(0);
  auto rep = check_almost_independence(state, {e0[0], e0[1]}, {}, 60000, 8.0);
  CHECK(rep.pass);  // dependence exists but sits inside the c/d + 4se budget
  CHECK(rep.threshold > 0);
}
