#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nibblematch/augment.hpp"
#include "nibblematch/chromatic.hpp"
#include "nibblematch/generators.hpp"
#include "nibblematch/hypergraph.hpp"
#include "nibblematch/nibble.hpp"
#include "nibblematch/simplify.hpp"

namespace nibblematch {

using nlohmann::json;

// ---- config ----

struct ExperimentConfig {
  std::string mode = "nibble";  // nibble | pipeline | color
  std::vector<GeneratorSpec> instances;
  std::vector<std::uint64_t> seeds = {1};
  int trials = 1;
  // process parameters
  double gamma = 0.5;            // outer stop exponent (overrides the formula)
  double epsilon = 0.25, eta = 0.005, delta = 0.3, mu = 0.5;
  std::size_t max_stages = 4000;
  std::size_t stat_vertices = 64, stat_pairs = 0;
  // audits
  double band_slack = 2.0;
  double concentration_tol = 0.1;
  // coloring
  int color_d = 0, color_c = 1;
  // io
  std::string out_dir;
  std::string format = "csv";
};

inline void to_json(json& j, const GeneratorSpec& s) {
  j = json{{"family", family_name(s.family)}, {"n", s.n},          {"k", s.k},
           {"d", s.d},                        {"c", s.c},          {"base_d", s.base_d},
           {"tolerance", s.tolerance},        {"seed", s.seed}};
}

inline void from_json(const json& j, GeneratorSpec& s) {
  s.family = family_from_name(j.value("family", "sts"));
  s.n = j.value("n", std::size_t{9});
  s.k = j.value("k", 3);
  s.d = j.value("d", 0);
  s.c = j.value("c", 1);
  s.base_d = j.value("base_d", 0);
  s.tolerance = j.value("tolerance", 2);
  s.seed = j.value("seed", std::uint64_t{0});
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"mode", c.mode},
           {"instances", c.instances},
           {"seeds", c.seeds},
           {"trials", c.trials},
           {"gamma", c.gamma},
           {"epsilon", c.epsilon},
           {"eta", c.eta},
           {"delta", c.delta},
           {"mu", c.mu},
           {"max_stages", c.max_stages},
           {"stat_vertices", c.stat_vertices},
           {"stat_pairs", c.stat_pairs},
           {"band_slack", c.band_slack},
           {"concentration_tol", c.concentration_tol},
           {"color_d", c.color_d},
           {"color_c", c.color_c},
           {"format", c.format}};
  // out_dir stays runtime-only so reports are byte-identical across locations
}

inline void from_json(const json& j, ExperimentConfig& c) {
  c.mode = j.value("mode", "nibble");
  if (j.contains("instances")) c.instances = j.at("instances").get<std::vector<GeneratorSpec>>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.trials = j.value("trials", 1);
  c.gamma = j.value("gamma", 0.5);
  c.epsilon = j.value("epsilon", 0.25);
  c.eta = j.value("eta", 0.005);
  c.delta = j.value("delta", 0.3);
  c.mu = j.value("mu", 0.5);
  c.max_stages = j.value("max_stages", std::size_t{4000});
  c.stat_vertices = j.value("stat_vertices", std::size_t{64});
  c.stat_pairs = j.value("stat_pairs", std::size_t{0});
  c.band_slack = j.value("band_slack", 2.0);
  c.concentration_tol = j.value("concentration_tol", 0.1);
  c.color_d = j.value("color_d", 0);
  c.color_c = j.value("color_c", 1);
  c.out_dir = j.value("out_dir", "");
  c.format = j.value("format", "csv");
  if (c.seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  if (c.band_slack <= 0 || c.concentration_tol <= 0)
    throw std::invalid_argument("config: tolerances must be positive");
}

// ---- report serialization helpers ----

inline void to_json(json& j, const StageAudit& a) {
  j = json{{"stage", a.stage},
           {"attempts", a.attempts},
           {"codegree_before", a.codegree_before},
           {"codegree_after", a.codegree_after},
           {"codegree_target", a.codegree_target},
           {"degree_min", a.degree_min},
           {"degree_max", a.degree_max},
           {"band_target", a.band_target},
           {"degrees_ok", a.degrees_ok},
           {"codegree_ok", a.codegree_ok},
           {"notes", a.notes}};
}

inline void to_json(json& j, const SimplifyReport& r) {
  j = json{{"stages", r.stages},   {"s", r.s},
           {"t", r.t},             {"classes", r.classes},
           {"d_star", r.d_star},   {"edges_in", r.edges_in},
           {"edges_out", r.edges_out}, {"simple", r.simple},
           {"bands_ok", r.bands_ok},
           {"codegree_targets_ok", r.codegree_targets_ok},
           {"warnings", r.warnings}};
}

inline void to_json(json& j, const M3Report& r) {
  j = json{{"l_count", r.l_count},
           {"r_count", r.r_count},
           {"edge_count", r.edge_count},
           {"l_min", r.l_min},
           {"l_max", r.l_max},
           {"r_min", r.r_min},
           {"r_max", r.r_max},
           {"codegree_ll", r.codegree_ll},
           {"codegree_lr", r.codegree_lr},
           {"codegree_rr", r.codegree_rr},
           {"max_codegree", r.max_codegree},
           {"d_l_expected", r.d_l_expected},
           {"l_ratio_min", r.l_ratio_min},
           {"l_ratio_max", r.l_ratio_max},
           {"r_ratio_min", r.r_ratio_min},
           {"r_ratio_max", r.r_ratio_max},
           {"codegree_bound", r.codegree_bound},
           {"l_ok", r.l_ok},
           {"r_ok", r.r_ok},
           {"codegree_ok", r.codegree_ok},
           {"ll_zero_ok", r.ll_zero_ok},
           {"sampled", r.sampled}};
}

inline void to_json(json& j, const PipelineReport& r) {
  j = json{{"d0", r.d0},
           {"delta0", r.delta0},
           {"d_omega", r.d_omega},
           {"stages", r.stages},
           {"m_size", r.m_size},
           {"ma_size", r.ma_size},
           {"m_star_size", r.m_star_size},
           {"leftover_m", r.leftover_m},
           {"leftover_m_star", r.leftover_m_star},
           {"waste_size", r.waste_size},
           {"baseline_plain", r.baseline_plain},
           {"baseline_improved", r.baseline_improved},
           {"ha_edges", r.ha_edges},
           {"ha_boost_edges", r.ha_boost_edges},
           {"ha_simple_edges", r.ha_simple_edges},
           {"boost_copies", r.boost_copies},
           {"truncated_enumeration", r.truncated_enumeration},
           {"simplify", r.simplify},
           {"warnings", r.warnings},
           {"tracked_leftover", r.tracked_leftover}};
}

inline void to_json(json& j, const ColoringReport& r) {
  j = json{{"n", r.n},
           {"m", r.m},
           {"d", r.d},
           {"palette", r.palette},
           {"palette_restricted", r.palette_restricted},
           {"base_used", r.base_used},
           {"fresh_used", r.fresh_used},
           {"uncolored_max_degree", r.uncolored_max_degree},
           {"fresh_bound", r.fresh_bound},
           {"g_n", r.g_n},
           {"proper", r.proper},
           {"total", r.total},
           {"embedded", r.embedded},
           {"host_vertices", r.host_vertices},
           {"warnings", r.warnings}};
}

// ---- empirical verification ----

struct ConcentrationRow {
  std::size_t stage = 0;
  double alive_expected = 0;  // n * prod(1 - p*_j), from the run's own rates
  double alive_dev = 0;       // relative deviation of |U_i|
  double waste_ratio = 0;     // |W_i| / (|U_{i-1}| delta/d): the achieved waste constant
  bool alive_ok = true;
  bool dx_ok = true;          // extremes of D_i(x) inside d_i +- slack*delta_i
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  double max_alive_dev = 0;
  double max_waste_ratio = 0;  // empirically achieved waste constant
  bool alive_ok = true;
  bool dx_ok = true;
  bool window_ok = true;  // d_omega inside [(1-e^-k)^{k-1}/4 * d0^gamma, d0^gamma]
  double window_lo = 0, window_hi = 0;

  bool pass() const { return alive_ok && window_ok; }
};

// Per-stage relative deviation of the alive count from the exact product
// formula, the degree-extreme band audit, and the final-degree window.
inline ConcentrationReport check_concentration(const NibbleResult& res, std::size_t n, int k,
                                               double gamma, double tol, double dx_slack = 2.0) {
  ConcentrationReport rep;
  double expected = static_cast<double>(n);
  double prev_alive = static_cast<double>(n);
  double prev_d = res.d0, prev_delta = res.delta0;
  for (const auto& st : res.log.stages) {
    expected *= (1.0 - st.p_star);
    ConcentrationRow row;
    row.stage = st.stage;
    row.alive_expected = expected;
    row.alive_dev = expected > 0 ? std::abs(static_cast<double>(st.alive) - expected) / expected : 0;
    row.alive_ok = row.alive_dev <= tol;
    row.dx_ok = st.min_dx >= st.d - dx_slack * st.delta && st.max_dx <= st.d + dx_slack * st.delta;
    const double scale = prev_alive * (prev_d > 0 ? prev_delta / prev_d : 0);
    row.waste_ratio = scale > 0 ? static_cast<double>(st.w_size) / scale : 0;
    rep.max_alive_dev = std::max(rep.max_alive_dev, row.alive_dev);
    rep.max_waste_ratio = std::max(rep.max_waste_ratio, row.waste_ratio);
    rep.alive_ok = rep.alive_ok && row.alive_ok;
    rep.dx_ok = rep.dx_ok && row.dx_ok;
    rep.rows.push_back(row);
    prev_alive = static_cast<double>(st.alive);
    prev_d = st.d;
    prev_delta = st.delta;
  }
  const double keep = 1.0 - std::exp(-static_cast<double>(k));
  rep.window_lo = 0.25 * std::pow(keep, k - 1) * std::pow(res.d0, gamma);
  rep.window_hi = std::pow(res.d0, gamma);
  rep.window_ok = res.d_omega >= rep.window_lo && res.d_omega <= rep.window_hi + 1e-9;
  return rep;
}

inline void to_json(json& j, const ConcentrationReport& r) {
  j = json{{"max_alive_dev", r.max_alive_dev},
           {"max_waste_ratio", r.max_waste_ratio},
           {"alive_ok", r.alive_ok},
           {"dx_ok", r.dx_ok},
           {"window_ok", r.window_ok},
           {"window_lo", r.window_lo},
           {"window_hi", r.window_hi}};
}

struct IndependenceReport {
  double joint = 0;      // empirical frequency of the conjunction
  double product = 0;    // product of the empirical marginals
  double deviation = 0;  // |joint - product| / product
  double se = 0;         // conservative standard error of the deviation
  double threshold = 0;  // c / d + 4 se
  std::size_t samples = 0;
  bool pass = false;
};

// Monte-Carlo joint-vs-product check for survival events (xs stay alive) and
// matching events (ys get covered) in one resampled stage. The guard 4*SE
// keeps sampling noise from failing the check on its own.
inline IndependenceReport check_almost_independence(const NibbleState& state,
                                                    const std::vector<VertexId>& xs,
                                                    const std::vector<VertexId>& ys,
                                                    std::size_t samples, std::uint64_t seed,
                                                    double c = 8.0) {
  for (VertexId v : xs)
    if (!state.alive()[v]) throw std::invalid_argument("independence check: dead vertex in tuple");
  for (VertexId v : ys)
    if (!state.alive()[v]) throw std::invalid_argument("independence check: dead vertex in tuple");

  IndependenceReport rep;
  rep.samples = samples;
  std::size_t joint = 0;
  std::vector<std::size_t> marg(xs.size() + ys.size(), 0);
  Rng rng(seed);
  NibbleState::StageSample sample;
  for (std::size_t s = 0; s < samples; ++s) {
    state.sample_stage(rng, sample);
    bool all = true;
    std::size_t idx = 0;
    for (VertexId v : xs) {
      const bool ok = !sample.removed(v);
      marg[idx++] += ok;
      all = all && ok;
    }
    for (VertexId v : ys) {
      const bool ok = sample.in_matching(v);
      marg[idx++] += ok;
      all = all && ok;
    }
    joint += all;
  }
  rep.joint = static_cast<double>(joint) / samples;
  rep.product = 1.0;
  double rel_se_sum = 0;
  for (std::size_t i = 0; i < marg.size(); ++i) {
    const double p = static_cast<double>(marg[i]) / samples;
    rep.product *= p;
    if (p > 0) rel_se_sum += std::sqrt(p * (1 - p) / samples) / p;
  }
  if (rep.product <= 0) {  // degenerate tuple; nothing to compare
    rep.deviation = 0;
    rep.pass = true;
    return rep;
  }
  rep.deviation = std::abs(rep.joint - rep.product) / rep.product;
  const double se_joint = std::sqrt(rep.joint * (1 - rep.joint) / samples);
  rep.se = se_joint / rep.product + (rep.joint / rep.product) * rel_se_sum;
  rep.threshold = c / state.d_current() + 4.0 * rep.se;
  rep.pass = rep.deviation <= rep.threshold;
  return rep;
}

inline void to_json(json& j, const IndependenceReport& r) {
  j = json{{"joint", r.joint},   {"product", r.product},     {"deviation", r.deviation},
           {"se", r.se},         {"threshold", r.threshold}, {"samples", r.samples},
           {"pass", r.pass}};
}

// ---- experiment driver ----

struct TrialRecord {
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  int trial = 0;
  std::size_t n = 0, m = 0;
  double d0 = 0, d_omega = 0;
  std::size_t stages = 0;
  std::size_t m_size = 0, ma_size = 0, m_star_size = 0;
  std::size_t leftover_m = 0, leftover_m_star = 0, waste = 0;
  std::size_t palette = 0, fresh = 0;
  double max_alive_dev = 0;
  bool bands_ok = true;
  bool audits_ok = true;
  std::string error;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialRecord> records;
  std::size_t failures = 0;
  bool all_audits_ok = true;

  void write_csv(std::ostream& os) const {
    os << "# nibble-match v1\n";
    os << "instance,seed,trial,n,m,d0,d_omega,stages,m_size,ma_size,m_star_size,"
          "leftover_m,leftover_m_star,waste,palette,fresh,max_alive_dev,bands_ok,audits_ok,error\n";
    for (const auto& r : records) {
      os << r.instance << ',' << r.seed << ',' << r.trial << ',' << r.n << ',' << r.m << ','
         << detail::fmt_double(r.d0) << ',' << detail::fmt_double(r.d_omega) << ',' << r.stages
         << ',' << r.m_size << ',' << r.ma_size << ',' << r.m_star_size << ',' << r.leftover_m
         << ',' << r.leftover_m_star << ',' << r.waste << ',' << r.palette << ',' << r.fresh << ','
         << detail::fmt_double(r.max_alive_dev) << ',' << (r.bands_ok ? 1 : 0) << ','
         << (r.audits_ok ? 1 : 0) << ',' << r.error << '\n';
    }
  }
};

inline void to_json(json& j, const TrialRecord& r) {
  j = json{{"instance", r.instance},
           {"seed", r.seed},
           {"trial", r.trial},
           {"n", r.n},
           {"m", r.m},
           {"d0", r.d0},
           {"d_omega", r.d_omega},
           {"stages", r.stages},
           {"m_size", r.m_size},
           {"ma_size", r.ma_size},
           {"m_star_size", r.m_star_size},
           {"leftover_m", r.leftover_m},
           {"leftover_m_star", r.leftover_m_star},
           {"waste", r.waste},
           {"palette", r.palette},
           {"fresh", r.fresh},
           {"max_alive_dev", r.max_alive_dev},
           {"bands_ok", r.bands_ok},
           {"audits_ok", r.audits_ok},
           {"error", r.error}};
}

inline void to_json(json& j, const ExperimentReport& r) {
  j = json{{"config", r.config},
           {"records", r.records},
           {"failures", r.failures},
           {"all_audits_ok", r.all_audits_ok}};
}

// Runs every (instance, seed, trial) cell sequentially in a fixed order, so
// identical configs give identical reports byte for byte. Per-trial failures
// are recorded and the run continues.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.config = cfg;
  for (std::size_t idx = 0; idx < cfg.instances.size(); ++idx) {
    for (std::uint64_t seed : cfg.seeds) {
      for (int trial = 0; trial < cfg.trials; ++trial) {
        TrialRecord rec;
        rec.instance = idx;
        rec.seed = seed;
        rec.trial = trial;
        const std::uint64_t cell_seed = Rng(seed).split(trial).next_u64();
        try {
          Hypergraph h = instantiate(cfg.instances[idx], cell_seed);
          rec.n = h.num_vertices();
          rec.m = h.num_edges();
          if (cfg.mode == "nibble") {
            NibbleConfig nc;
            nc.gamma = cfg.gamma;
            nc.max_stages = cfg.max_stages;
            nc.seed = cell_seed;
            nc.stat_vertices = cfg.stat_vertices;
            nc.stat_pairs = cfg.stat_pairs;
            NibbleResult res = run_nibble(h, nc);
            rec.d0 = res.d0;
            rec.d_omega = res.d_omega;
            rec.stages = res.stages;
            rec.m_size = res.matching.size();
            rec.leftover_m = rec.n - res.matching.covered_count();
            rec.leftover_m_star = rec.leftover_m;
            for (char w : res.waste) rec.waste += (w != 0);
            auto conc = check_concentration(res, rec.n, *h.uniformity(), cfg.gamma,
                                            cfg.concentration_tol, cfg.band_slack);
            rec.max_alive_dev = conc.max_alive_dev;
            rec.bands_ok = conc.dx_ok;
            rec.audits_ok = conc.pass() && !res.starved;
          } else if (cfg.mode == "pipeline") {
            PipelineParams params = PipelineParams::make(cfg.instances[idx].k, cfg.epsilon,
                                                         cfg.eta, cfg.delta, cfg.mu);
            if (cfg.gamma > 0) params.gamma_override = cfg.gamma;
            auto [m_star, prep] = full_simple_pipeline(h, params, cell_seed);
            rec.d0 = prep.d0;
            rec.d_omega = prep.d_omega;
            rec.stages = prep.stages;
            rec.m_size = prep.m_size;
            rec.ma_size = prep.ma_size;
            rec.m_star_size = prep.m_star_size;
            rec.leftover_m = prep.leftover_m;
            rec.leftover_m_star = prep.leftover_m_star;
            rec.waste = prep.waste_size;
            rec.bands_ok = prep.simplify.bands_ok;
            rec.audits_ok = verify_matching(h, m_star).valid &&
                            prep.leftover_m_star <= prep.leftover_m;
          } else if (cfg.mode == "color") {
            const int d = cfg.color_d > 0 ? cfg.color_d : static_cast<int>(h.max_degree());
            PipelineParams params;
            params.eta = cfg.eta;
            params.delta = cfg.delta;
            params.mu = cfg.mu;
            if (cfg.gamma > 0) params.gamma_override = cfg.gamma;
            auto [col, crep] = chromatic_index_coloring(h, d, cfg.color_c, params, cell_seed);
            rec.d0 = d;
            rec.palette = crep.palette_restricted;
            rec.fresh = crep.fresh_used;
            rec.m_size = crep.pipeline.m_size;
            rec.bands_ok = crep.pipeline.simplify.bands_ok;
            rec.audits_ok = crep.proper && crep.total &&
                            (crep.g_n == 0 || crep.palette >= crep.g_n);
          } else {
            throw std::invalid_argument("unknown mode: " + cfg.mode);
          }
        } catch (const std::exception& ex) {
          rec.error = ex.what();
          rec.audits_ok = false;
          ++rep.failures;
        }
        rep.all_audits_ok = rep.all_audits_ok && rec.audits_ok;
        rep.records.push_back(std::move(rec));
      }
    }
  }
  return rep;
}

inline void write_experiment_outputs(const ExperimentReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / "records.csv", std::ios::binary);
    rep.write_csv(csv);
  }
  {
    std::ofstream js(fs::path(out_dir) / "report.json", std::ios::binary);
    json j = rep;
    js << j.dump(2) << '\n';
  }
}

}  // namespace nibblematch
