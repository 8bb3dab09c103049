// Command line front end: generate instances, run the matching process and
// its verification suites, and audit artifacts written by earlier runs.
// Exit codes: 0 all audits pass, 1 audit failures, 2 execution error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nibblematch/harness.hpp"

namespace fs = std::filesystem;
using namespace nibblematch;

namespace {

Hypergraph load_hypergraph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_text(in);
}

void save_hypergraph(const Hypergraph& h, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_text(h, out);
}

void save_matching(const std::vector<EdgeId>& edges, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << edges.size() << '\n';
  for (EdgeId e : edges) out << e << '\n';
}

std::vector<EdgeId> load_matching(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::size_t count = 0;
  in >> count;
  std::vector<EdgeId> edges(count);
  for (auto& e : edges)
    if (!(in >> e)) throw std::runtime_error("truncated matching file " + path);
  return edges;
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

struct CommonArgs {
  std::uint64_t seed = 1;
  std::string config;
  std::string out = ".";
  std::string format = "csv";
  std::string input;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_input) {
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--config", a.config, "JSON config file");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--format", a.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  if (with_input) cmd->add_option("--in", a.input, "input hypergraph (text format)");
}

GeneratorSpec spec_from_config(const CommonArgs& a) {
  if (a.config.empty()) throw std::runtime_error("--config or --in is required");
  return load_json(a.config).get<GeneratorSpec>();
}

Hypergraph obtain_instance(const CommonArgs& a) {
  if (!a.input.empty()) return load_hypergraph(a.input);
  return instantiate(spec_from_config(a), a.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-random hypergraph matching toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, nib_args, aug_args, simp_args, col_args, exp_args, ver_args;

  auto* gen = app.add_subcommand("generate", "write an instance in the text format");
  add_common(gen, gen_args, false);
  std::string gen_family = "sts";
  std::size_t gen_n = 9;
  int gen_k = 3, gen_d = 0, gen_c = 1, gen_base_d = 0, gen_tol = 2;
  gen->add_option("--family", gen_family, "sts|random_regular_simple|near_regular_block|embed_host");
  gen->add_option("--n", gen_n, "vertex count / block order");
  gen->add_option("--k", gen_k, "uniformity");
  gen->add_option("--d", gen_d, "target degree");
  gen->add_option("--c", gen_c, "codegree bound");
  gen->add_option("--base-d", gen_base_d, "base degree for embed_host");
  gen->add_option("--tol", gen_tol, "degree tolerance");

  auto* nib = app.add_subcommand("nibble", "run the staged random matching process");
  add_common(nib, nib_args, true);
  double nib_gamma = 0.5;
  std::size_t nib_max_stages = 4000;
  nib->add_option("--gamma", nib_gamma, "stop exponent");
  nib->add_option("--max-stages", nib_max_stages, "stage cap");

  auto* aug = app.add_subcommand("augment", "two-round process with star augmentation");
  add_common(aug, aug_args, true);
  double aug_eps = 0.25, aug_eta = 0.0, aug_delta = 0.3, aug_gamma = -1.0;
  bool aug_export_stars = false;
  aug->add_option("--epsilon", aug_eps, "degree regularity exponent");
  aug->add_option("--eta", aug_eta, "improvement exponent (0 = half the bound)");
  aug->add_option("--delta", aug_delta, "reduction exponent");
  aug->add_option("--gamma", aug_gamma, "override the outer stop exponent");
  aug->add_flag("--export-stars", aug_export_stars,
                "write the star hypergraph and its back-map for offline inspection");

  auto* simp = app.add_subcommand("simplify", "codegree reduction to a simple sub-hypergraph");
  add_common(simp, simp_args, true);
  double simp_c = 0.0, simp_delta = 0.3;
  simp->add_option("--c", simp_c, "codegree bound (0 = measured)");
  simp->add_option("--delta", simp_delta, "reduction exponent");

  auto* col = app.add_subcommand("color", "edge coloring through the incidence process");
  add_common(col, col_args, true);
  int col_d = 0, col_c = 0;
  double col_eta = 0.0, col_delta = 0.3, col_gamma = -1.0;
  col->add_option("--d", col_d, "degree bound (0 = measured max degree)");
  col->add_option("--c", col_c, "codegree bound (0 = measured)");
  col->add_option("--eta", col_eta, "improvement exponent (0 = half the bound)");
  col->add_option("--delta", col_delta, "reduction exponent");
  col->add_option("--gamma", col_gamma, "override the outer stop exponent");

  auto* exp = app.add_subcommand("experiment", "run a config of seeded trials");
  add_common(exp, exp_args, false);

  auto* ver = app.add_subcommand("verify", "re-audit artifacts written by earlier runs");
  add_common(ver, ver_args, true);
  std::string ver_matching, ver_coloring;
  ver->add_option("--matching", ver_matching, "matching file to audit");
  ver->add_option("--coloring", ver_coloring, "coloring CSV to audit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GeneratorSpec spec;
      if (!gen_args.config.empty()) {
        spec = load_json(gen_args.config).get<GeneratorSpec>();
      } else {
        spec.family = family_from_name(gen_family);
        spec.n = gen_n;
        spec.k = gen_k;
        spec.d = gen_d;
        spec.c = gen_c;
        spec.base_d = gen_base_d;
        spec.tolerance = gen_tol;
      }
      Hypergraph h = instantiate(spec, gen_args.seed);
      fs::create_directories(gen_args.out);
      save_hypergraph(h, (fs::path(gen_args.out) / "instance.txt").string());
      std::cout << "wrote " << h.num_vertices() << " vertices, " << h.num_edges() << " edges\n";
      return 0;
    }

    if (*nib) {
      Hypergraph h = obtain_instance(nib_args);
      NibbleConfig cfg;
      cfg.gamma = nib_gamma;
      cfg.max_stages = nib_max_stages;
      cfg.seed = nib_args.seed;
      NibbleResult res = run_nibble(h, cfg);
      fs::create_directories(nib_args.out);
      {
        std::ofstream csv(fs::path(nib_args.out) / "trajectory.csv", std::ios::binary);
        res.log.write_csv(csv);
      }
      save_matching(res.matching.edges, (fs::path(nib_args.out) / "matching.txt").string());
      auto conc = check_concentration(res, h.num_vertices(), *h.uniformity(), nib_gamma, 0.1);
      json summary = {{"d0", res.d0},
                      {"delta0", res.delta0},
                      {"d_omega", res.d_omega},
                      {"stages", res.stages},
                      {"m_size", res.matching.size()},
                      {"leftover", h.num_vertices() - res.matching.covered_count()},
                      {"starved", res.starved},
                      {"concentration", conc},
                      {"warnings", res.warnings}};
      save_json(summary, (fs::path(nib_args.out) / "summary.json").string());
      const bool ok = verify_matching(h, res.matching).valid && !res.starved;
      std::cout << (ok ? "ok" : "audit failures") << ": matching " << res.matching.size()
                << ", stages " << res.stages << '\n';
      return ok ? 0 : 1;
    }

    if (*aug) {
      Hypergraph h = obtain_instance(aug_args);
      const int k = h.uniformity().value_or(0);
      const double eta0 = compute_eta0(k, aug_eps);
      PipelineParams params =
          PipelineParams::make(k, aug_eps, aug_eta > 0 ? aug_eta : eta0 / 2, aug_delta);
      if (aug_gamma >= 0) params.gamma_override = aug_gamma;
      auto [m_star, rep] = full_simple_pipeline(h, params, aug_args.seed);
      fs::create_directories(aug_args.out);
      save_matching(m_star.edges, (fs::path(aug_args.out) / "matching.txt").string());
      save_json(json(rep), (fs::path(aug_args.out) / "report.json").string());
      if (aug_export_stars) {
        // re-run the first round to materialize the star hypergraph as dumped
        NibbleConfig ncfg;
        ncfg.gamma = params.outer_gamma();
        ncfg.seed = Rng(aug_args.seed).split(1).next_u64();
        NibbleResult nib = run_nibble(h, ncfg);
        AugStarHypergraph ha = enumerate_aug_stars(h, nib.matching, nib.waste);
        std::ofstream hs(fs::path(aug_args.out) / "stars.txt", std::ios::binary);
        write_text(ha.graph, hs);
        std::ofstream bm(fs::path(aug_args.out) / "stars_backmap.txt", std::ios::binary);
        write_star_backmap(ha, bm);
      }
      const bool ok = verify_matching(h, m_star).valid && rep.leftover_m_star <= rep.leftover_m;
      std::cout << (ok ? "ok" : "audit failures") << ": matched " << rep.m_star_size << " (+"
                << rep.m_star_size - rep.m_size << " over the first round)\n";
      return ok ? 0 : 1;
    }

    if (*simp) {
      Hypergraph h = obtain_instance(simp_args);
      const double c = simp_c > 0 ? simp_c : std::max<std::size_t>(1, h.max_codegree());
      auto res = simple_subhypergraph(h, c, simp_delta, simp_args.seed);
      fs::create_directories(simp_args.out);
      save_hypergraph(res.hypergraph, (fs::path(simp_args.out) / "simple.txt").string());
      save_json(json(res.report), (fs::path(simp_args.out) / "report.json").string());
      const bool ok = res.report.simple;
      std::cout << (ok ? "ok" : "audit failures") << ": kept " << res.report.edges_out << " of "
                << res.report.edges_in << " edges\n";
      return ok ? 0 : 1;
    }

    if (*col) {
      Hypergraph h = obtain_instance(col_args);
      const int d = col_d > 0 ? col_d : static_cast<int>(h.max_degree());
      const int c = col_c > 0 ? col_c : static_cast<int>(std::max<std::size_t>(1, h.max_codegree()));
      PipelineParams params;
      params.eta = col_eta;
      params.delta = col_delta;
      if (col_gamma >= 0) params.gamma_override = col_gamma;
      auto [coloring, rep] = chromatic_index_coloring(h, d, c, params, col_args.seed);
      fs::create_directories(col_args.out);
      {
        std::ofstream csv(fs::path(col_args.out) / "coloring.csv", std::ios::binary);
        write_coloring_csv(coloring, csv);
      }
      save_json(json(rep), (fs::path(col_args.out) / "report.json").string());
      const bool ok = rep.proper && rep.total && (rep.g_n == 0 || rep.palette_restricted >= rep.g_n);
      std::cout << (ok ? "ok" : "audit failures") << ": palette " << rep.palette_restricted
                << " (degree bound " << d << ")\n";
      return ok ? 0 : 1;
    }

    if (*exp) {
      if (exp_args.config.empty()) throw std::runtime_error("experiment requires --config");
      ExperimentConfig cfg = load_json(exp_args.config).get<ExperimentConfig>();
      if (!exp_args.out.empty()) cfg.out_dir = exp_args.out;
      ExperimentReport rep = run_experiment(cfg);
      write_experiment_outputs(rep, cfg.out_dir.empty() ? "." : cfg.out_dir);
      std::cout << (rep.all_audits_ok ? "ok" : "audit failures") << ": " << rep.records.size()
                << " trials, " << rep.failures << " errors\n";
      return rep.all_audits_ok ? 0 : 1;
    }

    if (*ver) {
      if (ver_args.input.empty()) throw std::runtime_error("verify requires --in");
      Hypergraph h = load_hypergraph(ver_args.input);
      bool ok = h.incidence_consistent();
      std::cout << "hypergraph: " << h.num_vertices() << " vertices, " << h.num_edges()
                << " edges, max codegree " << h.max_codegree()
                << (h.is_simple() ? " (simple)" : "") << '\n';
      if (!ver_matching.empty()) {
        auto rep = verify_matching(h, load_matching(ver_matching));
        std::cout << "matching: " << (rep.valid ? "valid" : "INVALID") << ", size " << rep.size
                  << ", covers " << rep.covered_count << '\n';
        ok = ok && rep.valid;
      }
      if (!ver_coloring.empty()) {
        std::ifstream in(ver_coloring, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + ver_coloring);
        EdgeColoring col = read_coloring_csv(in, 0);
        col.color.resize(h.num_edges(), 0);
        const bool proper = audit_proper_coloring(h, col, false);
        std::cout << "coloring: " << (proper ? "proper" : "IMPROPER") << ", palette "
                  << col.palette_size() << (col.total() ? ", total" : ", partial") << '\n';
        ok = ok && proper;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 2;
}
