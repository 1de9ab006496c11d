// Command-line surface for the DPM-G toolkit: data simulation, posterior
// fitting, density estimation, partition summaries, and the replicated
// rescaling experiments.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dpmg/dpmg.hpp"

namespace fs = std::filesystem;
using dpmg::ordered_json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 20260401;
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  std::string out_dir = ".";
  std::string config_path;
};

ordered_json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dpmg::validation_error("cannot open JSON file: " + path);
  ordered_json j;
  in >> j;
  return j;
}

dpmg::RunConfig load_run_config(const GlobalOpts& g, bool* sampler_specified = nullptr,
                                bool* alpha_specified = nullptr) {
  dpmg::RunConfig cfg;
  if (!g.config_path.empty()) {
    const ordered_json j = load_json(g.config_path);
    cfg = dpmg::run_config_from_json(j);
    if (sampler_specified) *sampler_specified = j.contains("sampler");
    if (alpha_specified) *alpha_specified = j.contains("alpha");
  } else {
    if (sampler_specified) *sampler_specified = false;
    if (alpha_specified) *alpha_specified = false;
  }
  return cfg;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

// Manifests record outputs relative to their own directory, so re-running a
// command into any location gives a byte-identical manifest.
std::vector<std::string> names_of(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(fs::path(p).filename().string());
  return out;
}

dpmg::Grid resolve_grid(const GlobalOpts& g, const std::string& min_s,
                        const std::string& max_s, const std::string& steps_s) {
  if (!min_s.empty() || !max_s.empty() || !steps_s.empty()) {
    auto parse_list = [](const std::string& s) {
      std::vector<double> out;
      std::string cur;
      for (char ch : s + ",") {
        if (ch == ',') {
          if (!cur.empty()) out.push_back(std::stod(cur));
          cur.clear();
        } else {
          cur += ch;
        }
      }
      return out;
    };
    const auto mins = parse_list(min_s);
    const auto maxs = parse_list(max_s);
    const auto steps = parse_list(steps_s);
    if (mins.size() != maxs.size() || mins.size() != steps.size() || mins.empty()) {
      throw dpmg::validation_error("grid flags must give equal-length min/max/steps lists");
    }
    std::vector<dpmg::GridAxis> axes;
    for (std::size_t k = 0; k < mins.size(); ++k) {
      axes.push_back({mins[k], maxs[k], static_cast<int>(steps[k])});
    }
    return dpmg::Grid(axes);
  }
  dpmg::RunConfig cfg = load_run_config(g);
  if (!cfg.grid || !cfg.grid->axes) {
    throw dpmg::validation_error(
        "density/compare need an explicit grid: --grid-min/--grid-max/--grid-steps or a "
        "config with grid.min/max/steps");
  }
  return dpmg::Grid(*cfg.grid->axes);
}

int cmd_simulate(const GlobalOpts& g, const std::string& kind, int n, double c,
                 const std::string& out_name) {
  dpmg::ScenarioSpec spec{dpmg::scenario_kind_from_string(kind), n, c};
  dpmg::RngStream rng(g.seed, dpmg::mix_ids(301, 0));
  const dpmg::MatrixXd data = dpmg::simulate_data(spec, rng);
  const std::string data_path = out_path(g, out_name);
  dpmg::write_csv(data, data_path);
  ordered_json cfg;
  cfg["kind"] = kind;
  cfg["n"] = n;
  cfg["c"] = c;
  dpmg::write_json_file(dpmg::make_manifest("simulate", g.seed, cfg, {}, names_of({data_path})),
                        out_path(g, "manifest.json"));
  std::cout << data_path << "\n";
  return 0;
}

int cmd_fit(const GlobalOpts& g, const std::string& data_path) {
  const dpmg::CsvTable table = dpmg::read_csv(data_path);
  dpmg::RunConfig cfg = load_run_config(g);
  cfg.sampler.seed = g.seed;
  const dpmg::BaseMeasure pi = cfg.resolve_base_measure(table.data);
  dpmg::DrawSet draws =
      dpmg::run_chain(table.data, pi, cfg.hyperprior, cfg.alpha, cfg.sampler);
  if (draws.empty_warning) {
    std::cerr << "warning: n_iter equals burn_in, the draw set is empty\n";
  }
  const std::string draws_path = out_path(g, "draws.jsonl");
  const std::string traces_path = out_path(g, "traces.csv");
  dpmg::write_drawset(draws, draws_path);
  dpmg::write_traces_csv(dpmg::traces(draws), traces_path);
  ordered_json cj = dpmg::run_config_to_json(cfg);
  cj["resolved_base_measure"] = dpmg::base_measure_to_json(pi);
  dpmg::write_json_file(
      dpmg::make_manifest("fit", g.seed, cj, {data_path}, names_of({draws_path, traces_path})),
      out_path(g, "manifest.json"));
  std::cout << draws_path << "\n";
  return 0;
}

int cmd_density(const GlobalOpts& g, const std::string& draws_path, const std::string& min_s,
                const std::string& max_s, const std::string& steps_s) {
  const dpmg::DrawSet draws = dpmg::read_drawset(draws_path);
  const dpmg::Grid grid = resolve_grid(g, min_s, max_s, steps_s);
  const dpmg::DensityEstimate est = dpmg::predictive_density(draws, grid, g.workers);
  const std::string density_path = out_path(g, "density.csv");
  dpmg::write_density_csv(est, density_path);
  ordered_json cfg;
  cfg["grid"] = dpmg::grid_spec_to_json(dpmg::GridSpec{grid.axes(), 0.25, 200});
  cfg["mass"] = est.mass;
  dpmg::write_json_file(
      dpmg::make_manifest("density", g.seed, cfg, {draws_path}, names_of({density_path})),
      out_path(g, "manifest.json"));
  std::cout << "mass " << dpmg::fmt_double(est.mass) << "\n";
  return 0;
}

int cmd_compare(const GlobalOpts& g, const std::string& draws_a, const std::string& draws_b,
                const std::string& map_a, const std::string& map_b, const std::string& min_s,
                const std::string& max_s, const std::string& steps_s) {
  const dpmg::DrawSet a = dpmg::read_drawset(draws_a);
  const dpmg::DrawSet b = dpmg::read_drawset(draws_b);
  const dpmg::AffineMap ga = dpmg::affine_from_json(load_json(map_a));
  const dpmg::AffineMap gb = dpmg::affine_from_json(load_json(map_b));
  const dpmg::Grid grid = resolve_grid(g, min_s, max_s, steps_s);
  const double dist = dpmg::compare_rescaled(a, b, ga, gb, grid, g.workers);
  dpmg::MatrixXd raw(2, 2);
  raw << 0.0, dist, dist, 0.0;
  const std::string matrix_path = out_path(g, "compare.csv");
  dpmg::write_matrix_csv(raw, matrix_path);
  ordered_json cfg;
  cfg["grid"] = dpmg::grid_spec_to_json(dpmg::GridSpec{grid.axes(), 0.25, 200});
  cfg["l1"] = dist;
  dpmg::write_json_file(dpmg::make_manifest("compare", g.seed, cfg, {draws_a, draws_b},
                                            names_of({matrix_path})),
                        out_path(g, "manifest.json"));
  std::cout << dpmg::fmt_double(dist) << "\n";
  return 0;
}

int cmd_cluster(const GlobalOpts& g, const std::string& draws_path, double level) {
  const dpmg::DrawSet draws = dpmg::read_drawset(draws_path);
  const dpmg::PSM p = dpmg::psm(draws);
  const dpmg::Partition opt = dpmg::optimal_partition(draws, p);
  const dpmg::CredibleBall ball = dpmg::credible_ball(draws, opt, level);
  const std::string psm_path = out_path(g, "psm.csv");
  const std::string part_path = out_path(g, "partition.json");
  const std::string ball_path = out_path(g, "credible_ball.json");
  dpmg::write_matrix_csv(p.m, psm_path);
  dpmg::write_json_file(dpmg::partition_to_json(opt), part_path);
  dpmg::write_json_file(dpmg::credible_ball_to_json(ball), ball_path);
  ordered_json cfg;
  cfg["level"] = level;
  dpmg::write_json_file(dpmg::make_manifest("cluster", g.seed, cfg, {draws_path},
                                            names_of({psm_path, part_path, ball_path})),
                        out_path(g, "manifest.json"));
  std::cout << "K " << opt.n_blocks() << " radius " << dpmg::fmt_double(ball.radius) << "\n";
  return 0;
}

void write_mixture_study_outputs(const GlobalOpts& g, const std::string& study,
                                 const dpmg::MixtureStudyResult& res,
                                 std::vector<std::string>& outputs) {
  {
    const std::string path = out_path(g, study + "_replicates.csv");
    std::ofstream out(path);
    out << "study,n,c,replicate,k_hat,failed,error\n";
    for (std::size_t ni = 0; ni < res.ns.size(); ++ni) {
      for (std::size_t r = 0; r < res.outcomes[ni].size(); ++r) {
        const auto& rep = res.outcomes[ni][r];
        for (std::size_t ci = 0; ci < res.cs.size(); ++ci) {
          out << study << "," << res.ns[ni] << "," << dpmg::fmt_double(res.cs[ci]) << "," << r
              << "," << (rep.k_hat.empty() ? 0 : rep.k_hat[ci]) << "," << (rep.failed ? 1 : 0)
              << "," << rep.error << "\n";
        }
      }
    }
    outputs.push_back(path);
  }
  {
    const std::string path = out_path(g, study + "_pairs.csv");
    std::ofstream out(path);
    out << "study,n,c1,c2,replicate,l1\n";
    for (std::size_t ni = 0; ni < res.ns.size(); ++ni) {
      for (std::size_t r = 0; r < res.outcomes[ni].size(); ++r) {
        const auto& rep = res.outcomes[ni][r];
        if (rep.failed || rep.l1.size() == 0) continue;
        for (std::size_t i = 0; i < res.cs.size(); ++i) {
          for (std::size_t j = i + 1; j < res.cs.size(); ++j) {
            out << study << "," << res.ns[ni] << "," << dpmg::fmt_double(res.cs[i]) << ","
                << dpmg::fmt_double(res.cs[j]) << "," << r << ","
                << dpmg::fmt_double(rep.l1(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(j)))
                << "\n";
          }
        }
      }
    }
    outputs.push_back(path);
  }
  {
    const std::string path = out_path(g, study + "_mean_k.csv");
    std::ofstream out(path);
    out << "n";
    for (double c : res.cs) out << ",c_" << dpmg::fmt_double(c);
    out << "\n";
    for (std::size_t ni = 0; ni < res.ns.size(); ++ni) {
      out << res.ns[ni];
      for (std::size_t ci = 0; ci < res.cs.size(); ++ci) {
        out << "," << dpmg::fmt_double(res.mean_k(static_cast<Eigen::Index>(ni),
                                                  static_cast<Eigen::Index>(ci)));
      }
      out << "\n";
    }
    outputs.push_back(path);
  }
  for (std::size_t ni = 0; ni < res.ns.size(); ++ni) {
    if (res.mean_l1[ni].size() == 0) continue;
    const std::string raw_path =
        out_path(g, study + "_l1_raw_n" + std::to_string(res.ns[ni]) + ".csv");
    const std::string norm_path =
        out_path(g, study + "_l1_normalized_n" + std::to_string(res.ns[ni]) + ".csv");
    dpmg::write_matrix_csv(res.mean_l1[ni], raw_path);
    dpmg::write_matrix_csv(res.norm_l1[ni], norm_path);
    outputs.push_back(raw_path);
    outputs.push_back(norm_path);
  }
}

int cmd_experiment(const GlobalOpts& g, const std::string& study, const std::string& scale,
                   int replicates) {
  if (scale != "desk" && scale != "paper") {
    throw dpmg::validation_error("experiment: scale must be 'desk' or 'paper'");
  }
  std::vector<std::string> outputs;
  ordered_json cfg;
  cfg["study"] = study;
  cfg["scale"] = scale;
  if (replicates > 0) cfg["replicates"] = replicates;
  if (study == "table1" || study == "fig2" || study == "fig4") {
    const dpmg::ScenarioKind kind =
        study == "fig4" ? dpmg::ScenarioKind::student_t : dpmg::ScenarioKind::mog2d;
    dpmg::MixtureStudyOptions opts =
        scale == "desk" ? dpmg::MixtureStudyOptions::desk(kind, g.seed, g.workers)
                        : dpmg::MixtureStudyOptions::paper(kind, g.seed, g.workers);
    if (replicates > 0) opts.replicates = replicates;
    opts.compute_densities = study != "table1";
    const dpmg::MixtureStudyResult res = dpmg::run_mixture_study(opts);
    write_mixture_study_outputs(g, study, res, outputs);
  } else if (study == "prop1") {
    dpmg::Prop1Options opts;
    opts.master_seed = g.seed;
    opts.workers = g.workers;
    const auto results = dpmg::run_prop1_study(opts);
    const std::string flags_path = out_path(g, "prop1_iterations.csv");
    {
      std::ofstream out(flags_path);
      out << "map_index,seed_index,iteration,alloc_match\n";
      for (const auto& r : results) {
        for (std::size_t it = 0; it < r.comparison.alloc_match.size(); ++it) {
          out << r.map_index << "," << r.seed_index << "," << (it + 1) << ","
              << static_cast<int>(r.comparison.alloc_match[it]) << "\n";
        }
      }
    }
    const std::string summary_path = out_path(g, "prop1_summary.csv");
    {
      std::ofstream out(summary_path);
      out << "map_index,seed_index,all_match,max_mu_rel_err,max_sigma_rel_err\n";
      for (const auto& r : results) {
        out << r.map_index << "," << r.seed_index << "," << (r.comparison.all_match ? 1 : 0)
            << "," << dpmg::fmt_double(r.comparison.max_mu_rel_err) << ","
            << dpmg::fmt_double(r.comparison.max_sigma_rel_err) << "\n";
      }
    }
    outputs.push_back(flags_path);
    outputs.push_back(summary_path);
  } else {
    throw dpmg::validation_error("experiment: unknown study '" + study + "'");
  }
  dpmg::write_json_file(dpmg::make_manifest("experiment", g.seed, cfg, {}, names_of(outputs)),
                        out_path(g, "manifest.json"));
  std::cout << outputs.size() << " report files in " << g.out_dir << "\n";
  return 0;
}

int cmd_analyze(const GlobalOpts& g, const std::string& data_path,
                const std::string& label_col, double level) {
  const dpmg::CsvTable table = dpmg::read_csv(data_path, label_col);
  dpmg::AnalyzeOptions opts;
  opts.config = load_run_config(g, &opts.sampler_specified, &opts.alpha_specified);
  opts.level = level;
  opts.seed = g.seed;
  opts.workers = g.workers;
  const dpmg::AnalyzeResult res = dpmg::analyze(table.data, table.labels, opts);
  if (!res.robustness.satisfied) {
    std::cerr << "warning: " << res.robustness.message << "\n";
  }
  std::vector<std::string> outputs;
  const std::string draws_path = out_path(g, "draws.jsonl");
  dpmg::write_drawset(res.draws, draws_path);
  outputs.push_back(draws_path);
  const std::string traces_path = out_path(g, "traces.csv");
  dpmg::write_traces_csv(dpmg::traces(res.draws), traces_path);
  outputs.push_back(traces_path);
  const std::string psm_path = out_path(g, "psm.csv");
  dpmg::write_matrix_csv(res.similarity.m, psm_path);
  outputs.push_back(psm_path);
  const std::string part_path = out_path(g, "partition.json");
  dpmg::write_json_file(dpmg::partition_to_json(res.optimal), part_path);
  outputs.push_back(part_path);
  const std::string ball_path = out_path(g, "credible_ball.json");
  dpmg::write_json_file(dpmg::credible_ball_to_json(res.ball), ball_path);
  outputs.push_back(ball_path);
  if (res.confusion) {
    const std::string conf_path = out_path(g, "confusion.csv");
    dpmg::write_confusion_csv(*res.confusion, conf_path);
    outputs.push_back(conf_path);
  }
  ordered_json cfg;
  cfg["standardization"] = dpmg::affine_to_json(res.standardization);
  cfg["base_measure"] = dpmg::base_measure_to_json(res.pi);
  cfg["hyperprior"] = dpmg::hyperprior_to_json(res.hyperprior);
  cfg["alpha"] = dpmg::alpha_to_json(res.alpha);
  cfg["sampler"] = dpmg::chain_config_to_json(res.chain);
  cfg["robustness_condition"] = res.robustness.message;
  cfg["robustness_satisfied"] = res.robustness.satisfied;
  cfg["alpha_prior_mean"] = res.alpha_prior_mean;
  cfg["prior_expected_clusters"] = res.prior_expected_clusters;
  dpmg::write_json_file(dpmg::make_manifest("analyze", g.seed, cfg, {data_path}, names_of(outputs)),
                        out_path(g, "manifest.json"));
  std::cout << "K " << res.optimal.n_blocks() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet process mixture of Gaussians: density estimation and "
               "clustering with affine-transformation support"};
  app.require_subcommand(1);
  GlobalOpts g;
  if (g.workers < 1) g.workers = 1;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--workers", g.workers, "worker threads for replicated runs");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--config", g.config_path, "JSON configuration file");

  auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset");
  std::string sim_kind = "mog2d", sim_out = "data.csv";
  int sim_n = 100;
  double sim_c = 1.0;
  sim->add_option("--kind", sim_kind, "mog2d | student_t");
  sim->add_option("--n", sim_n, "sample size");
  sim->add_option("--c", sim_c, "rescaling constant");
  sim->add_option("--out", sim_out, "output file name");

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler on a CSV dataset");
  std::string fit_data;
  fit->add_option("--data", fit_data, "data CSV")->required();

  auto* dens = app.add_subcommand("density", "posterior predictive density on a grid");
  std::string dens_draws, grid_min, grid_max, grid_steps;
  dens->add_option("--draws", dens_draws, "draws.jsonl from fit")->required();
  dens->add_option("--grid-min", grid_min, "comma-separated grid minima");
  dens->add_option("--grid-max", grid_max, "comma-separated grid maxima");
  dens->add_option("--grid-steps", grid_steps, "comma-separated point counts");

  auto* cmp = app.add_subcommand("compare", "L1 distance between rescaled fits");
  std::string cmp_a, cmp_b, cmp_map_a, cmp_map_b;
  cmp->add_option("--draws-a", cmp_a)->required();
  cmp->add_option("--draws-b", cmp_b)->required();
  cmp->add_option("--map-a", cmp_map_a, "JSON file with fields C, b")->required();
  cmp->add_option("--map-b", cmp_map_b, "JSON file with fields C, b")->required();
  cmp->add_option("--grid-min", grid_min);
  cmp->add_option("--grid-max", grid_max);
  cmp->add_option("--grid-steps", grid_steps);

  auto* clu = app.add_subcommand("cluster", "partition summaries of a draw set");
  std::string clu_draws;
  double clu_level = 0.95;
  clu->add_option("--draws", clu_draws)->required();
  clu->add_option("--level", clu_level, "credible ball level");

  auto* exp = app.add_subcommand("experiment", "replicated rescaling studies");
  std::string exp_study = "table1", exp_scale = "desk";
  int exp_replicates = 0;
  exp->add_option("--study", exp_study, "table1 | fig2 | fig4 | prop1")->required();
  exp->add_option("--scale", exp_scale, "desk | paper");
  exp->add_option("--replicates", exp_replicates, "override the scale's replicate count");

  auto* ana = app.add_subcommand("analyze", "standardize, fit and summarize a dataset");
  std::string ana_data, ana_label = "label";
  double ana_level = 0.95;
  ana->add_option("--data", ana_data, "data CSV")->required();
  ana->add_option("--label-col", ana_label, "reference label column name");
  ana->add_option("--level", ana_level, "credible ball level");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(g, sim_kind, sim_n, sim_c, sim_out);
    if (fit->parsed()) return cmd_fit(g, fit_data);
    if (dens->parsed()) return cmd_density(g, dens_draws, grid_min, grid_max, grid_steps);
    if (cmp->parsed()) {
      return cmd_compare(g, cmp_a, cmp_b, cmp_map_a, cmp_map_b, grid_min, grid_max,
                         grid_steps);
    }
    if (clu->parsed()) return cmd_cluster(g, clu_draws, clu_level);
    if (exp->parsed()) return cmd_experiment(g, exp_study, exp_scale, exp_replicates);
    if (ana->parsed()) return cmd_analyze(g, ana_data, ana_label, ana_level);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  } catch (const dpmg::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dpmg::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
