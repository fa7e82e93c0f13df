// Command-line front end: configuration, seeding, ensemble orchestration
// and structured CSV/JSON output for every simulation mode.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cips/config.hpp"
#include "cips/coupling.hpp"
#include "cips/errors.hpp"
#include "cips/experiments.hpp"
#include "cips/io.hpp"
#include "cips/ips_sim.hpp"
#include "cips/limit_chain.hpp"
#include "cips/meanfield.hpp"
#include "cips/oracle.hpp"
#include "cips/tagged_sim.hpp"

namespace {

using cips::ExperimentConfig;
using json = nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t jobs = -1;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true) {
  cmd->add_option("--config", args.config_path, "configuration file")->required();
  auto* out = cmd->add_option("--out", args.out_dir, "output directory");
  if (out_required) out->required();
  cmd->add_option("--jobs", args.jobs, "worker threads (0 = all cores)");
  cmd->add_option("--seed", args.seed, "override ensemble.seed");
}

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = cips::parse_experiment_config(cips::ConfigFile::load(args.config_path));
  if (args.jobs >= 0) cfg.jobs = static_cast<unsigned>(args.jobs);
  if (args.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

json base_meta(const std::string& command, const ExperimentConfig& cfg, std::int64_t sites,
               std::int64_t particles) {
  json meta;
  meta["command"] = command;
  meta["model"] = cfg.model_name;
  meta["rho"] = cfg.rho;
  meta["L"] = sites;
  meta["N"] = particles;
  meta["seed"] = cfg.master_seed;
  meta["n_paths"] = cfg.n_paths;
  meta["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  return meta;
}

void write_meta(const std::string& dir, const json& meta) {
  cips::io::write_text(dir + "/meta.json", meta.dump(2) + "\n");
}

int cmd_simulate_ips(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);
  const std::int64_t sites = cfg.l_values.front();
  const std::int64_t particles = cfg.particles_for(sites);

  const cips::IpsEnsembleResult result = cips::run_ips_ensemble(
      sites, particles, cfg.kernel, cfg.obs_times, cfg.n_paths, cfg.master_seed, cfg.jobs);

  std::vector<cips::io::Row> fk_rows;
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    for (std::size_t k = 0; k < result.mean_fk[i].size(); ++k) {
      fk_rows.push_back({cips::io::format_double(result.times[i]), std::to_string(k),
                         cips::io::format_double(result.mean_fk[i][k]),
                         cips::io::format_double(result.se_fk[i][k])});
    }
  }
  cips::io::write_csv(args.out_dir + "/fk.csv", "t,k,mean_Fk,stderr_Fk", fk_rows);

  std::vector<cips::io::Row> moment_rows;
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    moment_rows.push_back({cips::io::format_double(result.times[i]),
                           cips::io::format_double(result.m1[i]),
                           cips::io::format_double(result.m2[i]),
                           cips::io::format_double(result.m3[i])});
  }
  cips::io::write_csv(args.out_dir + "/moments.csv", "t,m1,m2,m3", moment_rows);
  write_meta(args.out_dir, base_meta("simulate-ips", cfg, sites, particles));
  return 0;
}

int cmd_simulate_tagged(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);
  const std::int64_t sites = cfg.l_values.front();
  const std::int64_t particles = cfg.particles_for(sites);

  const cips::TaggedEnsembleResult result =
      cips::run_tagged_ensemble(sites, particles, cfg.kernel, cfg.init, cfg.obs_times,
                                cfg.n_paths, cfg.master_seed, cfg.jobs);

  std::vector<cips::io::Row> hist_rows;
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    for (std::size_t k = 1; k < result.w_histogram[i].size(); ++k) {
      hist_rows.push_back({cips::io::format_double(result.times[i]), std::to_string(k),
                           cips::io::format_double(result.w_histogram[i][k]),
                           cips::io::format_double(result.w_histogram_se[i][k])});
    }
  }
  cips::io::write_csv(args.out_dir + "/w_hist.csv", "t,k,prob,stderr", hist_rows);

  std::vector<cips::io::Row> moment_rows;
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    moment_rows.push_back({cips::io::format_double(result.times[i]),
                           cips::io::format_double(result.mean_w[i]),
                           cips::io::format_double(result.mean_w2[i])});
  }
  cips::io::write_csv(args.out_dir + "/w_moments.csv", "t,mean_w,mean_w2", moment_rows);
  write_meta(args.out_dir, base_meta("simulate-tagged", cfg, sites, particles));
  return 0;
}

int cmd_solve_meanfield(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);

  cips::MeanFieldOptions options = cfg.meanfield;
  options.track_p = true;
  const std::vector<double> f0 = cfg.initial_profile();
  const cips::MeanFieldSolution solution = cips::integrate(f0, cfg.kernel, cfg.t_max, options);

  cips::io::write_solution(args.out_dir, solution);

  std::vector<cips::io::Row> rate_rows;
  std::vector<cips::io::Row> moment_rows;
  for (std::size_t i = 0; i < solution.grid.size(); ++i) {
    const auto rates = cips::birth_death_rates(solution.f_nodes[i], cfg.kernel);
    for (std::size_t k = 0; k < rates.mu.size(); ++k) {
      rate_rows.push_back({cips::io::format_double(solution.grid[i]), std::to_string(k),
                           cips::io::format_double(rates.mu[k]),
                           cips::io::format_double(rates.beta[k])});
    }
    double m1 = 0, m2 = 0, m3 = 0;
    const auto& f = solution.f_nodes[i];
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double kd = static_cast<double>(k);
      m1 += kd * f[k];
      m2 += kd * kd * f[k];
      m3 += kd * kd * kd * f[k];
    }
    moment_rows.push_back({cips::io::format_double(solution.grid[i]),
                           cips::io::format_double(m1), cips::io::format_double(m2),
                           cips::io::format_double(m3)});
  }
  cips::io::write_csv(args.out_dir + "/rates.csv", "t,k,mu_k,beta_k", rate_rows);
  cips::io::write_csv(args.out_dir + "/moments.csv", "t,m1,m2,m3", moment_rows);

  json meta = base_meta("solve-meanfield", cfg, 0, 0);
  meta["rho_solution"] = solution.rho;
  meta["t_max"] = cfg.t_max;
  meta["nodes"] = solution.grid.size();
  meta["truncation"] = solution.f_nodes.back().size();
  write_meta(args.out_dir, meta);
  return 0;
}

int cmd_simulate_limit(const CommonArgs& args, const std::string& meanfield_dir) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);

  const json mf_meta = json::parse(cips::io::read_text(meanfield_dir + "/meta.json"));
  const double rho = mf_meta.at("rho_solution").get<double>();
  const cips::MeanFieldSolution solution = cips::io::read_solution(meanfield_dir, rho);

  const cips::LimitEnsembleResult result =
      cips::ensemble_law(solution, cfg.kernel, cfg.obs_times, cfg.n_paths, cfg.master_seed,
                         cfg.jobs, cfg.envelope);

  std::vector<cips::io::Row> hist_rows;
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    for (std::size_t k = 1; k < result.histogram[i].size(); ++k) {
      hist_rows.push_back({cips::io::format_double(result.times[i]), std::to_string(k),
                           cips::io::format_double(result.histogram[i][k]),
                           cips::io::format_double(result.histogram_se[i][k])});
    }
  }
  cips::io::write_csv(args.out_dir + "/what_hist.csv", "t,k,prob,stderr", hist_rows);

  std::vector<cips::io::Row> moment_rows;
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    moment_rows.push_back({cips::io::format_double(result.times[i]),
                           cips::io::format_double(result.mean_w[i]),
                           cips::io::format_double(result.mean_w_se[i]),
                           cips::io::format_double(result.mean_w2[i]),
                           cips::io::format_double(result.mean_w2_se[i])});
  }
  cips::io::write_csv(args.out_dir + "/what_moments.csv", "t,mean,stderr,mean_sq,stderr_sq",
                      moment_rows);

  json meta = base_meta("simulate-limit", cfg, 0, 0);
  meta["meanfield_dir"] = meanfield_dir;
  write_meta(args.out_dir, meta);
  return 0;
}

int cmd_couple(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);
  const std::int64_t sites = cfg.l_values.front();
  const std::int64_t particles = cfg.particles_for(sites);

  const cips::CoupledEnsembleReport report = cips::run_coupled_ensemble(
      sites, particles, cfg.kernel, cfg.rho, cfg.init, cfg.obs_times, cfg.n_paths,
      cfg.master_seed, cfg.jobs);

  std::vector<cips::io::Row> dom_rows;
  for (std::size_t p = 0; p < report.violations_per_path.size(); ++p) {
    dom_rows.push_back({std::to_string(p), std::to_string(report.violations_per_path[p])});
  }
  cips::io::write_csv(args.out_dir + "/domination.csv", "path_id,violations", dom_rows);

  std::vector<cips::io::Row> moment_rows;
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    moment_rows.push_back(
        {cips::io::format_double(report.times[i]), cips::io::format_double(report.m2_w[i]),
         cips::io::format_double(report.m2_w_se[i]), cips::io::format_double(report.m2_wbar[i]),
         cips::io::format_double(report.m2_wbar_se[i]),
         cips::io::format_double(report.mean_wbar[i]),
         cips::io::format_double(report.mean_wbar_se[i])});
  }
  cips::io::write_csv(args.out_dir + "/coupled_moments.csv",
                      "t,m2_w,m2_w_se,m2_wbar,m2_wbar_se,mean_wbar,mean_wbar_se", moment_rows);

  json meta = base_meta("couple", cfg, sites, particles);
  meta["total_violations"] = report.total_violations;
  meta["capped_paths"] = report.capped_paths;
  write_meta(args.out_dir, meta);
  return 0;
}

int cmd_oracle(const CommonArgs& args, std::vector<double> t_list) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);
  const std::int64_t sites = cfg.l_values.front();
  const std::int64_t particles = cfg.particles_for(sites);
  if (t_list.empty()) t_list = cfg.oracle_times;

  const cips::ExactChain plain =
      cips::ExactChain::build(sites, particles, cfg.kernel, /*tagged=*/false);
  const std::vector<double> init_plain = plain.initial_distribution(cfg.init);
  std::vector<cips::io::Row> fk_rows;
  for (double t : t_list) {
    const std::vector<double> dist = plain.transient(init_plain, t);
    const std::vector<double> fk = plain.mean_fk(dist);
    for (std::size_t k = 0; k < fk.size(); ++k) {
      fk_rows.push_back({cips::io::format_double(t), std::to_string(k),
                         cips::io::format_double(fk[k])});
    }
  }
  cips::io::write_csv(args.out_dir + "/exact_fk.csv", "t,k,mean_Fk", fk_rows);

  const cips::ExactChain tagged =
      cips::ExactChain::build(sites, particles, cfg.kernel, /*tagged=*/true);
  const std::vector<double> init_tagged = tagged.initial_distribution(cfg.init);
  std::vector<cips::io::Row> w_rows;
  for (double t : t_list) {
    const std::vector<double> dist = tagged.transient(init_tagged, t);
    const std::vector<double> w_law = tagged.w_marginal(dist);
    for (std::size_t k = 1; k < w_law.size(); ++k) {
      w_rows.push_back({cips::io::format_double(t), std::to_string(k),
                        cips::io::format_double(w_law[k])});
    }
  }
  cips::io::write_csv(args.out_dir + "/exact_w.csv", "t,k,prob", w_rows);

  json meta = base_meta("oracle", cfg, sites, particles);
  meta["states_plain"] = plain.state_count();
  meta["states_tagged"] = tagged.state_count();
  write_meta(args.out_dir, meta);
  return 0;
}

int cmd_convergence(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);

  const cips::ConvergenceReport report = cips::run_convergence(cfg);

  std::vector<cips::io::Row> rows;
  for (std::size_t i = 0; i < report.l_values.size(); ++i) {
    rows.push_back({std::to_string(report.l_values[i]), cips::io::format_double(report.err1[i]),
                    cips::io::format_double(report.err1_se[i]),
                    cips::io::format_double(report.errw[i]),
                    cips::io::format_double(report.errw_se[i])});
  }
  cips::io::write_csv(args.out_dir + "/convergence.csv", "L,err1,err1_se,errw,errw_se", rows);

  json meta = base_meta("convergence", cfg, 0, 0);
  meta["t_star"] = report.t_star;
  meta["slope_err1"] = report.slope_err1;
  meta["slope_errw"] = report.slope_errw;
  meta["err1_decreasing"] = report.err1_decreasing;
  meta["errw_decreasing"] = report.errw_decreasing;
  write_meta(args.out_dir, meta);

  std::cout << "err1 slope " << report.slope_err1 << ", errW slope " << report.slope_errw
            << (report.err1_decreasing && report.errw_decreasing ? " (decreasing)"
                                                                 : " (NOT decreasing)")
            << "\n";
  if (!report.err1_decreasing || !report.errw_decreasing) {
    throw cips::NumericalError("convergence errors are not decreasing along the L list");
  }
  return 0;
}

int cmd_coarsening(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);

  const cips::CoarseningReport report = cips::run_coarsening(cfg);

  std::vector<cips::io::Row> rows;
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    rows.push_back({cips::io::format_double(report.times[i]),
                    cips::io::format_double(report.mean_what[i]),
                    cips::io::format_double(report.mean_what_se[i]),
                    cips::io::format_double(report.m2_over_rho[i]),
                    cips::io::format_double(report.rel_gap[i])});
  }
  cips::io::write_csv(args.out_dir + "/coarsening.csv",
                      "t,mean_what,stderr,m2_over_rho,rel_gap", rows);

  json meta = base_meta("coarsening", cfg, 0, 0);
  meta["growth_exponent"] = report.growth_exponent;
  meta["identity_within_3sigma"] = report.identity_within_3sigma;
  meta["m2_strictly_increasing"] = report.m2_strictly_increasing;
  write_meta(args.out_dir, meta);
  return 0;
}

int cmd_replay_seed(const CommonArgs& args, std::uint64_t replay_seed,
                    const std::string& module) {
  const ExperimentConfig cfg = load_config(args);
  cips::io::ensure_directory(args.out_dir);
  const std::int64_t sites = cfg.l_values.front();
  const std::int64_t particles = cfg.particles_for(sites);

  cips::Rng rng(replay_seed);
  std::vector<cips::io::Row> rows;

  if (module == "ips") {
    const cips::ClassConfig initial = cips::sample_iid_config(sites, particles, rng);
    cips::IpsSimulator sim(initial, cfg.kernel);
    for (double t : cfg.obs_times) {
      while (sim.advance(t, rng)) {
        sim.config().verify();
      }
      rows.push_back({cips::io::format_double(t),
                      cips::io::format_double(static_cast<double>(sim.event_count()))});
    }
    cips::io::write_snapshot(args.out_dir + "/snapshot.csv", args.out_dir + "/snapshot.json",
                             sim.config(), cfg.obs_times.back(), replay_seed, cfg.model_name);
  } else if (module == "tagged") {
    const cips::TaggedState initial = cips::sample_initial(sites, particles, cfg.init, rng);
    cips::TaggedSimulator sim(initial, cfg.kernel);
    for (double t : cfg.obs_times) {
      while (sim.advance(t, rng)) {
        sim.state().verify();
      }
      rows.push_back({cips::io::format_double(t), std::to_string(sim.state().w)});
    }
    cips::io::write_snapshot(args.out_dir + "/snapshot.csv", args.out_dir + "/snapshot.json",
                             sim.state().to_class_config(), cfg.obs_times.back(), replay_seed,
                             cfg.model_name);
  } else if (module == "couple") {
    cips::TaggedState initial = cips::sample_initial(sites, particles, cfg.init, rng);
    cips::CoupledSimulator sim(std::move(initial), cfg.kernel, cfg.rho);
    for (double t : cfg.obs_times) {
      while (sim.advance(t, rng)) {
      }
      rows.push_back({cips::io::format_double(t), std::to_string(sim.w()),
                      cips::wbar_to_string(sim.wbar_raw())});
    }
    if (sim.domination_violations() > 0) {
      throw cips::InvariantError("domination violated during replay");
    }
  } else {
    throw cips::ConfigError("replay module must be ips, tagged or couple");
  }

  cips::io::write_csv(args.out_dir + "/replay.csv", "t,value,extra", rows);
  json meta = base_meta("replay-seed", cfg, sites, particles);
  meta["replay_seed"] = replay_seed;
  meta["module"] = module;
  write_meta(args.out_dir, meta);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condensing interacting particle systems on the complete graph: "
               "event-driven simulation, mean-field solver, tagged-particle limits"};
  app.require_subcommand(1);

  CommonArgs ips_args, tagged_args, mf_args, limit_args, couple_args, oracle_args, conv_args,
      coars_args, replay_args;
  std::string meanfield_dir;
  std::vector<double> oracle_t;
  std::uint64_t replay_seed = 0;
  std::string replay_module = "tagged";

  add_common(app.add_subcommand("simulate-ips", "ensemble of the particle system"), ips_args);
  add_common(app.add_subcommand("simulate-tagged", "ensemble of the tagged process"),
             tagged_args);
  add_common(app.add_subcommand("solve-meanfield", "integrate the mean-field hierarchy"),
             mf_args);
  auto* limit_cmd =
      app.add_subcommand("simulate-limit", "ensemble of the limit occupation chain");
  add_common(limit_cmd, limit_args);
  limit_cmd->add_option("--meanfield", meanfield_dir, "solve-meanfield output directory")
      ->required();
  add_common(app.add_subcommand("couple", "dominating-process coupling run"), couple_args);
  auto* oracle_cmd = app.add_subcommand("oracle", "exact transient law of a tiny system");
  add_common(oracle_cmd, oracle_args);
  oracle_cmd->add_option("--t", oracle_t, "evaluation times")->delimiter(',');
  add_common(app.add_subcommand("convergence", "finite-size convergence experiment"), conv_args);
  add_common(app.add_subcommand("coarsening", "coarsening identity report"), coars_args);
  auto* replay_cmd = app.add_subcommand("replay-seed", "re-run a single path by derived seed");
  add_common(replay_cmd, replay_args);
  replay_cmd->add_option("--replay-seed", replay_seed, "derived per-path seed")->required();
  replay_cmd->add_option("--module", replay_module, "ips | tagged | couple");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("simulate-ips")) return cmd_simulate_ips(ips_args);
    if (app.got_subcommand("simulate-tagged")) return cmd_simulate_tagged(tagged_args);
    if (app.got_subcommand("solve-meanfield")) return cmd_solve_meanfield(mf_args);
    if (app.got_subcommand("simulate-limit")) return cmd_simulate_limit(limit_args, meanfield_dir);
    if (app.got_subcommand("couple")) return cmd_couple(couple_args);
    if (app.got_subcommand("oracle")) return cmd_oracle(oracle_args, oracle_t);
    if (app.got_subcommand("convergence")) return cmd_convergence(conv_args);
    if (app.got_subcommand("coarsening")) return cmd_coarsening(coars_args);
    if (app.got_subcommand("replay-seed"))
      return cmd_replay_seed(replay_args, replay_seed, replay_module);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const cips::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cips::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const cips::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
