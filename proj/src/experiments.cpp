#include "cips/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "cips/errors.hpp"
#include "cips/ips_sim.hpp"
#include "cips/numerics.hpp"
#include "cips/oracle.hpp"
#include "cips/parallel.hpp"
#include "cips/tagged_sim.hpp"

namespace cips {

namespace {

// Accumulate per-path F_k rows into mean/se arrays.
void finalize_mean_se(const std::vector<std::vector<double>>& samples,
                      std::vector<double>& mean, std::vector<double>& se) {
  std::size_t width = 0;
  for (const auto& row : samples) width = std::max(width, row.size());
  mean.assign(width, 0.0);
  se.assign(width, 0.0);
  const double n = static_cast<double>(samples.size());
  for (const auto& row : samples) {
    for (std::size_t k = 0; k < row.size(); ++k) mean[k] += row[k];
  }
  for (auto& v : mean) v /= n;
  for (const auto& row : samples) {
    for (std::size_t k = 0; k < width; ++k) {
      const double x = k < row.size() ? row[k] : 0.0;
      se[k] += (x - mean[k]) * (x - mean[k]);
    }
  }
  for (auto& v : se) v = std::sqrt(v / n / n);  // stderr of the mean
}

}  // namespace

IpsEnsembleResult run_ips_ensemble(std::int64_t sites, std::int64_t particles,
                                   const RateKernel& kernel, std::span<const double> obs_times,
                                   std::size_t n_paths, std::uint64_t master_seed, unsigned jobs,
                                   bool track_class_law, std::span<const double> reference_f) {
  if (obs_times.empty()) throw ConfigError("ensemble needs observation times");
  const std::size_t n_times = obs_times.size();
  const double t_max = obs_times.back();
  std::vector<double> times(obs_times.begin(), obs_times.end());

  struct PathData {
    std::vector<std::vector<double>> fk;   // per time
    std::vector<double> m1, m2, m3;
    std::vector<double> l1_dev;
    std::vector<std::string> class_keys;
  };
  std::vector<PathData> paths(n_paths);

  parallel_for(n_paths, jobs, [&](std::size_t index) {
    const std::uint64_t seed = derive_seed(master_seed, index);
    with_path_context(index, seed, [&] {
    Rng rng(seed);
    const ClassConfig initial = sample_iid_config(sites, particles, rng);
    const IpsTrajectory traj = simulate(initial, kernel, t_max, times, rng);
    PathData& data = paths[index];
    data.fk.resize(n_times);
    data.m1.resize(n_times);
    data.m2.resize(n_times);
    data.m3.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) {
      data.fk[i] = traj.measures[i].f;
      double m1 = 0.0, m2 = 0.0, m3 = 0.0;
      for (std::size_t k = 0; k < traj.measures[i].f.size(); ++k) {
        const double kf = static_cast<double>(k);
        m1 += kf * traj.measures[i].f[k];
        m2 += kf * kf * traj.measures[i].f[k];
        m3 += kf * kf * kf * traj.measures[i].f[k];
      }
      data.m1[i] = m1;
      data.m2[i] = m2;
      data.m3[i] = m3;
    }
    if (!reference_f.empty()) {
      data.l1_dev.resize(n_times);
      for (std::size_t i = 0; i < n_times; ++i) {
        const auto& f = traj.measures[i].f;
        double dev = 0.0;
        for (std::size_t k = 0; k < std::max(f.size(), reference_f.size()); ++k) {
          const double a = k < f.size() ? f[k] : 0.0;
          const double b = k < reference_f.size() ? reference_f[k] : 0.0;
          dev += std::abs(a - b);
        }
        data.l1_dev[i] = dev;
      }
    }
    if (track_class_law) {
      data.class_keys.resize(n_times);
      for (std::size_t i = 0; i < n_times; ++i) {
        std::string key;
        const auto& f = traj.measures[i].f;
        for (std::size_t k = 0; k < f.size(); ++k) {
          key += std::to_string(static_cast<std::int64_t>(
              std::llround(f[k] * static_cast<double>(sites))));
          key += ',';
        }
        data.class_keys[i] = std::move(key);
      }
    }
    });
  });

  IpsEnsembleResult result;
  result.times = times;
  result.n_paths = n_paths;
  result.mean_fk.resize(n_times);
  result.se_fk.resize(n_times);
  result.m1.assign(n_times, 0.0);
  result.m2.assign(n_times, 0.0);
  result.m3.assign(n_times, 0.0);
  if (track_class_law) result.class_law.resize(n_times);
  if (!reference_f.empty()) {
    result.mean_l1_dev.assign(n_times, 0.0);
    result.se_l1_dev.assign(n_times, 0.0);
  }

  std::vector<std::vector<double>> scratch(n_paths);
  for (std::size_t i = 0; i < n_times; ++i) {
    for (std::size_t p = 0; p < n_paths; ++p) scratch[p] = paths[p].fk[i];
    finalize_mean_se(scratch, result.mean_fk[i], result.se_fk[i]);
    for (std::size_t p = 0; p < n_paths; ++p) {
      result.m1[i] += paths[p].m1[i];
      result.m2[i] += paths[p].m2[i];
      result.m3[i] += paths[p].m3[i];
    }
    result.m1[i] /= static_cast<double>(n_paths);
    result.m2[i] /= static_cast<double>(n_paths);
    result.m3[i] /= static_cast<double>(n_paths);
    if (track_class_law) {
      for (std::size_t p = 0; p < n_paths; ++p) {
        result.class_law[i][paths[p].class_keys[i]] += 1.0 / static_cast<double>(n_paths);
      }
    }
    if (!reference_f.empty()) {
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        s1 += paths[p].l1_dev[i];
        s2 += paths[p].l1_dev[i] * paths[p].l1_dev[i];
      }
      const double n = static_cast<double>(n_paths);
      result.mean_l1_dev[i] = s1 / n;
      result.se_l1_dev[i] = std::sqrt(std::max(0.0, s2 / n - (s1 / n) * (s1 / n)) / n);
    }
  }
  return result;
}

TaggedEnsembleResult run_tagged_ensemble(std::int64_t sites, std::int64_t particles,
                                         const RateKernel& kernel, InitScheme scheme,
                                         std::span<const double> obs_times, std::size_t n_paths,
                                         std::uint64_t master_seed, unsigned jobs,
                                         bool track_class_law) {
  if (obs_times.empty()) throw ConfigError("ensemble needs observation times");
  const std::size_t n_times = obs_times.size();
  const double t_max = obs_times.back();
  std::vector<double> times(obs_times.begin(), obs_times.end());

  struct PathData {
    std::vector<std::int64_t> w;
    std::vector<std::string> class_keys;
  };
  std::vector<PathData> paths(n_paths);

  parallel_for(n_paths, jobs, [&](std::size_t index) {
    const std::uint64_t seed = derive_seed(master_seed, index);
    with_path_context(index, seed, [&] {
    Rng rng(seed);
    const TaggedState initial = sample_initial(sites, particles, scheme, rng);
    const TaggedTrajectory traj = simulate_tagged(initial, kernel, t_max, times, rng);
    PathData& data = paths[index];
    data.w = traj.w_values;
    if (track_class_law) {
      data.class_keys.resize(n_times);
      for (std::size_t i = 0; i < n_times; ++i) {
        std::string key;
        const auto& f = traj.measures[i].f;
        for (std::size_t k = 0; k < f.size(); ++k) {
          key += std::to_string(static_cast<std::int64_t>(
              std::llround(f[k] * static_cast<double>(sites))));
          key += ',';
        }
        data.class_keys[i] = std::move(key);
      }
    }
    });
  });

  TaggedEnsembleResult result;
  result.times = times;
  result.n_paths = n_paths;
  result.w_histogram.resize(n_times);
  result.w_histogram_se.resize(n_times);
  result.mean_w.assign(n_times, 0.0);
  result.mean_w_se.assign(n_times, 0.0);
  result.mean_w2.assign(n_times, 0.0);
  result.mean_w2_se.assign(n_times, 0.0);
  if (track_class_law) result.class_law.resize(n_times);

  const double n = static_cast<double>(n_paths);
  for (std::size_t i = 0; i < n_times; ++i) {
    std::int64_t w_max = 1;
    for (std::size_t p = 0; p < n_paths; ++p) w_max = std::max(w_max, paths[p].w[i]);
    std::vector<double> hist(static_cast<std::size_t>(w_max) + 1, 0.0);
    double s1 = 0, s2 = 0, s4 = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const double w = static_cast<double>(paths[p].w[i]);
      hist[paths[p].w[i]] += 1.0;
      s1 += w;
      s2 += w * w;
      s4 += w * w * w * w;
    }
    result.mean_w[i] = s1 / n;
    result.mean_w2[i] = s2 / n;
    result.mean_w_se[i] = std::sqrt(std::max(0.0, s2 / n - (s1 / n) * (s1 / n)) / n);
    result.mean_w2_se[i] = std::sqrt(std::max(0.0, s4 / n - (s2 / n) * (s2 / n)) / n);
    result.w_histogram_se[i].resize(hist.size());
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double p_hat = hist[k] / n;
      result.w_histogram_se[i][k] = std::sqrt(std::max(0.0, p_hat * (1.0 - p_hat)) / n);
      hist[k] = p_hat;
    }
    result.w_histogram[i] = std::move(hist);
    if (track_class_law) {
      for (std::size_t p = 0; p < n_paths; ++p) {
        result.class_law[i][paths[p].class_keys[i]] += 1.0 / n;
      }
    }
  }
  return result;
}

double class_law_tv(const std::map<std::string, double>& sampled,
                    const std::map<std::string, double>& reference) {
  double acc = 0.0;
  for (const auto& [key, p] : sampled) {
    auto it = reference.find(key);
    acc += std::abs(p - (it == reference.end() ? 0.0 : it->second));
  }
  for (const auto& [key, q] : reference) {
    if (sampled.find(key) == sampled.end()) acc += q;
  }
  return 0.5 * acc;
}

ConvergenceReport run_convergence(const ExperimentConfig& config) {
  if (config.obs_times.empty()) throw ConfigError("convergence needs an observation time");
  const double t_star = config.obs_times.back();

  MeanFieldOptions mf = config.meanfield;
  mf.track_p = true;
  const std::vector<double> f0 = config.initial_profile();
  const MeanFieldSolution solution = integrate(f0, config.kernel, t_star, mf);
  const std::vector<double> f_ref = solution.f_at(t_star);
  const std::vector<double> p_ref = solution.p_at(t_star);

  ConvergenceReport report;
  report.t_star = t_star;
  report.l_values = config.l_values;

  const std::vector<double> obs = {t_star};
  for (std::size_t li = 0; li < config.l_values.size(); ++li) {
    const std::int64_t sites = config.l_values[li];
    const std::int64_t particles = config.particles_for(sites);

    // err1 is the ensemble mean of the per-path L1 deviation from f(t*):
    // the fluctuation-scale content of the empirical-measure LLN, decaying
    // like L^{-1/2}. (The L1 gap of the ensemble *mean* is floored by the
    // O(1/L) multinomial-vs-Poisson bias and mixes scales.)
    const IpsEnsembleResult ips =
        run_ips_ensemble(sites, particles, config.kernel, obs, config.n_paths,
                         derive_seed(config.master_seed, 1000 + li), config.jobs,
                         /*track_class_law=*/false, f_ref);
    report.err1.push_back(ips.mean_l1_dev[0]);
    report.err1_se.push_back(ips.se_l1_dev[0]);

    const TaggedEnsembleResult tagged =
        run_tagged_ensemble(sites, particles, config.kernel, config.init, obs, config.n_paths,
                            derive_seed(config.master_seed, 2000 + li), config.jobs);
    const double errw = tv_distance(tagged.w_histogram[0], p_ref);
    double varw = 0.0;
    for (double se : tagged.w_histogram_se[0]) varw += se * se;
    report.errw.push_back(errw);
    report.errw_se.push_back(0.5 * std::sqrt(varw));
  }

  for (std::size_t i = 0; i + 1 < report.err1.size(); ++i) {
    const double slack1 = std::hypot(report.err1_se[i], report.err1_se[i + 1]);
    const double slackw = std::hypot(report.errw_se[i], report.errw_se[i + 1]);
    if (report.err1[i + 1] >= report.err1[i] + slack1) report.err1_decreasing = false;
    if (report.errw[i + 1] >= report.errw[i] + slackw) report.errw_decreasing = false;
  }

  if (report.l_values.size() >= 2) {
    std::vector<double> ls(report.l_values.begin(), report.l_values.end());
    report.slope_err1 = loglog_slope(ls, report.err1);
    report.slope_errw = loglog_slope(ls, report.errw);
  }
  return report;
}

CoarseningReport run_coarsening(const ExperimentConfig& config) {
  if (config.obs_times.empty()) throw ConfigError("coarsening needs observation times");
  const double t_end = config.obs_times.back();

  MeanFieldOptions mf = config.meanfield;
  mf.track_p = true;
  const std::vector<double> f0 = config.initial_profile();
  const MeanFieldSolution solution = integrate(f0, config.kernel, t_end, mf);

  const LimitEnsembleResult ensemble =
      ensemble_law(solution, config.kernel, config.obs_times, config.n_paths,
                   config.master_seed, config.jobs, config.envelope);

  CoarseningReport report;
  report.times = ensemble.times;
  report.mean_what = ensemble.mean_w;
  report.mean_what_se = ensemble.mean_w_se;
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    const double m2 = solution.moment_at(report.times[i], 2);
    report.m2_over_rho.push_back(m2 / solution.rho);
    const double gap = std::abs(report.mean_what[i] - m2 / solution.rho);
    report.rel_gap.push_back(gap / std::max(1e-300, m2 / solution.rho));
    if (gap > 3.0 * std::max(report.mean_what_se[i], 1e-12)) {
      report.identity_within_3sigma = false;
    }
  }
  // Strict monotonicity of m2 checked on the solution node grid over the
  // observation window.
  double prev = -1.0;
  bool first = true;
  for (double t : solution.grid) {
    if (t < config.obs_times.front() || t > t_end) continue;
    const double m2 = solution.moment_at(t, 2);
    if (!first && m2 <= prev) report.m2_strictly_increasing = false;
    prev = m2;
    first = false;
  }
  if (report.times.size() >= 2) {
    std::vector<double> m2s;
    for (double t : report.times) m2s.push_back(solution.moment_at(t, 2));
    report.growth_exponent = loglog_slope(report.times, m2s);
  }
  return report;
}

}  // namespace cips
