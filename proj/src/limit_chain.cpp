#include "cips/limit_chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cips/errors.hpp"
#include "cips/numerics.hpp"
#include "cips/parallel.hpp"

namespace cips {

namespace {

// beta_w and mu_w for a single state from a raw profile.
std::pair<double, double> rates_for_state(std::int64_t w, std::span<const double> f,
                                          const RateKernel& kernel) {
  CompensatedSum beta;
  CompensatedSum mu;
  for (std::size_t l = 0; l < f.size(); ++l) {
    if (f[l] == 0.0) continue;
    mu.add(kernel(w, static_cast<std::int64_t>(l)) * f[l]);
    if (l >= 1) beta.add(kernel(static_cast<std::int64_t>(l), w) * f[l]);
  }
  return {beta.value(), mu.value()};
}

}  // namespace

LimitRates limit_rates(std::int64_t w, double t, const MeanFieldSolution& solution,
                       const RateKernel& kernel) {
  if (w < 1) throw ConfigError("limit chain state must be >= 1");
  const std::vector<double> f = solution.f_at(t);

  LimitRates rates;
  const double wd = static_cast<double>(w);
  rates.long_range.assign(f.size() + 1, 0.0);
  CompensatedSum mu;
  CompensatedSum beta;
  for (std::size_t l = 0; l < f.size(); ++l) {
    if (f[l] != 0.0) {
      const double c = kernel(w, static_cast<std::int64_t>(l));
      mu.add(c * f[l]);
      rates.long_range[l + 1] = c * f[l] / wd;
      if (l >= 1) beta.add(kernel(static_cast<std::int64_t>(l), w) * f[l]);
    }
  }
  rates.birth = beta.value();
  rates.death = mu.value() * (wd - 1.0) / wd;
  rates.long_range_total = mu.value() / wd;
  return rates;
}

LimitChain::LimitChain(std::int64_t w0, double t0, const MeanFieldSolution& solution,
                       const RateKernel& kernel, EnvelopeMode mode)
    : w_(w0), time_(t0), solution_(&solution), kernel_(&kernel), mode_(mode) {
  if (w0 < 1) throw ConfigError("limit chain starts at w >= 1");
  if (t0 < solution.t_begin() || t0 > solution.t_end()) {
    throw ConfigError("limit chain start time outside solution grid");
  }
}

double LimitChain::envelope(double t_lo, double t_hi) const {
  if (mode_ == EnvelopeMode::Lip) {
    const double c = kernel_->sublinearity_constant();
    const double rho = solution_->rho;
    return 1.05 * (2.0 * c * (1.0 + rho) * static_cast<double>(w_) + c * (1.0 + rho));
  }
  const auto [beta_lo, mu_lo] = rates_for_state(w_, solution_->f_at(t_lo), *kernel_);
  const auto [beta_hi, mu_hi] = rates_for_state(w_, solution_->f_at(t_hi), *kernel_);
  return 1.05 * std::max(beta_lo + mu_lo, beta_hi + mu_hi);
}

bool LimitChain::advance(double t_cap, Rng& rng) {
  if (t_cap > solution_->t_end() + 1e-12) {
    throw ConfigError("advance beyond the mean-field solution grid");
  }
  const auto& grid = solution_->grid;
  while (time_ < t_cap) {
    // Lookahead window: up to the next solution node (rates are linear on
    // the node cell for fixed w) or the cap, whichever is first.
    auto it = std::upper_bound(grid.begin(), grid.end(), time_);
    double window_end = it == grid.end() ? t_cap : std::min(*it, t_cap);
    if (window_end <= time_) window_end = t_cap;

    const double bound = envelope(time_, window_end);
    if (bound <= 0.0) {
      time_ = window_end;
      continue;
    }
    const double dt = rng.exponential(bound);
    if (time_ + dt > window_end) {
      time_ = window_end;
      continue;
    }
    time_ += dt;

    const LimitRates rates = limit_rates(w_, time_, *solution_, *kernel_);
    const double total = rates.total();
    if (total > bound * (1.0 + 1e-9)) {
      throw NumericalError("thinning envelope violated at t=" + std::to_string(time_) +
                           " w=" + std::to_string(w_) + " (grid too coarse)");
    }
    if (rng.uniform() * bound >= total) continue;  // rejected candidate

    // Accepted: pick a target.
    double u = rng.uniform() * total;
    if (u < rates.birth) {
      ++w_;
    } else if (u < rates.birth + rates.death) {
      --w_;
      if (w_ < 1) throw InvariantError("limit chain dropped below 1");
    } else {
      u -= rates.birth + rates.death;
      double acc = 0.0;
      std::int64_t target = -1;
      for (std::size_t k = 1; k < rates.long_range.size(); ++k) {
        if (rates.long_range[k] <= 0.0) continue;
        acc += rates.long_range[k];
        target = static_cast<std::int64_t>(k);
        if (u < acc) break;
      }
      if (target < 1) throw InvariantError("long-range jump without a target");
      w_ = target;
    }
    ++jumps_;
    return true;
  }
  return false;
}

std::int64_t sample_discrete(std::span<const double> weights, Rng& rng) {
  CompensatedSum total_acc;
  for (double w : weights) total_acc.add(w);
  const double total = total_acc.value();
  if (total <= 0.0) throw ConfigError("cannot sample from empty distribution");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::int64_t last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<std::int64_t>(i);
    if (u < acc) break;
  }
  return last;
}

LimitEnsembleResult ensemble_law(const MeanFieldSolution& solution, const RateKernel& kernel,
                                 std::span<const double> obs_times, std::size_t n_paths,
                                 std::uint64_t master_seed, unsigned jobs, EnvelopeMode mode) {
  if (obs_times.empty()) throw ConfigError("ensemble needs observation times");
  for (std::size_t i = 1; i < obs_times.size(); ++i) {
    if (obs_times[i] < obs_times[i - 1]) throw ConfigError("observation times must be sorted");
  }
  if (obs_times.back() > solution.t_end() + 1e-12) {
    throw ConfigError("observation beyond the mean-field solution grid");
  }

  const std::vector<double> p0 = solution.has_p() ? solution.p_at(solution.t_begin())
                                                  : size_bias(solution.f_at(solution.t_begin()),
                                                              solution.rho);

  const std::size_t n_times = obs_times.size();
  std::vector<std::vector<std::int64_t>> observed(n_paths,
                                                  std::vector<std::int64_t>(n_times, 0));

  std::vector<double> times_copy(obs_times.begin(), obs_times.end());
  parallel_for(n_paths, jobs, [&](std::size_t path) {
    const std::uint64_t seed = derive_seed(master_seed, path);
    with_path_context(path, seed, [&] {
      Rng rng(seed);
      const std::int64_t w0 = sample_discrete(p0, rng);
      LimitChain chain(std::max<std::int64_t>(w0, 1), solution.t_begin(), solution, kernel, mode);
      for (std::size_t i = 0; i < n_times; ++i) {
        while (chain.advance(times_copy[i], rng)) {
        }
        observed[path][i] = chain.w();
      }
    });
  });

  LimitEnsembleResult result;
  result.times = times_copy;
  result.n_paths = n_paths;
  result.histogram.resize(n_times);
  result.histogram_se.resize(n_times);
  result.mean_w.resize(n_times);
  result.mean_w_se.resize(n_times);
  result.mean_w2.resize(n_times);
  result.mean_w2_se.resize(n_times);

  for (std::size_t i = 0; i < n_times; ++i) {
    std::int64_t w_max = 1;
    for (std::size_t p = 0; p < n_paths; ++p) w_max = std::max(w_max, observed[p][i]);
    std::vector<double> hist(static_cast<std::size_t>(w_max) + 1, 0.0);
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const double w = static_cast<double>(observed[p][i]);
      hist[observed[p][i]] += 1.0;
      s1 += w;
      s2 += w * w;
      s4 += w * w * w * w;
    }
    const double n = static_cast<double>(n_paths);
    result.mean_w[i] = s1 / n;
    result.mean_w2[i] = s2 / n;
    const double var_w = std::max(0.0, s2 / n - (s1 / n) * (s1 / n));
    const double var_w2 = std::max(0.0, s4 / n - (s2 / n) * (s2 / n));
    result.mean_w_se[i] = std::sqrt(var_w / n);
    result.mean_w2_se[i] = std::sqrt(var_w2 / n);
    result.histogram_se[i].resize(hist.size());
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double p_hat = hist[k] / n;
      result.histogram_se[i][k] = std::sqrt(std::max(0.0, p_hat * (1.0 - p_hat)) / n);
      hist[k] = p_hat;
    }
    result.histogram[i] = std::move(hist);
  }
  return result;
}

}  // namespace cips
