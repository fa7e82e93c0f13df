#include "cips/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cips/errors.hpp"
#include "cips/numerics.hpp"
#include "cips/parallel.hpp"

namespace cips {

double wbar_to_double(wbar_t value) {
  // Split into two 64-bit halves; exact up to double rounding.
  const double high = static_cast<double>(static_cast<std::uint64_t>(value >> 64));
  const double low = static_cast<double>(static_cast<std::uint64_t>(value));
  return high * 18446744073709551616.0 + low;
}

std::string wbar_to_string(wbar_t value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits += static_cast<char>('0' + static_cast<int>(value % 10));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

double exit_rate_bar(std::int64_t w, const ClassConfig& full_config, const RateKernel& kernel,
                     double rho) {
  const double c = kernel.sublinearity_constant();
  const double cbar = 2.0 * c * (1.0 + 3.0 * rho);
  const double n_over_l = static_cast<double>(full_config.particles()) /
                          static_cast<double>(full_config.sites());
  return cbar * static_cast<double>(w) + 2.0 * c * (1.0 + n_over_l);
}

double exit_rate_bar_from_events(std::int64_t w, const ClassConfig& full_config,
                                 const RateKernel& kernel, double rho) {
  const double c = kernel.sublinearity_constant();
  const double cbar = 2.0 * c * (1.0 + 3.0 * rho);
  CompensatedSum long_jumps;
  const auto& counts = full_config.counts();
  const double sites = static_cast<double>(full_config.sites());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    const double fk = static_cast<double>(counts[k]) / sites;
    long_jumps.add(2.0 * c * (1.0 + static_cast<double>(k)) * fk);
  }
  return cbar * static_cast<double>(w) + long_jumps.value();
}

CoupledSimulator::CoupledSimulator(TaggedState initial, const RateKernel& kernel, double rho,
                                   CouplingMode mode)
    : tagged_(std::move(initial), kernel), kernel_(&kernel), rho_(rho), mode_(mode) {
  const double n_over_l = static_cast<double>(tagged_.state().particles) /
                          static_cast<double>(tagged_.state().sites);
  if (n_over_l > rho_ * (1.0 + 1e-12)) {
    throw ConfigError("coupling requires N/L <= rho (thermodynamic-limit convention)");
  }
  cbar_ = 2.0 * kernel.sublinearity_constant() * (1.0 + 3.0 * rho_);
  // Same initial value for both processes.
  excess_ = 0;
  wbar_standalone_ = static_cast<wbar_t>(tagged_.state().w);
}

void CoupledSimulator::bump_excess(wbar_t delta) {
  wbar_t& cell = mode_ == CouplingMode::Paired ? excess_ : wbar_standalone_;
  if (cell > kCap - delta) {
    capped_ = true;
    cap_time_ = time_;
    return;
  }
  cell += delta;
}

void CoupledSimulator::forward_excess(double dt, Rng& rng) {
  wbar_t& cell = mode_ == CouplingMode::Paired ? excess_ : wbar_standalone_;
  if (cell == 0 || dt <= 0.0) return;
  const double x = cbar_ * dt;
  const double theta = std::expm1(x);
  const double shape = wbar_to_double(cell);
  const double lambda = rng.gamma(shape) * theta;
  if (!std::isfinite(lambda) || lambda > 1e36) {
    capped_ = true;
    cap_time_ = time_;
    return;
  }
  const double births = rng.poisson(lambda);
  if (births <= 0.0) return;
  if (births >= wbar_to_double(kCap)) {
    capped_ = true;
    cap_time_ = time_;
    return;
  }
  bump_excess(static_cast<wbar_t>(births));
}

// comp: the simultaneous Wbar jump covers the W jump. comp0 (W <= Wbar)
// holds because the excess representation keeps Wbar - W as an unsigned
// quantity whose updates never subtract.
void CoupledSimulator::check_domination(std::int64_t w_jump_abs, wbar_t wbar_jump) {
  if (wbar_jump < static_cast<wbar_t>(w_jump_abs)) ++violations_;
}

bool CoupledSimulator::advance(double t_cap, Rng& rng) {
  if (capped_) {
    time_ = std::max(time_, t_cap);
    return false;
  }
  const TaggedState& st = tagged_.state();
  const double inv_sites = 1.0 / static_cast<double>(st.sites);
  const double c = kernel_->sublinearity_constant();

  // Structural clocks: tagged-system events plus Wbar's long-jump clocks
  // (total 2C(1+N/L)); in paired mode the W-birth/death events are thinned
  // out of the Cbar*W birth stream.
  const TaggedRates rates = tagged_.rates();
  const double long_jump_total =
      2.0 * c *
      (1.0 + static_cast<double>(st.particles) / static_cast<double>(st.sites));

  double structural = rates.env_env + long_jump_total;
  double stream_a = 0.0;
  if (mode_ == CouplingMode::Paired) {
    stream_a = cbar_ * static_cast<double>(st.w);
    if (rates.env_to_tagged + rates.tagged_stay > stream_a * (1.0 + 1e-9)) {
      throw InvariantError("W-event rates exceed the dominating birth stream");
    }
    structural += stream_a;
  } else {
    structural += rates.env_to_tagged + rates.tagged_stay + rates.tagged_move;
  }

  const double dt = rng.exponential(structural);
  if (time_ + dt > t_cap) {
    forward_excess(t_cap - time_, rng);
    time_ = t_cap;
    return false;
  }
  forward_excess(dt, rng);
  time_ += dt;
  if (capped_) return false;

  double u = rng.uniform() * structural;

  if (u < rates.env_env) {
    tagged_.execute_env_env(rng);
    return true;
  }
  u -= rates.env_env;

  if (mode_ == CouplingMode::Paired) {
    if (u < stream_a) {
      // Dominating birth stream tick: classify as W-birth, W-death or
      // surplus, proportionally to the true W rates.
      if (u < rates.env_to_tagged) {
        const std::int64_t k = tagged_.sample_env_to_tagged_class(rng);
        tagged_.execute_env_to_tagged(k);
        // W and Wbar both moved +1; excess unchanged.
        check_domination(1, 1);
      } else if (u < rates.env_to_tagged + rates.tagged_stay) {
        const std::int64_t l = tagged_.sample_tagged_target_class(rng);
        tagged_.execute_tagged_departure(l, /*relocate=*/false);
        bump_excess(2);  // W down one, Wbar up one
        check_domination(1, 1);
      } else {
        bump_excess(1);  // surplus birth: Wbar up one
      }
      return !capped_;
    }
    u -= stream_a;
  } else {
    if (u < rates.env_to_tagged) {
      tagged_.execute_env_to_tagged(tagged_.sample_env_to_tagged_class(rng));
      return true;
    }
    u -= rates.env_to_tagged;
    if (u < rates.tagged_stay) {
      tagged_.execute_tagged_departure(tagged_.sample_tagged_target_class(rng), false);
      return true;
    }
    u -= rates.tagged_stay;
    if (u < rates.tagged_move) {
      tagged_.execute_tagged_departure(tagged_.sample_tagged_target_class(rng), true);
      return true;
    }
    u -= rates.tagged_move;
  }

  // Long-jump clock tick: select class k proportional to 2C(1+k)F_k over
  // the full configuration.
  {
    const ClassConfig full = st.to_class_config();
    const auto& counts = full.counts();
    double acc = 0.0;
    std::int64_t chosen = -1;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 0) continue;
      acc += 2.0 * c * (1.0 + static_cast<double>(k)) * static_cast<double>(counts[k]) * inv_sites;
      chosen = static_cast<std::int64_t>(k);
      if (u < acc) break;
    }
    if (chosen < 0) throw InvariantError("long-jump clock fired with no class");

    const wbar_t wbar_old = wbar_raw();
    const std::int64_t w_old = st.w;

    bool paired_relocation = false;
    if (mode_ == CouplingMode::Paired) {
      // Accept as a true W relocation with probability
      // [(1/W) c(W,k) n'_k/(L-1)] / [2C(1+k) F_k].
      const double fk = static_cast<double>(full.count(chosen)) * inv_sites;
      const double hat_rate = 2.0 * c * (1.0 + static_cast<double>(chosen)) * fk;
      const double true_rate = (*kernel_)(w_old, chosen) *
                               static_cast<double>(st.env.count(chosen)) /
                               (static_cast<double>(st.sites - 1) * static_cast<double>(w_old));
      const double ratio = true_rate / hat_rate;
      if (ratio > 1.0 + 1e-9) {
        throw InvariantError("relocation rate exceeds its dominating long-jump rate");
      }
      paired_relocation = rng.uniform() < ratio;
    }

    // Wbar jumps to 2*Wbar + k in both cases.
    if (wbar_old > (kCap - static_cast<wbar_t>(chosen)) / 2) {
      capped_ = true;
      cap_time_ = time_;
      return false;
    }
    const wbar_t wbar_new = 2 * wbar_old + static_cast<wbar_t>(chosen);

    if (paired_relocation) {
      tagged_.execute_tagged_departure(chosen, /*relocate=*/true);
      const std::int64_t w_new = tagged_.state().w;
      excess_ = wbar_new - static_cast<wbar_t>(w_new);
      check_domination(std::abs(w_new - w_old), wbar_new - wbar_old);
    } else if (mode_ == CouplingMode::Paired) {
      excess_ = wbar_new - static_cast<wbar_t>(w_old);
    } else {
      wbar_standalone_ = wbar_new;
    }
  }
  return true;
}

CoupledEnsembleReport run_coupled_ensemble(std::int64_t sites, std::int64_t particles,
                                           const RateKernel& kernel, double rho,
                                           InitScheme scheme, std::span<const double> obs_times,
                                           std::size_t n_paths, std::uint64_t master_seed,
                                           unsigned jobs, CouplingMode mode) {
  if (obs_times.empty()) throw ConfigError("coupled ensemble needs observation times");
  const std::size_t n_times = obs_times.size();

  struct PathRecord {
    std::vector<double> w;
    std::vector<double> wbar;
    std::uint64_t violations = 0;
    bool capped = false;
  };
  std::vector<PathRecord> records(n_paths);
  std::vector<double> times_copy(obs_times.begin(), obs_times.end());

  parallel_for(n_paths, jobs, [&](std::size_t path) {
    const std::uint64_t seed = derive_seed(master_seed, path);
    with_path_context(path, seed, [&] {
    Rng rng(seed);
    TaggedState st = sample_initial(sites, particles, scheme, rng);
    CoupledSimulator sim(std::move(st), kernel, rho, mode);
    PathRecord& rec = records[path];
    rec.w.resize(n_times);
    rec.wbar.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) {
      while (sim.advance(times_copy[i], rng)) {
      }
      rec.w[i] = static_cast<double>(sim.w());
      rec.wbar[i] = wbar_to_double(sim.wbar_raw());
      if (sim.w() > 0 && sim.wbar_raw() < static_cast<wbar_t>(sim.w())) {
        ++rec.violations;  // comp0 violated at an observation time
      }
    }
    rec.violations += sim.domination_violations();
    rec.capped = sim.capped();
    });
  });

  CoupledEnsembleReport report;
  report.times = times_copy;
  report.n_paths = n_paths;
  report.m2_w.assign(n_times, 0.0);
  report.m2_w_se.assign(n_times, 0.0);
  report.m2_wbar.assign(n_times, 0.0);
  report.m2_wbar_se.assign(n_times, 0.0);
  report.mean_wbar.assign(n_times, 0.0);
  report.mean_wbar_se.assign(n_times, 0.0);
  report.violations_per_path.resize(n_paths);

  for (std::size_t p = 0; p < n_paths; ++p) {
    report.total_violations += records[p].violations;
    report.violations_per_path[p] = records[p].violations;
    if (records[p].capped) ++report.capped_paths;
  }

  const double n = static_cast<double>(n_paths);
  for (std::size_t i = 0; i < n_times; ++i) {
    double sw2 = 0.0, sw4 = 0.0, sb1 = 0.0, sb2 = 0.0, sb4 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const double w = records[p].w[i];
      const double wb = records[p].wbar[i];
      sw2 += w * w;
      sw4 += w * w * w * w;
      sb1 += wb;
      sb2 += wb * wb;
      sb4 += wb * wb * wb * wb;
    }
    report.m2_w[i] = sw2 / n;
    report.m2_w_se[i] = std::sqrt(std::max(0.0, sw4 / n - (sw2 / n) * (sw2 / n)) / n);
    report.mean_wbar[i] = sb1 / n;
    report.mean_wbar_se[i] = std::sqrt(std::max(0.0, sb2 / n - (sb1 / n) * (sb1 / n)) / n);
    report.m2_wbar[i] = sb2 / n;
    report.m2_wbar_se[i] = std::sqrt(std::max(0.0, sb4 / n - (sb2 / n) * (sb2 / n)) / n);
  }
  return report;
}

}  // namespace cips
