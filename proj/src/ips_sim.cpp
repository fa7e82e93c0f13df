#include "cips/ips_sim.hpp"

#include <algorithm>
#include <limits>

#include "cips/errors.hpp"
#include "cips/numerics.hpp"

namespace cips {

IpsSimulator::IpsSimulator(ClassConfig config, const RateKernel& kernel)
    : config_(std::move(config)), kernel_(&kernel) {
  if (config_.sites() < 2) throw ConfigError("simulation needs L >= 2");
  isums_ = rebuild_interaction_sums();
}

std::vector<double> IpsSimulator::rebuild_interaction_sums() const {
  const auto& counts = config_.counts();
  std::vector<double> sums(counts.size(), 0.0);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    CompensatedSum acc;
    for (std::size_t l = 0; l < counts.size(); ++l) {
      if (counts[l] == 0) continue;
      acc.add((*kernel_)(static_cast<std::int64_t>(k), static_cast<std::int64_t>(l)) *
              static_cast<double>(counts[l]));
    }
    sums[k] = acc.value();
  }
  return sums;
}

double IpsSimulator::row_rate(std::int64_t k) const {
  const std::int64_t nk = config_.count(k);
  if (k < 1 || nk == 0) return 0.0;
  const double self = (*kernel_)(k, k);
  const double interaction = isums_[static_cast<std::size_t>(k)] - self;
  if (interaction <= 0.0) return 0.0;
  return static_cast<double>(nk) * interaction / static_cast<double>(config_.sites() - 1);
}

double IpsSimulator::total_rate() const {
  CompensatedSum acc;
  for (std::int64_t k = 1; k <= config_.max_occupation(); ++k) {
    acc.add(row_rate(k));
  }
  return acc.value();
}

void IpsSimulator::apply_event(std::int64_t k_from, std::int64_t l_to) {
  const std::size_t old_size = isums_.size();
  config_.apply_move(k_from, l_to);
  const std::size_t new_size = config_.counts().size();
  if (new_size < old_size) isums_.resize(new_size);

  // Rows that existed before the event are updated incrementally from the
  // four changed class counts (a trimmed top class still contributes its
  // -1; the kernel remains evaluable there).
  const std::int64_t touched[4] = {k_from, k_from - 1, l_to, l_to + 1};
  const double delta[4] = {-1.0, +1.0, -1.0, +1.0};
  const std::size_t common = std::min(old_size, new_size);
  for (std::size_t k = 0; k < common; ++k) {
    double adjust = 0.0;
    for (int i = 0; i < 4; ++i) {
      adjust += (*kernel_)(static_cast<std::int64_t>(k), touched[i]) * delta[i];
    }
    isums_[k] += adjust;
  }

  // Brand-new occupation classes get their rows computed fresh.
  if (new_size > old_size) {
    isums_.resize(new_size, 0.0);
    const auto& counts = config_.counts();
    for (std::size_t k = old_size; k < new_size; ++k) {
      CompensatedSum acc;
      for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] == 0) continue;
        acc.add((*kernel_)(static_cast<std::int64_t>(k), static_cast<std::int64_t>(l)) *
                static_cast<double>(counts[l]));
      }
      isums_[k] = acc.value();
    }
  }
}

bool IpsSimulator::advance(double t_cap, Rng& rng) {
  const double rate = total_rate();
  if (rate <= 0.0) {
    time_ = std::max(time_, t_cap);
    return false;
  }
  const double dt = rng.exponential(rate);
  if (time_ + dt > t_cap) {
    time_ = t_cap;
    return false;
  }
  time_ += dt;

  // Departure class.
  double u = rng.uniform() * rate;
  std::int64_t chosen_k = -1;
  double acc = 0.0;
  for (std::int64_t k = 1; k <= config_.max_occupation(); ++k) {
    const double r = row_rate(k);
    if (r <= 0.0) continue;
    acc += r;
    chosen_k = k;
    if (u < acc) break;
  }
  if (chosen_k < 0) throw InvariantError("no departure class despite positive rate");

  // Target class within the row.
  const double row_total = isums_[static_cast<std::size_t>(chosen_k)] - (*kernel_)(chosen_k, chosen_k);
  double v = rng.uniform() * row_total;
  std::int64_t chosen_l = -1;
  acc = 0.0;
  for (std::int64_t l = 0; l <= config_.max_occupation(); ++l) {
    const std::int64_t nl = config_.count(l) - (l == chosen_k ? 1 : 0);
    if (nl <= 0) continue;
    acc += (*kernel_)(chosen_k, l) * static_cast<double>(nl);
    chosen_l = l;
    if (v < acc) break;
  }
  if (chosen_l < 0) throw InvariantError("no target class despite positive row rate");

  apply_event(chosen_k, chosen_l);
  ++events_;
  return true;
}

bool IpsSimulator::step(Rng& rng) {
  return advance(std::numeric_limits<double>::infinity(), rng);
}

IpsTrajectory simulate(const ClassConfig& initial, const RateKernel& kernel, double t_max,
                       std::span<const double> obs_grid, Rng& rng) {
  if (t_max < 0.0) throw ConfigError("t_max must be nonnegative");
  for (std::size_t i = 0; i < obs_grid.size(); ++i) {
    if (obs_grid[i] < 0.0 || obs_grid[i] > t_max) {
      throw ConfigError("observation grid must lie in [0, t_max]");
    }
    if (i > 0 && obs_grid[i] < obs_grid[i - 1]) {
      throw ConfigError("observation grid must be sorted");
    }
  }

  IpsSimulator sim(initial, kernel);
  IpsTrajectory traj;

  for (double t_obs : obs_grid) {
    while (sim.advance(t_obs, rng)) {
    }
    traj.times.push_back(t_obs);
    traj.measures.push_back(sim.config().empirical_measure());
  }
  while (sim.advance(t_max, rng)) {
  }

  traj.final_config = sim.config();
  traj.event_count = sim.event_count();
  return traj;
}

}  // namespace cips
