#include "cips/tagged_sim.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "cips/errors.hpp"
#include "cips/numerics.hpp"

namespace cips {

TaggedSimulator::TaggedSimulator(TaggedState state, const RateKernel& kernel)
    : state_(std::move(state)), kernel_(&kernel) {
  state_.verify();
  isums_ = rebuild_interaction_sums();
}

std::vector<double> TaggedSimulator::rebuild_interaction_sums() const {
  const auto& counts = state_.env.counts();
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

double TaggedSimulator::env_row_rate(std::int64_t k) const {
  const std::int64_t nk = state_.env.count(k);
  if (k < 1 || nk == 0) return 0.0;
  const double interaction = isums_[static_cast<std::size_t>(k)] - (*kernel_)(k, k);
  if (interaction <= 0.0) return 0.0;
  return static_cast<double>(nk) * interaction / static_cast<double>(state_.sites - 1);
}

double TaggedSimulator::tagged_row_sum() const {
  const auto& counts = state_.env.counts();
  CompensatedSum acc;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] == 0) continue;
    acc.add((*kernel_)(state_.w, static_cast<std::int64_t>(l)) * static_cast<double>(counts[l]));
  }
  return acc.value();
}

TaggedRates TaggedSimulator::rates() const {
  TaggedRates r;
  const double inv = 1.0 / static_cast<double>(state_.sites - 1);

  CompensatedSum env_env;
  for (std::int64_t k = 1; k <= state_.env.max_occupation(); ++k) {
    env_env.add(env_row_rate(k));
  }
  r.env_env = env_env.value();

  CompensatedSum feed;
  for (std::int64_t k = 1; k <= state_.env.max_occupation(); ++k) {
    const std::int64_t nk = state_.env.count(k);
    if (nk == 0) continue;
    feed.add((*kernel_)(k, state_.w) * static_cast<double>(nk));
  }
  r.env_to_tagged = feed.value() * inv;

  const double row = tagged_row_sum() * inv;
  const double w = static_cast<double>(state_.w);
  r.tagged_stay = row * (w - 1.0) / w;
  r.tagged_move = row / w;
  return r;
}

void TaggedSimulator::apply_env_deltas(
    std::span<const std::pair<std::int64_t, double>> deltas, std::size_t old_size) {
  const std::size_t new_size = state_.env.counts().size();
  if (new_size < old_size) isums_.resize(new_size);
  const std::size_t common = std::min(old_size, new_size);
  for (std::size_t k = 0; k < common; ++k) {
    double adjust = 0.0;
    for (const auto& [idx, delta] : deltas) {
      adjust += (*kernel_)(static_cast<std::int64_t>(k), idx) * delta;
    }
    isums_[k] += adjust;
  }
  if (new_size > old_size) {
    isums_.resize(new_size, 0.0);
    const auto& counts = state_.env.counts();
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

void TaggedSimulator::execute_env_env(Rng& rng) {
  double total = 0.0;
  for (std::int64_t k = 1; k <= state_.env.max_occupation(); ++k) total += env_row_rate(k);
  double u = rng.uniform() * total;
  std::int64_t chosen_k = -1;
  double acc = 0.0;
  for (std::int64_t k = 1; k <= state_.env.max_occupation(); ++k) {
    const double r = env_row_rate(k);
    if (r <= 0.0) continue;
    acc += r;
    chosen_k = k;
    if (u < acc) break;
  }
  if (chosen_k < 0) throw InvariantError("env-env event with no donor class");

  const double row_total = isums_[static_cast<std::size_t>(chosen_k)] - (*kernel_)(chosen_k, chosen_k);
  double v = rng.uniform() * row_total;
  std::int64_t chosen_l = -1;
  acc = 0.0;
  for (std::int64_t l = 0; l <= state_.env.max_occupation(); ++l) {
    const std::int64_t nl = state_.env.count(l) - (l == chosen_k ? 1 : 0);
    if (nl <= 0) continue;
    acc += (*kernel_)(chosen_k, l) * static_cast<double>(nl);
    chosen_l = l;
    if (v < acc) break;
  }
  if (chosen_l < 0) throw InvariantError("env-env event with no target class");

  const std::size_t old_size = isums_.size();
  state_.env.apply_move(chosen_k, chosen_l);
  const std::array<std::pair<std::int64_t, double>, 4> deltas = {
      {{chosen_k, -1.0}, {chosen_k - 1, +1.0}, {chosen_l, -1.0}, {chosen_l + 1, +1.0}}};
  apply_env_deltas(deltas, old_size);
}

std::int64_t TaggedSimulator::sample_env_to_tagged_class(Rng& rng) const {
  double total = 0.0;
  for (std::int64_t k = 1; k <= state_.env.max_occupation(); ++k) {
    const std::int64_t nk = state_.env.count(k);
    if (nk > 0) total += (*kernel_)(k, state_.w) * static_cast<double>(nk);
  }
  double u = rng.uniform() * total;
  double acc = 0.0;
  std::int64_t chosen = -1;
  for (std::int64_t k = 1; k <= state_.env.max_occupation(); ++k) {
    const std::int64_t nk = state_.env.count(k);
    if (nk == 0) continue;
    acc += (*kernel_)(k, state_.w) * static_cast<double>(nk);
    chosen = k;
    if (u < acc) break;
  }
  if (chosen < 0) throw InvariantError("no donor class for env->tagged event");
  return chosen;
}

std::int64_t TaggedSimulator::sample_tagged_target_class(Rng& rng) const {
  double total = tagged_row_sum();
  double u = rng.uniform() * total;
  double acc = 0.0;
  std::int64_t chosen = -1;
  for (std::int64_t l = 0; l <= state_.env.max_occupation(); ++l) {
    const std::int64_t nl = state_.env.count(l);
    if (nl == 0) continue;
    acc += (*kernel_)(state_.w, l) * static_cast<double>(nl);
    chosen = l;
    if (u < acc) break;
  }
  if (chosen < 0) throw InvariantError("no target class for tagged departure");
  return chosen;
}

void TaggedSimulator::execute_env_to_tagged(std::int64_t k) {
  const std::size_t old_size = isums_.size();
  state_.env.shift_site(k, -1);
  state_.w += 1;
  const std::array<std::pair<std::int64_t, double>, 2> deltas = {
      {{k, -1.0}, {k - 1, +1.0}}};
  apply_env_deltas(deltas, old_size);
}

void TaggedSimulator::execute_tagged_departure(std::int64_t l, bool relocate) {
  const std::size_t old_size = isums_.size();
  if (!relocate) {
    // A non-tagged particle leaves the tagged site for an env site of
    // class l.
    state_.w -= 1;
    if (state_.w < 1) throw InvariantError("tagged occupation dropped below 1");
    state_.env.shift_site(l, +1);
    const std::array<std::pair<std::int64_t, double>, 2> deltas = {
        {{l, -1.0}, {l + 1, +1.0}}};
    apply_env_deltas(deltas, old_size);
    return;
  }
  // The tagged particle relocates: the old tagged site (w-1 particles
  // left behind) joins the environment, the chosen class-l site becomes
  // the tagged site with occupation l+1.
  const std::int64_t left_behind = state_.w - 1;
  state_.env.swap_site(l, left_behind);
  state_.w = l + 1;
  const std::array<std::pair<std::int64_t, double>, 2> deltas = {
      {{l, -1.0}, {left_behind, +1.0}}};
  apply_env_deltas(deltas, old_size);
}

bool TaggedSimulator::advance(double t_cap, Rng& rng) {
  const TaggedRates r = rates();
  const double total = r.total();
  if (total <= 0.0) {
    time_ = std::max(time_, t_cap);
    return false;
  }
  const double dt = rng.exponential(total);
  if (time_ + dt > t_cap) {
    time_ = t_cap;
    return false;
  }
  time_ += dt;

  const double u = rng.uniform() * total;
  if (u < r.env_env) {
    execute_env_env(rng);
  } else if (u < r.env_env + r.env_to_tagged) {
    execute_env_to_tagged(sample_env_to_tagged_class(rng));
  } else if (u < r.env_env + r.env_to_tagged + r.tagged_stay) {
    execute_tagged_departure(sample_tagged_target_class(rng), /*relocate=*/false);
  } else {
    execute_tagged_departure(sample_tagged_target_class(rng), /*relocate=*/true);
  }
  ++events_;
  return true;
}

bool TaggedSimulator::step(Rng& rng) {
  return advance(std::numeric_limits<double>::infinity(), rng);
}

double apply_genN(const TaggedState& state, std::span<const double> g,
                  const RateKernel& kernel) {
  const std::int64_t n = state.w;
  const EmpiricalMeasure em = state.full_measure();
  const std::int64_t k_top = static_cast<std::int64_t>(em.f.size()) - 1;
  // Needed indices: n+1, n-1 and k+1 for every occupied class k.
  if (static_cast<std::size_t>(n + 1) >= g.size() ||
      static_cast<std::size_t>(k_top + 1) >= g.size()) {
    throw ConfigError("test-function table too short for apply_genN");
  }

  const double big_l = static_cast<double>(state.sites);
  const double scale = big_l / (big_l - 1.0);
  const double nd = static_cast<double>(n);
  const double gn = g[static_cast<std::size_t>(n)];

  double birth = 0.0;
  for (std::int64_t k = 1; k <= k_top; ++k) {
    birth += kernel(k, n) * em.f[static_cast<std::size_t>(k)];
  }
  double result = scale * birth * (g[static_cast<std::size_t>(n + 1)] - gn);

  double death_factor = 0.0;
  double relocation = 0.0;
  for (std::int64_t k = 0; k <= k_top; ++k) {
    const double fk = em.f[static_cast<std::size_t>(k)];
    if (fk == 0.0) continue;
    const double c = kernel(n, k);
    death_factor += c * fk;
    relocation += c * fk * (g[static_cast<std::size_t>(k + 1)] - gn);
  }
  result += scale * ((nd - 1.0) / nd) * death_factor * (g[static_cast<std::size_t>(n - 1)] - gn);
  result += scale * relocation / nd;

  // Self-pair correction: the tagged site is not its own neighbour.
  const double cnn = kernel(n, n);
  result -= (cnn / (big_l - 1.0)) *
            (((nd + 1.0) / nd) * (g[static_cast<std::size_t>(n + 1)] - gn) +
             ((nd - 1.0) / nd) * (g[static_cast<std::size_t>(n - 1)] - gn));
  return result;
}

TaggedTrajectory simulate_tagged(const TaggedState& initial, const RateKernel& kernel,
                                 double t_max, std::span<const double> obs_grid, Rng& rng) {
  if (t_max < 0.0) throw ConfigError("t_max must be nonnegative");
  for (std::size_t i = 0; i < obs_grid.size(); ++i) {
    if (obs_grid[i] < 0.0 || obs_grid[i] > t_max) {
      throw ConfigError("observation grid must lie in [0, t_max]");
    }
    if (i > 0 && obs_grid[i] < obs_grid[i - 1]) {
      throw ConfigError("observation grid must be sorted");
    }
  }

  TaggedSimulator sim(initial, kernel);
  TaggedTrajectory traj;
  for (double t_obs : obs_grid) {
    while (sim.advance(t_obs, rng)) {
    }
    traj.times.push_back(t_obs);
    traj.w_values.push_back(sim.state().w);
    traj.measures.push_back(sim.state().full_measure());
  }
  while (sim.advance(t_max, rng)) {
  }
  traj.final_state = sim.state();
  traj.event_count = sim.event_count();
  return traj;
}

}  // namespace cips
