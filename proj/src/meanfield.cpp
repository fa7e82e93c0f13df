#include "cips/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cips/errors.hpp"
#include "cips/numerics.hpp"

namespace cips {

namespace {

double mass0(std::span<const double> f) {
  CompensatedSum s;
  for (double v : f) s.add(v);
  return s.value();
}

double mass1(std::span<const double> f) {
  CompensatedSum s;
  for (std::size_t k = 1; k < f.size(); ++k) s.add(static_cast<double>(k) * f[k]);
  return s.value();
}

}  // namespace

BirthDeathRates birth_death_rates_direct(std::span<const double> f, const RateKernel& kernel) {
  const std::size_t size = f.size();
  BirthDeathRates rates;
  rates.mu.assign(size, 0.0);
  rates.beta.assign(size, 0.0);
  for (std::size_t k = 0; k < size; ++k) {
    CompensatedSum mu_acc;
    CompensatedSum beta_acc;
    for (std::size_t l = 0; l < size; ++l) {
      if (f[l] == 0.0) continue;
      if (k >= 1) mu_acc.add(kernel(static_cast<std::int64_t>(k), static_cast<std::int64_t>(l)) * f[l]);
      if (l >= 1) beta_acc.add(kernel(static_cast<std::int64_t>(l), static_cast<std::int64_t>(k)) * f[l]);
    }
    rates.mu[k] = mu_acc.value();
    rates.beta[k] = beta_acc.value();
  }
  return rates;
}

BirthDeathRates birth_death_rates(std::span<const double> f, const RateKernel& kernel) {
  const std::size_t size = f.size();
  BirthDeathRates rates;
  rates.mu.assign(size, 0.0);
  rates.beta.assign(size, 0.0);

  switch (kernel.family()) {
    case KernelFamily::IndependentWalkers: {
      const double s0 = mass0(f);
      const double s1 = mass1(f);
      for (std::size_t k = 1; k < size; ++k) rates.mu[k] = static_cast<double>(k) * s0;
      for (std::size_t k = 0; k < size; ++k) rates.beta[k] = s1;
      return rates;
    }
    case KernelFamily::ZeroRange: {
      const double s0 = mass0(f);
      CompensatedSum g_acc;  // sum_l g(l) f_l over occupied l
      for (std::size_t l = 1; l < size; ++l) {
        if (f[l] != 0.0) g_acc.add(kernel(static_cast<std::int64_t>(l), 0) * f[l]);
      }
      const double gsum = g_acc.value();
      for (std::size_t k = 1; k < size; ++k) rates.mu[k] = kernel(static_cast<std::int64_t>(k), 0) * s0;
      for (std::size_t k = 0; k < size; ++k) rates.beta[k] = gsum;
      return rates;
    }
    case KernelFamily::Inclusion: {
      const double d = kernel.param();
      const double s0 = mass0(f);
      const double s1 = mass1(f);
      for (std::size_t k = 1; k < size; ++k) {
        rates.mu[k] = static_cast<double>(k) * (d * s0 + s1);
      }
      for (std::size_t k = 0; k < size; ++k) {
        rates.beta[k] = (d + static_cast<double>(k)) * s1;
      }
      return rates;
    }
    case KernelFamily::Table:
      return birth_death_rates_direct(f, kernel);
  }
  return rates;
}

std::vector<double> rhs_f(std::span<const double> f, const RateKernel& kernel) {
  const std::size_t size = f.size();
  const BirthDeathRates r = birth_death_rates(f, kernel);
  std::vector<double> out(size, 0.0);
  const std::size_t top = size - 1;
  for (std::size_t k = 0; k < size; ++k) {
    double v = 0.0;
    if (k + 1 < size) v += r.mu[k + 1] * f[k + 1];  // death flux k+1 -> k
    if (k >= 1) v += r.beta[k - 1] * f[k - 1];      // birth flux k-1 -> k
    double loss = 0.0;
    if (k >= 1) loss += r.mu[k];         // death flux k -> k-1
    if (k < top) loss += r.beta[k];      // birth flux k -> k+1, closed at K
    out[k] = v - loss * f[k];
  }
  return out;
}

std::vector<double> rhs_p(std::span<const double> p, std::span<const double> f,
                          const RateKernel& kernel, double rho) {
  if (rho <= 0.0) throw ConfigError("size-biased system needs rho > 0");
  if (p.size() != f.size()) throw ConfigError("p and f truncations must agree");
  const std::size_t size = f.size();
  if (size < 3) throw ConfigError("size-biased system needs K >= 2");
  const BirthDeathRates r = birth_death_rates(f, kernel);
  std::vector<double> out(size, 0.0);
  const std::size_t top = size - 1;

  out[1] = 0.5 * r.mu[2] * p[2] + (r.beta[0] / rho) * f[0] - (r.mu[1] + (top > 1 ? r.beta[1] : 0.0)) * p[1];
  for (std::size_t k = 2; k < size; ++k) {
    const double kd = static_cast<double>(k);
    double v = r.beta[k - 1] * p[k - 1] * kd / (kd - 1.0);
    if (k + 1 < size) v += r.mu[k + 1] * p[k + 1] * kd / (kd + 1.0);
    double loss = r.mu[k];
    if (k < top) loss += r.beta[k];  // flux across K closed, as in rhs_f
    out[k] = v - loss * p[k];
  }
  return out;
}

std::vector<double> size_bias(std::span<const double> f, double rho) {
  if (rho <= 0.0) throw ConfigError("size bias needs rho > 0");
  std::vector<double> p(f.size(), 0.0);
  for (std::size_t k = 1; k < f.size(); ++k) {
    p[k] = static_cast<double>(k) * f[k] / rho;
  }
  return p;
}

std::vector<double> poisson_profile(double rho, double floor) {
  if (rho <= 0.0) throw ConfigError("poisson profile needs rho > 0");
  std::vector<double> f;
  f.push_back(std::exp(-rho));
  for (int k = 1; k < 4000; ++k) {
    f.push_back(f.back() * rho / k);
    if (static_cast<double>(k) > rho && f.back() < floor) break;
  }
  return f;
}

std::vector<double> MeanFieldSolution::interpolate(
    const std::vector<std::vector<double>>& nodes, double t) const {
  if (grid.empty()) throw ConfigError("empty mean-field solution");
  if (t < grid.front() - 1e-12 || t > grid.back() + 1e-12) {
    throw ConfigError("time " + std::to_string(t) + " outside solution grid [" +
                      std::to_string(grid.front()) + "," + std::to_string(grid.back()) + "]");
  }
  t = std::clamp(t, grid.front(), grid.back());
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  std::size_t hi = std::min(static_cast<std::size_t>(it - grid.begin()), grid.size() - 1);
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  const double span = grid[hi] - grid[lo];
  const double w = span > 0.0 ? (t - grid[lo]) / span : 0.0;

  const auto& a = nodes[lo];
  const auto& b = nodes[hi];
  std::vector<double> result(std::max(a.size(), b.size()), 0.0);
  for (std::size_t k = 0; k < result.size(); ++k) {
    const double va = k < a.size() ? a[k] : 0.0;
    const double vb = k < b.size() ? b[k] : 0.0;
    result[k] = (1.0 - w) * va + w * vb;
  }
  return result;
}

std::vector<double> MeanFieldSolution::f_at(double t) const { return interpolate(f_nodes, t); }

std::vector<double> MeanFieldSolution::p_at(double t) const {
  if (!has_p()) throw ConfigError("solution does not track the size-biased system");
  return interpolate(p_nodes, t);
}

double MeanFieldSolution::moment_at(double t, int n) const {
  const std::vector<double> f = f_at(t);
  CompensatedSum acc;
  for (std::size_t k = 0; k < f.size(); ++k) {
    acc.add(std::pow(static_cast<double>(k), n) * f[k]);
  }
  return acc.value();
}

namespace {

// Largest relative change between two rate snapshots, with a small
// absolute floor so that near-zero rates do not register as huge relative
// moves.
double rate_variation(const BirthDeathRates& a, const BirthDeathRates& b, std::size_t w_max) {
  double scale = 0.0;
  const std::size_t top = std::min({a.mu.size(), b.mu.size(), w_max + 1});
  for (std::size_t w = 1; w < top; ++w) {
    scale = std::max({scale, std::abs(a.mu[w]), std::abs(a.beta[w])});
  }
  const double floor = std::max(1e-300, 1e-6 * scale);
  double worst = 0.0;
  for (std::size_t w = 1; w < top; ++w) {
    worst = std::max(worst, std::abs(b.mu[w] - a.mu[w]) / std::max(floor, std::abs(a.mu[w])));
    worst = std::max(worst,
                     std::abs(b.beta[w] - a.beta[w]) / std::max(floor, std::abs(a.beta[w])));
  }
  return worst;
}

}  // namespace

double MeanFieldSolution::max_rate_variation(const RateKernel& kernel, std::int64_t w_max) const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto ra = birth_death_rates(f_nodes[i], kernel);
    const auto rb = birth_death_rates(f_nodes[i + 1], kernel);
    worst = std::max(worst, rate_variation(ra, rb, static_cast<std::size_t>(w_max)));
  }
  return worst;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 35.0 / 384.0 - 5179.0 / 57600.0;
constexpr double kE3 = 500.0 / 1113.0 - 7571.0 / 16695.0;
constexpr double kE4 = 125.0 / 192.0 - 393.0 / 640.0;
constexpr double kE5 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
constexpr double kE6 = 11.0 / 84.0 - 187.0 / 2100.0;
constexpr double kE7 = -1.0 / 40.0;

// State layout: f alone, or [f | p] of equal truncation length.
struct RhsContext {
  const RateKernel* kernel;
  double rho;
  bool track_p;
  std::size_t width;  // truncation length K+1
};

std::vector<double> eval_rhs(const RhsContext& ctx, const std::vector<double>& y) {
  std::span<const double> f(y.data(), ctx.width);
  std::vector<double> out = rhs_f(f, *ctx.kernel);
  if (ctx.track_p) {
    std::span<const double> p(y.data() + ctx.width, ctx.width);
    std::vector<double> dp = rhs_p(p, f, *ctx.kernel, ctx.rho);
    out.insert(out.end(), dp.begin(), dp.end());
  }
  return out;
}

struct StepResult {
  std::vector<double> y;
  std::vector<double> k7;  // FSAL derivative at the new point
  double error = 0.0;
  double min_component = 0.0;
};

StepResult dp_step(const RhsContext& ctx, const std::vector<double>& y,
                   const std::vector<double>& k1, double h) {
  const std::size_t n = y.size();
  std::vector<double> work(n);
  auto combine = [&](std::initializer_list<std::pair<const std::vector<double>*, double>> terms) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = y[i];
      for (const auto& [vec, coeff] : terms) acc += h * coeff * (*vec)[i];
      work[i] = acc;
    }
    return eval_rhs(ctx, work);
  };

  const std::vector<double> k2 = combine({{&k1, kA21}});
  const std::vector<double> k3 = combine({{&k1, kA31}, {&k2, kA32}});
  const std::vector<double> k4 = combine({{&k1, kA41}, {&k2, kA42}, {&k3, kA43}});
  const std::vector<double> k5 = combine({{&k1, kA51}, {&k2, kA52}, {&k3, kA53}, {&k4, kA54}});
  const std::vector<double> k6 =
      combine({{&k1, kA61}, {&k2, kA62}, {&k3, kA63}, {&k4, kA64}, {&k5, kA65}});

  StepResult result;
  result.y.resize(n);
  result.min_component = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    result.y[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] + kB6 * k6[i]);
    result.min_component = std::min(result.min_component, result.y[i]);
  }
  result.k7 = eval_rhs(ctx, result.y);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] + kE6 * k6[i] +
                          kE7 * result.k7[i]);
    result.error = std::max(result.error, std::abs(e));
  }
  return result;
}

void grow_truncation(std::vector<double>& y, RhsContext& ctx) {
  const std::size_t old_width = ctx.width;
  const std::size_t new_width = old_width + std::max<std::size_t>(16, old_width / 4);
  std::vector<double> grown(ctx.track_p ? 2 * new_width : new_width, 0.0);
  std::copy(y.begin(), y.begin() + old_width, grown.begin());
  if (ctx.track_p) {
    std::copy(y.begin() + old_width, y.end(), grown.begin() + new_width);
  }
  y = std::move(grown);
  ctx.width = new_width;
}

}  // namespace

MeanFieldSolution integrate(std::span<const double> f0, const RateKernel& kernel, double t_max,
                            const MeanFieldOptions& options) {
  if (f0.size() < 3) throw ConfigError("initial profile needs at least 3 entries");
  if (t_max < 0.0) throw ConfigError("t_max must be nonnegative");

  const double rho = mass1(f0);
  RhsContext ctx{&kernel, rho, options.track_p, f0.size()};

  std::vector<double> y(f0.begin(), f0.end());
  if (options.track_p) {
    const std::vector<double> p0 = size_bias(f0, rho);
    y.insert(y.end(), p0.begin(), p0.end());
  }

  MeanFieldSolution solution;
  solution.rho = rho;
  auto emit = [&](double t) {
    solution.grid.push_back(t);
    solution.f_nodes.emplace_back(y.begin(), y.begin() + ctx.width);
    if (ctx.track_p) {
      solution.p_nodes.emplace_back(y.begin() + ctx.width, y.end());
    }
  };

  double t = 0.0;
  emit(0.0);
  if (t_max == 0.0) return solution;

  double h = std::min(options.h_init, t_max);
  double last_emit = 0.0;
  // Node emission is variation-aware: a node is recorded when the
  // birth/death rates have drifted by ~0.7% since the last node (or at the
  // node_dt fallback spacing), and the step cap shrinks through fast
  // transients so no single cell can hide a large rate move.
  double emit_cap = options.node_dt / 10.0;
  BirthDeathRates emit_rates = birth_death_rates({y.data(), ctx.width}, kernel);
  std::vector<double> k1 = eval_rhs(ctx, y);

  while (t < t_max) {
    const double next_emit = last_emit + emit_cap;
    // At least two accepted steps per emission window, so the variation
    // check cannot be jumped over in one stride.
    double window = next_emit - t;
    if (window > 0.5 * emit_cap) window = 0.5 * emit_cap;
    h = std::min({h, t_max - t, std::max(window, 1e-13)});
    const StepResult trial = dp_step(ctx, y, k1, h);

    const bool accept =
        trial.error <= options.tol && trial.min_component >= -options.negativity_tol;
    if (!accept) {
      double factor = trial.error > options.tol
                          ? std::max(0.2, 0.9 * std::pow(options.tol / trial.error, 0.2))
                          : 0.5;
      h *= factor;
      if (h < 1e-12) {
        throw NumericalError("mean-field integrator step underflow at t=" + std::to_string(t) +
                             " (K=" + std::to_string(ctx.width - 1) + ")");
      }
      continue;
    }

    const double h_used = h;
    t += h_used;
    y = trial.y;
    k1 = trial.k7;

    // Truncation growth check on the accepted state.
    const double tail = y[ctx.width - 1] + y[ctx.width - 2];
    if (tail > options.epsilon_tail) {
      grow_truncation(y, ctx);
      k1 = eval_rhs(ctx, y);
    }

    const BirthDeathRates now = birth_death_rates({y.data(), ctx.width}, kernel);
    const double variation = rate_variation(emit_rates, now, ctx.width);
    if (t >= t_max - 1e-13 || t - last_emit >= emit_cap - 1e-13 || variation >= 0.007) {
      emit(t);
      last_emit = t;
      emit_rates = now;
      if (variation >= 0.009) {
        emit_cap = std::max(0.5 * h_used, 1e-6);
      } else if (variation < 0.003) {
        emit_cap = std::min(options.node_dt, emit_cap * 1.5);
      }
    }

    if (trial.error > 0.0) {
      h = std::min(options.h_max,
                   h_used * std::min(5.0, 0.9 * std::pow(options.tol / trial.error, 0.2)));
    } else {
      h = std::min(options.h_max, h_used * 5.0);
    }
  }

  if (solution.grid.back() < t_max) emit(t_max);
  return solution;
}

std::vector<double> integrate_fixed_step(std::span<const double> f0, const RateKernel& kernel,
                                         double t_max, double h) {
  if (h <= 0.0) throw ConfigError("fixed step must be positive");
  RhsContext ctx{&kernel, std::max(mass1(f0), 1e-300), false, f0.size()};
  std::vector<double> y(f0.begin(), f0.end());
  std::vector<double> k1 = eval_rhs(ctx, y);
  double t = 0.0;
  while (t < t_max - 1e-14) {
    const double step = std::min(h, t_max - t);
    const StepResult r = dp_step(ctx, y, k1, step);
    y = r.y;
    k1 = r.k7;
    t += step;
  }
  return y;
}

}  // namespace cips
