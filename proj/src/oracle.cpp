#include "cips/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cips/errors.hpp"

namespace cips {

namespace {

std::string occ_key(const std::vector<std::int64_t>& occ, std::int64_t tagged_site) {
  std::string key;
  for (std::int64_t v : occ) {
    key += std::to_string(v);
    key += ',';
  }
  if (tagged_site >= 0) {
    key += '@';
    key += std::to_string(tagged_site);
  }
  return key;
}

// log of the multinomial weight n! / prod(occ_x!) (uniform iid placement).
double log_multinomial(std::int64_t n, const std::vector<std::int64_t>& occ) {
  double acc = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::int64_t v : occ) acc -= std::lgamma(static_cast<double>(v) + 1.0);
  return acc;
}

}  // namespace

ExactChain ExactChain::build(std::int64_t sites, std::int64_t particles,
                             const RateKernel& kernel, bool tagged, std::size_t max_states) {
  if (sites < 2) throw ConfigError("oracle needs L >= 2");
  if (particles < 0) throw ConfigError("oracle needs N >= 0");

  ExactChain chain;
  chain.tagged_ = tagged;
  chain.sites_ = sites;
  chain.particles_ = particles;

  // Enumerate compositions of N into L ordered nonnegative parts.
  std::vector<std::int64_t> occ(static_cast<std::size_t>(sites), 0);
  std::vector<std::vector<std::int64_t>> compositions;
  std::function<void(std::size_t, std::int64_t)> recurse = [&](std::size_t pos,
                                                               std::int64_t remaining) {
    if (pos + 1 == occ.size()) {
      occ[pos] = remaining;
      compositions.push_back(occ);
      return;
    }
    for (std::int64_t v = 0; v <= remaining; ++v) {
      occ[pos] = v;
      recurse(pos + 1, remaining - v);
    }
  };
  recurse(0, particles);

  for (const auto& c : compositions) {
    if (!tagged) {
      chain.index_[occ_key(c, -1)] = chain.states_.size();
      chain.states_.push_back(c);
      chain.tagged_pos_.push_back(-1);
    } else {
      for (std::int64_t x = 0; x < sites; ++x) {
        if (c[static_cast<std::size_t>(x)] < 1) continue;
        chain.index_[occ_key(c, x)] = chain.states_.size();
        chain.states_.push_back(c);
        chain.tagged_pos_.push_back(x);
      }
    }
    if (chain.states_.size() > max_states) {
      throw ConfigError("oracle state count guard exceeded");
    }
  }

  const std::size_t n_states = chain.states_.size();
  chain.rates_.assign(n_states, std::vector<double>(n_states, 0.0));
  const double q = 1.0 / static_cast<double>(sites - 1);

  for (std::size_t i = 0; i < n_states; ++i) {
    const auto& eta = chain.states_[i];
    const std::int64_t tag = chain.tagged_pos_[i];
    for (std::int64_t x = 0; x < sites; ++x) {
      const std::int64_t k = eta[static_cast<std::size_t>(x)];
      if (k == 0) continue;
      for (std::int64_t y = 0; y < sites; ++y) {
        if (y == x) continue;
        const double rate = q * kernel(k, eta[static_cast<std::size_t>(y)]);
        if (rate == 0.0) continue;
        auto moved = eta;
        moved[static_cast<std::size_t>(x)]--;
        moved[static_cast<std::size_t>(y)]++;
        if (!tagged) {
          chain.add_rate(i, chain.index_.at(occ_key(moved, -1)), rate);
        } else if (x != tag) {
          // Non-tagged departure; the tag stays put.
          chain.add_rate(i, chain.index_.at(occ_key(moved, tag)), rate);
        } else {
          // Departure from the tagged site: the moving particle is the
          // tagged one with probability 1/eta_x.
          const double kd = static_cast<double>(k);
          if (k > 1) {
            chain.add_rate(i, chain.index_.at(occ_key(moved, tag)), rate * (kd - 1.0) / kd);
          }
          chain.add_rate(i, chain.index_.at(occ_key(moved, y)), rate / kd);
        }
      }
    }
  }

  for (std::size_t i = 0; i < n_states; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n_states; ++j) {
      if (j != i) total += chain.rates_[i][j];
    }
    chain.rates_[i][i] = -total;
  }
  return chain;
}

void ExactChain::add_rate(std::size_t from, std::size_t to, double rate) {
  rates_[from][to] += rate;
}

std::size_t ExactChain::index_of(const std::vector<std::int64_t>& occupations,
                                 std::int64_t tagged_site) const {
  auto it = index_.find(occ_key(occupations, tagged_site));
  if (it == index_.end()) throw ConfigError("state not in enumerated space");
  return it->second;
}

std::vector<double> ExactChain::transient(const std::vector<double>& initial, double t,
                                          double tail_bound) const {
  if (initial.size() != states_.size()) throw ConfigError("initial distribution size mismatch");
  if (t < 0.0) throw ConfigError("time must be nonnegative");

  double lambda = 0.0;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    lambda = std::max(lambda, -rates_[i][i]);
  }
  if (lambda == 0.0 || t == 0.0) return initial;

  // P = I + Q/lambda applied from the left; Poisson-weighted power series.
  const double a = lambda * t;
  std::vector<double> v = initial;
  std::vector<double> result(states_.size(), 0.0);
  std::vector<double> next(states_.size(), 0.0);

  double weight = std::exp(-a);
  double cumulative = weight;
  for (std::size_t i = 0; i < v.size(); ++i) result[i] = weight * v[i];

  // Keep multiplying until the remaining Poisson tail is below the bound.
  for (int m = 1; cumulative < 1.0 - tail_bound; ++m) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0.0) continue;
      const auto& row = rates_[i];
      const double vi = v[i];
      next[i] += vi;
      for (std::size_t j = 0; j < row.size(); ++j) {
        next[j] += vi * row[j] / lambda;
      }
    }
    v.swap(next);
    weight *= a / m;
    cumulative += weight;
    for (std::size_t i = 0; i < v.size(); ++i) result[i] += weight * v[i];
    if (m > 100000) throw NumericalError("uniformization series did not converge");
  }
  return result;
}

std::vector<double> ExactChain::initial_distribution(InitScheme scheme) const {
  std::vector<double> dist(states_.size(), 0.0);
  if (!tagged_) {
    // N particles uniform iid (no distinguished particle to add).
    for (std::size_t i = 0; i < states_.size(); ++i) {
      dist[i] = std::exp(log_multinomial(particles_, states_[i]) -
                         static_cast<double>(particles_) * std::log(static_cast<double>(sites_)));
    }
    return dist;
  }
  // Background of N-1 uniform iid particles, then the tagged particle.
  const double log_l = std::log(static_cast<double>(sites_));
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const auto& eta = states_[i];
    const std::int64_t x = tagged_pos_[i];
    auto background = eta;
    background[static_cast<std::size_t>(x)]--;
    const double p_background =
        std::exp(log_multinomial(particles_ - 1, background) -
                 static_cast<double>(particles_ - 1) * log_l);
    switch (scheme.tagged) {
      case TaggedSiteScheme::FixedSite:
        dist[i] = (x == 0) ? p_background : 0.0;
        break;
      case TaggedSiteScheme::UniformSite:
        dist[i] = p_background / static_cast<double>(sites_);
        break;
      case TaggedSiteScheme::MaxSite: {
        // Tag goes to the lowest-index maximal background site, matching
        // the sampler's argmax convention.
        std::int64_t max_occ = *std::max_element(background.begin(), background.end());
        std::int64_t argmax = static_cast<std::int64_t>(
            std::max_element(background.begin(), background.end()) - background.begin());
        dist[i] = (x == argmax && background[static_cast<std::size_t>(x)] == max_occ)
                      ? p_background
                      : 0.0;
        break;
      }
    }
  }
  return dist;
}

std::string ExactChain::class_key(const ClassConfig& config) {
  std::string key;
  for (std::int64_t c : config.counts()) {
    key += std::to_string(c);
    key += ',';
  }
  return key;
}

std::map<std::string, double> ExactChain::class_marginal(const std::vector<double>& dist) const {
  std::map<std::string, double> law;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (dist[i] == 0.0) continue;
    law[class_key(ClassConfig::from_occupations(states_[i]))] += dist[i];
  }
  return law;
}

std::vector<double> ExactChain::w_marginal(const std::vector<double>& dist) const {
  if (!tagged_) throw ConfigError("w_marginal requires a tagged chain");
  std::vector<double> law;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const std::int64_t w = states_[i][static_cast<std::size_t>(tagged_pos_[i])];
    if (static_cast<std::size_t>(w) >= law.size()) law.resize(static_cast<std::size_t>(w) + 1, 0.0);
    law[static_cast<std::size_t>(w)] += dist[i];
  }
  return law;
}

std::vector<double> ExactChain::mean_fk(const std::vector<double>& dist) const {
  std::vector<double> mean;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (dist[i] == 0.0) continue;
    for (std::int64_t occ : states_[i]) {
      if (static_cast<std::size_t>(occ) >= mean.size()) {
        mean.resize(static_cast<std::size_t>(occ) + 1, 0.0);
      }
      mean[static_cast<std::size_t>(occ)] += dist[i] / static_cast<double>(sites_);
    }
  }
  return mean;
}

}  // namespace cips
