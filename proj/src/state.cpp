#include "cips/state.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "cips/errors.hpp"

namespace cips {

ClassConfig::ClassConfig(std::vector<std::int64_t> counts, std::int64_t sites,
                         std::int64_t particles)
    : counts_(std::move(counts)), sites_(sites), particles_(particles) {
  trim();
  verify();
}

ClassConfig ClassConfig::from_occupations(const std::vector<std::int64_t>& occupations) {
  std::int64_t max_occ = 0;
  std::int64_t total = 0;
  for (std::int64_t occ : occupations) {
    if (occ < 0) throw InvariantError("negative occupation");
    max_occ = std::max(max_occ, occ);
    total += occ;
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(max_occ) + 1, 0);
  for (std::int64_t occ : occupations) counts[static_cast<std::size_t>(occ)]++;
  return ClassConfig(std::move(counts), static_cast<std::int64_t>(occupations.size()), total);
}

void ClassConfig::bump(std::int64_t k, std::int64_t delta) {
  if (static_cast<std::size_t>(k) >= counts_.size()) {
    counts_.resize(static_cast<std::size_t>(k) + 1, 0);
  }
  counts_[static_cast<std::size_t>(k)] += delta;
  if (counts_[static_cast<std::size_t>(k)] < 0) {
    throw InvariantError("class count underflow at k=" + std::to_string(k));
  }
}

void ClassConfig::trim() {
  while (counts_.size() > 1 && counts_.back() == 0) counts_.pop_back();
  if (counts_.empty()) counts_.push_back(0);
}

void ClassConfig::apply_move(std::int64_t k_from, std::int64_t l_to) {
  if (k_from < 1) throw InvariantError("departure class must be >= 1");
  bump(k_from, -1);
  bump(k_from - 1, +1);
  bump(l_to, -1);
  bump(l_to + 1, +1);
  trim();
}

void ClassConfig::shift_site(std::int64_t k, int delta) {
  if (delta != 1 && delta != -1) throw InvariantError("shift_site delta must be +-1");
  if (k + delta < 0) throw InvariantError("shift below empty site");
  bump(k, -1);
  bump(k + delta, +1);
  particles_ += delta;
  trim();
}

void ClassConfig::swap_site(std::int64_t k_remove, std::int64_t k_insert) {
  bump(k_remove, -1);
  bump(k_insert, +1);
  particles_ += k_insert - k_remove;
  trim();
}

void ClassConfig::verify() const {
  std::int64_t site_total = 0;
  std::int64_t particle_total = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] < 0) throw InvariantError("negative class count");
    site_total += counts_[k];
    particle_total += static_cast<std::int64_t>(k) * counts_[k];
  }
  if (site_total != sites_) {
    throw InvariantError("site conservation violated: " + std::to_string(site_total) +
                         " != " + std::to_string(sites_));
  }
  if (particle_total != particles_) {
    throw InvariantError("particle conservation violated: " + std::to_string(particle_total) +
                         " != " + std::to_string(particles_));
  }
}

EmpiricalMeasure ClassConfig::empirical_measure() const {
  EmpiricalMeasure em;
  em.sites = sites_;
  em.particles = particles_;
  em.f.resize(counts_.size());
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    em.f[k] = static_cast<double>(counts_[k]) / static_cast<double>(sites_);
  }
  if (particles_ > 0) {
    em.p.resize(counts_.size());
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      em.p[k] = static_cast<double>(static_cast<std::int64_t>(k) * counts_[k]) /
                static_cast<double>(particles_);
    }
  }
  return em;
}

double ClassConfig::moment(int n) const {
  if (n < 0 || n > 6) throw ConfigError("moment order must be in [0,6]");
  using acc_t = unsigned __int128;
  const acc_t acc_max = ~acc_t{0};
  acc_t total = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] == 0) continue;
    acc_t power = 1;
    for (int i = 0; i < n; ++i) {
      acc_t next = power * static_cast<acc_t>(k);
      if (k != 0 && next / static_cast<acc_t>(k) != power) {
        throw NumericalError("moment power overflow");
      }
      power = next;
    }
    acc_t term = power * static_cast<acc_t>(counts_[k]);
    if (power != 0 && term / power != static_cast<acc_t>(counts_[k])) {
      throw NumericalError("moment term overflow");
    }
    if (total > acc_max - term) throw NumericalError("moment accumulation overflow");
    total += term;
  }
  return static_cast<double>(total) / static_cast<double>(sites_);
}

ClassConfig TaggedState::to_class_config() const {
  std::vector<std::int64_t> counts(env.counts());
  if (static_cast<std::size_t>(w) >= counts.size()) {
    counts.resize(static_cast<std::size_t>(w) + 1, 0);
  }
  counts[static_cast<std::size_t>(w)]++;
  return ClassConfig(std::move(counts), sites, particles);
}

EmpiricalMeasure TaggedState::full_measure() const { return to_class_config().empirical_measure(); }

void TaggedState::verify() const {
  if (w < 1) throw InvariantError("tagged occupation W must be >= 1");
  env.verify();
  if (env.sites() != sites - 1) throw InvariantError("environment must hold L-1 sites");
  if (env.particles() != particles - w) {
    throw InvariantError("tagged/environment particle split inconsistent");
  }
}

ClassConfig sample_iid_config(std::int64_t sites, std::int64_t particles, Rng& rng) {
  if (sites < 2) throw ConfigError("lattice needs at least 2 sites");
  std::vector<std::int64_t> occ(static_cast<std::size_t>(sites), 0);
  for (std::int64_t i = 0; i < particles; ++i) {
    occ[rng.uniform_int(static_cast<std::uint64_t>(sites))]++;
  }
  return ClassConfig::from_occupations(occ);
}

TaggedState sample_initial(std::int64_t sites, std::int64_t particles, InitScheme scheme,
                           Rng& rng) {
  if (sites < 2) throw ConfigError("lattice needs at least 2 sites");
  if (particles < 1) throw ConfigError("need at least the tagged particle");

  std::vector<std::int64_t> occ(static_cast<std::size_t>(sites), 0);
  for (std::int64_t i = 0; i < particles - 1; ++i) {
    occ[rng.uniform_int(static_cast<std::uint64_t>(sites))]++;
  }

  std::size_t tagged_site = 0;
  switch (scheme.tagged) {
    case TaggedSiteScheme::FixedSite:
      tagged_site = 0;
      break;
    case TaggedSiteScheme::UniformSite:
      tagged_site = rng.uniform_int(static_cast<std::uint64_t>(sites));
      break;
    case TaggedSiteScheme::MaxSite:
      tagged_site = static_cast<std::size_t>(
          std::max_element(occ.begin(), occ.end()) - occ.begin());
      break;
  }

  TaggedState state;
  state.sites = sites;
  state.particles = particles;
  state.w = occ[tagged_site] + 1;
  std::vector<std::int64_t> env_occ;
  env_occ.reserve(occ.size() - 1);
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (i != tagged_site) env_occ.push_back(occ[i]);
  }
  state.env = ClassConfig::from_occupations(env_occ);
  state.verify();
  return state;
}

}  // namespace cips
