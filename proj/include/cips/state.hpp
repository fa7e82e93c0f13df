#ifndef CIPS_STATE_HPP
#define CIPS_STATE_HPP

#include <cstdint>
#include <vector>

#include "cips/rng.hpp"

namespace cips {

struct EmpiricalMeasure {
  // f[k] = fraction of sites with occupation k, p[k] = fraction of
  // particles sitting on sites with occupation k (empty when N = 0).
  std::vector<double> f;
  std::vector<double> p;
  std::int64_t sites = 0;
  std::int64_t particles = 0;
};

// Occupation-class counts of an exchangeable configuration: counts[k] is
// the number of sites currently holding exactly k particles. On the
// complete graph this is the entire state; per-site identity only matters
// for the tagged site, which lives in TaggedState.
class ClassConfig {
 public:
  ClassConfig() = default;

  // Build from explicit class counts; validates both conservation sums.
  ClassConfig(std::vector<std::int64_t> counts, std::int64_t sites, std::int64_t particles);

  // Build from a per-site occupation vector.
  static ClassConfig from_occupations(const std::vector<std::int64_t>& occupations);

  std::int64_t sites() const { return sites_; }
  std::int64_t particles() const { return particles_; }

  // Largest occupation with a nonzero count (0 for the empty config).
  std::int64_t max_occupation() const { return static_cast<std::int64_t>(counts_.size()) - 1; }

  std::int64_t count(std::int64_t k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= counts_.size()) return 0;
    return counts_[static_cast<std::size_t>(k)];
  }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  // One particle moved from a site of class k_from to a (distinct) site of
  // class l_to. Requires count(k_from) >= 1 (>= 2 when the classes agree).
  void apply_move(std::int64_t k_from, std::int64_t l_to);

  // One site of class k gains (delta=+1) or loses (delta=-1) a particle,
  // with the particle appearing from / disappearing to outside the config
  // (used by the tagged environment exchanging with the tagged site).
  void shift_site(std::int64_t k, int delta);

  // A site of class k_remove leaves the config, a fresh site of class
  // k_insert enters (tagged-site swap during relocation).
  void swap_site(std::int64_t k_remove, std::int64_t k_insert);

  // Full O(K) re-check of both conservation sums; throws InvariantError.
  void verify() const;

  EmpiricalMeasure empirical_measure() const;

  // n-th occupation moment (1/L) sum_k k^n counts[k], exact integer
  // accumulation (n <= 6); throws on overflow rather than wrapping.
  double moment(int n) const;

 private:
  void trim();
  void bump(std::int64_t k, std::int64_t delta);

  std::vector<std::int64_t> counts_;
  std::int64_t sites_ = 0;
  std::int64_t particles_ = 0;
};

// Tagged decomposition: the tagged site's occupation W (>= 1, the tagged
// particle never leaves its own site) plus the class counts of the other
// L-1 sites holding the remaining N-W particles.
struct TaggedState {
  ClassConfig env;
  std::int64_t w = 1;
  std::int64_t sites = 0;      // full lattice size L
  std::int64_t particles = 0;  // full particle count N

  // Merge the tagged site back in.
  ClassConfig to_class_config() const;

  // Empirical measure of the full configuration (env + tagged site).
  EmpiricalMeasure full_measure() const;

  void verify() const;
};

enum class TaggedSiteScheme {
  FixedSite,    // always site 1
  UniformSite,  // uniform over the lattice
  MaxSite       // maximally occupied site; violates the moment condition,
                // available only for negative experiments
};

struct InitScheme {
  TaggedSiteScheme tagged = TaggedSiteScheme::UniformSite;
};

// Place N-1 particles uniformly and independently on L sites, then add the
// tagged particle on the site chosen by the scheme.
TaggedState sample_initial(std::int64_t sites, std::int64_t particles, InitScheme scheme,
                           Rng& rng);

// All N particles placed uniformly iid (untagged runs).
ClassConfig sample_iid_config(std::int64_t sites, std::int64_t particles, Rng& rng);

}  // namespace cips

#endif  // CIPS_STATE_HPP
