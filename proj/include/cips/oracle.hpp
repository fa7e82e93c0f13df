#ifndef CIPS_ORACLE_HPP
#define CIPS_ORACLE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cips/rate_kernel.hpp"
#include "cips/state.hpp"

namespace cips {

// Exact transient law of the finite system by explicit construction of the
// generator on the enumerated state space. Ground truth for the Monte
// Carlo modules; sizes are guarded, this is desk-scale only.
class ExactChain {
 public:
  // tagged=false: states are occupation vectors (eta_1..eta_L), sum = N.
  // tagged=true:  states are (eta, x) with eta_x >= 1.
  static ExactChain build(std::int64_t sites, std::int64_t particles, const RateKernel& kernel,
                          bool tagged, std::size_t max_states = 100000);

  std::size_t state_count() const { return states_.size(); }
  bool tagged() const { return tagged_; }
  std::int64_t sites() const { return sites_; }
  std::int64_t particles() const { return particles_; }

  const std::vector<std::int64_t>& occupations(std::size_t index) const {
    return states_[index];
  }
  // Tagged chains only: site of the tagged particle for a state index.
  std::int64_t tagged_site(std::size_t index) const { return tagged_pos_[index]; }

  std::size_t index_of(const std::vector<std::int64_t>& occupations,
                       std::int64_t tagged_site = -1) const;

  // Row i of the rate matrix, diagonal included.
  const std::vector<double>& rate_row(std::size_t i) const { return rates_[i]; }

  // Distribution at time t from an initial distribution, via uniformization
  // with Poisson-tail truncation below `tail_bound`.
  std::vector<double> transient(const std::vector<double>& initial, double t,
                                double tail_bound = 1e-12) const;

  // Initial distribution matching sample_initial: N-1 particles placed
  // uniformly iid, tagged particle added per scheme.
  std::vector<double> initial_distribution(InitScheme scheme) const;

  // Law of the class signature (canonical key: "n0,n1,...") induced by a
  // distribution over states.
  std::map<std::string, double> class_marginal(const std::vector<double>& dist) const;

  // Tagged chains: law of W = eta_x; w_law[k] = P(W = k).
  std::vector<double> w_marginal(const std::vector<double>& dist) const;

  // Law of F_k averaged over the distribution: E[F_k].
  std::vector<double> mean_fk(const std::vector<double>& dist) const;

  static std::string class_key(const ClassConfig& config);

 private:
  ExactChain() = default;
  void add_rate(std::size_t from, std::size_t to, double rate);

  bool tagged_ = false;
  std::int64_t sites_ = 0;
  std::int64_t particles_ = 0;
  std::vector<std::vector<std::int64_t>> states_;
  std::vector<std::int64_t> tagged_pos_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> rates_;  // dense Q, row-major rows
};

}  // namespace cips

#endif  // CIPS_ORACLE_HPP
