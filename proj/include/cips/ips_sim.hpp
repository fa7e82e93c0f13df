#ifndef CIPS_IPS_SIM_HPP
#define CIPS_IPS_SIM_HPP

#include <span>
#include <vector>

#include "cips/rate_kernel.hpp"
#include "cips/rng.hpp"
#include "cips/state.hpp"

namespace cips {

struct IpsTrajectory {
  std::vector<double> times;
  std::vector<EmpiricalMeasure> measures;
  ClassConfig final_config;
  std::uint64_t event_count = 0;
};

// Exact continuous-time Monte Carlo of the complete-graph particle system,
// operating directly on occupation-class counts. An ordered class pair
// (k,l) fires at rate c(k,l) * n_k * (n_l - delta_{kl}) / (L-1); one site
// of class k drops to k-1 and one site of class l rises to l+1.
//
// Event selection is a two-level search: departure class by row rate, then
// target class within the row. The per-row interaction sums
// S_k = sum_l c(k,l) n_l are maintained incrementally (four class counts
// change per event), so a step costs O(K) with K the maximum occupation.
class IpsSimulator {
 public:
  IpsSimulator(ClassConfig config, const RateKernel& kernel);

  const ClassConfig& config() const { return config_; }
  double time() const { return time_; }
  std::uint64_t event_count() const { return events_; }

  // (1/(L-1)) sum_{k>=1,l} c(k,l) n_k (n_l - delta_{kl}), compensated.
  double total_rate() const;

  // Gillespie direct method: exponential holding time at the total rate,
  // then the ordered class pair proportional to its rate. Returns false on
  // an absorbing state (total rate zero).
  bool step(Rng& rng);

  // Like step(), but if the drawn event time lands beyond t_cap the event
  // is discarded and the clock stops at t_cap (exact by memorylessness).
  // Returns true iff an event was executed before the cap.
  bool advance(double t_cap, Rng& rng);

  // Incrementally maintained interaction sums, S[k] = sum_l c(k,l) n_l.
  const std::vector<double>& interaction_sums() const { return isums_; }
  // Same sums recomputed from scratch (consistency checks).
  std::vector<double> rebuild_interaction_sums() const;

 private:
  void apply_event(std::int64_t k_from, std::int64_t l_to);
  double row_rate(std::int64_t k) const;

  ClassConfig config_;
  const RateKernel* kernel_;
  std::vector<double> isums_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
};

// Record the empirical measure at each grid time (state value at the grid
// time, cadlag convention) up to t_max. Grid times must be sorted and lie
// in [0, t_max]. Absorbing states freeze the remaining observations.
IpsTrajectory simulate(const ClassConfig& initial, const RateKernel& kernel, double t_max,
                       std::span<const double> obs_grid, Rng& rng);

}  // namespace cips

#endif  // CIPS_IPS_SIM_HPP
