#ifndef CIPS_TAGGED_SIM_HPP
#define CIPS_TAGGED_SIM_HPP

#include <span>
#include <vector>

#include "cips/rate_kernel.hpp"
#include "cips/rng.hpp"
#include "cips/state.hpp"

namespace cips {

// Totals of the four event groups of the joint tagged process:
//   env_env:       particle moves between two non-tagged sites
//   env_to_tagged: a non-tagged site feeds the tagged site (W -> W+1)
//   tagged_stay:   the tagged site loses a non-tagged particle (W -> W-1)
//   tagged_move:   the tagged particle itself relocates (W -> l+1)
struct TaggedRates {
  double env_env = 0.0;
  double env_to_tagged = 0.0;
  double tagged_stay = 0.0;
  double tagged_move = 0.0;
  double total() const { return env_env + env_to_tagged + tagged_stay + tagged_move; }
};

struct TaggedTrajectory {
  std::vector<double> times;
  std::vector<std::int64_t> w_values;
  std::vector<EmpiricalMeasure> measures;  // full configuration
  TaggedState final_state;
  std::uint64_t event_count = 0;
};

// Joint simulation of (environment, tagged occupation W). The tagged site
// is materialized explicitly so the relocation site-swap is exact and O(1);
// the environment is a plain class configuration over the other L-1 sites.
// Self-pairs involving the tagged site are excluded by construction.
class TaggedSimulator {
 public:
  TaggedSimulator(TaggedState state, const RateKernel& kernel);

  const TaggedState& state() const { return state_; }
  double time() const { return time_; }
  std::uint64_t event_count() const { return events_; }

  TaggedRates rates() const;

  // sum_l c(W,l) n'_l over the environment.
  double tagged_row_sum() const;

  bool step(Rng& rng);
  bool advance(double t_cap, Rng& rng);

  // Building blocks used by the coupled runner, which owns its own clock
  // structure. Selection draws are proportional to the true group rates.
  void execute_env_env(Rng& rng);
  std::int64_t sample_env_to_tagged_class(Rng& rng) const;  // donor class k
  std::int64_t sample_tagged_target_class(Rng& rng) const;  // target class l
  void execute_env_to_tagged(std::int64_t k);
  void execute_tagged_departure(std::int64_t l, bool relocate);

  const std::vector<double>& interaction_sums() const { return isums_; }
  std::vector<double> rebuild_interaction_sums() const;

 private:
  double env_row_rate(std::int64_t k) const;
  void apply_env_deltas(std::span<const std::pair<std::int64_t, double>> deltas,
                        std::size_t old_size);

  TaggedState state_;
  const RateKernel* kernel_;
  std::vector<double> isums_;  // S'_k = sum_l c(k,l) n'_l over env classes
  double time_ = 0.0;
  std::uint64_t events_ = 0;
};

// Right-hand side of the finite-L occupation generator evaluated at n = W
// for a test function given as a table g[0..len), using the empirical
// measure of the full configuration. Used to validate the event rates
// against the generator they are meant to implement.
double apply_genN(const TaggedState& state, std::span<const double> g,
                  const RateKernel& kernel);

// Record W and the full empirical measure on a grid.
TaggedTrajectory simulate_tagged(const TaggedState& initial, const RateKernel& kernel,
                                 double t_max, std::span<const double> obs_grid, Rng& rng);

}  // namespace cips

#endif  // CIPS_TAGGED_SIM_HPP
