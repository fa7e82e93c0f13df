#ifndef CIPS_COUPLING_HPP
#define CIPS_COUPLING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cips/rate_kernel.hpp"
#include "cips/rng.hpp"
#include "cips/state.hpp"
#include "cips/tagged_sim.hpp"

namespace cips {

// 128-bit unsigned values for the dominating process; its births compound
// exponentially and its long-range jumps double the state, so 64 bits run
// out quickly even at desk scale.
using wbar_t = unsigned __int128;

double wbar_to_double(wbar_t value);
std::string wbar_to_string(wbar_t value);

// Total exit rate of the dominating process at state w:
// Cbar * w + 2C(1 + N/L), with Cbar = 2C(1+3 rho).
double exit_rate_bar(std::int64_t w, const ClassConfig& full_config, const RateKernel& kernel,
                     double rho);
// The same quantity as the sum of the per-event rates actually simulated
// (birth clock plus the per-class long-jump clocks); identity check route.
double exit_rate_bar_from_events(std::int64_t w, const ClassConfig& full_config,
                                 const RateKernel& kernel, double rho);

enum class CouplingMode {
  Paired,     // maximal coupling: every W jump triggers a dominating jump
  Standalone  // Wbar driven only by its own clocks (marginal-law checks)
};

// Joint simulation of the tagged process W and the dominating process
// Wbar. Wbar's jumps are n -> n+1 at rate Cbar*n and n -> 2n+k at rate
// 2C(1+k)F_k (full-configuration empirical measure). In paired mode the
// W-affecting events are carved out of Wbar's clocks by thinning, so at
// every W jump Wbar simultaneously jumps by at least |dW|, while both
// marginals stay exact.
//
// Between structural events (tagged-system events and long-jump clock
// ticks), Wbar's birth stream is a pure Yule process on the excess
// E = Wbar - W; it is fast-forwarded analytically (negative-binomial
// increments) instead of event by event, which keeps the cost per
// structural event O(1) even when Wbar is astronomically large.
class CoupledSimulator {
 public:
  CoupledSimulator(TaggedState initial, const RateKernel& kernel, double rho,
                   CouplingMode mode = CouplingMode::Paired);

  double time() const { return time_; }
  std::int64_t w() const { return tagged_.state().w; }
  wbar_t wbar() const { return excess_ + static_cast<wbar_t>(tagged_.state().w); }
  double wbar_as_double() const { return wbar_to_double(wbar()); }
  double cbar() const { return cbar_; }
  const TaggedSimulator& tagged() const { return tagged_; }

  // Paths stop evolving once a jump would push Wbar past the cap; the cap
  // time is recorded and surfaced, never silently clipped.
  bool capped() const { return capped_; }
  double cap_time() const { return cap_time_; }

  // Count of (comp)/(comp0) violations observed at event granularity.
  // Zero by construction; a nonzero value means a rate-accounting bug.
  std::uint64_t domination_violations() const { return violations_; }

  // Advance to the next structural event or to t_cap. Returns true iff an
  // event was executed before the cap (capped paths return false).
  bool advance(double t_cap, Rng& rng);

 private:
  void forward_excess(double dt, Rng& rng);
  void bump_excess(wbar_t delta);
  void check_domination(std::int64_t w_jump_abs, wbar_t wbar_jump);

  TaggedSimulator tagged_;
  const RateKernel* kernel_;
  double rho_;
  double cbar_;
  CouplingMode mode_;
  wbar_t excess_ = 0;  // Wbar - W in paired mode; Wbar - w0 offset unused
  // Standalone mode stores Wbar directly in wbar_standalone_.
  wbar_t wbar_standalone_ = 0;
  double time_ = 0.0;
  bool capped_ = false;
  double cap_time_ = 0.0;
  std::uint64_t violations_ = 0;

  static constexpr wbar_t kCap = static_cast<wbar_t>(1) << 120;

 public:
  // Standalone accessor (wbar() handles both modes).
  wbar_t wbar_raw() const {
    return mode_ == CouplingMode::Paired
               ? excess_ + static_cast<wbar_t>(tagged_.state().w)
               : wbar_standalone_;
  }
};

struct CoupledEnsembleReport {
  std::vector<double> times;
  std::vector<double> m2_w;        // E[W^2]
  std::vector<double> m2_w_se;
  std::vector<double> m2_wbar;     // E[Wbar^2] (double precision)
  std::vector<double> m2_wbar_se;
  std::vector<double> mean_wbar;
  std::vector<double> mean_wbar_se;
  std::uint64_t total_violations = 0;
  std::uint64_t capped_paths = 0;
  std::size_t n_paths = 0;
  std::vector<std::uint64_t> violations_per_path;
};

// Ensemble of coupled pairs from sampled initial states; records both
// second moments and the domination bookkeeping.
CoupledEnsembleReport run_coupled_ensemble(std::int64_t sites, std::int64_t particles,
                                           const RateKernel& kernel, double rho,
                                           InitScheme scheme, std::span<const double> obs_times,
                                           std::size_t n_paths, std::uint64_t master_seed,
                                           unsigned jobs = 0,
                                           CouplingMode mode = CouplingMode::Paired);

}  // namespace cips

#endif  // CIPS_COUPLING_HPP
