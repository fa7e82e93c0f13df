#ifndef CIPS_LIMIT_CHAIN_HPP
#define CIPS_LIMIT_CHAIN_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cips/meanfield.hpp"
#include "cips/rate_kernel.hpp"
#include "cips/rng.hpp"

namespace cips {

// Jump rates of the limit occupation process at state w and time t:
// birth w -> w+1 at beta_w(t), death w -> w-1 at ((w-1)/w) mu_w(t), and a
// long-range jump w -> k at (1/w) c(w,k-1) f_{k-1}(t) for k >= 1. The
// long-range total is identically mu_w(t)/w, so everything sums to
// beta_w(t) + mu_w(t).
struct LimitRates {
  double birth = 0.0;
  double death = 0.0;
  double long_range_total = 0.0;
  std::vector<double> long_range;  // index k >= 1; entry 0 unused
  double total() const { return birth + death + long_range_total; }
};

LimitRates limit_rates(std::int64_t w, double t, const MeanFieldSolution& solution,
                       const RateKernel& kernel);

enum class EnvelopeMode {
  Grid,  // 1.05 * max of the total rate at the bracketing grid nodes
  Lip    // global bound from the kernel's bilinear growth constant
};

// Exact simulation of the time-inhomogeneous chain driven by the
// interpolated mean-field solution, by thinning: candidate events at a
// dominating constant rate per lookahead window, accepted with probability
// trueRate/envelope. Rates are linear in t between solution nodes for
// fixed w, so the grid envelope is rigorous; acceptance ratios above one
// raise an error instead of being clipped.
class LimitChain {
 public:
  LimitChain(std::int64_t w0, double t0, const MeanFieldSolution& solution,
             const RateKernel& kernel, EnvelopeMode mode = EnvelopeMode::Grid);

  std::int64_t w() const { return w_; }
  double time() const { return time_; }
  std::uint64_t jump_count() const { return jumps_; }

  // Advance to the next accepted jump, or to t_cap if none occurs first.
  // Returns true iff a jump was executed.
  bool advance(double t_cap, Rng& rng);

 private:
  double envelope(double t_lo, double t_hi) const;

  std::int64_t w_;
  double time_;
  const MeanFieldSolution* solution_;
  const RateKernel* kernel_;
  EnvelopeMode mode_;
  std::uint64_t jumps_ = 0;
};

struct LimitEnsembleResult {
  std::vector<double> times;
  // histogram[i][k] = P(W(t_i) = k), with standard errors alongside.
  std::vector<std::vector<double>> histogram;
  std::vector<std::vector<double>> histogram_se;
  std::vector<double> mean_w;
  std::vector<double> mean_w_se;
  std::vector<double> mean_w2;
  std::vector<double> mean_w2_se;
  std::size_t n_paths = 0;
};

// Independent paths started from w0 ~ p(0) = size_bias(f(0)), observed on
// a sorted grid. Seeds derive per path from the master seed; aggregation
// is by path index, so results do not depend on the thread count.
LimitEnsembleResult ensemble_law(const MeanFieldSolution& solution, const RateKernel& kernel,
                                 std::span<const double> obs_times, std::size_t n_paths,
                                 std::uint64_t master_seed, unsigned jobs = 0,
                                 EnvelopeMode mode = EnvelopeMode::Grid);

// Draw from a discrete distribution given as a probability vector.
std::int64_t sample_discrete(std::span<const double> weights, Rng& rng);

}  // namespace cips

#endif  // CIPS_LIMIT_CHAIN_HPP
