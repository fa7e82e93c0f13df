#ifndef CIPS_RATE_KERNEL_HPP
#define CIPS_RATE_KERNEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cips {

enum class KernelFamily { IndependentWalkers, ZeroRange, Inclusion, Table };

struct SublinearityReport {
  // Smallest constant with c(k,l) <= c_min * k * (1+l) over the scanned grid.
  double c_min = 0.0;
  // First grid pair exceeding the kernel's declared constant, if any.
  std::optional<std::pair<std::int64_t, std::int64_t>> violation;
};

// Jump-rate kernel c(k,l): rate at which one particle leaves a site holding
// k particles towards a site holding l. All supported kernels vanish at
// k = 0, are positive for k >= 1 and are bounded by C*k*(1+l); the bound
// constant is fixed at construction and reused by the coupling module.
class RateKernel {
 public:
  static RateKernel independent_walkers();
  static RateKernel zero_range(double b);
  static RateKernel inclusion(double d);
  // Row index is the departure occupation k (from 0), column the target
  // occupation l (from 0). Row 0 must be all zeros; entries for k >= 1
  // must be positive stay below the fitted bilinear bound.
  static RateKernel table(std::vector<std::vector<double>> rates);

  KernelFamily family() const { return family_; }
  double param() const { return param_; }

  // Declared sublinearity constant C with c(k,l) <= C*k*(1+l).
  double sublinearity_constant() const { return c_bound_; }

  // c(k,l); zero when k = 0. Table kernels throw outside their bounds.
  double operator()(std::int64_t k, std::int64_t l) const;
  double evaluate(std::int64_t k, std::int64_t l) const { return (*this)(k, l); }

  // Scan the grid [1,k_max] x [0,l_max] and report the tight constant,
  // flagging the first pair that exceeds the declared one.
  SublinearityReport certify_sublinearity(std::int64_t k_max, std::int64_t l_max) const;

  // True when c(k,l) does not depend on l (zero-range family); lets the
  // mean-field rates collapse to O(K).
  bool target_independent() const { return family_ == KernelFamily::ZeroRange || family_ == KernelFamily::IndependentWalkers; }

  std::string describe() const;

 private:
  RateKernel(KernelFamily family, double param, double c_bound)
      : family_(family), param_(param), c_bound_(c_bound) {}

  KernelFamily family_;
  double param_;   // b for zero-range, d for inclusion, unused otherwise
  double c_bound_;
  std::vector<std::vector<double>> table_;
};

}  // namespace cips

#endif  // CIPS_RATE_KERNEL_HPP
