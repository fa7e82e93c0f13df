#ifndef CIPS_MEANFIELD_HPP
#define CIPS_MEANFIELD_HPP

#include <span>
#include <vector>

#include "cips/rate_kernel.hpp"

namespace cips {

// Effective per-site rates driven by the current occupation distribution:
// mu[k] = sum_l c(k,l) f_l (departure), beta[k] = sum_{l>=1} c(l,k) f_l
// (arrival). mu[0] = 0 always.
struct BirthDeathRates {
  std::vector<double> mu;
  std::vector<double> beta;
};

// O(K) closed-form evaluation where the kernel allows it, O(K^2) otherwise.
BirthDeathRates birth_death_rates(std::span<const double> f, const RateKernel& kernel);
// Always the direct double sum; reference route for testing the shortcuts.
BirthDeathRates birth_death_rates_direct(std::span<const double> f, const RateKernel& kernel);

// d f_k / dt of the truncated hierarchy. All fluxes across the truncation
// boundary K are set to zero, so probability is conserved exactly and mass
// can only leak (at rate beta_K f_K), never appear.
std::vector<double> rhs_f(std::span<const double> f, const RateKernel& kernel);

// d p_k / dt of the truncated size-biased system (index 0 unused). The
// closure at K mirrors the one in rhs_f, making the two systems exact
// size-biased images of each other up to integration error.
std::vector<double> rhs_p(std::span<const double> p, std::span<const double> f,
                          const RateKernel& kernel, double rho);

// p_k = k f_k / rho for k >= 1 (entry 0 is zero).
std::vector<double> size_bias(std::span<const double> f, double rho);

// Poisson(rho) truncated where the pmf falls below `floor`.
std::vector<double> poisson_profile(double rho, double floor = 1e-16);

struct MeanFieldOptions {
  double tol = 1e-9;            // embedded-pair error per step (max norm)
  double epsilon_tail = 1e-12;  // truncation growth trigger on f_{K-1}+f_K
  double negativity_tol = 1e-10;
  double h_init = 1e-4;
  double h_max = 0.1;
  double node_dt = 0.02;  // solution node spacing for interpolation
  bool track_p = false;   // co-integrate the size-biased system
};

// Piecewise-linear-in-time solution on an emitted node grid. States at
// different nodes may have different truncation lengths; interpolation
// zero-pads.
class MeanFieldSolution {
 public:
  double rho = 0.0;
  std::vector<double> grid;
  std::vector<std::vector<double>> f_nodes;
  std::vector<std::vector<double>> p_nodes;  // empty unless track_p

  double t_begin() const { return grid.front(); }
  double t_end() const { return grid.back(); }
  bool has_p() const { return !p_nodes.empty(); }

  std::vector<double> f_at(double t) const;
  std::vector<double> p_at(double t) const;

  // sum_k k^n f_k at time t.
  double moment_at(double t, int n) const;

  // Largest relative change of mu_w / beta_w between adjacent nodes, over
  // w in [1, w_max]; diagnostic for the thinning grid criterion.
  double max_rate_variation(const RateKernel& kernel, std::int64_t w_max) const;

 private:
  std::vector<double> interpolate(const std::vector<std::vector<double>>& nodes, double t) const;
};

// Adaptive Dormand-Prince 5(4) integration of the hierarchy (optionally
// jointly with the size-biased system). The truncation K grows whenever
// f_{K-1} + f_K exceeds epsilon_tail. Steps below 1e-12 raise a stiffness
// error with diagnostic state.
MeanFieldSolution integrate(std::span<const double> f0, const RateKernel& kernel, double t_max,
                            const MeanFieldOptions& options = {});

// Fixed-step variant of the same scheme (order verification).
std::vector<double> integrate_fixed_step(std::span<const double> f0, const RateKernel& kernel,
                                         double t_max, double h);

}  // namespace cips

#endif  // CIPS_MEANFIELD_HPP
