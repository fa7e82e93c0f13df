#ifndef CIPS_NUMERICS_HPP
#define CIPS_NUMERICS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cips {

// Neumaier-compensated accumulator. Used wherever many small rates are
// summed into one total (large occupation ranges produce rows that differ
// by many orders of magnitude).
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }
  void reset() { sum_ = 0.0; comp_ = 0.0; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// Total-variation distance between two discrete distributions given as
// aligned probability vectors (shorter one is zero-padded).
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  std::size_t n = std::max(p.size(), q.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pi = i < p.size() ? p[i] : 0.0;
    double qi = i < q.size() ? q[i] : 0.0;
    acc += std::abs(pi - qi);
  }
  return 0.5 * acc;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]);
    double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

// Poisson(mean) pmf up to and including kmax, computed by upward recursion.
inline std::vector<double> poisson_pmf(double mean, int kmax) {
  std::vector<double> f(static_cast<std::size_t>(kmax) + 1, 0.0);
  f[0] = std::exp(-mean);
  for (int k = 1; k <= kmax; ++k) f[k] = f[k - 1] * mean / k;
  return f;
}

}  // namespace cips

#endif  // CIPS_NUMERICS_HPP
