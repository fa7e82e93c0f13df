#include "cips/rng.hpp"

#include <array>
#include <cmath>

namespace cips {

namespace {

// log(k!) for k = 0..9, used by the PTRD acceptance test.
constexpr std::array<double, 10> kLogFactorial = {
    0.0,
    0.0,
    0.6931471805599453,
    1.791759469228055,
    3.1780538303479458,
    4.787491742782046,
    6.579251212010101,
    8.525161361065415,
    10.604602902745251,
    12.801827480081469};

double log_factorial(double k) {
  if (k < 10.0) return kLogFactorial[static_cast<int>(k)];
  // Stirling with correction terms, matching Hoermann's f(k).
  double ik = 1.0 / k;
  return (k + 0.5) * std::log(k) - k + 0.9189385332046727 +
         ik * (1.0 / 12.0 - ik * ik / 360.0);
}

}  // namespace

double Rng::poisson(double mean) {
  if (mean <= 0.0) return 0.0;
  if (mean < 12.0) {
    // Knuth inversion by multiplication.
    double limit = std::exp(-mean);
    double prod = 1.0;
    double k = -1.0;
    do {
      k += 1.0;
      prod *= uniform_pos();
    } while (prod > limit);
    return k;
  }
  if (mean > 1.0e12) {
    // Relative tail error of the normal approximation is O(mean^{-1/2}),
    // below double resolution of counts this large.
    double x = std::floor(mean + std::sqrt(mean) * normal() + 0.5);
    return x < 0.0 ? 0.0 : x;
  }
  // PTRD: transformed rejection with a discrete-normal dominating hat
  // (W. Hoermann, "The transformed rejection method for generating
  // Poisson random variables", 1993).
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u;
    double v = uniform();
    if (v <= 0.86 * v_r) {
      u = v / v_r - 0.43;
      return std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + mean + 0.445);
    }
    if (v >= v_r) {
      u = uniform() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u < 0.0 ? -0.5 : 0.5) - u;
      v = uniform() * v_r;
    }
    double us = 0.5 - std::abs(u);
    if (us < 0.013 && v > us) continue;
    double k = std::floor((2.0 * a / us + b) * u + mean + 0.445);
    v = v * inv_alpha / (a / (us * us) + b);
    if (k >= 10.0) {
      if (std::log(v * smu) <=
          (k + 0.5) * std::log(mean / k) - mean - 0.9189385332046727 + k -
              (1.0 / 12.0 - 1.0 / (360.0 * k * k)) / k) {
        return k;
      }
    } else if (k >= 0.0) {
      if (std::log(v) <= k * std::log(mean) - mean - log_factorial(k)) {
        return k;
      }
    }
  }
}

double Rng::gamma(double shape) {
  if (shape < 1.0) {
    // Boost via Gamma(shape+1) * U^{1/shape}.
    double g = gamma(shape + 1.0);
    return g * std::pow(uniform_pos(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace cips
