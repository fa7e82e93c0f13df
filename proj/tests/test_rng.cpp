#include <doctest.h>

#include <cmath>
#include <vector>

#include "cips/numerics.hpp"
#include "cips/rng.hpp"

using namespace cips;

TEST_CASE("uniform stays in range and reproduces by seed") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform());
  }
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform_pos();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("exponential moments") {
  Rng rng(2);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential(2.5);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n;
  CHECK(std::abs(mean - 0.4) < 4.0 * 0.4 / std::sqrt(static_cast<double>(n)));
  CHECK(s2 / n - mean * mean == doctest::Approx(0.16).epsilon(0.05));
}

TEST_CASE("uniform_int is unbiased across a small range") {
  Rng rng(5);
  const int n = 120000;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < n; ++i) counts[rng.uniform_int(7)]++;
  for (int v : counts) {
    const double expected = n / 7.0;
    CHECK(std::abs(v - expected) < 5.0 * std::sqrt(expected));
  }
}

TEST_CASE("poisson pmf for small means (inversion branch)") {
  Rng rng(11);
  const double mean = 3.0;
  const int n = 200000;
  std::vector<double> hist(24, 0.0);
  for (int i = 0; i < n; ++i) {
    const double k = rng.poisson(mean);
    if (k < hist.size()) hist[static_cast<std::size_t>(k)] += 1.0 / n;
  }
  const std::vector<double> pmf = poisson_pmf(mean, 23);
  for (int k = 0; k <= 10; ++k) {
    const double sigma = std::sqrt(pmf[k] * (1.0 - pmf[k]) / n);
    CHECK(std::abs(hist[k] - pmf[k]) < 4.0 * sigma + 1e-9);
  }
}

TEST_CASE("poisson moments across the PTRD branch") {
  Rng rng(13);
  for (double mean : {15.0, 80.0, 5000.0}) {
    const int n = 150000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = rng.poisson(mean);
      s1 += k;
      s2 += k * k;
    }
    const double m = s1 / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - mean) < 4.0 * std::sqrt(mean / n));
    CHECK(v / mean == doctest::Approx(1.0).epsilon(0.03));
  }
}

TEST_CASE("poisson third moment across the PTRD branch") {
  // Central third moment of Poisson equals the mean; a skew defect would
  // bias the dominating-process growth.
  Rng rng(17);
  const double mean = 40.0;
  const int n = 300000;
  double s1 = 0.0;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) {
    draws[i] = rng.poisson(mean);
    s1 += draws[i];
  }
  const double m = s1 / n;
  double c3 = 0.0;
  for (double d : draws) c3 += (d - m) * (d - m) * (d - m);
  c3 /= n;
  // SE of the third central moment ~ sqrt(15 mean^3 / n) for Poisson-ish.
  const double se = std::sqrt(15.0 * mean * mean * mean / n);
  CHECK(std::abs(c3 - mean) < 4.0 * se);
}

TEST_CASE("gamma moments") {
  Rng rng(19);
  for (double shape : {0.5, 1.0, 4.5, 300.0}) {
    const int n = 150000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(shape);
      s1 += x;
      s2 += x * x;
    }
    const double m = s1 / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - shape) < 4.0 * std::sqrt(shape / n) + 0.01);
    CHECK(v / shape == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("normal moments") {
  Rng rng(23);
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.06));
}

TEST_CASE("yule fast-forward law: negative binomial via gamma-poisson") {
  // Population of a pure-birth process with per-capita rate c after time
  // tau, started from r individuals: r + NegBin(r, e^{-c tau}). The
  // gamma-poisson mixture must reproduce its mean r e^{c tau} and variance
  // r e^{c tau}(e^{c tau} - 1).
  Rng rng(29);
  const double c = 1.3, tau = 0.9;
  const double growth = std::exp(c * tau);
  const int r = 7;
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double lambda = rng.gamma(static_cast<double>(r)) * std::expm1(c * tau);
    const double total = r + rng.poisson(lambda);
    s1 += total;
    s2 += total * total;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  const double expect_mean = r * growth;
  const double expect_var = r * growth * (growth - 1.0);
  CHECK(std::abs(mean - expect_mean) < 5.0 * std::sqrt(expect_var / n));
  CHECK(var / expect_var == doctest::Approx(1.0).epsilon(0.05));
}
