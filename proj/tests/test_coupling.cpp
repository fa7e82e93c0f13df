#include <doctest.h>

#include <cmath>
#include <vector>

#include "cips/coupling.hpp"
#include "cips/errors.hpp"
#include "cips/numerics.hpp"
#include "cips/rng.hpp"

using namespace cips;

TEST_CASE("exit rate formula") {
  // w=1, N/L=1, C=1, rho=1: Cbar = 8, total 8 + 4 = 12.
  const RateKernel iw = RateKernel::independent_walkers();
  const ClassConfig cfg({0, 10}, 10, 10);
  CHECK(exit_rate_bar(1, cfg, iw, 1.0) == doctest::Approx(12.0));
  // Linearity in w: doubling w adds Cbar * w.
  const double cbar = 8.0;
  CHECK(exit_rate_bar(2, cfg, iw, 1.0) - exit_rate_bar(1, cfg, iw, 1.0) ==
        doctest::Approx(cbar));
}

TEST_CASE("exit rate equals the sum of simulated event rates on random states") {
  const RateKernel zr = RateKernel::zero_range(4.0);
  Rng rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t sites = 10 + static_cast<std::int64_t>(rng.uniform_int(90));
    const std::int64_t particles = 1 + static_cast<std::int64_t>(rng.uniform_int(
                                           static_cast<std::uint64_t>(2 * sites)));
    const ClassConfig cfg = sample_iid_config(sites, particles, rng);
    const std::int64_t w = 1 + static_cast<std::int64_t>(rng.uniform_int(20));
    const double rho = static_cast<double>(particles) / static_cast<double>(sites) + 0.25;
    const double closed = exit_rate_bar(w, cfg, zr, rho);
    const double summed = exit_rate_bar_from_events(w, cfg, zr, rho);
    CHECK(std::abs(closed - summed) / closed < 1e-12);
  }
}

TEST_CASE("both processes start equal and the moments coincide at t=0") {
  const RateKernel zr = RateKernel::zero_range(4.0);
  const CoupledEnsembleReport report = run_coupled_ensemble(
      50, 10, zr, 0.25, {TaggedSiteScheme::UniformSite}, std::vector<double>{0.0}, 400, 4, 0);
  CHECK(report.m2_w[0] == doctest::Approx(report.m2_wbar[0]));
  CHECK(report.total_violations == 0);
}

TEST_CASE("pathwise domination and monotone growth at event granularity") {
  const RateKernel zr = RateKernel::zero_range(4.0);
  Rng rng(31415);
  for (int path = 0; path < 300; ++path) {
    Rng path_rng(derive_seed(999, static_cast<std::uint64_t>(path)));
    TaggedState st = sample_initial(20, 5, {TaggedSiteScheme::UniformSite}, path_rng);
    CoupledSimulator sim(std::move(st), zr, 0.25);
    wbar_t last_wbar = sim.wbar_raw();
    while (sim.advance(2.0, path_rng)) {
      // comp0 and monotonicity of the dominating process.
      CHECK(sim.wbar_raw() >= static_cast<wbar_t>(sim.w()));
      CHECK(sim.wbar_raw() >= last_wbar);
      last_wbar = sim.wbar_raw();
    }
    CHECK(sim.domination_violations() == 0);
    CHECK_FALSE(sim.capped());
  }
}

TEST_CASE("moment ordering m2_w <= m2_wbar across observation times") {
  const RateKernel zr = RateKernel::zero_range(4.0);
  const std::vector<double> obs = {0.5, 1.0, 2.0};
  const CoupledEnsembleReport report = run_coupled_ensemble(
      100, 25, zr, 0.25, {TaggedSiteScheme::UniformSite}, obs, 1000, 77, 0);
  CHECK(report.total_violations == 0);
  CHECK(report.capped_paths == 0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(report.m2_w[i] <= report.m2_wbar[i]);
  }
}

TEST_CASE("the coupling leaves the tagged marginal untouched") {
  // The paired construction carves the W events out of the dominating
  // clocks by thinning; the law of W itself must stay exactly that of the
  // plain tagged simulator.
  const RateKernel zr = RateKernel::zero_range(4.0);
  const std::vector<double> obs = {1.0};
  const std::int64_t sites = 50;
  const std::int64_t particles = 12;  // N/L = 0.24 <= rho = 0.25

  const std::size_t n_paths = 6000;
  const CoupledEnsembleReport coupled = run_coupled_ensemble(
      sites, particles, zr, 0.25, {TaggedSiteScheme::UniformSite}, obs, n_paths, 404, 0);

  double s2 = 0.0, s4 = 0.0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    Rng rng(derive_seed(505, p));
    TaggedState st = sample_initial(sites, particles, {TaggedSiteScheme::UniformSite}, rng);
    TaggedSimulator sim(std::move(st), zr);
    while (sim.advance(1.0, rng)) {
    }
    const double w2 = static_cast<double>(sim.state().w) * static_cast<double>(sim.state().w);
    s2 += w2;
    s4 += w2 * w2;
  }
  const double n = static_cast<double>(n_paths);
  const double plain_m2 = s2 / n;
  const double plain_se = std::sqrt(std::max(0.0, s4 / n - plain_m2 * plain_m2) / n);

  const double combined = std::hypot(coupled.m2_w_se[0], plain_se);
  CHECK(std::abs(coupled.m2_w[0] - plain_m2) < 4.0 * combined);
}

TEST_CASE("coupled and standalone dominating marginals agree") {
  const RateKernel iw = RateKernel::independent_walkers();
  const std::vector<double> obs = {1.0};
  const std::int64_t sites = 100;
  const std::int64_t particles = 30;  // N/L = 0.3 <= rho
  const double rho = 0.3;
  const std::size_t n_paths = 4000;

  const CoupledEnsembleReport coupled =
      run_coupled_ensemble(sites, particles, iw, rho, {TaggedSiteScheme::UniformSite}, obs,
                           n_paths, 101, 0, CouplingMode::Paired);
  const CoupledEnsembleReport standalone =
      run_coupled_ensemble(sites, particles, iw, rho, {TaggedSiteScheme::UniformSite}, obs,
                           n_paths, 202, 0, CouplingMode::Standalone);
  CHECK(coupled.capped_paths == 0);
  CHECK(standalone.capped_paths == 0);
  const double se = std::hypot(coupled.mean_wbar_se[0], standalone.mean_wbar_se[0]);
  CHECK(std::abs(coupled.mean_wbar[0] - standalone.mean_wbar[0]) < 3.0 * se);
}

TEST_CASE("explosive configurations cap cleanly instead of overflowing") {
  const RateKernel zr = RateKernel::zero_range(4.0);
  // rho = 2 pushes Cbar to 70; Wbar passes 2^120 well before t = 2.
  const CoupledEnsembleReport report = run_coupled_ensemble(
      20, 40, zr, 2.0, {TaggedSiteScheme::UniformSite}, std::vector<double>{2.0}, 50, 5, 0);
  CHECK(report.capped_paths > 0);
  CHECK(report.total_violations == 0);
}

TEST_CASE("density convention is enforced") {
  const RateKernel iw = RateKernel::independent_walkers();
  Rng rng(1);
  TaggedState st = sample_initial(10, 30, {TaggedSiteScheme::UniformSite}, rng);
  CHECK_THROWS_AS(CoupledSimulator(std::move(st), iw, 1.0), ConfigError);  // N/L = 3 > rho
}

TEST_CASE("128-bit helpers") {
  CHECK(wbar_to_string(0) == "0");
  CHECK(wbar_to_string(12345) == "12345");
  wbar_t big = 1;
  for (int i = 0; i < 36; ++i) big *= 10;  // 10^36 fits in 128 bits
  CHECK(wbar_to_string(big) == "1" + std::string(36, '0'));
  CHECK(wbar_to_double(static_cast<wbar_t>(1) << 100) == doctest::Approx(std::pow(2.0, 100)));
}
