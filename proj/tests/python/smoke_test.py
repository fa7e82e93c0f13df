"""Smoke tests for the python bindings: a few exact values and identities."""

import math
import sys

import cips


def approx(a, b, tol=1e-10):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def test_kernels():
    iw = cips.RateKernel.independent_walkers()
    approx(iw(3, 7), 3.0)
    zr = cips.RateKernel.zero_range(4.0)
    approx(zr(2, 9), 3.0)
    approx(zr(0, 5), 0.0)
    inc = cips.RateKernel.inclusion(1.0)
    approx(inc(2, 3), 8.0)
    report = inc.certify_sublinearity(50, 50)
    approx(report["c_min"], 1.0)
    assert report["violation"] is None


def test_seed_vector():
    assert cips.derive_seed(0x123456789ABCDEF0, 42) == 0x77F9E79580321212
    assert cips.derive_seed(0, 0) == 0xE220A8397B1DCDAF


def test_sampling():
    state = cips.sample_initial(10, 23, tagged="uniform", seed=5)
    assert state["w"] >= 1
    assert sum(state["env_counts"]) == 9
    total = state["w"] + sum(k * n for k, n in enumerate(state["env_counts"]))
    assert total == 23


def test_meanfield_stationarity():
    iw = cips.RateKernel.independent_walkers()
    f0 = cips.poisson_profile(1.0)
    solution = cips.integrate_meanfield(f0, iw, 2.0, tol=1e-10)
    f2 = solution.f_at(2.0)
    for k, value in enumerate(f0):
        assert abs(f2[k] - value) < 1e-7
    approx(solution.moment_at(2.0, 1), 1.0, 1e-8)
    p = cips.size_bias(f0, 1.0)
    approx(p[1], math.exp(-1.0), 1e-12)


def test_oracle_and_simulator_agree():
    iw = cips.RateKernel.independent_walkers()
    oracle = cips.oracle_transient(3, 3, iw, tagged=True, times=[1.0])
    ensemble = cips.simulate_tagged(3, 3, iw, [1.0], n_paths=20000, seed=3)
    w_exact = oracle["w_law"][0]
    w_mc = ensemble["w_histogram"][0]
    tv = 0.5 * sum(
        abs((w_exact[k] if k < len(w_exact) else 0.0) - (w_mc[k] if k < len(w_mc) else 0.0))
        for k in range(max(len(w_exact), len(w_mc)))
    )
    assert tv < 0.02, f"tagged TV {tv}"


def test_limit_chain_stationary():
    iw = cips.RateKernel.independent_walkers()
    solution = cips.integrate_meanfield(cips.poisson_profile(1.0), iw, 1.0)
    result = cips.simulate_limit(solution, iw, [1.0], n_paths=20000, seed=9)
    p_ref = cips.size_bias(cips.poisson_profile(1.0), 1.0)
    hist = result["histogram"][0]
    tv = 0.5 * sum(
        abs((p_ref[k] if k < len(p_ref) else 0.0) - (hist[k] if k < len(hist) else 0.0))
        for k in range(max(len(p_ref), len(hist)))
    )
    assert tv < 0.02, f"limit TV {tv}"


def test_coupling():
    zr = cips.RateKernel.zero_range(4.0)
    report = cips.simulate_coupled(50, 12, zr, 0.25, [0.5, 1.0], n_paths=500, seed=11)
    assert report["total_violations"] == 0
    assert report["capped_paths"] == 0
    for m2w, m2b in zip(report["m2_w"], report["m2_wbar"]):
        assert m2w <= m2b


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
