import numpy as np
import pytest

from hficov.estimators import realized_cov
from hficov.sampling import SamplingScheme
from hficov.sim import (
    ItoModelConfig,
    NoiseConfig,
    SamplingConfig,
    default_test_model,
    mc_validate,
    observe,
    sample_scheme,
    simulate_paths,
)


CONST2 = ItoModelConfig(p=2, sigma_const=np.linalg.cholesky(np.array([[4e-4, 1e-4], [1e-4, 2e-4]])))


# ---------------------------------------------------------------------
# Path simulation
# ---------------------------------------------------------------------
def test_simulate_paths_deterministic():
    a = simulate_paths(CONST2, 42, fine_n=500)
    b = simulate_paths(CONST2, 42, fine_n=500)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.integrated_cov, b.integrated_cov)


def test_simulate_paths_constant_truth():
    p = simulate_paths(CONST2, 0, fine_n=100)
    np.testing.assert_allclose(p.integrated_cov, CONST2.sigma_const @ CONST2.sigma_const.T, rtol=1e-12)


def test_increment_scaling_regression():
    # E[(dX)^2] = O(dt): the log-log regression slope of mean squared
    # increments on the step size is 1
    model = ItoModelConfig(p=1, sigma_const=np.array([[0.02]]))
    rng = np.random.default_rng(1)
    slopes = []
    sizes = np.array([200, 800, 3200, 12800])
    ms = []
    for m in sizes:
        paths = simulate_paths(model, rng, fine_n=int(m))
        ms.append(np.mean(np.diff(paths.x[0]) ** 2))
    slope = np.polyfit(np.log(1.0 / sizes), np.log(ms), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_simulate_paths_explicit_times():
    times = np.array([0.0, 0.2, 0.5, 1.0])
    p = simulate_paths(CONST2, 3, times=times)
    assert p.x.shape == (2, 4)
    with pytest.raises(ValueError):
        simulate_paths(CONST2, 3, times=np.array([0.1, 0.5, 1.0]))


def test_stochastic_vol_paths():
    model = default_test_model()
    paths = simulate_paths(model, 7, fine_n=2000)
    spot = paths.spot_cov()
    assert np.all(np.linalg.eigvalsh(spot) > -1e-18)
    # integrated covariance is random across seeds
    other = simulate_paths(model, 8, fine_n=2000)
    assert not np.allclose(paths.integrated_cov, other.integrated_cov)


def test_fine_grid_realized_cov_near_truth():
    rng = np.random.default_rng(2)
    sig = CONST2.sigma_const
    truth = (sig @ sig.T)[0, 1]
    vals = []
    for _ in range(60):
        paths = simulate_paths(CONST2, rng, fine_n=2000)
        sch = SamplingScheme(paths.times, 1.0)
        data = observe(paths, [sch, sch], None, rng)
        vals.append(realized_cov(data[0], data[1]))
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert np.mean(vals) == pytest.approx(truth, abs=3.5 * se)


# ---------------------------------------------------------------------
# Sampling schemes
# ---------------------------------------------------------------------
def test_equidistant_scheme():
    s = sample_scheme(SamplingConfig("equidistant", 4), 1.0, 0)
    np.testing.assert_allclose(s.times, [0, 0.25, 0.5, 0.75, 1.0])


def test_poisson_scheme_count_concentrates():
    inside = 0
    for seed in range(40):
        s = sample_scheme(SamplingConfig("poisson", 1000), 1.0, seed)
        if 900 <= len(s) <= 1100:
            inside += 1
    assert inside >= 36  # ~95% of seeds


def test_poisson_scheme_augmented_endpoints():
    s = sample_scheme(SamplingConfig("poisson", 50), 1.0, 1)
    assert s.times[0] == 0.0 and s.times[-1] == 1.0
    s2 = sample_scheme(SamplingConfig("poisson", 50, augmented=False), 1.0, 1)
    assert s2.times[0] > 0.0


def test_poisson_scheme_needs_mass():
    with pytest.raises(ValueError):
        sample_scheme(SamplingConfig("poisson", 5), 1.0, 0)


def test_two_poisson_schemes_share_no_timestamps():
    rng = np.random.default_rng(3)
    a = sample_scheme(SamplingConfig("poisson", 500, augmented=False), 1.0, rng)
    b = sample_scheme(SamplingConfig("poisson", 500, augmented=False), 1.0, rng)
    assert np.intersect1d(a.times, b.times).size == 0


# ---------------------------------------------------------------------
# Observation / noise
# ---------------------------------------------------------------------
def test_observe_noiseless_hits_path_values():
    paths = simulate_paths(CONST2, 5, fine_n=400)
    sch = SamplingScheme(paths.times[::4], 1.0)
    data = observe(paths, [sch, sch], None, 5)
    np.testing.assert_array_equal(data[0].values, paths.x[0][::4])


def test_observe_snaps_to_grid():
    paths = simulate_paths(CONST2, 6, fine_n=100)
    sch = SamplingScheme(np.array([0.0, 0.1234, 0.5031, 1.0]), 1.0)
    data = observe(paths, [sch, sch], None, 6)
    for t in data[0].scheme.times:
        assert np.min(np.abs(paths.times - t)) == 0.0


def test_observe_synchronous_noise_cross_covariance():
    rng = np.random.default_rng(7)
    eta2, rho = 1e-6, 0.5
    H = eta2 * np.array([[1, rho], [rho, 1]])
    paths = simulate_paths(ItoModelConfig(p=2, sigma_const=np.zeros((2, 2))), rng, fine_n=50_000)
    sch = SamplingScheme(paths.times, 1.0)
    data = observe(paths, [sch, sch], NoiseConfig(H), rng)
    emp = np.mean(data[0].values * data[1].values)
    se = np.sqrt(eta2 * eta2 * (1 + rho**2) / len(sch))
    assert emp == pytest.approx(rho * eta2, abs=4 * se)
    assert abs(np.mean(data[0].values)) < 4 * np.sqrt(eta2 / len(sch))


def test_observe_async_noise_independent():
    rng = np.random.default_rng(8)
    H = 1e-6 * np.array([[1, 0.9], [0.9, 1]])
    paths = simulate_paths(ItoModelConfig(p=2, sigma_const=np.zeros((2, 2))), rng, fine_n=200_000)
    s1 = sample_scheme(SamplingConfig("poisson", 5000, augmented=False), 1.0, rng)
    s2 = sample_scheme(SamplingConfig("poisson", 5000, augmented=False), 1.0, rng)
    data = observe(paths, [s1, s2], NoiseConfig(H), rng)
    # disjoint timestamps: draws independent despite eta12 != 0
    a = data[0].values[: min(len(data[0]), len(data[1]))]
    b = data[1].values[: min(len(data[0]), len(data[1]))]
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1


def test_observe_partially_shared_noise_correlated_only_at_shared():
    rng = np.random.default_rng(9)
    eta2, rho = 1e-4, 0.8
    H = eta2 * np.array([[1, rho], [rho, 1]])
    m = 4000
    grid = np.linspace(0, 1, m + 1)
    shared = grid[::2]
    only1 = grid[1::4]
    only2 = grid[3::4]
    s1 = SamplingScheme(np.union1d(shared, only1), 1.0)
    s2 = SamplingScheme(np.union1d(shared, only2), 1.0)
    paths = simulate_paths(ItoModelConfig(p=2, sigma_const=np.zeros((2, 2))), rng, fine_n=m)
    data = observe(paths, [s1, s2], NoiseConfig(H), rng)
    i1 = np.isin(data[0].scheme.times, shared)
    i2 = np.isin(data[1].scheme.times, shared)
    shared_corr = np.corrcoef(data[0].values[i1], data[1].values[i2])[0, 1]
    off_corr = np.corrcoef(data[0].values[~i1][:900], data[1].values[~i2][:900])[0, 1]
    assert shared_corr == pytest.approx(rho, abs=0.08)
    assert abs(off_corr) < 0.12


def test_two_point_noise_law():
    rng = np.random.default_rng(10)
    eta = 1e-3
    paths = simulate_paths(ItoModelConfig(p=1, sigma_const=np.zeros((1, 1))), rng, fine_n=500)
    sch = SamplingScheme(paths.times, 1.0)
    data = observe(paths, [sch], NoiseConfig(np.array([[eta**2]]), law="two_point"), rng)
    np.testing.assert_allclose(np.abs(data[0].values), eta)
    with pytest.raises(ValueError):
        NoiseConfig(1e-6 * np.array([[1, 0.5], [0.5, 1]]), law="two_point")


# ---------------------------------------------------------------------
# Monte Carlo harness plumbing
# ---------------------------------------------------------------------
def test_mc_validate_unknown_scenario():
    with pytest.raises(ValueError):
        mc_validate("nope")


def test_mc_validate_minimum_replicates():
    with pytest.raises(ValueError):
        mc_validate("ci_size", replicates=10)


def test_mc_validate_reproducible_report():
    a = mc_validate("hy_acov", replicates=120, seed=5, n=200)
    b = mc_validate("hy_acov", replicates=120, seed=5, n=200)
    a.pop("elapsed_s")
    b.pop("elapsed_s")
    assert a == b


def test_covest_threads_reproduces_serial(monkeypatch):
    serial = mc_validate("hy_acov", replicates=150, seed=9, n=250)
    monkeypatch.setenv("COVEST_THREADS", "3")
    threaded = mc_validate("hy_acov", replicates=150, seed=9, n=250)
    assert serial["checks"][0]["value"] == threaded["checks"][0]["value"]
