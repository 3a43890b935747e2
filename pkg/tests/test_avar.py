import math

import numpy as np
import pytest

from hficov.avar import (
    AcovMatrix,
    GmsAcovConfig,
    TheoryInputs,
    acov_gms_hat,
    acov_matrix_hat,
    acov_rc_hat,
    acov_theory,
    dimension_identity,
    gms_theory_inputs,
    hy_theory_inputs,
    isserlis_cov,
    lincomb_avar,
    standardize,
    svec_index,
    svec_pack,
    svec_pairs,
    svec_unpack,
)
from hficov.estimators import TickSeries
from hficov.kernels import cubic_weights, kernel_constants
from hficov.sampling import SamplingScheme, pairwise_refresh

from oracles import acov_rc_oracle, isserlis_mc_oracle


def series(times, values, T=1.0):
    return TickSeries(SamplingScheme(np.asarray(times, float), T), np.asarray(values, float))


# ---------------------------------------------------------------------
# Isserlis moment identity
# ---------------------------------------------------------------------
def test_isserlis_identity_matrix():
    eye = np.eye(4)
    assert isserlis_cov(eye, (1, 2, 1, 2)) == 1.0
    assert isserlis_cov(eye, (1, 2, 3, 4)) == 0.0


def test_isserlis_symmetries():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((4, 4))
    sigma = m @ m.T
    for idx in ((1, 2, 3, 4), (1, 1, 2, 3), (2, 4, 4, 1)):
        i, l, m_, u = idx
        base = isserlis_cov(sigma, idx)
        assert isserlis_cov(sigma, (l, i, m_, u)) == base
        assert isserlis_cov(sigma, (i, l, u, m_)) == base
        assert isserlis_cov(sigma, (m_, u, i, l)) == base


def test_isserlis_against_monte_carlo():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((4, 4))
    sigma = m @ m.T + 0.5 * np.eye(4)
    idx = (1, 2, 1, 3)
    draws = 1_000_000
    mc = isserlis_mc_oracle(sigma, idx, draws, rng)
    exact = isserlis_cov(sigma, idx)
    # rough standard error of the MC covariance estimate
    se = 4 * np.max(np.abs(sigma)) ** 2 / math.sqrt(draws) * 3
    assert abs(mc - exact) < 3 * se


def test_isserlis_index_range():
    with pytest.raises(IndexError):
        isserlis_cov(np.eye(3), (1, 2, 3, 4))


# ---------------------------------------------------------------------
# svec layout and dimension identity
# ---------------------------------------------------------------------
def test_svec_index_examples():
    assert svec_index(4, 1, 2) == 1
    assert svec_index(4, 1, 1) == 0
    assert svec_index(4, 2, 2) == 4
    with pytest.raises(ValueError):
        svec_index(4, 2, 1)


def test_svec_roundtrip_and_order():
    rng = np.random.default_rng(2)
    for p in (1, 2, 5, 7):
        m = rng.standard_normal((p, p))
        m = m + m.T
        v = svec_pack(m)
        assert v.size == p * (p + 1) // 2
        np.testing.assert_array_equal(svec_unpack(v), m)
        for pos, (k, l) in enumerate(svec_pairs(p)):
            assert svec_index(p, k, l) == pos
            assert v[pos] == m[k - 1, l - 1]


def test_svec_p5_counts():
    assert len(svec_pairs(5)) == 15
    q = 15
    assert q * (q + 1) // 2 == 120


def test_dimension_identity_exact():
    for p in range(1, 11):
        lhs, rhs = dimension_identity(p)
        assert lhs == rhs
    assert dimension_identity(5) == (120, 120)


# ---------------------------------------------------------------------
# Closed-form asymptotic covariances
# ---------------------------------------------------------------------
def _const_inputs(sigma, **kw):
    return TheoryInputs(times=np.array([0.0, 1.0]), sigma=sigma, **kw)


def test_acov_theory_rc_identity_cases():
    inputs = _const_inputs(np.eye(4))
    assert acov_theory(inputs, "rc", ((1, 2), (3, 4))) == 0.0
    assert acov_theory(inputs, "rc", ((1, 2), (1, 2))) == pytest.approx(1.0)


def test_acov_theory_ms_sync_matches_independent_transcription():
    # independent transcription of the one-dimensional variance formula:
    # 2cT int D'(s)(s11 s22 + s12^2) ds + 2 n1 c^-3 (e1^2 e2^2 + e12^2)
    # + 2 n2 c^-1 int (e1^2 s22 + e2^2 s11 + 2 e12 s12) ds
    # + 2 n2 c^-1 (e1^2 e2^2 + e12^2)
    sig = np.array([[4e-4, 1.2e-4], [1.2e-4, 2.5e-4]])
    H = np.array([[2.5e-7, 1e-7], [1e-7, 4e-7]])
    kc = kernel_constants(cubic_weights(500))
    c = 1.3
    inputs = _const_inputs(sig, noise=H, c=c, constants=kc)
    got = acov_theory(inputs, "ms_sync", ((1, 2), (1, 2)))
    slope = kc.lasa_slope
    expect = (
        2 * c * slope * (sig[0, 0] * sig[1, 1] + sig[0, 1] ** 2)
        + 2 * kc.n1 * c**-3 * (H[0, 0] * H[1, 1] + H[0, 1] ** 2)
        + 2 * kc.n2 * c**-1 * (H[0, 0] * sig[1, 1] + H[1, 1] * sig[0, 0] + 2 * H[0, 1] * sig[0, 1])
        + 2 * kc.n2 * c**-1 * (H[0, 0] * H[1, 1] + H[0, 1] ** 2)
    )
    assert got == pytest.approx(expect, rel=1e-12)


def _poisson_scheme(rng, n, endpoints=True):
    t = np.sort(rng.uniform(0, 1, rng.poisson(n)))
    if endpoints:
        t = np.unique(np.concatenate([[0.0], t, [1.0]]))
    return SamplingScheme(t, 1.0)


def _overlap_matrix(sa, sb):
    lo = np.maximum(sa.times[:-1][:, None], sb.times[:-1][None, :])
    hi = np.minimum(sa.times[1:][:, None], sb.times[1:][None, :])
    return np.maximum(hi - lo, 0.0)


def test_acov_theory_hy_equals_exact_gaussian_covariance():
    rng = np.random.default_rng(3)
    vols = np.array([0.02, 0.015, 0.018, 0.012])
    corr = np.array([[1, .6, .4, .3], [.6, 1, .5, .35], [.4, .5, 1, .45], [.3, .35, .45, 1.0]])
    sig = np.diag(vols) @ corr @ np.diag(vols)
    schemes = [_poisson_scheme(rng, 250) for _ in range(4)]
    inputs, meta = hy_theory_inputs(schemes, np.array([0.0, 1.0]), sig)
    theo = acov_theory(inputs, "hy", ((1, 2), (3, 4)))

    def exact_cov(s1, s2, s3, s4, s13, s24, s14, s23):
        A = (_overlap_matrix(s1, s2) > 0).astype(float)
        B = (_overlap_matrix(s3, s4) > 0).astype(float)
        t1 = np.trace(A.T @ (s13 * _overlap_matrix(s1, s3)) @ B @ (s24 * _overlap_matrix(s2, s4)).T)
        t2 = np.trace(A @ (s23 * _overlap_matrix(s2, s3)) @ B @ (s14 * _overlap_matrix(s1, s4)).T)
        return t1 + t2

    exact = meta["N"] * exact_cov(*schemes, sig[0, 2], sig[1, 3], sig[0, 3], sig[1, 2])
    assert theo == pytest.approx(exact, rel=1e-9)


def _gms_quadratic_form(grid, alphas):
    n1 = len(grid.source_schemes[0])
    n2 = len(grid.source_schemes[1])
    Q = np.zeros((n1, n2))
    up1, lo1 = grid.next_idx[0], grid.prev_idx[0]
    up2, lo2 = grid.next_idx[1], grid.prev_idx[1]
    for i in range(1, len(alphas) + 1):
        w = alphas[i - 1] / i
        np.add.at(Q, (up1[i:], up2[i:]), w)
        np.add.at(Q, (lo1[:-i], lo2[:-i]), w)
        np.add.at(Q, (up1[i:], lo2[:-i]), -w)
        np.add.at(Q, (lo1[:-i], up2[i:]), -w)
    return Q


def test_acov_theory_gms_close_to_exact_gaussian_covariance():
    rng = np.random.default_rng(4)
    vols = np.array([0.02, 0.016, 0.018, 0.015])
    corr = np.full((4, 4), 0.65)
    np.fill_diagonal(corr, 1.0)
    sig = np.diag(vols) @ corr @ np.diag(vols)
    schemes = [_poisson_scheme(rng, 1500, endpoints=False) for _ in range(4)]
    inputs, meta = gms_theory_inputs(schemes, np.array([0.0, 1.0]), sig)
    theo = acov_theory(inputs, "gms", ((1, 2), (3, 4)))
    g12 = pairwise_refresh(schemes[0], schemes[1])
    g34 = pairwise_refresh(schemes[2], schemes[3])
    Q12 = _gms_quadratic_form(g12, cubic_weights(meta["M12"]).alphas)
    Q34 = _gms_quadratic_form(g34, cubic_weights(meta["M34"]).alphas)

    def bm(sa, sb, s):
        return s * np.minimum(sa.times[:, None], sb.times[None, :])

    exact = math.sqrt(meta["N"]) * (
        np.trace(Q12.T @ bm(schemes[0], schemes[2], sig[0, 2]) @ Q34 @ bm(schemes[1], schemes[3], sig[1, 3]).T)
        + np.trace(Q12 @ bm(schemes[1], schemes[2], sig[1, 2]) @ Q34 @ bm(schemes[0], schemes[3], sig[0, 3]).T)
    )
    assert theo == pytest.approx(exact, rel=0.06)


def test_acov_theory_gms_zero_overlap_is_single_term():
    rng = np.random.default_rng(5)
    sig = np.diag([1e-4, 2e-4, 1.5e-4, 1.2e-4])
    schemes = [_poisson_scheme(rng, 200, endpoints=False) for _ in range(4)]
    H = 1e-7 * np.eye(4)
    with_noise, _ = gms_theory_inputs(schemes, np.array([0.0, 1.0]), sig, noise=H, with_overlap=True)
    without, _ = gms_theory_inputs(schemes, np.array([0.0, 1.0]), sig, noise=None)
    a = acov_theory(with_noise, "gms", ((1, 2), (3, 4)))
    b = acov_theory(without, "gms", ((1, 2), (3, 4)))
    assert a == b


def test_acov_theory_unknown_regime():
    with pytest.raises(ValueError):
        acov_theory(_const_inputs(np.eye(2)), "qmle", ((1, 2), (1, 2)))


# ---------------------------------------------------------------------
# Adjacent-increment estimator
# ---------------------------------------------------------------------
def _sync_data(rng, p, n):
    t = np.linspace(0, 1, n + 1)
    return [series(t, rng.standard_normal(n + 1).cumsum() * 0.01) for _ in range(p)]


def test_acov_rc_hat_one_dimensional_form():
    rng = np.random.default_rng(6)
    data = _sync_data(rng, 1, 50)
    d = data[0].increments()
    n = d.size
    expect = 2 * n * np.sum(d[:-1] ** 2 * d[1:] ** 2)
    assert acov_rc_hat(data, ((1, 1), (1, 1))) == pytest.approx(expect, rel=1e-12)


def test_acov_rc_hat_pair_swap_exact():
    rng = np.random.default_rng(7)
    data = _sync_data(rng, 4, 40)
    a = acov_rc_hat(data, ((1, 2), (3, 4)))
    b = acov_rc_hat(data, ((3, 4), (1, 2)))
    assert a == b


def test_acov_rc_hat_matches_oracle():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(5, 30))
        data = _sync_data(rng, 4, n)
        incs = [list(s.increments()) for s in data]
        idx = tuple(int(v) for v in rng.integers(1, 5, size=4))
        got = acov_rc_hat(data, ((idx[0], idx[1]), (idx[2], idx[3])))
        exp = acov_rc_oracle(incs, *idx)
        assert got == pytest.approx(exp, rel=1e-12, abs=1e-18)


def test_acov_rc_hat_requires_synchronous():
    rng = np.random.default_rng(9)
    a = series(np.sort(np.concatenate([[0, 1.0], rng.uniform(0, 1, 10)])), rng.standard_normal(12))
    b = series(np.sort(np.concatenate([[0, 1.0], rng.uniform(0, 1, 11)])), rng.standard_normal(13))
    with pytest.raises(ValueError):
        acov_rc_hat([a, b], ((1, 2), (1, 2)))


# ---------------------------------------------------------------------
# Histogram estimator
# ---------------------------------------------------------------------
def test_acov_gms_hat_noise_terms_exact_zero_on_disjoint():
    rng = np.random.default_rng(10)
    data = []
    for _ in range(4):
        t = np.sort(rng.uniform(0, 1, 400))
        data.append(series(t, rng.standard_normal(400).cumsum() * 0.01))
    with_terms = acov_gms_hat(data, ((1, 2), (3, 4)), GmsAcovConfig(include_noise_terms=True))
    without = acov_gms_hat(data, ((1, 2), (3, 4)), GmsAcovConfig(include_noise_terms=False))
    assert with_terms == without


def test_acov_gms_hat_consistent_for_sync_theory():
    # synchronous data: the histogram estimator's mean tracks the closed
    # form for the multi-scale asymptotic variance
    rng = np.random.default_rng(11)
    n, R = 4000, 50
    sig = np.array([[4e-4, 1.5e-4], [1.5e-4, 3e-4]])
    chol = np.linalg.cholesky(sig)
    eta = 3e-4
    H = np.diag([eta**2, eta**2])
    t = np.linspace(0, 1, n + 1)
    M = int(round(math.sqrt(n)))
    kc = kernel_constants(cubic_weights(M))
    inputs = TheoryInputs(times=np.array([0.0, 1.0]), sigma=sig, noise=H, c=1.0, constants=kc)
    theo = acov_theory(inputs, "ms_sync", ((1, 2), (1, 2)))
    vals = np.empty(R)
    for i in range(R):
        dx = rng.standard_normal((n, 2)) @ chol.T / math.sqrt(n)
        x = np.concatenate([np.zeros((1, 2)), np.cumsum(dx, axis=0)])
        eps = rng.standard_normal((n + 1, 2)) * eta
        data = [series(t, x[:, 0] + eps[:, 0]), series(t, x[:, 1] + eps[:, 1])]
        vals[i] = acov_gms_hat(data, ((1, 2), (1, 2)), GmsAcovConfig())
    assert np.mean(vals) == pytest.approx(theo, rel=0.20)


def test_acov_gms_hat_needs_enough_refresh_times():
    rng = np.random.default_rng(12)
    data = [series(np.sort(rng.uniform(0, 1, 5)), rng.standard_normal(5)) for _ in range(4)]
    with pytest.raises(ValueError):
        acov_gms_hat(data, ((1, 2), (3, 4)))


# ---------------------------------------------------------------------
# Matrix assembly, linear combinations, standardization
# ---------------------------------------------------------------------
def test_acov_matrix_hat_rc_shape_and_symmetry():
    rng = np.random.default_rng(13)
    data = _sync_data(rng, 2, 300)
    am = acov_matrix_hat(data, "rc")
    assert am.entries.shape == (3, 3)
    assert np.max(np.abs(am.entries - am.entries.T)) < 1e-12
    assert am.rate == "sqrt_n"
    # diagonal consistency with the pairwise estimator
    assert am.entry((1, 2), (1, 2)) == pytest.approx(acov_rc_hat(data, ((1, 2), (1, 2))))


def test_acov_matrix_hat_no_hy():
    rng = np.random.default_rng(14)
    data = _sync_data(rng, 2, 50)
    with pytest.raises(ValueError):
        acov_matrix_hat(data, "hy")


def test_lincomb_avar_single_asset_picks_diagonal():
    rng = np.random.default_rng(15)
    q = 3
    m = rng.standard_normal((q, q))
    am = AcovMatrix(entries=m @ m.T, rate="sqrt_n", n_ref=100.0, p=2)
    got = lincomb_avar(np.array([1.0, 0.0]), am)
    assert got == pytest.approx(am.entry((1, 1), (1, 1)))


def test_lincomb_avar_matches_quadruple_sum():
    rng = np.random.default_rng(16)
    p = 2
    q = 3
    m = rng.standard_normal((q, q))
    am = AcovMatrix(entries=m @ m.T, rate="sqrt_n", n_ref=100.0, p=p)
    coeffs = np.array([1.0, 1.0])
    got = lincomb_avar(coeffs, am)
    brute = 0.0
    for k in range(1, p + 1):
        for l in range(1, p + 1):
            for r in range(1, p + 1):
                for s in range(1, p + 1):
                    a = am.entry((min(k, l), max(k, l)), (min(r, s), max(r, s)))
                    brute += coeffs[k - 1] * coeffs[l - 1] * coeffs[r - 1] * coeffs[s - 1] * a
    assert got == pytest.approx(brute, rel=1e-12)


def test_lincomb_avar_quartic_scaling():
    rng = np.random.default_rng(17)
    m = rng.standard_normal((3, 3))
    am = AcovMatrix(entries=m @ m.T, rate="n_quarter", n_ref=100.0, p=2)
    c = np.array([0.5, -1.2])
    lam = 1.7
    assert lincomb_avar(lam * c, am) == pytest.approx(lam**4 * lincomb_avar(c, am), rel=1e-12)


def test_standardize_formula_and_guard():
    z = standardize(1.2, 1.0, avar=4.0, rate="sqrt_n", n=400)
    assert z == pytest.approx(20 * 0.2 / 2.0)
    with pytest.raises(ValueError):
        standardize(1.0, 0.0, avar=0.0, rate="sqrt_n", n=100)
    with pytest.raises(ValueError):
        standardize(1.0, 0.0, avar=-1.0, rate="n_quarter", n=100)


def test_lincomb_feasible_clt_coverage():
    # portfolio sum of two correlated assets: standardized errors of the
    # combined estimate are approximately standard normal
    rng = np.random.default_rng(18)
    n, R = 2000, 400
    sig = np.array([[4e-4, 1.8e-4], [1.8e-4, 3e-4]])
    chol = np.linalg.cholesky(sig)
    coeffs = np.array([1.0, 1.0])
    target = float(coeffs @ sig @ coeffs)  # quadratic variation of the sum, T = 1
    t = np.linspace(0, 1, n + 1)
    zs = np.empty(R)
    for i in range(R):
        dx = rng.standard_normal((n, 2)) @ chol.T / math.sqrt(n)
        x = np.concatenate([np.zeros((1, 2)), np.cumsum(dx, axis=0)])
        data = [series(t, x[:, 0]), series(t, x[:, 1])]
        from hficov.estimators import realized_cov

        est = sum(
            coeffs[k] * coeffs[l] * realized_cov(data[k], data[l])
            for k in range(2)
            for l in range(2)
        )
        am = acov_matrix_hat(data, "rc")
        avar = lincomb_avar(coeffs, am)
        zs[i] = standardize(est, target, avar, am.rate, am.n_ref)
    assert abs(np.mean(zs)) < 4 / math.sqrt(R)
    assert np.std(zs, ddof=1) == pytest.approx(1.0, abs=0.12)
    coverage = np.mean(np.abs(zs) <= 1.959963984540054)
    assert 0.91 <= coverage <= 0.98


def test_acov_theory_rc_piecewise_sigma_path():
    # two-block spot covariance path: hand quadrature of the closed form
    times = np.array([0.0, 0.4, 1.0])
    s1 = np.array([[1.0, 0.2], [0.2, 1.0]])
    s2 = np.array([[2.0, 0.8], [0.8, 1.5]])
    inputs = TheoryInputs(times=times, sigma=np.stack([s1, s2]))
    got = acov_theory(inputs, "rc", ((1, 2), (1, 2)))
    expect = 1.0 * (
        0.4 * (s1[0, 0] * s1[1, 1] + s1[0, 1] ** 2) + 0.6 * (s2[0, 0] * s2[1, 1] + s2[0, 1] ** 2)
    )
    assert got == pytest.approx(expect, rel=1e-12)


def test_acov_gms_hat_async_bin_alignment():
    # asynchronous histogram estimates stay near the validated closed form
    # (guards the common-origin rebasing of the per-bin slices)
    rng = np.random.default_rng(21)
    vols = np.array([0.02, 0.016, 0.018, 0.015])
    corr = np.full((4, 4), 0.65)
    np.fill_diagonal(corr, 1.0)
    sig = np.diag(vols) @ corr @ np.diag(vols)
    chol = np.linalg.cholesky(sig)
    schemes = [SamplingScheme(np.sort(rng.uniform(0, 1, 2000)), 1.0) for _ in range(4)]
    union = np.unique(np.concatenate([[0.0, 1.0]] + [s.times for s in schemes]))
    inputs, meta = gms_theory_inputs(schemes, np.array([0.0, 1.0]), sig)
    theo = acov_theory(inputs, "gms", ((1, 2), (3, 4)))
    R = 25
    vals = np.empty(R)
    for i in range(R):
        dx = rng.standard_normal((union.size - 1, 4)) @ chol.T * np.sqrt(np.diff(union))[:, None]
        x = np.concatenate([np.zeros((1, 4)), np.cumsum(dx, axis=0)])
        data = [
            TickSeries(s, x[np.searchsorted(union, s.times), k]) for k, s in enumerate(schemes)
        ]
        vals[i] = acov_gms_hat(data, ((1, 2), (3, 4)), GmsAcovConfig(include_noise_terms=False))
    se = np.std(vals, ddof=1) / np.sqrt(R)
    assert np.mean(vals) == pytest.approx(theo, abs=max(4 * se, 0.25 * abs(theo)))


def _gms_exact_cov(schemes, Q12, Q34, sig, H, N):
    def y_cov(sa, sb, s_ab, e_ab):
        S = s_ab * np.minimum(sa.times[:, None], sb.times[None, :])
        if e_ab != 0.0:
            S = S + e_ab * (sa.times[:, None] == sb.times[None, :])
        return S

    S13 = y_cov(schemes[0], schemes[2], sig[0, 2], H[0, 2])
    S24 = y_cov(schemes[1], schemes[3], sig[1, 3], H[1, 3])
    S14 = y_cov(schemes[0], schemes[3], sig[0, 3], H[0, 3])
    S23 = y_cov(schemes[1], schemes[2], sig[1, 2], H[1, 2])
    return math.sqrt(N) * (
        np.trace(Q12.T @ S13 @ Q34 @ S24.T) + np.trace(Q12 @ S23 @ Q34 @ S14.T)
    )


def test_acov_theory_gms_partial_overlap_noise_terms_conservative():
    # schemes sharing half their timestamps: the signal term stays sharp and
    # the synchronous-case noise plug-ins bound the exact noise contribution
    # from above (they are documented as conservative)
    rng = np.random.default_rng(31)
    base = np.linspace(0, 1, 501)
    schemes = [
        SamplingScheme(np.unique(np.concatenate([base, rng.uniform(0, 1, 500)])), 1.0)
        for _ in range(4)
    ]
    vols = np.array([0.02, 0.016, 0.018, 0.015])
    corr = np.full((4, 4), 0.65)
    np.fill_diagonal(corr, 1.0)
    sig = np.diag(vols) @ corr @ np.diag(vols)
    eta = 5e-4
    H = eta**2 * (np.full((4, 4), 0.5) + 0.5 * np.eye(4))
    inputs, meta = gms_theory_inputs(schemes, np.array([0.0, 1.0]), sig, noise=H, with_overlap=True)
    inputs0, _ = gms_theory_inputs(schemes, np.array([0.0, 1.0]), sig)
    theo_full = acov_theory(inputs, "gms", ((1, 2), (3, 4)))
    theo_sig = acov_theory(inputs0, "gms", ((1, 2), (3, 4)))
    g12 = pairwise_refresh(schemes[0], schemes[1])
    g34 = pairwise_refresh(schemes[2], schemes[3])
    Q12 = _gms_quadratic_form(g12, cubic_weights(meta["M12"]).alphas)
    Q34 = _gms_quadratic_form(g34, cubic_weights(meta["M34"]).alphas)
    exact_full = _gms_exact_cov(schemes, Q12, Q34, sig, H, meta["N"])
    exact_sig = _gms_exact_cov(schemes, Q12, Q34, sig, np.zeros((4, 4)), meta["N"])
    assert theo_sig == pytest.approx(exact_sig, rel=0.10)
    noise_theory = theo_full - theo_sig
    noise_exact = exact_full - exact_sig
    assert noise_exact > 0
    assert noise_exact <= noise_theory <= 3.0 * noise_exact
    assert theo_full == pytest.approx(exact_full, rel=0.10)


def test_acov_theory_ms_sync_noise_slots_match_exact_covariance():
    # equidistant synchronous bivariate case with cross-correlated noise:
    # the closed form (signal + noise^2 + cross + end slots) must match the
    # exact Gaussian covariance of the estimator's quadratic form
    n = 2000
    c = 1.0
    M = int(round(c * math.sqrt(n)))
    w = cubic_weights(M)
    t = np.linspace(0, 1, n + 1)
    sig = np.array([[4e-4, 1.5e-4], [1.5e-4, 3e-4]])
    eta = 6e-4
    H = eta**2 * np.array([[1.0, 0.5], [0.5, 1.0]])

    Q = np.zeros((n + 1, n + 1))
    for i in range(1, M + 1):
        wt = w.alphas[i - 1] / i
        j = np.arange(i, n + 1)
        np.add.at(Q, (j, j), wt)
        np.add.at(Q, (j - i, j - i), wt)
        np.add.at(Q, (j, j - i), -wt)
        np.add.at(Q, (j - i, j), -wt)
    G = np.minimum.outer(t, t)
    eye = np.eye(n + 1)
    S11 = sig[0, 0] * G + H[0, 0] * eye
    S22 = sig[1, 1] * G + H[1, 1] * eye
    S12 = sig[0, 1] * G + H[0, 1] * eye
    exact = math.sqrt(n) * (np.trace(Q.T @ S11 @ Q @ S22.T) + np.trace(Q @ S12 @ Q @ S12.T))

    from hficov.timefuncs import weighted_lasa_function

    kc = kernel_constants(w)
    lasa = weighted_lasa_function(SamplingScheme(t, 1.0), w, lag0="half")
    inputs = TheoryInputs(times=np.array([0.0, 1.0]), sigma=sig, noise=H, c=M / math.sqrt(n), lasa=lasa, constants=kc)
    theo = acov_theory(inputs, "ms_sync", ((1, 2), (1, 2)))
    assert theo == pytest.approx(exact, rel=0.04)
