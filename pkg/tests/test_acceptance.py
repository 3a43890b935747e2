"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Monte Carlo criteria run the named scenarios from ``hficov.sim`` at their
pinned seeds and replicate counts, so every number here reproduces exactly.
"""

import math
import time

import numpy as np
import pytest

from hficov.avar import acov_rc_hat, dimension_identity
from hficov.estimators import TickSeries, generalized_multiscale, hayashi_yoshida, multiscale
from hficov.kernels import builtin_kernel, cubic_weights, kernel_constants, weights_from_kernel
from hficov.sampling import SamplingScheme, global_refresh, pairwise_refresh
from hficov.sim import mc_validate
from hficov.timefuncs import time_covariations

from oracles import (
    acov_rc_oracle,
    gms_oracle,
    hy_oracle,
    ms_oracle,
    refresh_oracle,
    timecov_oracle,
)


def _line(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:>2} ({name}): {status}{'  ' + detail if detail else ''}")


def _scenario(num, name, scenario, **kw):
    report = mc_validate(scenario, **kw)
    detail = "; ".join(
        f"{c['name']}={c['value']:.4g}" if isinstance(c["value"], float) else f"{c['name']}={c['value']}"
        for c in report["checks"]
    )
    _line(num, name, report["passed"], detail)
    assert report["passed"], report
    return report


# ---------------------------------------------------------------------
# 1. Kernel constants
# ---------------------------------------------------------------------
def test_criterion_1_kernel_constants_cubic_and_th1():
    t0 = time.perf_counter()
    kc = kernel_constants(cubic_weights(2000))
    kt = kernel_constants(weights_from_kernel(builtin_kernel("tukey_hanning", 1), 2000))
    elapsed = time.perf_counter() - t0
    cubic_ok = (
        abs(kc.n1 / 12 - 1) < 0.02
        and abs(kc.d / (13 / 70) - 1) < 0.02
        and abs(kc.mconst / (6 / 5) - 1) < 0.02
        and abs(kc.n2 / (6 / 5) - 1) < 0.02
    )
    th1_n_ok = abs(kt.n1 / (math.pi**4 / 8) - 1) < 0.02 and abs(kt.n2 / (math.pi**2 / 8) - 1) < 0.02
    # limit-sum values for the Tukey-Hanning middle constants (the oracle of
    # record; the published table row is internally inconsistent, see below)
    th1_consistent_ok = abs(kt.d / (3 / 16) - 1) < 0.02 and abs(kt.mconst / (math.pi**2 / 8) - 1) < 0.02
    ok = cubic_ok and th1_n_ok and th1_consistent_ok and elapsed < 1.0
    _line(
        1,
        "kernel constants",
        ok,
        f"cubic=({kc.n1:.3f},{kc.d:.5f},{kc.mconst:.4f},{kc.n2:.4f}) "
        f"th1=({kt.n1:.3f},{kt.d:.5f},{kt.mconst:.4f},{kt.n2:.4f}) t={elapsed:.2f}s",
    )
    assert cubic_ok
    assert th1_n_ok
    assert th1_consistent_ok
    assert elapsed < 1.0


@pytest.mark.xfail(
    strict=True,
    reason="published table prints (pi^2/16, 3/8) for the Tukey-Hanning middle "
    "constants; those values are inconsistent with the cubic row's definitions "
    "and with exact finite-sample covariances of the estimator, so the "
    "limit-sum evaluations (3/16, pi^2/8) are the oracle of record",
)
def test_criterion_1_th1_middle_constants_as_printed():
    kt = kernel_constants(weights_from_kernel(builtin_kernel("tukey_hanning", 1), 2000))
    printed_ok = abs(kt.d / (math.pi**2 / 16) - 1) < 0.02 and abs(kt.mconst / (3 / 8) - 1) < 0.02
    _line(1, "th1 middle constants as printed", printed_ok, f"d={kt.d:.5f} vs pi^2/16, m={kt.mconst:.4f} vs 3/8")
    assert printed_ok


# ---------------------------------------------------------------------
# 2. Weight identities
# ---------------------------------------------------------------------
def test_criterion_2_weight_identities():
    ok = True
    for M in (2, 3, 10, 57, 333, 1000):
        for maker in (cubic_weights, lambda m: weights_from_kernel(builtin_kernel("parzen"), m)):
            if M < 2:
                continue
            w = maker(M)
            i = np.arange(1, M + 1)
            ok &= abs(w.alphas.sum() - 1) < 1e-12 and abs((w.alphas / i).sum()) < 1e-12
    ok &= np.allclose(cubic_weights(2).alphas, [-1, 2], atol=1e-14)
    ok &= np.allclose(cubic_weights(3).alphas, [-0.5, 0.0, 1.5], atol=1e-14)
    _line(2, "weight identities", ok)
    assert ok


# ---------------------------------------------------------------------
# 3. Multi-scale / kernel estimator equivalence
# ---------------------------------------------------------------------
def test_criterion_3_estimator_equivalence():
    _scenario(3, "ms/kernel equivalence", "ms_kernel_equivalence")


# ---------------------------------------------------------------------
# 4. Realized covariance CLT
# ---------------------------------------------------------------------
def test_criterion_4_realized_cov_clt():
    report = _scenario(4, "realized-cov CLT", "rc_clt")
    within = [c for c in report["checks"] if c["name"] == "patterns_within_10pct"][0]
    assert within["value"] >= 8
    cov = [c for c in report["checks"] if c["name"] == "ci_coverage_95"][0]
    assert 0.92 <= cov["value"] <= 0.97


# ---------------------------------------------------------------------
# 5. Convergence rates
# ---------------------------------------------------------------------
def test_criterion_5_rates():
    r1 = _scenario(5, "rate hy", "rate_hy")
    r2 = _scenario(5, "rate gms", "rate_gms")
    assert abs(r1["checks"][0]["value"] + 0.5) <= 0.10
    assert abs(r2["checks"][0]["value"] + 0.25) <= 0.08


# ---------------------------------------------------------------------
# 6. Overlap-estimator asymptotic covariance
# ---------------------------------------------------------------------
def test_criterion_6_hy_acov():
    _scenario(6, "hy asymptotic covariance", "hy_acov")


# ---------------------------------------------------------------------
# 7. Generalized multi-scale covariance under full asynchronicity
# ---------------------------------------------------------------------
def test_criterion_7_gms_acov_async():
    _scenario(7, "gms asymptotic covariance (async)", "gms_acov_async")


# ---------------------------------------------------------------------
# 8. Conditional-independence test size and power
# ---------------------------------------------------------------------
def test_criterion_8_ci_size_and_power():
    size = _scenario(8, "ci test size", "ci_size")
    power = _scenario(8, "ci test power", "ci_power")
    assert 0.03 <= size["checks"][0]["value"] <= 0.08
    assert power["checks"][0]["value"] >= 0.50


# ---------------------------------------------------------------------
# 9. Dimension identity
# ---------------------------------------------------------------------
def test_criterion_9_dimension_identity():
    ok = all(dimension_identity(p)[0] == dimension_identity(p)[1] for p in range(1, 11))
    ok &= dimension_identity(5) == (120, 120)
    _line(9, "dimension identity", ok, "p=1..10 exact; p=5 -> 120")
    assert ok


# ---------------------------------------------------------------------
# 10. Oracle equivalence
# ---------------------------------------------------------------------
def _rel_err(a, b):
    scale = max(abs(a), abs(b), 1e-30)
    return abs(a - b) / scale


def test_criterion_10_oracle_equivalence():
    rng = np.random.default_rng(20260808)
    worst = {"multiscale": 0.0, "hayashi_yoshida": 0.0, "generalized_multiscale": 0.0,
             "acov_rc_hat": 0.0, "time_covariations": 0.0}
    counts = dict.fromkeys(worst, 0)

    def sync_series(n):
        t = np.linspace(0, 1, n + 1)
        return TickSeries(SamplingScheme(t, 1.0), rng.standard_normal(n + 1).cumsum() * 0.1)

    def async_series(n):
        t = np.unique(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, n)]))
        return TickSeries(SamplingScheme(t, 1.0), rng.standard_normal(t.size).cumsum() * 0.1)

    for _ in range(22):
        n = int(rng.integers(6, 30))
        a, b = sync_series(n), sync_series(n)
        M = int(rng.integers(2, n))
        w = cubic_weights(M)
        worst["multiscale"] = max(
            worst["multiscale"],
            _rel_err(multiscale(a, b, w), ms_oracle(list(a.values), list(b.values), list(w.alphas))),
        )
        counts["multiscale"] += 1

        x, y = async_series(int(rng.integers(4, 28))), async_series(int(rng.integers(4, 28)))
        worst["hayashi_yoshida"] = max(
            worst["hayashi_yoshida"],
            _rel_err(
                hayashi_yoshida(x, y),
                hy_oracle(list(x.scheme.times), list(x.values), list(y.scheme.times), list(y.values)),
            ),
        )
        counts["hayashi_yoshida"] += 1

        N = len(refresh_oracle(list(x.scheme.times), list(y.scheme.times))) - 1
        if N >= 2:
            wg = cubic_weights(int(rng.integers(2, min(5, N + 1))))
            worst["generalized_multiscale"] = max(
                worst["generalized_multiscale"],
                _rel_err(
                    generalized_multiscale(x, y, wg),
                    gms_oracle(
                        list(x.scheme.times), list(x.values), list(y.scheme.times), list(y.values), list(wg.alphas)
                    ),
                ),
            )
            counts["generalized_multiscale"] += 1

        data = [sync_series(n) for _ in range(4)]
        idx = tuple(int(v) for v in rng.integers(1, 5, size=4))
        worst["acov_rc_hat"] = max(
            worst["acov_rc_hat"],
            _rel_err(
                acov_rc_hat(data, ((idx[0], idx[1]), (idx[2], idx[3]))),
                acov_rc_oracle([list(s.increments()) for s in data], *idx),
            ),
        )
        counts["acov_rc_hat"] += 1

        schemes = [async_series(int(rng.integers(6, 26))).scheme for _ in range(4)]
        glob = global_refresh(pairwise_refresh(schemes[0], schemes[1]), pairwise_refresh(schemes[2], schemes[3]))
        tc = time_covariations(glob)
        ora = timecov_oracle(*[list(s.times) for s in schemes], 1.0)
        pairs = (
            (tc.g.total, ora["g"]),
            (tc.f_24_13.total, ora["f_a"]),
            (tc.f_23_14.total, ora["f_b"]),
            (tc.h_24_13.total, ora["h_a"]),
            (tc.h_23_14.total, ora["h_b"]),
            (tc.i_24_13.total, ora["i_a"]),
            (tc.i_23_14.total, ora["i_b"]),
        )
        worst["time_covariations"] = max(worst["time_covariations"], max(_rel_err(g, o) for g, o in pairs))
        counts["time_covariations"] += 1

    ok = all(v <= 1e-12 for v in worst.values()) and all(c >= 20 for c in counts.values())
    _line(10, "oracle equivalence", ok, "; ".join(f"{k}:{v:.1e}({counts[k]})" for k, v in worst.items()))
    assert all(c >= 20 for c in counts.values()), counts
    assert all(v <= 1e-12 for v in worst.values()), worst
