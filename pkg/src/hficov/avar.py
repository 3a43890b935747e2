"""Asymptotic covariance matrices of integrated-covariance estimators.

Contents:

* the Gaussian product-moment identity (:func:`isserlis_cov`) and the svec
  packing of symmetric matrices;
* :func:`acov_theory` — the closed-form asymptotic covariance of two
  estimates for each sampling regime, used as the oracle in Monte Carlo
  validation (realized covariance; multi-scale on synchronous data;
  overlap estimator under asynchronicity; generalized multi-scale under
  asynchronicity and noise);
* the data-driven estimators :func:`acov_rc_hat` (adjacent-increment
  quarticity form) and :func:`acov_gms_hat` (histogram of binwise
  multi-scale brackets), assembled into the full q x q matrix by
  :func:`acov_matrix_hat` (q = p(p+1)/2);
* :func:`lincomb_avar` and :func:`standardize` for feasible central limit
  theorems on portfolio linear combinations.

Coefficient conventions: the slot coefficients entering the multi-scale
covariance (noise^2, signal-noise cross, end effects) are taken from
:class:`hficov.kernels.KernelConstants` properties, which were validated
against exact finite-sample covariances of the estimators' quadratic forms;
see the notes in that module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .estimators import EstimatorConfig, TickSeries, end_effect_adjust, generalized_multiscale, noise_moments
from .kernels import KernelConstants, WeightScheme, kernel_constants
from .sampling import SyncGrid, global_refresh, pairwise_refresh
from .timefuncs import (
    LasaFunction,
    StepFunction,
    SyncOverlap,
    TimeCovariationBundle,
    sync_overlap,
    weighted_lasa_function,
)

__all__ = [
    "isserlis_cov",
    "svec_index",
    "svec_pack",
    "svec_unpack",
    "svec_pairs",
    "dimension_identity",
    "TheoryInputs",
    "acov_theory",
    "acov_rc_hat",
    "acov_gms_hat",
    "AcovMatrix",
    "acov_matrix_hat",
    "lincomb_avar",
    "standardize",
]


# ---------------------------------------------------------------------------
# Moment identity and svec layout
# ---------------------------------------------------------------------------


def isserlis_cov(sigma: np.ndarray, idx: tuple[int, int, int, int]) -> float:
    """Gaussian product-moment covariance ``Cov(Z_i Z_l, Z_m Z_u)``.

    For ``Z ~ N(0, sigma)`` this equals ``sigma_im sigma_lu + sigma_iu
    sigma_lm``.  Indices are 1-based.
    """
    s = np.asarray(sigma, dtype=float)
    i, l, m, u = idx
    p = s.shape[0]
    for v in idx:
        if not 1 <= v <= p:
            raise IndexError(f"index {v} out of range 1..{p}")
    i, l, m, u = i - 1, l - 1, m - 1, u - 1
    return float(s[i, m] * s[l, u] + s[i, u] * s[l, m])


def svec_index(p: int, k: int, l: int) -> int:
    """0-based position of entry (k, l), 1 <= k <= l <= p, in the svec layout
    (row-wise upper triangle: 11, 12, ..., 1p, 22, 23, ...)."""
    if not 1 <= k <= l <= p:
        raise ValueError(f"need 1 <= k <= l <= p, got ({k}, {l}) for p={p}")
    return (k - 1) * (2 * p - k + 2) // 2 + (l - k)


def svec_pairs(p: int) -> list[tuple[int, int]]:
    """The (k, l) pairs (1-based, k <= l) in svec order."""
    return [(k, l) for k in range(1, p + 1) for l in range(k, p + 1)]


def svec_pack(matrix: np.ndarray) -> np.ndarray:
    """Pack a symmetric matrix's upper triangle row-wise into a vector."""
    m = np.asarray(matrix, dtype=float)
    p = m.shape[0]
    return np.concatenate([m[k, k:] for k in range(p)])


def svec_unpack(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`svec_pack`."""
    v = np.asarray(vec, dtype=float)
    q = v.size
    p = int(round((math.isqrt(8 * q + 1) - 1) / 2))
    if p * (p + 1) // 2 != q:
        raise ValueError(f"length {q} is not p(p+1)/2 for integer p")
    out = np.zeros((p, p))
    pos = 0
    for k in range(p):
        out[k, k:] = v[pos : pos + p - k]
        out[k:, k] = v[pos : pos + p - k]
        pos += p - k
    return out


def dimension_identity(p: int) -> tuple[int, int]:
    """Both sides of the free-entry count identity for the q x q asymptotic
    covariance matrix, q = p(p+1)/2.

    Left: ``q(q+1)/2``.  Right: ``p + 3 C(p,4) + 6 C(p,3) + 4 C(p,2)``.
    """
    q = p * (p + 1) // 2
    lhs = q * (q + 1) // 2
    rhs = p + 3 * math.comb(p, 4) + 6 * math.comb(p, 3) + 4 * math.comb(p, 2)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Theoretical asymptotic covariances (Monte Carlo oracles)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoryInputs:
    """Everything the closed-form asymptotic covariances consume.

    ``times`` are the common quadrature breakpoints (length m+1) and
    ``sigma`` the spot covariance per block, shape (m, p, p) (a single
    (p, p) matrix means a constant path).  ``noise`` is the noise covariance
    matrix; ``c`` the multi-scale tuning constant; ``lasa`` the finite-sample
    weighted sampling autocorrelation of the relevant refresh grid (used as
    a Stieltjes integrator); ``timecov`` the quadratic covariations of times
    (overlap regime); ``overlap`` the synchronous-overlap functions (general
    regime noise terms); ``constants`` the weight-scheme constants.
    """

    times: np.ndarray
    sigma: np.ndarray
    noise: np.ndarray | None = None
    c: float = 1.0
    lasa: LasaFunction | None = None
    lasa_slope: float | None = None
    timecov: TimeCovariationBundle | None = None
    overlap: SyncOverlap | None = None
    constants: KernelConstants | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim == 2:
            s = np.broadcast_to(s, (t.size - 1,) + s.shape).copy()
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sigma", s)
        if s.shape[0] != t.size - 1 or s.shape[1] != s.shape[2]:
            raise ValueError("sigma must have shape (len(times)-1, p, p)")
        if not np.allclose(s, np.swapaxes(s, 1, 2), atol=1e-12):
            raise ValueError("spot covariance path must be symmetric")
        if np.linalg.eigvalsh(s).min() < -1e-10:
            raise ValueError("spot covariance path must be positive semidefinite")

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def sigma_at(self, t: np.ndarray) -> np.ndarray:
        """Spot covariance per queried time (block lookup, right-open)."""
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.sigma.shape[0] - 1)
        return self.sigma[idx]

    def integral(self, f_of_sigma) -> float:
        """Midpoint-rule integral of a scalar function of the spot covariance."""
        dt = np.diff(self.times)
        return float(np.sum(f_of_sigma(self.sigma) * dt))

    def stieltjes(self, step: StepFunction, f_of_sigma) -> float:
        """Integral of ``f(sigma_s)`` against a nondecreasing step function."""
        b = step.breakpoints
        inc = step.increments()
        return float(np.sum(f_of_sigma(self.sigma_at(b)) * inc))


def _pairs_1based(pairs) -> tuple[int, int, int, int]:
    (k, l), (r, q) = pairs
    return int(k), int(l), int(r), int(q)


def acov_theory(inputs: TheoryInputs, regime: str, pairs) -> float:
    """Closed-form asymptotic covariance of two integrated-covariance
    estimates for component pairs ``((k, l), (r, q))`` (1-based).

    Regimes
    -------
    ``rc``
        ``T int (s_kr s_lq + s_kq s_lr) ds`` (sqrt(n) rate).
    ``ms_sync``
        Signal term ``2 c T int D'(s)(s_kr s_lq + s_kq s_lr) ds`` plus the
        noise^2, signal-noise and end-effect slots with the validated
        coefficients ``2 n1 c^-3``, ``2 n2 c^-1`` and ``2 n2 c^-1``
        (n^(1/4) rate).
    ``hy``
        ``T [ int (s_kr s_lq + s_kq s_lr) dG + int s_kr s_lq d(F+H+I)_a
        + int s_kq s_lr d(F+H+I)_b ]`` with the quadratic covariations of
        times of the realized global refresh grid (sqrt(N) rate).
    ``gms``
        Signal term integrated against the realized weighted sampling
        autocorrelation, plus noise terms weighted by the synchronous
        overlap counts (exactly the signal term when no synchronous
        observations exist).
    """
    k, l, r, q = _pairs_1based(pairs)
    p = inputs.sigma.shape[1]
    for v in (k, l, r, q):
        if not 1 <= v <= p:
            raise IndexError(f"component {v} out of range 1..{p}")
    k, l, r, q = k - 1, l - 1, r - 1, q - 1
    T = inputs.T

    def prod_a(s):  # s_kr * s_lq
        return s[..., k, r] * s[..., l, q]

    def prod_b(s):  # s_kq * s_lr
        return s[..., k, q] * s[..., l, r]

    def prod_sum(s):
        return prod_a(s) + prod_b(s)

    if regime == "rc":
        return T * inputs.integral(prod_sum)

    if regime == "ms_sync":
        if inputs.constants is None:
            raise ValueError("ms_sync regime needs kernel constants")
        c = inputs.c
        kc = inputs.constants
        if inputs.lasa is not None:
            signal = 2.0 * c * T * inputs.stieltjes(inputs.lasa.func, prod_sum)
        else:
            slope = inputs.lasa_slope if inputs.lasa_slope is not None else kc.lasa_slope
            signal = 2.0 * c * T * slope * inputs.integral(prod_sum)
        H = inputs.noise
        if H is None:
            return signal
        eta_a = H[k, r] * H[l, q] + H[k, q] * H[l, r]
        cross = (
            H[k, r] * inputs.integral(lambda s: s[..., l, q])
            + H[l, q] * inputs.integral(lambda s: s[..., k, r])
            + H[k, q] * inputs.integral(lambda s: s[..., l, r])
            + H[l, r] * inputs.integral(lambda s: s[..., k, q])
        )
        return signal + kc.noise_coeff * c**-3 * eta_a + kc.cross_coeff * c**-1 * cross + kc.end_coeff * c**-1 * eta_a

    if regime == "hy":
        if inputs.timecov is None:
            raise ValueError("hy regime needs the quadratic covariations of times")
        tc = inputs.timecov
        out = T * inputs.stieltjes(tc.g, prod_sum)
        f, h, i_ = tc.channel("24_13")
        for st in (f, h, i_):
            out += T * inputs.stieltjes(st, prod_a)
        f, h, i_ = tc.channel("23_14")
        for st in (f, h, i_):
            out += T * inputs.stieltjes(st, prod_b)
        return out

    if regime == "gms":
        if inputs.lasa is None:
            raise ValueError("gms regime needs the weighted sampling autocorrelation")
        c = inputs.c
        signal = 2.0 * c * T * inputs.stieltjes(inputs.lasa.func, prod_sum)
        ov, H = inputs.overlap, inputs.noise
        if ov is None or H is None or ov.all_zero():
            return signal
        if inputs.constants is None:
            raise ValueError("gms regime with synchronous overlap needs kernel constants")
        kc = inputs.constants
        noise2 = c**-3 * kc.noise_coeff * (ov.s_hat_13_24 * H[k, r] * H[l, q] + ov.s_hat_14_23 * H[k, q] * H[l, r])
        ends = c**-1 * kc.end_coeff * (ov.s_tilde_13_24 * H[k, r] * H[l, q] + ov.s_tilde_14_23 * H[k, q] * H[l, r])
        cross = c**-1 * kc.cross_coeff * (
            H[k, r] * inputs.stieltjes(ov.s_13, lambda s: s[..., l, q])
            + H[l, q] * inputs.stieltjes(ov.s_24, lambda s: s[..., k, r])
            + H[k, q] * inputs.stieltjes(ov.s_14, lambda s: s[..., l, r])
            + H[l, r] * inputs.stieltjes(ov.s_23, lambda s: s[..., k, q])
        )
        return signal + noise2 + ends + cross

    raise ValueError(f"unknown regime {regime!r}")


def hy_theory_inputs(schemes, times: np.ndarray, sigma: np.ndarray) -> tuple[TheoryInputs, dict]:
    """Assemble :class:`TheoryInputs` for the overlap (hy) regime.

    ``schemes`` are the four sampling schemes of the components entering
    the two estimates (order 1, 2, 3, 4).  The quadratic covariations of
    times are computed on their realized global refresh grid; the matching
    empirical normalization is ``N * Cov`` with the returned refresh count.
    """
    from .timefuncs import time_covariations

    g12 = pairwise_refresh(schemes[0], schemes[1])
    g34 = pairwise_refresh(schemes[2], schemes[3])
    glob = global_refresh(g12, g34)
    bundle = time_covariations(glob)
    inputs = TheoryInputs(times=times, sigma=sigma, timecov=bundle)
    return inputs, {"N": len(glob) - 1, "N12": len(g12) - 1, "N34": len(g34) - 1}


def gms_theory_inputs(
    schemes,
    times: np.ndarray,
    sigma: np.ndarray,
    noise: np.ndarray | None = None,
    c: float = 1.0,
    kernel: str = "cubic",
    with_overlap: bool = False,
) -> tuple[TheoryInputs, dict]:
    """Assemble :class:`TheoryInputs` for the generalized multi-scale regime.

    Multi-scale frequencies are ``M_kl = round(c sqrt(N_kl))`` per pair; the
    weighted sampling autocorrelation is evaluated on the global refresh
    grid with the frequencies converted to global-lag units
    (``M = min(M_12 N/N_12, M_34 N/N_34)``) and the trapezoidal lag-0
    weight, which removes most of the finite-frequency bias of the signal
    term.  The matching empirical normalization is ``sqrt(N) * Cov``.
    """
    from .timefuncs import sync_overlap, weighted_lasa_function

    cfg = EstimatorConfig(kernel=kernel, c=c)
    g12 = pairwise_refresh(schemes[0], schemes[1])
    g34 = pairwise_refresh(schemes[2], schemes[3])
    glob = global_refresh(g12, g34)
    N, n12, n34 = len(glob) - 1, len(g12) - 1, len(g34) - 1
    m12 = max(2, min(int(round(c * math.sqrt(n12))), n12))
    m34 = max(2, min(int(round(c * math.sqrt(n34))), n34))
    mg = max(2, min(int(round(min(m12 * N / n12, m34 * N / n34))), N))
    w = cfg.weights(mg)
    lasa = weighted_lasa_function(glob, w, lag0="half")
    ov = sync_overlap(tuple(schemes), g12, g34, m12, m34) if with_overlap else None
    inputs = TheoryInputs(
        times=times,
        sigma=sigma,
        noise=noise,
        c=mg / math.sqrt(N),
        lasa=lasa,
        overlap=ov,
        constants=kernel_constants(w),
    )
    return inputs, {"N": N, "N12": n12, "N34": n34, "M12": m12, "M34": m34, "M_global": mg}


# ---------------------------------------------------------------------------
# Data-driven asymptotic covariance estimators
# ---------------------------------------------------------------------------


def acov_rc_hat(data: Sequence[TickSeries], pairs) -> float:
    """Adjacent-increment estimator of the realized-covariance asymptotic
    covariance for pairs ``((k, l), (r, q))`` on a common synchronous grid.

    ``n * sum_i [ d_i(k) d_{i+1}(l) d_i(r) d_{i+1}(q)
                  + sym(d_{i+1}(k) d_i(l) d_i(r) d_{i+1}(q)) ]``

    The second addend is symmetrized in the two pairs so that the estimator
    is exactly invariant под pair swap; the one-dimensional case reduces to
    ``2 n sum_i d_i^2 d_{i+1}^2``.  The leading factor ``n`` (rather than
    ``n/T``) makes the estimator consistent for the ``T int ...`` limit at
    every horizon.
    """
    k, l, r, q = _pairs_1based(pairs)
    p = len(data)
    for v in (k, l, r, q):
        if not 1 <= v <= p:
            raise IndexError(f"component {v} out of range 1..{p}")
    t0 = data[0].scheme.times
    for s in data[1:]:
        if not np.array_equal(s.scheme.times, t0):
            raise ValueError("acov_rc_hat requires synchronous schemes")
    dk, dl, dr, dq = (data[v - 1].increments() for v in (k, l, r, q))
    n = dk.size
    # products grouped per pair so the estimator is bit-exact under pair swap
    t1 = np.sum((dk[:-1] * dl[1:]) * (dr[:-1] * dq[1:]))
    t2 = 0.5 * (np.sum((dk[1:] * dl[:-1]) * (dr[:-1] * dq[1:])) + np.sum((dr[1:] * dq[:-1]) * (dk[:-1] * dl[1:])))
    return float(n * (t1 + t2))


@dataclass(frozen=True)
class GmsAcovConfig:
    """Tuning for the histogram asymptotic-covariance estimator.

    ``bins`` overrides the default ``K_N = max(2, round(N^(1/5)))``;
    ``include_noise_terms=False`` hard-zeroes the synchronous-overlap noise
    addends (they already evaluate to 0 on fully asynchronous schemes).
    """

    kernel: str = "cubic"
    c: float = 1.0
    bins: int | None = None
    include_noise_terms: bool = True
    adjusted: bool = True


def _slice_series(s: TickSeries, lo: float, hi: float) -> TickSeries | None:
    mask = (s.scheme.times > lo) & (s.scheme.times <= hi)
    if mask.sum() < 3:
        return None
    from .sampling import SamplingScheme

    # rebase on the common bin origin so the relative alignment of two
    # sliced series (and hence their refresh structure) is preserved
    t = s.scheme.times[mask]
    return TickSeries(SamplingScheme(t - lo, hi - lo), s.values[mask])


def _bin_edges_from_step(step: StepFunction, K: int, T: float) -> np.ndarray:
    """Time points where the step function first reaches j/K of its total."""
    total = step.total
    levels = np.arange(1, K + 1) * total / K
    idx = np.searchsorted(step.values, levels * (1 - 1e-12), side="left")
    idx = np.clip(idx, 0, step.breakpoints.size - 1)
    edges = np.concatenate([[0.0], step.breakpoints[idx]])
    edges[-1] = T
    return edges


def _binned_bracket(a: TickSeries, b: TickSeries, edges: np.ndarray, weights_for, adjusted: bool) -> np.ndarray:
    """Generalized multi-scale bracket increment estimates per bin.

    Per-bin frequencies are of order N^(3/5) on bins of order N^(4/5)
    observations, so the multi-scale finite-sample factor
    ``(N + 1 - sum_i a_i i) / N`` is far from 1 (about ``1 - M/N``); each
    bin estimate is divided by it, which makes the synchronous-case bracket
    exactly unbiased.
    """
    out = np.zeros(edges.size - 1)
    for j in range(edges.size - 1):
        sa = _slice_series(a, edges[j], edges[j + 1])
        sb = _slice_series(b, edges[j], edges[j + 1])
        if sa is None or sb is None:
            continue
        try:
            grid = pairwise_refresh(sa.scheme, sb.scheme)
        except ValueError:
            continue
        N = len(grid) - 1
        if N < 1:
            continue
        w = weights_for(N)
        if w is None:
            continue
        if adjusted:
            w = end_effect_adjust(w, N)
        finite_factor = (N + 1 - float(np.sum(w.alphas * w.scales))) / N
        if finite_factor <= 0:
            continue
        out[j] = generalized_multiscale(sa, sb, w, grid=grid) / finite_factor
    return out


def acov_gms_hat(
    data: Sequence[TickSeries],
    pairs,
    config: GmsAcovConfig | None = None,
) -> float:
    """Histogram estimator of the generalized multi-scale asymptotic
    covariance for component pairs ``((k, l), (r, q))`` (1-based).

    Bins are equidistant in the realized weighted sampling autocorrelation
    ``D_N`` of the global refresh grid of the four components; on each bin
    the four cross brackets ``[k, r], [l, q], [k, q], [l, r]`` are estimated
    by adjusted generalized multi-scale with per-bin frequency
    ``round(N^(3/5))``, and combined as

    ``2 c T sum_j (D_kr D_lq + D_kq D_lr)/(dt_j)^2 * D_N(T)/K``.

    When the schemes share timestamps, the noise addends are included with
    the synchronous-overlap counts, the synchronous-case slot constants, and
    bins equidistant in the shared-timestamp counting functions; on fully
    disjoint schemes every one of them is exactly zero.
    """
    cfg = config or GmsAcovConfig()
    k, l, r, q = _pairs_1based(pairs)
    comps = [data[v - 1] for v in (k, l, r, q)]
    g12 = pairwise_refresh(comps[0].scheme, comps[1].scheme)
    g34 = pairwise_refresh(comps[2].scheme, comps[3].scheme)
    glob = global_refresh(g12, g34)
    N = len(glob) - 1
    if N < 8:
        raise ValueError("too few global refresh times for the histogram estimator")
    K = cfg.bins if cfg.bins is not None else max(2, int(round(N ** 0.2)))
    if K < 2:
        raise ValueError("need at least 2 bins")
    T = glob.horizon

    n12, n34 = len(g12) - 1, len(g34) - 1
    M12 = max(2, min(int(round(cfg.c * math.sqrt(n12))), n12))
    M34 = max(2, min(int(round(cfg.c * math.sqrt(n34))), n34))
    # estimator frequencies in global-lag units, matching the closed form
    # (see gms_theory_inputs); identical to min(M12, M34) when synchronous
    M_glob = max(2, min(int(round(min(M12 * N / n12, M34 * N / n34))), N))
    c_eff = M_glob / math.sqrt(N)

    base_cfg = EstimatorConfig(kernel=cfg.kernel, c=cfg.c)
    w_glob = base_cfg.weights(M_glob)
    lasa = weighted_lasa_function(glob, w_glob, lag0="half")

    m_bin = max(2, int(round(N ** 0.6)))

    def weights_for(n_bin: int) -> WeightScheme | None:
        m = max(2, min(m_bin, n_bin))
        if n_bin < 2:
            return None
        return base_cfg.weights(m)

    # half-bin split: products of bracket estimates on the same data are
    # biased upward by the estimates' covariance, so each bin is halved (in
    # the autocorrelation measure) and only cross-half products are used --
    # disjoint data makes them conditionally unbiased for the local
    # spot-covariance products
    half_edges = _bin_edges_from_step(lasa.func, 2 * K, T)
    brackets = {}
    for key, (x, y) in {"kr": (0, 2), "lq": (1, 3), "kq": (0, 3), "lr": (1, 2)}.items():
        brackets[key] = _binned_bracket(comps[x], comps[y], half_edges, weights_for, cfg.adjusted)
    dt_half = np.diff(half_edges)
    a, b = slice(0, 2 * K, 2), slice(1, 2 * K, 2)
    denom = 2.0 * dt_half[a] * dt_half[b]
    cross = (
        brackets["kr"][a] * brackets["lq"][b]
        + brackets["kr"][b] * brackets["lq"][a]
        + brackets["kq"][a] * brackets["lr"][b]
        + brackets["kq"][b] * brackets["lr"][a]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        per_bin = np.where(denom > 0, cross / denom, 0.0)
    first = 2.0 * c_eff * T * float(np.sum(per_bin)) * lasa.total / K

    if not cfg.include_noise_terms:
        return first
    ov = sync_overlap((comps[0].scheme, comps[1].scheme, comps[2].scheme, comps[3].scheme), g12, g34, M12, M34)
    if ov.all_zero():
        return first
    kc = kernel_constants(w_glob)
    nm = noise_moments(comps)
    e_kr, e_lq, e_kq, e_lr = nm.h_hat[0, 2], nm.h_hat[1, 3], nm.h_hat[0, 3], nm.h_hat[1, 2]
    noise2 = c_eff**-3 * kc.noise_coeff * (ov.s_hat_13_24 * e_kr * e_lq + ov.s_hat_14_23 * e_kq * e_lr)
    ends = c_eff**-1 * kc.end_coeff * (ov.s_tilde_13_24 * e_kr * e_lq + ov.s_tilde_14_23 * e_kq * e_lr)

    def cross_term(step: StepFunction, a: TickSeries, b: TickSeries, eta: float) -> float:
        if eta == 0.0 or step.total == 0.0:
            return 0.0
        se = _bin_edges_from_step(step, K, T)
        sdt = np.diff(se)
        br = _binned_bracket(a, b, se, weights_for, cfg.adjusted)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(sdt > 0, br / sdt, 0.0)
        return float(np.sum(vals)) * step.total / K * eta

    cross = c_eff**-1 * kc.cross_coeff * (
        cross_term(ov.s_13, comps[1], comps[3], e_kr)
        + cross_term(ov.s_24, comps[0], comps[2], e_lq)
        + cross_term(ov.s_14, comps[1], comps[2], e_kq)
        + cross_term(ov.s_23, comps[0], comps[3], e_lr)
    )
    return first + noise2 + ends + cross


# ---------------------------------------------------------------------------
# Full-matrix assembly, linear combinations, standardization
# ---------------------------------------------------------------------------


_RATES = ("sqrt_n", "n_quarter")


def _rate_sq(rate: str, n: float) -> float:
    if rate == "sqrt_n":
        return float(n)
    if rate == "n_quarter":
        return float(math.sqrt(n))
    raise ValueError(f"unknown rate {rate!r}")


@dataclass(frozen=True)
class AcovMatrix:
    """Estimated asymptotic covariance of the svec-packed estimates.

    ``entries`` is the symmetric q x q matrix on a common normalization:
    entry (a, b) estimates ``rate(n_ref)^2 * Cov(est_a, est_b)``, where
    ``n_ref`` is the reference sample size recorded alongside.  Entries
    whose own estimator was normalized to a different refresh count were
    rescaled by ``rate(n_ref)^2 / rate(N_ab)^2`` (the factors are kept in
    ``rescale_factors``).  ``raw()`` recovers plain covariance estimates.
    """

    entries: np.ndarray
    rate: str
    n_ref: float
    p: int
    rescale_factors: np.ndarray | None = None

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", e)
        q = self.p * (self.p + 1) // 2
        if e.shape != (q, q):
            raise ValueError(f"entries must be {q} x {q} for p={self.p}")
        if self.rate not in _RATES:
            raise ValueError(f"rate must be one of {_RATES}")

    @property
    def q(self) -> int:
        return self.p * (self.p + 1) // 2

    def raw(self) -> np.ndarray:
        """Plain (unnormalized) covariance estimates of the svec entries."""
        return self.entries / _rate_sq(self.rate, self.n_ref)

    def entry(self, pair_a: tuple[int, int], pair_b: tuple[int, int]) -> float:
        a = svec_index(self.p, *pair_a)
        b = svec_index(self.p, *pair_b)
        return float(self.entries[a, b])


def acov_matrix_hat(
    data: Sequence[TickSeries],
    method: str,
    config: EstimatorConfig | GmsAcovConfig | None = None,
) -> AcovMatrix:
    """Estimate the full q x q asymptotic covariance matrix of the svec
    entries (q = p(p+1)/2) for estimates produced by ``method``.

    ``rc`` uses the adjacent-increment estimator (rate ``sqrt_n``, n_ref =
    common grid size).  ``ms``/``kernel``/``gms`` use the histogram
    estimator (rate ``n_quarter``, n_ref = global refresh count of all
    components); heterogeneous per-entry refresh counts are brought to the
    common normalization.  A data-driven estimator for the pure overlap
    regime is not provided; use :func:`acov_theory` with the realized
    quadratic covariations of times instead.
    """
    p = len(data)
    plist = svec_pairs(p)
    qn = len(plist)
    ent = np.zeros((qn, qn))
    if method == "rc":
        n_ref = float(data[0].n_increments)
        for a in range(qn):
            for b in range(a, qn):
                val = acov_rc_hat(data, (plist[a], plist[b]))
                ent[a, b] = ent[b, a] = val
        return AcovMatrix(entries=ent, rate="sqrt_n", n_ref=n_ref, p=p)
    if method in ("ms", "kernel", "gms"):
        gcfg = config if isinstance(config, GmsAcovConfig) else GmsAcovConfig(
            kernel=getattr(config, "kernel", "cubic"), c=getattr(config, "c", 1.0)
        )
        n_ref = _all_refresh_count(data)
        factors = np.ones((qn, qn))
        for a in range(qn):
            for b in range(a, qn):
                (k, l), (r, q) = plist[a], plist[b]
                val = acov_gms_hat(data, ((k, l), (r, q)), gcfg)
                n_ab = _union_refresh_count(data, (k, l, r, q))
                f = _rate_sq("n_quarter", n_ref) / _rate_sq("n_quarter", n_ab)
                ent[a, b] = ent[b, a] = val * f
                factors[a, b] = factors[b, a] = f
        return AcovMatrix(entries=ent, rate="n_quarter", n_ref=n_ref, p=p, rescale_factors=factors)
    raise ValueError(f"no data-driven asymptotic covariance estimator for method {method!r}")


def _union_refresh_count(data: Sequence[TickSeries], comps: tuple[int, ...]) -> int:
    uniq = sorted(set(comps))
    if len(uniq) == 1:
        return len(data[uniq[0] - 1]) - 1
    grid = pairwise_refresh(data[uniq[0] - 1].scheme, data[uniq[1] - 1].scheme)
    for v in uniq[2:]:
        grid = _extend_refresh(grid, data[v - 1])
    return len(grid) - 1


def _extend_refresh(grid: SyncGrid, s: TickSeries) -> SyncGrid:
    return pairwise_refresh(
        type(s.scheme)(grid.refresh_times, s.scheme.horizon),
        s.scheme,
    )


def _all_refresh_count(data: Sequence[TickSeries]) -> int:
    return _union_refresh_count(data, tuple(range(1, len(data) + 1)))


def lincomb_avar(coeffs: np.ndarray, acov: AcovMatrix) -> float:
    """Asymptotic variance of ``Z = sum_{k,l} c_k c_l est_kl``.

    Expands to ``sum c_k c_kt c_l c_lt * ACOV(est_(kt,lt), est_(k,l))`` over
    all ordered index quadruples; symmetric svec entries carry the
    off-diagonal multiplicity automatically.
    """
    w = np.asarray(coeffs, dtype=float)
    p = acov.p
    if w.size != p:
        raise ValueError(f"need {p} coefficients")
    # weight of svec entry (k, l): c_k c_l for k = l, 2 c_k c_l for k < l
    wv = np.empty(acov.q)
    for i, (k, l) in enumerate(svec_pairs(p)):
        wv[i] = w[k - 1] * w[l - 1] * (1.0 if k == l else 2.0)
    return float(wv @ acov.entries @ wv)


def standardize(z_value: float, target: float, avar: float, rate: str, n: float) -> float:
    """Feasible-CLT standardization ``r_n (Z - target) / sqrt(avar)``.

    ``avar`` must be on the matching ``r_n^2`` normalization (as produced by
    :func:`lincomb_avar` on an :class:`AcovMatrix` with ``n_ref = n``).
    Raises on a nonpositive variance estimate rather than flooring it.
    """
    if avar <= 0.0:
        raise ValueError(f"nonpositive asymptotic variance estimate ({avar!r})")
    r = math.sqrt(_rate_sq(rate, n))
    return float(r * (z_value - target) / math.sqrt(avar))
