"""Integrated-covariance estimators for synchronous and asynchronous tick data.

The menu, in increasing generality:

* ``realized_cov`` — plain sum of synchronous increment products; consistent
  without noise, biased under microstructure noise.
* ``multiscale`` / ``kernel_estimator`` — noise-smoothing estimators for
  synchronous data (weighted subsampling scales / weighted realized
  autocovariances); ``*_adjusted`` variants remove the additive end-effect
  noise bias.
* ``hayashi_yoshida`` — overlap-indicator estimator for asynchronous data
  without noise, with an exactly equivalent refresh-time evaluation path.
* ``generalized_multiscale`` — multi-scale smoothing on the pairwise
  refresh-time skeleton with next-/previous-tick interpolation; handles
  noise and asynchronicity together.

``estimate_matrix`` assembles the full p x p matrix pairwise and packs it
into the half-vectorized (svec) layout used by the asymptotic covariance
machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import KernelFunction, WeightScheme, builtin_kernel, cubic_weights, end_effect_adjust, weights_from_kernel
from .sampling import SamplingScheme, SyncGrid, pairwise_refresh

__all__ = [
    "TickSeries",
    "CovEstimate",
    "NoiseMoments",
    "EstimatorConfig",
    "realized_cov",
    "multiscale",
    "multiscale_adjusted",
    "kernel_estimator",
    "kernel_adjusted",
    "hayashi_yoshida",
    "hayashi_yoshida_refresh",
    "generalized_multiscale",
    "noise_moments",
    "estimate_matrix",
]


@dataclass(frozen=True)
class TickSeries:
    """One asset's observation scheme with log-price values."""

    scheme: SamplingScheme
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size != len(self.scheme):
            raise ValueError("values must be 1-d and match the scheme length")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def n_increments(self) -> int:
        return len(self) - 1

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def _require_synchronous(a: TickSeries, b: TickSeries, who: str) -> None:
    if len(a) != len(b) or not np.array_equal(a.scheme.times, b.scheme.times):
        raise ValueError(f"{who} requires synchronous schemes; use hayashi_yoshida or generalized_multiscale")


def realized_cov(a: TickSeries, b: TickSeries) -> float:
    """Realized covariance ``sum_i da_i db_i`` over a common grid."""
    _require_synchronous(a, b, "realized_cov")
    return float(np.dot(a.increments(), b.increments()))


def multiscale(a: TickSeries, b: TickSeries, w: WeightScheme) -> float:
    """Multi-scale covariance ``sum_i (a_i/i) sum_{j>=i} d^i_j a d^i_j b``.

    Computed scale by scale from prefix differences in O(nM).
    """
    _require_synchronous(a, b, "multiscale")
    n = a.n_increments
    if w.M > n:
        raise ValueError(f"multi-scale frequency M={w.M} exceeds n={n}")
    va, vb = a.values, b.values
    total = 0.0
    for i in range(1, w.M + 1):
        da = va[i:] - va[:-i]
        db = vb[i:] - vb[:-i]
        total += (w.alphas[i - 1] / i) * float(np.dot(da, db))
    return total


def multiscale_adjusted(a: TickSeries, b: TickSeries, w: WeightScheme) -> float:
    """Multi-scale estimator with the end-effect weight adjustment applied."""
    return multiscale(a, b, end_effect_adjust(w, a.n_increments))


def kernel_estimator(
    a: TickSeries,
    b: TickSeries,
    kernel: KernelFunction,
    H: int,
    flat_top: bool = False,
    adjusted: bool = False,
) -> float:
    """Autocovariance-kernel estimator for synchronous noisy data.

    Realized covariance plus ``K(h/H)``-weighted symmetrized lag-h realized
    autocovariances for h = 1..H.  ``flat_top=True`` switches the lag
    argument to ``(h-1)/H``, which removes the residual ``O(K''(0)/c^2)``
    end bias of the plain lag grid; the default matches the ``K(h/H)``
    convention (so ``H=1`` degenerates to realized covariance).
    ``adjusted=True`` multiplies the realized-covariance addend by
    ``(n-1)/n``, cancelling the ``+2 eta_ab`` noise bias.
    """
    _require_synchronous(a, b, "kernel_estimator")
    n = a.n_increments
    if not 1 <= H < n:
        raise ValueError(f"need 1 <= H < n, got H={H}, n={n}")
    da, db = a.increments(), b.increments()
    gamma0 = float(np.dot(da, db))
    total = gamma0 * ((n - 1) / n if adjusted else 1.0)
    for h in range(1, H + 1):
        x = (h - 1) / H if flat_top else h / H
        wgt = kernel(x)
        if wgt == 0.0:
            continue
        total += wgt * float(np.dot(da[h:], db[:-h]) + np.dot(db[h:], da[:-h]))
    return total


def kernel_adjusted(a: TickSeries, b: TickSeries, kernel: KernelFunction, H: int, flat_top: bool = False) -> float:
    """Kernel estimator with the (n-1)/n end correction."""
    return kernel_estimator(a, b, kernel, H, flat_top=flat_top, adjusted=True)


def _canonical_pair(a: TickSeries, b: TickSeries) -> tuple[TickSeries, TickSeries, bool]:
    """Deterministic total ordering so symmetric estimators are bit-exact in
    their two arguments (full arrays break ties)."""
    ka = (len(a), a.scheme.times.tobytes(), a.values.tobytes())
    kb = (len(b), b.scheme.times.tobytes(), b.values.tobytes())
    if ka <= kb:
        return a, b, False
    return b, a, True


def hayashi_yoshida(a: TickSeries, b: TickSeries) -> float:
    """Overlap-indicator covariance for asynchronous schemes.

    ``sum_{i,j} da_i db_j 1{(t_{i-1}, t_i] and (s_{j-1}, s_j] overlap}``,
    evaluated by an interval sweep with prefix sums in O((n_a + n_b) log).
    Exactly symmetric in its arguments, and reduces to realized covariance
    on a common grid.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("hayashi_yoshida needs at least two observations per series")
    if a.scheme.horizon != b.scheme.horizon:
        raise ValueError("schemes must share the horizon")
    x, y, _ = _canonical_pair(a, b)
    tx, ty = x.scheme.times, y.scheme.times
    dx, dy = x.increments(), y.increments()
    # b-interval k = (ty[k], ty[k+1]] overlaps (tx[i], tx[i+1]] iff
    # ty[k+1] > tx[i] and ty[k] < tx[i+1]; the overlapping k form a range.
    k_lo = np.searchsorted(ty[1:], tx[:-1], side="right")
    k_hi = np.searchsorted(ty[:-1], tx[1:], side="left")
    cum = np.concatenate([[0.0], np.cumsum(dy)])
    spans = cum[np.maximum(k_hi, k_lo)] - cum[k_lo]
    return float(np.dot(dx, spans))


def hayashi_yoshida_refresh(a: TickSeries, b: TickSeries, grid: SyncGrid | None = None) -> float:
    """Refresh-time evaluation of the overlap estimator (cross-check path).

    ``sum_i (a(t_a^+(tau_i)) - a(t_a^-(tau_{i-1}))) * (b(...) - b(...))``
    over the pairwise refresh times; agrees with :func:`hayashi_yoshida`
    exactly.  When the tick ranges are disjoint no refresh time exists and
    no increment intervals overlap, so the estimator is 0.
    """
    if grid is None:
        try:
            grid = pairwise_refresh(a.scheme, b.scheme)
        except ValueError:
            return 0.0
    va = a.values[grid.next_idx[0]]
    vb = b.values[grid.next_idx[1]]
    pa = a.values[grid.prev_idx[0]]
    pb = b.values[grid.prev_idx[1]]
    return float(np.sum((va[1:] - pa[:-1]) * (vb[1:] - pb[:-1])))


def generalized_multiscale(a: TickSeries, b: TickSeries, w: WeightScheme, grid: SyncGrid | None = None) -> float:
    """Multi-scale estimator on the pairwise refresh skeleton.

    ``sum_{i<=M} (a_i/i) sum_{j>=i} (a(t_a^+(tau_j)) - a(t_a^-(tau_{j-i})))
    * (b(t_b^+(tau_j)) - b(t_b^-(tau_{j-i})))`` with next-/previous-tick
    interpolation into each scheme.  On synchronous schemes the
    interpolations are identities and the estimator coincides with
    :func:`multiscale`.
    """
    if grid is None:
        grid = pairwise_refresh(a.scheme, b.scheme)
    N = len(grid) - 1
    if w.M > N:
        raise ValueError(f"multi-scale frequency M={w.M} exceeds refresh count N={N}")
    up_a = a.values[grid.next_idx[0]]
    up_b = b.values[grid.next_idx[1]]
    lo_a = a.values[grid.prev_idx[0]]
    lo_b = b.values[grid.prev_idx[1]]
    total = 0.0
    for i in range(1, w.M + 1):
        da = up_a[i:] - lo_a[:-i]
        db = up_b[i:] - lo_b[:-i]
        total += (w.alphas[i - 1] / i) * float(np.dot(da, db))
    return total


@dataclass(frozen=True)
class NoiseMoments:
    """Estimated noise covariance matrix (variances and synchronous covariances)."""

    h_hat: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h_hat, dtype=float)
        object.__setattr__(self, "h_hat", h)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("h_hat must be square")

    @property
    def p(self) -> int:
        return self.h_hat.shape[0]


def noise_moments(data: Sequence[TickSeries]) -> NoiseMoments:
    """Estimate the noise covariance matrix from tick data.

    Diagonal: ``RV_l / (2 n_l)``.  Off-diagonal (k, l): restrict both series
    to their exactly shared timestamps and average adjacent-increment
    products, ``-mean(d_i(k) d_{i+1}(l))``; exactly 0 when the schemes share
    fewer than three timestamps.
    """
    p = len(data)
    H = np.zeros((p, p))
    for l, s in enumerate(data):
        if len(s) < 2:
            raise ValueError("each series needs at least two observations")
        d = s.increments()
        H[l, l] = float(np.dot(d, d)) / (2.0 * s.n_increments)
    for k in range(p):
        for l in range(k + 1, p):
            tk, tl = data[k].scheme.times, data[l].scheme.times
            shared, ik, il = np.intersect1d(tk, tl, return_indices=True)
            if shared.size < 3:
                continue
            dk = np.diff(data[k].values[ik])
            dl = np.diff(data[l].values[il])
            H[k, l] = H[l, k] = -float(np.mean(dk[:-1] * dl[1:]))
    return NoiseMoments(H)


@dataclass(frozen=True)
class EstimatorConfig:
    """Per-run estimator configuration.

    ``c`` scales the multi-scale frequency ``M_kl = round(c * sqrt(N_kl))``
    (per-pair overrides via ``c_overrides[(k, l)]``, 0-based pairs);
    ``kernel`` names the weight-generating kernel; ``adjusted`` applies the
    end-effect corrections.
    """

    kernel: str = "cubic"
    c: float = 1.0
    adjusted: bool = True
    flat_top: bool = False
    c_overrides: dict = field(default_factory=dict)

    def c_for(self, k: int, l: int) -> float:
        return float(self.c_overrides.get((k, l), self.c_overrides.get((l, k), self.c)))

    def weights(self, M: int) -> WeightScheme:
        if self.kernel == "cubic":
            return cubic_weights(max(M, 2))
        return weights_from_kernel(builtin_kernel(self.kernel), max(M, 2))


@dataclass(frozen=True)
class CovEstimate:
    """Symmetric integrated-covariance estimate with method metadata.

    ``svec`` packs the upper triangle row-wise (11, 12, ..., 1p, 22, ...).
    ``min_eigenvalue`` is diagnostic only; positive semidefiniteness is not
    enforced.
    """

    matrix: np.ndarray
    method: str
    per_pair: dict
    svec: np.ndarray
    min_eigenvalue: float


def _svec_pack(m: np.ndarray) -> np.ndarray:
    p = m.shape[0]
    return np.concatenate([m[k, k:] for k in range(p)])


def estimate_matrix(data: Sequence[TickSeries], method: str, config: EstimatorConfig | None = None) -> CovEstimate:
    """Assemble the p x p integrated-covariance matrix pairwise.

    ``method`` is one of ``rc``, ``ms``, ``kernel`` (synchronous schemes
    required), ``hy``, or ``gms``.  Multi-scale frequencies are chosen per
    pair as ``M_kl = round(c_kl sqrt(N_kl))`` with ``N_kl`` the common-grid
    size (ms/kernel) or pairwise refresh count (gms).
    """
    cfg = config or EstimatorConfig()
    p = len(data)
    if p < 1:
        raise ValueError("need at least one series")
    if method in ("rc", "ms", "kernel"):
        t0 = data[0].scheme.times
        for s in data[1:]:
            if not np.array_equal(s.scheme.times, t0):
                raise ValueError(f"method {method!r} requires synchronous schemes; use 'hy' or 'gms'")
    mat = np.zeros((p, p))
    per_pair: dict = {}
    for k in range(p):
        for l in range(k, p):
            a, b = data[k], data[l]
            info: dict = {"method": method}
            if method == "rc":
                val = realized_cov(a, b)
            elif method in ("ms", "kernel"):
                n = a.n_increments
                c = cfg.c_for(k, l)
                M = max(2, int(round(c * np.sqrt(n))))
                info.update(M=M, c=c, kernel=cfg.kernel)
                if method == "ms":
                    w = cfg.weights(M)
                    val = multiscale_adjusted(a, b, w) if cfg.adjusted else multiscale(a, b, w)
                else:
                    kern = builtin_kernel(cfg.kernel)
                    val = kernel_estimator(a, b, kern, M, flat_top=cfg.flat_top, adjusted=cfg.adjusted)
            elif method == "hy":
                val = hayashi_yoshida(a, b)
            elif method == "gms":
                grid = pairwise_refresh(a.scheme, b.scheme)
                N = len(grid) - 1
                c = cfg.c_for(k, l)
                M = max(2, min(int(round(c * np.sqrt(N))), N))
                info.update(M=M, c=c, kernel=cfg.kernel, refresh_count=N)
                w = cfg.weights(M)
                if cfg.adjusted:
                    w = end_effect_adjust(w, N)
                val = generalized_multiscale(a, b, w, grid=grid)
            else:
                raise ValueError(f"unknown method {method!r}")
            mat[k, l] = mat[l, k] = val
            per_pair[(k, l)] = info
    eig_min = float(np.linalg.eigvalsh(mat).min()) if p > 1 else float(mat[0, 0])
    return CovEstimate(matrix=mat, method=method, per_pair=per_pair, svec=_svec_pack(mat), min_eigenvalue=eig_min)
