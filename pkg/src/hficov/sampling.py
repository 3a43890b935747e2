"""Observation-time machinery: sampling schemes, tick interpolation, refresh times.

Everything downstream (synchronized estimators, quadratic covariations of
observation times, sampling autocorrelation functionals) is built on two
primitives defined here:

* previous-/next-tick interpolation ``t^-(s) = max{t_i <= s}``,
  ``t^+(s) = min{t_i >= s}``;
* the refresh-time recursion, which collapses two (or, applied twice, four)
  irregular observation schemes onto a common synchronous skeleton.

All containers are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "InterpolationError",
    "SamplingScheme",
    "SyncGrid",
    "tick_interpolation",
    "pairwise_refresh",
    "global_refresh",
]


class InterpolationError(ValueError):
    """Requested previous/next tick does not exist in the scheme.

    ``side`` is ``"previous"`` when ``s`` lies before the first observation
    and ``"next"`` when it lies after the last one, so callers can tell the
    two failure modes apart.
    """

    def __init__(self, side: str, s: float) -> None:
        self.side = side
        self.s = s
        super().__init__(f"no {side} tick at s={s!r}")


@dataclass(frozen=True)
class SamplingScheme:
    """Strictly increasing observation times on a fixed horizon ``[0, T]``.

    Parameters
    ----------
    times : array_like
        Observation times, strictly increasing, all within ``[0, horizon]``.
    horizon : float
        Length ``T`` of the observation window.
    """

    times: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("scheme needs a nonempty 1-d array of times")
        if not np.all(np.isfinite(t)):
            raise ValueError("scheme times must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("scheme times must be strictly increasing")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if t[0] < 0 or t[-1] > self.horizon:
            raise ValueError("scheme times must lie in [0, horizon]")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def first(self) -> float:
        return float(self.times[0])

    @property
    def last(self) -> float:
        return float(self.times[-1])

    @property
    def max_gap(self) -> float:
        """Mesh of the scheme: the largest of the interior gaps, the lead-in
        ``t_0`` and the tail ``T - t_n``."""
        gaps = np.diff(self.times)
        lead = self.times[0]
        tail = self.horizon - self.times[-1]
        inner = gaps.max() if gaps.size else 0.0
        return float(max(inner, lead, tail))

    # -- tick interpolation -------------------------------------------------

    def prev_index(self, s: float) -> int:
        """Index of ``t^-(s) = max{t_i <= s}``; raises if ``s < t_0``."""
        i = int(np.searchsorted(self.times, s, side="right")) - 1
        if i < 0:
            raise InterpolationError("previous", s)
        return i

    def next_index(self, s: float) -> int:
        """Index of ``t^+(s) = min{t_i >= s}``; raises if ``s > t_n``."""
        i = int(np.searchsorted(self.times, s, side="left"))
        if i >= self.times.size:
            raise InterpolationError("next", s)
        return i

    def prev_tick(self, s: float) -> float:
        return float(self.times[self.prev_index(s)])

    def next_tick(self, s: float) -> float:
        return float(self.times[self.next_index(s)])

    def prev_indices(self, s: np.ndarray) -> np.ndarray:
        """Vectorized ``prev_index``; -1 marks "no previous tick"."""
        return np.searchsorted(self.times, s, side="right") - 1

    def next_indices(self, s: np.ndarray) -> np.ndarray:
        """Vectorized ``next_index``; ``len(self)`` marks "no next tick"."""
        return np.searchsorted(self.times, s, side="left")


def tick_interpolation(scheme: SamplingScheme, s: float) -> tuple[float, float]:
    """Previous- and next-tick interpolation ``(t^-(s), t^+(s))``.

    Raises :class:`InterpolationError` with ``side="previous"`` when ``s``
    lies before the first observation and ``side="next"`` when it lies after
    the last one.
    """
    if not 0.0 <= s <= scheme.horizon:
        raise ValueError(f"s={s!r} outside [0, {scheme.horizon}]")
    return scheme.prev_tick(s), scheme.next_tick(s)


@dataclass(frozen=True)
class SyncGrid:
    """Refresh times of two or four schemes plus interpolation index maps.

    ``next_idx[l, i]`` / ``prev_idx[l, i]`` give, for refresh time ``i`` and
    source scheme ``l``, the index of the next/previous tick of that scheme,
    so ``t_l^-(tau_i) <= tau_i <= t_l^+(tau_i)`` by construction.

    For a grid built by :func:`global_refresh`, ``pair_grids`` holds the two
    pairwise grids and ``pair_next_idx`` / ``pair_prev_idx`` the index maps of
    the global refresh times into those pairwise refresh sequences.
    """

    refresh_times: np.ndarray
    source_schemes: tuple[SamplingScheme, ...]
    next_idx: np.ndarray
    prev_idx: np.ndarray
    pair_grids: tuple["SyncGrid", ...] = field(default=())
    pair_next_idx: np.ndarray | None = None
    pair_prev_idx: np.ndarray | None = None

    def __post_init__(self) -> None:
        r = np.asarray(self.refresh_times, dtype=float)
        object.__setattr__(self, "refresh_times", r)
        if r.size == 0:
            raise ValueError("empty refresh grid")
        if r.size > 1 and not np.all(np.diff(r) > 0):
            raise ValueError("refresh times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.refresh_times.size)

    @property
    def horizon(self) -> float:
        return self.source_schemes[0].horizon

    def t_plus(self, l: int, i: int) -> float:
        """Next tick of source scheme ``l`` at refresh time ``i``."""
        return float(self.source_schemes[l].times[self.next_idx[l, i]])

    def t_minus(self, l: int, i: int) -> float:
        """Previous tick of source scheme ``l`` at refresh time ``i``."""
        return float(self.source_schemes[l].times[self.prev_idx[l, i]])


def _refresh_recursion(times_per_scheme: Sequence[np.ndarray]) -> np.ndarray:
    """Core refresh-time recursion over an arbitrary number of time arrays.

    tau_0 is the largest first tick; tau_i is the largest of the first ticks
    strictly after tau_{i-1}.  A candidate is emitted only while every scheme
    still has a tick at or after it (so next-tick interpolation stays defined
    for all schemes at every refresh time); otherwise the sequence terminates.
    """
    firsts = [t[0] for t in times_per_scheme]
    lasts = [t[-1] for t in times_per_scheme]
    min_last = min(lasts)
    tau = max(firsts)
    if tau > min_last:
        return np.empty(0)
    out = [tau]
    while True:
        nxt = -np.inf
        for t in times_per_scheme:
            i = np.searchsorted(t, tau, side="right")
            if i >= t.size:
                return np.asarray(out)
            nxt = max(nxt, t[i])
        if nxt > min_last:
            return np.asarray(out)
        out.append(nxt)
        tau = nxt


def _index_maps(schemes: Sequence[SamplingScheme], refresh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nxt = np.empty((len(schemes), refresh.size), dtype=np.int64)
    prv = np.empty_like(nxt)
    for l, sch in enumerate(schemes):
        nxt[l] = sch.next_indices(refresh)
        prv[l] = sch.prev_indices(refresh)
        if np.any(nxt[l] >= len(sch)) or np.any(prv[l] < 0):
            raise ValueError("refresh time outside a source scheme's tick range")
    return nxt, prv


def pairwise_refresh(scheme_a: SamplingScheme, scheme_b: SamplingScheme) -> SyncGrid:
    """Refresh times of two schemes with next-/previous-tick index maps.

    The recursion collapses simultaneous ticks into a single refresh time and
    stops as soon as either scheme runs out of later ticks.
    """
    if scheme_a.horizon != scheme_b.horizon:
        raise ValueError("schemes must share the horizon")
    refresh = _refresh_recursion([scheme_a.times, scheme_b.times])
    if refresh.size == 0:
        raise ValueError("schemes produce no refresh times (disjoint tick ranges)")
    nxt, prv = _index_maps([scheme_a, scheme_b], refresh)
    return SyncGrid(refresh, (scheme_a, scheme_b), nxt, prv)


def global_refresh(grid_ab: SyncGrid, grid_cd: SyncGrid) -> SyncGrid:
    """Refresh times of two pairwise refresh sequences ("refresh times of
    refresh times"), i.e. the synchronous skeleton of all four schemes.

    Index maps are provided both into the four underlying schemes and into
    the two pairwise refresh sequences.
    """
    if grid_ab.horizon != grid_cd.horizon:
        raise ValueError("grids must share the horizon")
    refresh = _refresh_recursion([grid_ab.refresh_times, grid_cd.refresh_times])
    if refresh.size == 0:
        raise ValueError("pairwise grids produce no common refresh times")
    schemes = grid_ab.source_schemes + grid_cd.source_schemes
    nxt, prv = _index_maps(schemes, refresh)

    pair_nxt = np.empty((2, refresh.size), dtype=np.int64)
    pair_prv = np.empty_like(pair_nxt)
    for k, g in enumerate((grid_ab, grid_cd)):
        pair_nxt[k] = np.searchsorted(g.refresh_times, refresh, side="left")
        pair_prv[k] = np.searchsorted(g.refresh_times, refresh, side="right") - 1
        if np.any(pair_nxt[k] >= len(g)) or np.any(pair_prv[k] < 0):
            raise ValueError("global refresh time outside a pairwise grid's range")
    return SyncGrid(
        refresh,
        schemes,
        nxt,
        prv,
        pair_grids=(grid_ab, grid_cd),
        pair_next_idx=pair_nxt,
        pair_prev_idx=pair_prv,
    )
