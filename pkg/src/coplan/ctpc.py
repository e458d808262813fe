"""Chronological time-period clustering of an hourly factor series.

Greedy bottom-up agglomeration that only ever merges *adjacent* clusters,
so every cluster stays a contiguous hour interval and the reduced series
keeps its chronology (which is what makes storage cycling and ramping
meaningful on the reduced model).  The merge criterion is Ward-style:

    D(h, h') = 2 |h| |h'| / (|h| + |h'|) * d2(centroid_h, centroid_h')

with d2 the squared Euclidean distance.  Ties pick the earliest pair.
Weights are raw hour counts and always sum to the series length.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np


class CtpcError(Exception):
    pass


@dataclass
class HourlyCluster:
    """Contiguous [start_hour, end_hour] block (0-based, inclusive)."""

    start_hour: int
    end_hour: int
    centroid: np.ndarray

    @property
    def size(self):
        return self.end_hour - self.start_hour + 1


@dataclass
class RepresentativeSet:
    """Ordered representative hours with hour-count weights."""

    load_factors: np.ndarray
    wind_factors: np.ndarray
    weights: np.ndarray
    source_hours: int

    def __post_init__(self):
        self.load_factors = np.asarray(self.load_factors, dtype=float)
        self.wind_factors = np.asarray(self.wind_factors, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)

    @property
    def count(self):
        return len(self.weights)

    def as_array(self):
        return np.column_stack([self.load_factors, self.wind_factors])


def _centroid(series, start, end):
    return series[start:end + 1].mean(axis=0)


def ward_dissimilarity(h: HourlyCluster, h2: HourlyCluster) -> float:
    """Merge cost of two chronologically adjacent clusters."""
    if h.end_hour + 1 != h2.start_hour and h2.end_hour + 1 != h.start_hour:
        raise CtpcError("clusters are not adjacent")
    d2 = float(np.sum((h.centroid - h2.centroid) ** 2))
    return 2.0 * h.size * h2.size / (h.size + h2.size) * d2


def _pair_cost(series, left, right):
    c1 = _centroid(series, left[0], left[1])
    c2 = _centroid(series, right[0], right[1])
    n1 = left[1] - left[0] + 1
    n2 = right[1] - right[0] + 1
    d2 = float(np.sum((c1 - c2) ** 2))
    return 2.0 * n1 * n2 / (n1 + n2) * d2


def run_ctpc(series, target_count, normalize=False, trace=None) -> RepresentativeSet:
    """Agglomerate an (n, 2) factor series down to `target_count` clusters.

    `trace`, when a list, receives (merged_start, sizes_tuple) after every
    merge so oracles can replay the exact sequence.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    n = series.shape[0]
    if not (1 <= target_count <= n):
        raise CtpcError(f"target count {target_count} outside [1, {n}]")
    if not np.all(np.isfinite(series)):
        raise CtpcError("series contains non-finite values")
    work = series
    if normalize:
        lo = series.min(axis=0)
        span = series.max(axis=0) - lo
        span[span == 0.0] = 1.0
        work = (series - lo) / span

    # doubly linked list of clusters over (start, end); heap with stale entries
    start = np.arange(n)
    end = np.arange(n)
    prev = np.arange(n) - 1
    nxt = np.arange(n) + 1
    nxt[-1] = -1
    alive = np.ones(n, dtype=bool)
    version = np.zeros(n, dtype=np.int64)

    heap = []
    for i in range(n - 1):
        cost = _pair_cost(work, (start[i], end[i]), (start[i + 1], end[i + 1]))
        heapq.heappush(heap, (cost, int(start[i]), i, version[i], i + 1, version[i + 1]))

    remaining = n
    while remaining > target_count:
        while True:
            cost, _, li, lv, ri, rv = heapq.heappop(heap)
            if alive[li] and alive[ri] and version[li] == lv and version[ri] == rv \
                    and nxt[li] == ri:
                break
        # merge ri into li
        end[li] = end[ri]
        alive[ri] = False
        version[li] += 1
        nxt[li] = nxt[ri]
        if nxt[ri] >= 0:
            prev[nxt[ri]] = li
        remaining -= 1
        if trace is not None:
            trace.append((int(start[li]), int(end[li])))
        if prev[li] >= 0:
            p = prev[li]
            c = _pair_cost(work, (start[p], end[p]), (start[li], end[li]))
            heapq.heappush(heap, (c, int(start[p]), p, version[p], li, version[li]))
        if nxt[li] >= 0:
            q = nxt[li]
            c = _pair_cost(work, (start[li], end[li]), (start[q], end[q]))
            heapq.heappush(heap, (c, int(start[li]), li, version[li], q, version[q]))

    idx = np.nonzero(alive)[0]
    reps = np.vstack([_centroid(series, start[i], end[i]) for i in idx])
    weights = np.array([end[i] - start[i] + 1 for i in idx], dtype=float)
    if reps.shape[1] == 1:
        reps = np.column_stack([reps[:, 0], np.zeros(len(idx))])
    return RepresentativeSet(load_factors=reps[:, 0], wind_factors=reps[:, 1],
                             weights=weights, source_hours=n)


@dataclass
class RepresentationMetrics:
    duration_rmse: np.ndarray  # per dimension
    correlation_error: float

    def as_dict(self):
        return {
            "duration_rmse_load": float(self.duration_rmse[0]),
            "duration_rmse_wind": float(self.duration_rmse[1]),
            "correlation_error": float(self.correlation_error),
        }


def representation_error(series, reps: RepresentativeSet) -> RepresentationMetrics:
    """Duration-curve RMSE per dimension plus cross-dimension correlation
    error between the original series and its weighted reconstruction."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = np.column_stack([series, np.zeros(len(series))])
    n = series.shape[0]
    counts = reps.weights.astype(int)
    if counts.sum() != n:
        raise CtpcError("representative weights do not cover the series")
    recon = np.repeat(reps.as_array(), counts, axis=0)
    rmse = np.empty(2)
    for d in range(2):
        orig_curve = np.sort(series[:, d])[::-1]
        rep_curve = np.sort(recon[:, d])[::-1]
        rmse[d] = float(np.sqrt(np.mean((orig_curve - rep_curve) ** 2)))

    def _corr(mat):
        sd = mat.std(axis=0)
        if sd[0] == 0.0 or sd[1] == 0.0:
            return 0.0
        return float(np.corrcoef(mat[:, 0], mat[:, 1])[0, 1])

    corr_err = abs(_corr(series) - _corr(recon))
    return RepresentationMetrics(duration_rmse=rmse, correlation_error=corr_err)
