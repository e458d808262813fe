"""Clustering checked against a brute-force rescan oracle that recomputes
every adjacent dissimilarity from scratch at each merge step."""

import numpy as np
import pytest

from coplan.ctpc import (
    CtpcError,
    HourlyCluster,
    RepresentativeSet,
    representation_error,
    run_ctpc,
    ward_dissimilarity,
)
from coplan.system_data import synthetic_year_series


def _cluster(series, start, end):
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    return HourlyCluster(start, end, series[start:end + 1].mean(axis=0))


def oracle_merge_sequence(series, target_count):
    """Recompute all adjacent pair costs each step; merge the minimum with
    earliest-start tie break.  Returns the merge trace and final state."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    spans = [(i, i) for i in range(series.shape[0])]
    trace = []
    while len(spans) > target_count:
        best = None
        for k in range(len(spans) - 1):
            a, b = spans[k], spans[k + 1]
            ca = series[a[0]:a[1] + 1].mean(axis=0)
            cb = series[b[0]:b[1] + 1].mean(axis=0)
            na, nb = a[1] - a[0] + 1, b[1] - b[0] + 1
            cost = 2.0 * na * nb / (na + nb) * float(np.sum((ca - cb) ** 2))
            key = (cost, a[0])
            if best is None or key < best[0]:
                best = (key, k)
        k = best[1]
        spans[k] = (spans[k][0], spans[k + 1][1])
        del spans[k + 1]
        trace.append(spans[k])
    cents = np.vstack([series[a:b + 1].mean(axis=0) for a, b in spans])
    weights = np.array([b - a + 1 for a, b in spans], dtype=float)
    return trace, cents, weights


def test_ward_unit_offsets():
    a = _cluster(np.array([[1.0, 0.0], [0.0, 1.0]]), 0, 0)
    b = _cluster(np.array([[1.0, 0.0], [0.0, 1.0]]), 1, 1)
    assert ward_dissimilarity(a, b) == pytest.approx(2.0)


def test_ward_equal_centroids():
    series = np.array([[0.4, 0.6]] * 6)
    a = _cluster(series, 0, 2)
    b = _cluster(series, 3, 5)
    assert ward_dissimilarity(a, b) == 0.0


def test_ward_hand_evaluated_sizes():
    # |h| = 1, |h2| = 3, squared distance 4 -> 2*3/4 * 4 = 6
    series = np.array([[0.0], [2.0], [2.0], [2.0]])
    a = _cluster(series, 0, 0)
    b = _cluster(series, 1, 3)
    assert ward_dissimilarity(a, b) == pytest.approx(6.0)


def test_ward_rejects_non_adjacent():
    series = np.array([[0.0], [1.0], [2.0]])
    with pytest.raises(CtpcError):
        ward_dissimilarity(_cluster(series, 0, 0), _cluster(series, 2, 2))


def test_identity_clustering():
    series = np.random.default_rng(0).uniform(size=(40, 2))
    reps = run_ctpc(series, 40)
    assert reps.count == 40
    assert np.all(reps.weights == 1.0)
    assert np.allclose(reps.as_array(), series)


def test_four_point_example():
    reps = run_ctpc(np.array([1.0, 1.0, 5.0, 5.0]), 2)
    assert np.allclose(reps.load_factors, [1.0, 5.0])
    assert np.allclose(reps.weights, [2.0, 2.0])


def test_out_of_range_target():
    with pytest.raises(CtpcError):
        run_ctpc(np.zeros((10, 2)), 0)
    with pytest.raises(CtpcError):
        run_ctpc(np.zeros((10, 2)), 11)


def test_year_96_representatives():
    series = synthetic_year_series(seed=1)
    reps = run_ctpc(series, 96)
    assert reps.count == 96
    assert float(np.sum(reps.weights)) == 8760.0
    assert reps.load_factors.min() >= 0.0 and reps.load_factors.max() <= 1.0


def test_matches_oracle_with_trace():
    rng = np.random.default_rng(42)
    for trial in range(6):
        n = int(rng.integers(20, 120))
        series = rng.uniform(size=(n, 2))
        target = int(rng.integers(1, n))
        trace = []
        reps = run_ctpc(series, target, trace=trace)
        otrace, ocents, ow = oracle_merge_sequence(series, target)
        assert trace == otrace
        assert np.array_equal(reps.weights, ow)
        assert np.array_equal(reps.as_array(), ocents)


def test_weights_conserved_at_every_step():
    rng = np.random.default_rng(5)
    series = rng.uniform(size=(60, 2))
    for target in (59, 30, 7, 1):
        reps = run_ctpc(series, target)
        assert float(np.sum(reps.weights)) == 60.0
        assert reps.count == target


def test_chronology_preserved():
    # representative order follows the hour axis: reconstruct cluster spans
    rng = np.random.default_rng(9)
    series = rng.uniform(size=(50, 2))
    trace = []
    run_ctpc(series, 5, trace=trace)
    # spans in the trace are always contiguous by construction; final spans
    # partition [0, 50)
    reps = run_ctpc(series, 5)
    assert np.sum(reps.weights) == 50


def test_representation_error_lossless():
    series = np.random.default_rng(2).uniform(size=(100, 2))
    reps = run_ctpc(series, 100)
    m = representation_error(series, reps)
    assert np.allclose(m.duration_rmse, 0.0, atol=1e-12)
    assert m.correlation_error == pytest.approx(0.0, abs=1e-12)


def test_representation_error_constant_series():
    series = np.full((48, 2), 0.37)
    reps = run_ctpc(series, 4)
    m = representation_error(series, reps)
    assert np.allclose(m.duration_rmse, 0.0, atol=1e-12)


def test_representation_error_reconstruction():
    reps = RepresentativeSet(load_factors=np.array([1.0, 5.0]),
                             wind_factors=np.zeros(2),
                             weights=np.array([2.0, 2.0]), source_hours=4)
    m = representation_error(np.array([1.0, 1.0, 5.0, 5.0]), reps)
    assert m.duration_rmse[0] == pytest.approx(0.0, abs=1e-12)


def test_rmse_monotone_in_target_count():
    series = synthetic_year_series(seed=7, hours=400)
    errs = []
    for target in (5, 20, 80, 200, 400):
        reps = run_ctpc(series, target)
        errs.append(representation_error(series, reps).duration_rmse.sum())
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
