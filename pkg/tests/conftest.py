"""Shared builders and independent oracles used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from vcanomaly.geometry import BoundingBox
from vcanomaly.tracking import FaceObservation, Track


def box(x0=0.0, y0=0.0, x1=10.0, y1=10.0) -> BoundingBox:
    return BoundingBox(x0, y0, x1, y1)


def obs(frame, b=None, embedding=None, expression=None, label=None, channel=None):
    return FaceObservation(
        frame_index=frame,
        box=b or box(),
        embedding=embedding,
        expression=expression,
        expression_label=label,
        channel=channel,
    )


def track(track_id, observations) -> Track:
    return Track(track_id, list(observations))


def embedding_near(base: np.ndarray, rng, scale=0.01) -> tuple[float, ...]:
    return tuple(float(v) for v in base + rng.normal(0, scale, len(base)))


def one_hot_expression(index: int) -> tuple[float, ...]:
    vec = [0.0] * 7
    vec[index] = 1.0
    return tuple(vec)


def naive_rolling(values, w):
    """Literal per-index recomputation of the trailing-window statistics."""
    values = list(values)
    out = []
    for i in range(len(values)):
        if i < w:
            out.append((float("nan"), float("nan")))
        else:
            window = values[i - w : i]
            mean = sum(window) / w
            var = sum((v - mean) ** 2 for v in window) / w
            out.append((mean, var**0.5))
    return out


def naive_dbscan(frames, epsilon, min_points):
    """Textbook queue-based DBSCAN with an O(n^2) precomputed neighbor table.

    Returns a list of clusters, each a sorted list of indices into `frames`.
    Border points belong to the first cluster that reaches them; seeds are
    visited in sorted frame order.
    """
    n = len(frames)
    arr = np.asarray(frames, dtype=float)
    order = sorted(range(n), key=lambda i: (arr[i], i))
    close = np.abs(arr[:, None] - arr[None, :]) <= epsilon
    neighbor_lists = [[j for j in order if close[i, j]] for i in range(n)]
    labels = [None] * n

    cluster_id = 0
    for seed in order:
        if labels[seed] is not None:
            continue
        if len(neighbor_lists[seed]) < min_points:
            continue
        labels[seed] = cluster_id
        queue = list(neighbor_lists[seed])
        k = 0
        while k < len(queue):
            point = queue[k]
            k += 1
            if labels[point] is None:
                labels[point] = cluster_id
                if len(neighbor_lists[point]) >= min_points:
                    queue.extend(neighbor_lists[point])
        cluster_id += 1

    clusters = [[] for _ in range(cluster_id)]
    for i in range(n):
        if labels[i] is not None:
            clusters[labels[i]].append(i)
    return [sorted(c) for c in clusters]


@pytest.fixture(scope="session", autouse=True)
def _warm_forecast_kernel():
    """Compile the forecasting kernel once so timed tests measure the math."""
    from vcanomaly.forecast import ArimaOrder, fit

    fit(np.linspace(1.0, 2.0, 12) + np.sin(np.arange(12)), ArimaOrder(1, 0, 1))
