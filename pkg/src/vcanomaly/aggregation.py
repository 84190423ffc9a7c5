"""Clustering per-participant anomalies along the time axis into group events."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detectors import AnomalyPoint
from .errors import ValidationError

MIN_EVENT_PARTICIPANTS = 2


@dataclass(frozen=True)
class GroupEvent:
    """A meeting-level anomaly: a time window plus the participants involved."""

    start_frame: int
    end_frame: int
    participant_ids: frozenset
    point_count: int

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValidationError(
                f"event start {self.start_frame} after end {self.end_frame}"
            )


@dataclass
class AggregationConfig:
    """epsilon is the tolerated reaction-time spread between participants, in
    frames; participant_ratio is the share of the meeting that must co-flag."""

    epsilon: int = 9
    participant_ratio: float = 0.5

    def __post_init__(self):
        if self.epsilon < 1:
            raise ValidationError(f"epsilon must be >= 1: {self.epsilon}")
        if not 0 < self.participant_ratio <= 1:
            raise ValidationError(
                f"participant_ratio must be in (0, 1]: {self.participant_ratio}"
            )


def dbscan_1d(points, epsilon: float, min_points: int) -> list[list]:
    """DBSCAN over frame indices with |f_i - f_j| as the metric.

    A core point has at least min_points neighbors within epsilon, itself
    included; border points join the first cluster that reaches them (sweep
    order is sorted by frame) and noise is dropped. The sorted single pass is
    equivalent to the quadratic textbook algorithm.
    """
    if min_points < 1:
        raise ValidationError(f"min_points must be >= 1: {min_points}")
    pts = list(points)
    n = len(pts)
    if n == 0:
        return []
    frames = np.array([p[0] for p in pts], dtype=float)
    order = np.argsort(frames, kind="stable")
    sorted_frames = frames[order]
    left = np.searchsorted(sorted_frames, sorted_frames - epsilon, side="left")
    right = np.searchsorted(sorted_frames, sorted_frames + epsilon, side="right")
    core = (right - left) >= min_points

    labels = np.full(n, -1, dtype=int)
    cluster_id = 0
    i = 0
    while i < n:
        if labels[order[i]] != -1 or not core[i]:
            i += 1
            continue
        labels[order[i]] = cluster_id
        j = i - 1
        while j >= 0 and sorted_frames[i] - sorted_frames[j] <= epsilon:
            if labels[order[j]] == -1:
                labels[order[j]] = cluster_id
            j -= 1
        last_core_frame = sorted_frames[i]
        k = i + 1
        while k < n and sorted_frames[k] - last_core_frame <= epsilon:
            labels[order[k]] = cluster_id
            if core[k]:
                last_core_frame = sorted_frames[k]
            k += 1
        cluster_id += 1
        i = k

    clusters: list[list] = [[] for _ in range(cluster_id)]
    for idx in order:
        if labels[idx] != -1:
            clusters[labels[idx]].append(pts[idx])
    return clusters


def min_points_for(meeting_size: int, ratio: float) -> int:
    """Participants that must co-flag before a cluster becomes an event."""
    if meeting_size < 1:
        raise ValidationError(f"meeting_size must be >= 1: {meeting_size}")
    if not 0 < ratio <= 1:
        raise ValidationError(f"ratio must be in (0, 1]: {ratio}")
    required = math.ceil(ratio * meeting_size - 1e-9)
    return max(MIN_EVENT_PARTICIPANTS, required)


def aggregate(
    points: list[AnomalyPoint], meeting_size: int, cfg: AggregationConfig
) -> list[GroupEvent]:
    """Density-cluster anomaly points over time and keep the clusters backed
    by enough distinct participants.

    The same participant threshold serves both as the DBSCAN density
    requirement and as the distinct-track filter, so one hyperactive
    participant cannot mint events.
    """
    threshold = min_points_for(meeting_size, cfg.participant_ratio)
    pairs = [(p.frame_index, p.track_id) for p in points]
    events = []
    for cluster in dbscan_1d(pairs, cfg.epsilon, threshold):
        tracks = {track_id for _, track_id in cluster}
        if len(tracks) < threshold:
            continue
        frames = [frame for frame, _ in cluster]
        events.append(
            GroupEvent(int(min(frames)), int(max(frames)), frozenset(tracks), len(cluster))
        )
    events.sort(key=lambda e: e.start_frame)
    return events
