"""Per-participant change signals derived from a track's feature vectors."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .tracking import EXPRESSIONS, Expression, Track


class FeatureSource(Enum):
    EMBEDDING_128 = "embedding128"
    EXPRESSION_7 = "expression7"


@dataclass
class ChangeSeries:
    """Scalar frame-to-frame feature change for one track."""

    track_id: int
    samples: list[tuple[int, float]]
    source: FeatureSource

    def __post_init__(self):
        frames = [f for f, _ in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError("change series frames must be strictly increasing")
        if any(v < 0 for _, v in self.samples):
            raise ValidationError("change values must be non-negative")

    def __len__(self) -> int:
        return len(self.samples)

    def frames(self) -> np.ndarray:
        return np.array([f for f, _ in self.samples], dtype=int)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples], dtype=float)


@dataclass
class LabelSeries:
    """Dominant-expression label per usable frame for one track."""

    track_id: int
    samples: list[tuple[int, Expression]]

    def __post_init__(self):
        frames = [f for f, _ in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError("label series frames must be strictly increasing")

    def __len__(self) -> int:
        return len(self.samples)


def _vector_of(obs, source: FeatureSource):
    return obs.embedding if source is FeatureSource.EMBEDDING_128 else obs.expression


def change_series(track: Track, source: FeatureSource) -> ChangeSeries:
    """Euclidean distance between consecutive feature vectors of a track.

    Each change lands on the later frame's index. Observations missing the
    requested vector are skipped, so a pair may span a gap. With fewer than
    two usable observations the series is empty.
    """
    usable = [
        (obs.frame_index, _vector_of(obs, source))
        for obs in track.observations
        if _vector_of(obs, source) is not None
    ]
    if len(usable) < 2:
        return ChangeSeries(track.track_id, [], source)
    vectors = np.asarray([vec for _, vec in usable], dtype=float)
    deltas = np.linalg.norm(np.diff(vectors, axis=0), axis=1)
    samples = [(frame, float(d)) for (frame, _), d in zip(usable[1:], deltas)]
    return ChangeSeries(track.track_id, samples, source)


def label_series(track: Track) -> LabelSeries:
    """Dominant expression per observation.

    A stored label wins over the vector argmax; argmax ties resolve to the
    earliest category in the canonical order.
    """
    samples: list[tuple[int, Expression]] = []
    for obs in track.observations:
        if obs.expression_label is not None:
            samples.append((obs.frame_index, obs.expression_label))
        elif obs.expression is not None:
            samples.append((obs.frame_index, EXPRESSIONS[int(np.argmax(obs.expression))]))
    return LabelSeries(track.track_id, samples)
