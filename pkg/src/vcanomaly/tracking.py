"""Frame-to-frame face association into stable per-participant tracks."""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .geometry import BoundingBox, iou_matrix

DEFAULT_TRACK_IOU = 0.5
DEFAULT_STALENESS_HORIZON = 30

EXPRESSION_SUM_TOLERANCE = 1e-6
EMBEDDING_DIM = 128
EXPRESSION_DIM = 7


class Expression(Enum):
    """The seven canonical facial expressions; declaration order fixes the
    position-to-category mapping of expression vectors and argmax tie-breaks."""

    HAPPINESS = "Happiness"
    ANGER = "Anger"
    SADNESS = "Sadness"
    DISGUST = "Disgust"
    SURPRISE = "Surprise"
    FEAR = "Fear"
    NEUTRAL = "Neutral"


EXPRESSIONS: tuple[Expression, ...] = tuple(Expression)


@dataclass
class FaceObservation:
    """One face in one frame: box plus whichever feature vectors are available."""

    frame_index: int
    box: BoundingBox
    embedding: tuple[float, ...] | None = None
    expression: tuple[float, ...] | None = None
    expression_label: Expression | None = None
    channel: str | None = None

    def __post_init__(self):
        if not isinstance(self.frame_index, int) or self.frame_index < 0:
            raise ValidationError(f"frame_index must be a non-negative int: {self.frame_index}")
        if self.embedding is not None:
            self.embedding = tuple(float(v) for v in self.embedding)
            if len(self.embedding) != EMBEDDING_DIM:
                raise ValidationError(
                    f"embedding must have {EMBEDDING_DIM} components, got {len(self.embedding)}"
                )
        if self.expression is not None:
            self.expression = tuple(float(v) for v in self.expression)
            if len(self.expression) != EXPRESSION_DIM:
                raise ValidationError(
                    f"expression must have {EXPRESSION_DIM} components, got {len(self.expression)}"
                )
            if any(v < 0 for v in self.expression):
                raise ValidationError("expression components must be non-negative")
            total = sum(self.expression)
            if abs(total - 1.0) > EXPRESSION_SUM_TOLERANCE:
                raise ValidationError(f"expression components must sum to 1, got {total}")


@dataclass
class Track:
    """Time-ordered observations of one participant under a stable id."""

    track_id: int
    observations: list[FaceObservation]

    def __post_init__(self):
        if not self.observations:
            raise ValidationError("track must hold at least one observation")
        frames = [o.frame_index for o in self.observations]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError("track frame indices must be strictly increasing")

    @property
    def last(self) -> FaceObservation:
        return self.observations[-1]

    def append(self, obs: FaceObservation) -> None:
        if obs.frame_index <= self.last.frame_index:
            raise ValidationError(
                f"observation frame {obs.frame_index} not after track frame "
                f"{self.last.frame_index}"
            )
        self.observations.append(obs)

    def last_embedding(self) -> tuple[float, ...] | None:
        for obs in reversed(self.observations):
            if obs.embedding is not None:
                return obs.embedding
        return None


class IdentityMatcher(abc.ABC):
    """Fallback identity resolver used when box overlap cannot associate a frame."""

    @abc.abstractmethod
    def match(self, query: FaceObservation, candidates: list[Track]) -> int | None:
        """Return the track_id of a candidate, or None for no match."""


class EmbeddingMatcher(IdentityMatcher):
    """Nearest-neighbor matching on the candidates' most recent embeddings."""

    def __init__(self, distance_threshold: float):
        if distance_threshold <= 0:
            raise ValidationError(f"distance threshold must be positive: {distance_threshold}")
        self.distance_threshold = distance_threshold

    def match(self, query: FaceObservation, candidates: list[Track]) -> int | None:
        if query.embedding is None:
            return None
        q = np.asarray(query.embedding)
        best_id = None
        best_dist = math.inf
        for track in candidates:
            emb = track.last_embedding()
            if emb is None:
                continue
            dist = float(np.linalg.norm(q - np.asarray(emb)))
            if dist < best_dist:
                best_dist = dist
                best_id = track.track_id
        if best_id is not None and best_dist < self.distance_threshold:
            return best_id
        return None


def default_matcher(distance_threshold: float) -> IdentityMatcher:
    """Embedding nearest-neighbor matcher accepting distances below the threshold."""
    return EmbeddingMatcher(distance_threshold)


def _grid_assignment(
    active: list[Track], faces: list[FaceObservation], iou_threshold: float
) -> list[int] | None:
    """One-to-one track index per face if a full matching above the IOU
    threshold exists, else None.

    The assignment maximizes total IOU among valid matchings; pairs at or
    below the threshold are forbidden.
    """
    mat = iou_matrix([t.last.box for t in active], [f.box for f in faces])
    cost = np.where(mat > iou_threshold, -mat, np.inf)
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:  # infeasible: some face has no admissible track
        return None
    assignment = [-1] * len(faces)
    for r, c in zip(rows, cols):
        if np.isinf(cost[r, c]):
            return None
        assignment[c] = r
    return assignment


def associate_frame(
    active: list[Track],
    faces: list[FaceObservation],
    iou_threshold: float = DEFAULT_TRACK_IOU,
    matcher: IdentityMatcher | None = None,
    next_id: int | None = None,
) -> tuple[list[Track], int]:
    """Attach one frame's faces to the active tracks.

    When every face pairs one-to-one with a distinct track above the IOU
    threshold the pairing is accepted outright; any violation sends the whole
    frame through the identity matcher. Faces left unmatched open new tracks.
    Returns the updated track list and the next unused id.
    """
    if next_id is None:
        next_id = max((t.track_id for t in active), default=-1) + 1
    if not faces:
        return active, next_id
    frame = faces[0].frame_index
    if any(f.frame_index != frame for f in faces):
        raise ValidationError("all faces in one frame must share a frame_index")
    if any(t.last.frame_index >= frame for t in active):
        raise ValidationError(
            f"frame {frame} is not after every active track's last observation"
        )

    if active and len(faces) == len(active):
        assignment = _grid_assignment(active, faces, iou_threshold)
        if assignment is not None:
            for face, track_idx in zip(faces, assignment):
                active[track_idx].append(face)
            return active, next_id

    claimed: set[int] = set()
    new_tracks: list[Track] = []
    for face in faces:
        candidates = [t for t in active if t.track_id not in claimed]
        matched_id = matcher.match(face, candidates) if matcher is not None else None
        candidate_ids = {t.track_id for t in candidates}
        if matched_id is not None and matched_id in candidate_ids:
            track = next(t for t in candidates if t.track_id == matched_id)
            track.append(face)
            claimed.add(matched_id)
        else:
            new_tracks.append(Track(next_id, [face]))
            next_id += 1
    return active + new_tracks, next_id


@dataclass
class Tracker:
    """Single-writer association state for one video.

    Tracks idle for longer than the staleness horizon leave the active set
    (participants who left the meeting) but remain in the full track list.
    """

    iou_threshold: float = DEFAULT_TRACK_IOU
    matcher: IdentityMatcher | None = None
    staleness_horizon: int = DEFAULT_STALENESS_HORIZON
    tracks: list[Track] = field(default_factory=list)
    _active: list[Track] = field(default_factory=list)
    _next_id: int = 0
    _last_frame: int = -1

    @property
    def active(self) -> list[Track]:
        return list(self._active)

    def update(self, frame_index: int, faces: list[FaceObservation]) -> None:
        if frame_index <= self._last_frame:
            raise ValidationError(
                f"frames must be applied in order: {frame_index} after {self._last_frame}"
            )
        if any(f.frame_index != frame_index for f in faces):
            raise ValidationError("face frame_index does not match the frame being applied")
        self._last_frame = frame_index
        self._active = [
            t for t in self._active
            if frame_index - t.last.frame_index <= self.staleness_horizon
        ]
        prev_next_id = self._next_id
        updated, self._next_id = associate_frame(
            self._active, faces, self.iou_threshold, self.matcher, self._next_id
        )
        self.tracks.extend(t for t in updated if t.track_id >= prev_next_id)
        self._active = updated
