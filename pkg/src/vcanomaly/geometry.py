"""Bounding-box arithmetic: IOU, containment and dual-detector merging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DEFAULT_MERGE_IOU = 0.8


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned rectangle in pixel coordinates with strictly positive area."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min < 0 or self.y_min < 0:
            raise ValidationError(f"box coordinates must be non-negative: {self}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"box must have positive area: {self}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and self.x_max >= other.x_max
            and self.y_max >= other.y_max
        )

    def intersection(self, other: "BoundingBox") -> "BoundingBox | None":
        x0 = max(self.x_min, other.x_min)
        y0 = max(self.y_min, other.y_min)
        x1 = min(self.x_max, other.x_max)
        y1 = min(self.y_max, other.y_max)
        if x0 >= x1 or y0 >= y1:
            return None
        return BoundingBox(x0, y0, x1, y1)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    inter = a.intersection(b)
    if inter is None:
        return 0.0
    ia = inter.area
    return ia / (a.area + b.area - ia)


def iou_matrix(boxes_a: list[BoundingBox], boxes_b: list[BoundingBox]) -> np.ndarray:
    """Pairwise IOU, shape (len(boxes_a), len(boxes_b))."""
    if not boxes_a or not boxes_b:
        return np.zeros((len(boxes_a), len(boxes_b)))
    a = np.array([[b.x_min, b.y_min, b.x_max, b.y_max] for b in boxes_a])
    b = np.array([[x.x_min, x.y_min, x.x_max, x.y_max] for x in boxes_b])
    x0 = np.maximum(a[:, None, 0], b[None, :, 0])
    y0 = np.maximum(a[:, None, 1], b[None, :, 1])
    x1 = np.minimum(a[:, None, 2], b[None, :, 2])
    y1 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(x1 - x0, 0.0, None) * np.clip(y1 - y0, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return inter / union


def merge_detections(
    a: BoundingBox, b: BoundingBox, threshold: float = DEFAULT_MERGE_IOU
) -> tuple[BoundingBox, ...]:
    """Decide whether two detector outputs are one face or two.

    Containment wins first (the inner box is kept), then a sufficiently high
    IOU collapses the pair to its intersection; anything else stays two
    separate detections.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"merge threshold must be in (0, 1]: {threshold}")
    if b.contains(a):
        return (a,)
    if a.contains(b):
        return (b,)
    inter = a.intersection(b)
    if inter is not None and iou(a, b) >= threshold:
        return (inter,)
    return (a, b)


def greedy_pairs(
    dets_a: list[BoundingBox], dets_b: list[BoundingBox]
) -> list[tuple[int, int]]:
    """Pair overlapping boxes across two detector outputs, best IOU first.

    Each box is consumed at most once; ties break on the first box's
    (x_min, y_min) so the pairing is reproducible.
    """
    candidates = []
    for i, a in enumerate(dets_a):
        for j, b in enumerate(dets_b):
            v = iou(a, b)
            if v > 0.0:
                candidates.append((-v, a.x_min, a.y_min, b.x_min, b.y_min, i, j))
    candidates.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs = []
    for _, _, _, _, _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
    return pairs


def merge_frame(
    dets_a: list[BoundingBox],
    dets_b: list[BoundingBox],
    threshold: float = DEFAULT_MERGE_IOU,
) -> list[BoundingBox]:
    """Merge two detectors' outputs for one frame.

    Overlapping boxes are paired greedily by descending IOU and replaced by
    the pairwise merge result; everything unpaired passes through unchanged.
    """
    pairs = greedy_pairs(dets_a, dets_b)
    out: list[BoundingBox] = []
    used_a = set()
    used_b = set()
    for i, j in pairs:
        used_a.add(i)
        used_b.add(j)
        out.extend(merge_detections(dets_a[i], dets_b[j], threshold))
    out.extend(box for i, box in enumerate(dets_a) if i not in used_a)
    out.extend(box for j, box in enumerate(dets_b) if j not in used_b)
    return out
