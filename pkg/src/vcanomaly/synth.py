"""Synthetic meeting generator with injected group events.

Baseline behavior keeps every participant's feature vectors drifting on a
small circle around a resting point, so consecutive changes stay inside a
tight magnitude band around noise_scale. An event jumps the affected
participants to a locus at exactly `intensity` distance (the same circle
phase carries over), holds there, then walks them home at in-band step sizes.
Detection of strong events is therefore guaranteed by construction, and calm
stretches cannot fire the statistical detector at default thresholds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .evaluation import GroundTruthWindow
from .geometry import BoundingBox
from .stream_io import DEFAULT_FPS, FeatureStream, FrameRecord
from .tracking import EXPRESSIONS, Expression, FaceObservation

MAGNITUDE_BAND = (0.95, 1.05)
CIRCLE_RADIUS_FACTOR = 2.0
ONSET_JITTER_SECONDS = 2.0
RESTING_NEUTRAL_MASS = 0.64

CELL_W, CELL_H = 160, 120
BOX_MARGIN_X, BOX_MARGIN_Y = 20, 15
BOX_JITTER = 2.0


@dataclass(frozen=True)
class SyntheticEvent:
    onset_frame: int
    duration_frames: int
    affected_fraction: float
    intensity: float

    def __post_init__(self):
        if self.onset_frame < 0:
            raise ValidationError(f"onset_frame must be >= 0: {self.onset_frame}")
        if self.duration_frames < 1:
            raise ValidationError(f"duration_frames must be >= 1: {self.duration_frames}")
        if not 0 < self.affected_fraction <= 1:
            raise ValidationError(
                f"affected_fraction must be in (0, 1]: {self.affected_fraction}"
            )
        if self.intensity < 0:
            raise ValidationError(f"intensity must be >= 0: {self.intensity}")

    @property
    def end_frame(self) -> int:
        return self.onset_frame + self.duration_frames - 1


@dataclass
class SyntheticScenario:
    participant_count: int
    duration_frames: int
    events: list[SyntheticEvent] = field(default_factory=list)
    noise_scale: float = 0.01
    seed: int = 0
    fps: float = DEFAULT_FPS
    source_id: str | None = None

    def __post_init__(self):
        if self.participant_count < 1:
            raise ValidationError(
                f"participant_count must be >= 1: {self.participant_count}"
            )
        if self.duration_frames < 2:
            raise ValidationError(f"duration_frames must be >= 2: {self.duration_frames}")
        if self.noise_scale <= 0:
            raise ValidationError(f"noise_scale must be positive: {self.noise_scale}")
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive: {self.fps}")
        for event in self.events:
            if event.onset_frame + event.duration_frames > self.duration_frames:
                raise ValidationError(
                    f"event [{event.onset_frame}, {event.end_frame}] runs past "
                    f"duration {self.duration_frames}"
                )

    @classmethod
    def from_dict(cls, raw: dict) -> "SyntheticScenario":
        if not isinstance(raw, dict):
            raise ValidationError("scenario must be a JSON object")
        known = {
            "participant_count",
            "duration_frames",
            "events",
            "noise_scale",
            "seed",
            "fps",
            "source_id",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown scenario keys: {sorted(unknown)}")
        events_raw = raw.get("events", [])
        if not isinstance(events_raw, list):
            raise ValidationError("events must be a list")
        event_keys = {"onset_frame", "duration_frames", "affected_fraction", "intensity"}
        events = []
        for entry in events_raw:
            if not isinstance(entry, dict) or set(entry) - event_keys:
                raise ValidationError(f"bad event entry: {entry!r}")
            events.append(SyntheticEvent(**entry))
        try:
            return cls(
                participant_count=raw["participant_count"],
                duration_frames=raw["duration_frames"],
                events=events,
                noise_scale=raw.get("noise_scale", 0.01),
                seed=raw.get("seed", 0),
                fps=raw.get("fps", DEFAULT_FPS),
                source_id=raw.get("source_id"),
            )
        except KeyError as exc:
            raise ValidationError(f"scenario missing required key {exc.args[0]!r}")


def load_scenario(path) -> SyntheticScenario:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario file is not valid JSON: {exc.msg}")
    return SyntheticScenario.from_dict(raw)


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm < 1e-12:
        raise ValidationError("degenerate direction vector")
    return vector / norm


def _orthonormal_plane(rng, dim: int, sum_zero: bool) -> tuple[np.ndarray, np.ndarray]:
    u1 = rng.normal(size=dim)
    if sum_zero:
        u1 -= u1.mean()
    u1 = _unit(u1)
    u2 = rng.normal(size=dim)
    if sum_zero:
        u2 -= u2.mean()
    u2 -= (u2 @ u1) * u1
    return u1, _unit(u2)


class _Walker:
    """Circle walk around a center with exact per-step chord control."""

    def __init__(self, home, u1, u2, radius, theta):
        self.home = home
        self.center = home
        self.u1 = u1
        self.u2 = u2
        self.radius = radius
        self.theta = theta
        self.returning = False
        self.pos = self._circle_point()

    def _circle_point(self):
        return self.center + self.radius * (
            math.cos(self.theta) * self.u1 + math.sin(self.theta) * self.u2
        )

    def jump(self, locus):
        self.center = locus
        self.returning = False
        self.pos = self._circle_point()

    def release(self):
        self.center = self.home
        self.returning = True

    def step(self, magnitude, sign):
        if self.returning:
            target = self._circle_point()
            delta = target - self.pos
            dist = float(np.linalg.norm(delta))
            if dist <= magnitude:
                self.pos = target
                self.returning = False
            else:
                self.pos = self.pos + delta * (magnitude / dist)
        else:
            turn = 2.0 * math.asin(min(magnitude / (2.0 * self.radius), 1.0))
            self.theta += sign * turn
            self.pos = self._circle_point()


def _resting_expression() -> np.ndarray:
    resting = np.full(len(EXPRESSIONS), (1.0 - RESTING_NEUTRAL_MASS) / (len(EXPRESSIONS) - 1))
    resting[EXPRESSIONS.index(Expression.NEUTRAL)] = RESTING_NEUTRAL_MASS
    return resting


def _expression_event_direction(resting: np.ndarray) -> np.ndarray:
    target = np.zeros(len(EXPRESSIONS))
    target[EXPRESSIONS.index(Expression.SURPRISE)] = 1.0
    return _unit(target - resting)  # already sum-zero


def _grid_box(participant: int, columns: int) -> tuple[float, float]:
    row, col = divmod(participant, columns)
    return col * CELL_W, row * CELL_H


def generate(scenario: SyntheticScenario) -> tuple[FeatureStream, list[GroundTruthWindow]]:
    """Deterministic synthetic meeting for a scenario; returns the stream and
    the injected ground truth (zero-intensity events are excluded)."""
    rng = np.random.default_rng(scenario.seed)
    P = scenario.participant_count
    F = scenario.duration_frames
    noise = scenario.noise_scale
    radius = CIRCLE_RADIUS_FACTOR * noise
    columns = math.ceil(math.sqrt(P))

    resting_exp = _resting_expression()
    exp_dir_base = _expression_event_direction(resting_exp)

    plans = []
    for _ in range(P):
        plans.append(
            {
                "resting_emb": rng.normal(size=128),
                "exp_plane": _orthonormal_plane(rng, len(EXPRESSIONS), sum_zero=True),
                "emb_plane": _orthonormal_plane(rng, 128, sum_zero=False),
                "theta_exp": float(rng.uniform(0, 2 * math.pi)),
                "theta_emb": float(rng.uniform(0, 2 * math.pi)),
                "mag_exp": noise * rng.uniform(*MAGNITUDE_BAND, size=F),
                "sign_exp": rng.choice((-1.0, 1.0), size=F),
                "mag_emb": noise * rng.uniform(*MAGNITUDE_BAND, size=F),
                "sign_emb": rng.choice((-1.0, 1.0), size=F),
                "jitter": rng.uniform(-BOX_JITTER, BOX_JITTER, size=(F, 2)),
            }
        )

    jitter_cap = int(round(ONSET_JITTER_SECONDS * scenario.fps))
    jumps: dict[int, dict[int, tuple[np.ndarray, np.ndarray]]] = {p: {} for p in range(P)}
    hold_ends: dict[int, dict[int, int]] = {p: {} for p in range(P)}
    truth = []
    for event in scenario.events:
        if event.intensity <= 0:
            continue
        truth.append(
            GroundTruthWindow(event.onset_frame, event.end_frame, label="synthetic")
        )
        count = max(1, math.ceil(event.affected_fraction * P - 1e-9))
        affected = np.sort(rng.choice(P, size=count, replace=False))
        jitters = rng.integers(0, jitter_cap + 1, size=count)
        for p, jit in zip(affected, jitters):
            p = int(p)
            onset = min(event.onset_frame + int(jit), F - 1)
            locus_exp = resting_exp + event.intensity * exp_dir_base
            locus_emb = plans[p]["resting_emb"] + event.intensity * _unit(rng.normal(size=128))
            jumps[p][onset] = (locus_exp, locus_emb)
            hold_ends[p][onset] = event.end_frame

    records = [FrameRecord(t, []) for t in range(F)]
    for p in range(P):
        plan = plans[p]
        exp_u1, exp_u2 = plan["exp_plane"]
        emb_u1, emb_u2 = plan["emb_plane"]
        walker_exp = _Walker(resting_exp, exp_u1, exp_u2, radius, plan["theta_exp"])
        walker_emb = _Walker(plan["resting_emb"], emb_u1, emb_u2, radius, plan["theta_emb"])
        x0, y0 = _grid_box(p, columns)
        hold_until = -1
        for t in range(F):
            if t in jumps[p]:
                locus_exp, locus_emb = jumps[p][t]
                walker_exp.jump(locus_exp)
                walker_emb.jump(locus_emb)
                hold_until = max(hold_until, hold_ends[p][t])
            elif t > 0:
                if t == hold_until + 1:
                    walker_exp.release()
                    walker_emb.release()
                walker_exp.step(plan["mag_exp"][t], plan["sign_exp"][t])
                walker_emb.step(plan["mag_emb"][t], plan["sign_emb"][t])
            expression = walker_exp.pos
            if expression.min() < 0:
                if expression.min() < -1e-9:
                    raise ValidationError(
                        "expression left the simplex; reduce intensity or noise_scale"
                    )
                expression = np.maximum(expression, 0.0)
            jx, jy = plan["jitter"][t]
            box = BoundingBox(
                x0 + BOX_MARGIN_X + jx,
                y0 + BOX_MARGIN_Y + jy,
                x0 + CELL_W - BOX_MARGIN_X + jx,
                y0 + CELL_H - BOX_MARGIN_Y + jy,
            )
            records[t].faces.append(
                FaceObservation(
                    frame_index=t,
                    box=box,
                    embedding=tuple(float(v) for v in walker_emb.pos),
                    expression=tuple(float(v) for v in expression),
                    expression_label=EXPRESSIONS[int(np.argmax(expression))],
                )
            )

    stream = FeatureStream(
        fps=scenario.fps,
        frame_count=F,
        source_id=scenario.source_id,
        frames=records,
    )
    truth.sort(key=lambda w: w.start_frame)
    return stream, truth
