"""Feature-stream (JSON Lines) and annotation (CSV) file formats."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import StreamFormatError, ValidationError
from .evaluation import GroundTruthWindow
from .geometry import BoundingBox
from .tracking import EMBEDDING_DIM, EXPRESSION_DIM, Expression, FaceObservation

DEFAULT_FPS = 4.0

_LABEL_BY_NAME = {e.value: e for e in Expression}


@dataclass
class FrameRecord:
    index: int
    faces: list[FaceObservation] = field(default_factory=list)


@dataclass
class FeatureStream:
    """Ordered per-frame face observations plus meeting metadata."""

    fps: float = DEFAULT_FPS
    frame_count: int = 0
    source_id: str | None = None
    frames: list[FrameRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive: {self.fps}")
        indices = [f.index for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValidationError("frame records must be ordered by frame_index")
        if indices and self.frame_count < indices[-1] + 1:
            raise ValidationError(
                f"frame_count {self.frame_count} below last frame index {indices[-1]}"
            )

    def observations(self):
        for record in self.frames:
            yield from record.faces


def _parse_vector(raw, name: str, length: int, line: int):
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != length:
        got = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise StreamFormatError(
            f"expected {length} components, got {got}", line=line, field=name
        )
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise StreamFormatError("non-numeric component", line=line, field=name)


def _parse_face(raw: dict, frame_index: int, line: int) -> FaceObservation:
    if not isinstance(raw, dict):
        raise StreamFormatError("face record must be an object", line=line, field="faces")
    box_raw = raw.get("box")
    if not isinstance(box_raw, list) or len(box_raw) != 4:
        raise StreamFormatError(
            "box must be [x_min, y_min, x_max, y_max]", line=line, field="box"
        )
    try:
        box = BoundingBox(*(float(v) for v in box_raw))
    except (TypeError, ValueError) as exc:
        raise StreamFormatError(str(exc), line=line, field="box")
    label_raw = raw.get("label")
    label = None
    if label_raw is not None:
        label = _LABEL_BY_NAME.get(label_raw)
        if label is None:
            raise StreamFormatError(
                f"unknown expression label {label_raw!r}", line=line, field="label"
            )
    channel = raw.get("channel")
    if channel is not None and not isinstance(channel, str):
        raise StreamFormatError("channel must be a string", line=line, field="channel")
    embedding = _parse_vector(raw.get("embedding"), "embedding", EMBEDDING_DIM, line)
    expression = _parse_vector(raw.get("expression"), "expression", EXPRESSION_DIM, line)
    try:
        return FaceObservation(
            frame_index=frame_index,
            box=box,
            embedding=embedding,
            expression=expression,
            expression_label=label,
            channel=channel,
        )
    except ValidationError as exc:
        raise StreamFormatError(str(exc), line=line, field="faces")


def read_stream(path) -> FeatureStream:
    """Parse and validate a JSON Lines feature stream.

    An empty file is a valid empty stream. Otherwise the first line must be
    the header record carrying fps and metadata; unknown header keys are
    ignored so producers can attach provenance.
    """
    path = Path(path)
    fps = DEFAULT_FPS
    frame_count = None
    source_id = None
    frames: list[FrameRecord] = []
    saw_header = False
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamFormatError(f"invalid JSON: {exc.msg}", line=line_no)
            if not isinstance(record, dict):
                raise StreamFormatError("each line must be a JSON object", line=line_no)
            kind = record.get("kind")
            if not saw_header:
                if kind != "header":
                    raise StreamFormatError(
                        "first record must be the stream header", line=line_no, field="kind"
                    )
                saw_header = True
                fps = record.get("fps", DEFAULT_FPS)
                if not isinstance(fps, (int, float)) or fps <= 0:
                    raise StreamFormatError("fps must be a positive number", line=line_no, field="fps")
                frame_count = record.get("frame_count")
                if frame_count is not None and (not isinstance(frame_count, int) or frame_count < 0):
                    raise StreamFormatError(
                        "frame_count must be a non-negative integer", line=line_no, field="frame_count"
                    )
                source_id = record.get("source_id")
                continue
            if kind != "frame":
                raise StreamFormatError(f"unknown record kind {kind!r}", line=line_no, field="kind")
            index = record.get("index")
            if not isinstance(index, int) or index < 0:
                raise StreamFormatError(
                    "frame index must be a non-negative integer", line=line_no, field="index"
                )
            if frames and index <= frames[-1].index:
                raise StreamFormatError(
                    f"frame index {index} not after previous {frames[-1].index}",
                    line=line_no,
                    field="index",
                )
            faces_raw = record.get("faces", [])
            if not isinstance(faces_raw, list):
                raise StreamFormatError("faces must be a list", line=line_no, field="faces")
            faces = [_parse_face(raw, index, line_no) for raw in faces_raw]
            frames.append(FrameRecord(index, faces))

    if frame_count is None:
        frame_count = frames[-1].index + 1 if frames else 0
    try:
        return FeatureStream(
            fps=float(fps), frame_count=frame_count, source_id=source_id, frames=frames
        )
    except ValidationError as exc:
        raise StreamFormatError(str(exc))


def _face_to_json(face: FaceObservation) -> dict:
    return {
        "box": [face.box.x_min, face.box.y_min, face.box.x_max, face.box.y_max],
        "channel": face.channel,
        "embedding": list(face.embedding) if face.embedding is not None else None,
        "expression": list(face.expression) if face.expression is not None else None,
        "label": face.expression_label.value if face.expression_label is not None else None,
    }


def write_stream(stream: FeatureStream, path) -> None:
    """Write a stream as JSON Lines; read_stream(write_stream(s)) == s."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        header = {
            "kind": "header",
            "fps": stream.fps,
            "frame_count": stream.frame_count,
            "source_id": stream.source_id,
        }
        handle.write(json.dumps(header) + "\n")
        for record in stream.frames:
            payload = {
                "kind": "frame",
                "index": record.index,
                "faces": [_face_to_json(face) for face in record.faces],
            }
            handle.write(json.dumps(payload) + "\n")


ANNOTATION_COLUMNS = ("start_seconds", "end_seconds", "label")


def read_annotations(path, fps: float) -> list[GroundTruthWindow]:
    """Load (start_seconds, end_seconds, label) rows and convert to frames."""
    if fps <= 0:
        raise ValidationError(f"fps must be positive: {fps}")
    path = Path(path)
    windows = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if tuple(h.strip() for h in header) != ANNOTATION_COLUMNS:
            raise StreamFormatError(
                f"annotation header must be {','.join(ANNOTATION_COLUMNS)}", line=1
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise StreamFormatError("expected 3 columns", line=line_no)
            try:
                start_s = float(row[0])
                end_s = float(row[1])
            except ValueError:
                raise StreamFormatError("start/end must be numbers", line=line_no, field="start_seconds")
            if start_s < 0 or end_s < start_s:
                raise StreamFormatError(
                    f"need 0 <= start <= end, got [{start_s}, {end_s}]",
                    line=line_no,
                    field="start_seconds",
                )
            windows.append(
                GroundTruthWindow(
                    start_frame=int(round(start_s * fps)),
                    end_frame=int(round(end_s * fps)),
                    label=row[2].strip(),
                )
            )
    return windows


def write_annotations(windows: list[GroundTruthWindow], fps: float, path) -> None:
    if fps <= 0:
        raise ValidationError(f"fps must be positive: {fps}")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(ANNOTATION_COLUMNS)
        for w in windows:
            writer.writerow([w.start_frame / fps, w.end_frame / fps, w.label])
