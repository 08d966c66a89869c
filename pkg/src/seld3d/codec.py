"""SED-SCE output format: class activity plus source Cartesian coordinates.

An active class is encoded as ``direction * distance``; the vector's
direction is the DOA and its length the source distance. Label files are
DCASE-style CSV rows::

    frame_index,class_id,source_id,azimuth_deg,elevation_deg,distance_m
"""

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DuplicateClass, FormatError, ShapeMismatch
from .geom import sph_to_cart, wrap_azimuth

SED_THRESHOLD = 0.5
MIN_NORM = 1e-6


class Event(NamedTuple):
    class_id: int
    azimuth: float
    elevation: float
    distance: float


@dataclass
class FrameEvents:
    frame_index: int
    entries: list = field(default_factory=list)

    def by_class(self) -> dict:
        out = {}
        for ev in self.entries:
            if ev.class_id in out:
                raise DuplicateClass(f"class {ev.class_id} appears twice in frame {self.frame_index}")
            out[ev.class_id] = ev
        return out


def encode(events: FrameEvents, n_classes: int):
    """Return ``(activity[C], targets[C, 3])`` for one frame."""
    activity = np.zeros(n_classes)
    targets = np.zeros((n_classes, 3))
    for c, ev in events.by_class().items():
        if not 0 <= c < n_classes:
            raise ValueError(f"class id {c} outside [0, {n_classes})")
        if not ev.distance > 0:
            raise ValueError(f"non-positive distance {ev.distance} for class {c}")
        activity[c] = 1.0
        targets[c] = sph_to_cart(ev.azimuth, ev.elevation) * ev.distance
    return activity, targets


def decode(sed, sce, frame_index=0, sed_threshold=SED_THRESHOLD) -> FrameEvents:
    """Turn one frame of model output back into events."""
    sed = np.asarray(sed, dtype=np.float64)
    sce = np.asarray(sce, dtype=np.float64)
    if sce.shape != (sed.shape[0], 3):
        raise ShapeMismatch(f"sce shape {sce.shape} does not match {sed.shape[0]} classes")
    x, y, z = sce[:, 0], sce[:, 1], sce[:, 2]
    horiz = np.hypot(x, y)
    norm = np.hypot(horiz, z)
    az = wrap_azimuth(np.where(horiz <= 1e-12 * norm, 0.0, np.rad2deg(np.arctan2(y, x))))
    el = np.rad2deg(np.arctan2(z, horiz))
    out = FrameEvents(int(frame_index))
    for c in np.flatnonzero((sed >= sed_threshold) & (norm >= MIN_NORM)):
        out.entries.append(Event(int(c), float(az[c]), float(el[c]), float(norm[c])))
    return out


def encode_sequence(frames, n_frames: int, n_classes: int):
    """Dense (T, C) activity and (T, C, 3) targets from a list of FrameEvents."""
    activity = np.zeros((n_frames, n_classes))
    targets = np.zeros((n_frames, n_classes, 3))
    for fe in frames:
        if 0 <= fe.frame_index < n_frames:
            activity[fe.frame_index], targets[fe.frame_index] = encode(fe, n_classes)
    return activity, targets


def decode_sequence(sed, sce, sed_threshold=SED_THRESHOLD, frame_offset=0):
    """Decode (T, C) / (T, C, 3) outputs; frames without events are dropped."""
    out = []
    for t in range(sed.shape[0]):
        fe = decode(sed[t], sce[t], t + frame_offset, sed_threshold)
        if fe.entries:
            out.append(fe)
    return out


# ---------------------------------------------------------------------------
# CSV

def write_csv(path, frames) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for fe in sorted(frames, key=lambda f: f.frame_index):
            for ev in sorted(fe.entries, key=lambda e: e.class_id):
                w.writerow([fe.frame_index, ev.class_id, 0,
                            repr(float(ev.azimuth)), repr(float(ev.elevation)),
                            repr(float(ev.distance))])


def read_csv(path) -> list:
    """Read label rows into FrameEvents sorted by frame; a header row is skipped."""
    frames = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                continue
            if len(row) < 6:
                raise FormatError(f"{path}:{lineno}: expected 6 columns, got {len(row)}")
            try:
                t, c = int(row[0]), int(row[1])
                ev = Event(c, float(row[3]), float(row[4]), float(row[5]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            frames.setdefault(t, FrameEvents(t)).entries.append(ev)
    return [frames[t] for t in sorted(frames)]
