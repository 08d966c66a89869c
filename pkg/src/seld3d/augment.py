"""Spatial augmentation: FOA channel swapping and matching equirectangular pixel swapping.

A :class:`SpatialTransform` maps a direction as::

    az -> (-az if reflect else az) + rotation,   el -> -el if flip

Every transform is realised exactly by FOA channel sign flips/swaps, by
integer column shifts and mirrors on the panorama, and by the same
arithmetic on labels, so audio, video and labels stay consistent.
"""

from dataclasses import dataclass
import math

import numpy as np

from .codec import Event, FrameEvents
from .errors import BadAspect, FormatError, ShapeMismatch
from .features import FoaClip, VISUAL_DIM
from .geom import wrap_azimuth

GRID = 7


@dataclass(frozen=True)
class SpatialTransform:
    rotation: int = 0          # degrees, one of 0/90/180/270
    flip: bool = False         # elevation flip
    reflect: bool = False      # azimuth reflection (optional extension)

    def __post_init__(self):
        if self.rotation % 90:
            raise ValueError(f"rotation must be a multiple of 90, got {self.rotation}")
        object.__setattr__(self, "rotation", self.rotation % 360)

    @classmethod
    def from_id(cls, tid: int, reflect: bool = False):
        """Canonical ids 0-7: rotation = 90 * (id % 4), flip = id >= 4."""
        if not 0 <= tid < 8:
            raise ValueError(f"transform id must be in 0..7, got {tid}")
        return cls(90 * (tid % 4), tid >= 4, reflect)

    @property
    def id(self) -> int:
        return self.rotation // 90 + 4 * self.flip

    def then(self, other: "SpatialTransform") -> "SpatialTransform":
        """The transform equal to applying ``self`` first, then ``other``."""
        sign = -1 if other.reflect else 1
        return SpatialTransform((sign * self.rotation + other.rotation) % 360,
                                self.flip != other.flip, self.reflect != other.reflect)


def canonical_transforms():
    return [SpatialTransform.from_id(i) for i in range(8)]


def compose(t1, t2):
    """Apply ``t1`` then ``t2``."""
    return t1.then(t2)


def acs_audio(clip, t: SpatialTransform):
    """Channel-swap an ACN (W, Y, Z, X) clip; accepts a FoaClip or a (4, N) array."""
    x = clip.samples if isinstance(clip, FoaClip) else np.asarray(clip)
    if x.shape[0] != 4:
        raise ShapeMismatch("ACS needs 4 FOA channels")
    W, Y, Z, X = x[0], x[1], x[2], x[3]
    if t.reflect:
        Y = -Y
    if t.rotation == 90:
        X, Y = -Y, X
    elif t.rotation == 180:
        X, Y = -X, -Y
    elif t.rotation == 270:
        X, Y = Y, -X
    if t.flip:
        Z = -Z
    out = np.stack([W, Y, Z, X])
    if isinstance(clip, FoaClip):
        return FoaClip(out, clip.sample_rate)
    return out


def acs_features(stack, t: SpatialTransform):
    """Apply ACS to a 7-channel feature stack (log-mel W, Y, Z, X; IV x, y, z).

    Exact: log-mel power ignores channel sign and IVs are linear in X, Y, Z,
    so this equals recomputing features from :func:`acs_audio` output.
    """
    stack = np.asarray(stack)
    if stack.shape[0] != 7:
        raise ShapeMismatch("feature stack needs 7 channels")
    lw, ly, lz, lx = stack[0], stack[1], stack[2], stack[3]
    ix, iy, iz = stack[4], stack[5], stack[6]
    if t.reflect:
        iy = -iy
    if t.rotation == 90:
        lx, ly = ly, lx
        ix, iy = -iy, ix
    elif t.rotation == 180:
        ix, iy = -ix, -iy
    elif t.rotation == 270:
        lx, ly = ly, lx
        ix, iy = iy, -ix
    if t.flip:
        iz = -iz
    return np.stack([lw, ly, lz, lx, ix, iy, iz])


def transform_targets(targets, t: SpatialTransform):
    """Apply the transform to (..., 3) Cartesian vectors (x front, y left, z up)."""
    x, y, z = targets[..., 0], targets[..., 1], targets[..., 2]
    if t.reflect:
        y = -y
    if t.rotation == 90:
        x, y = -y, x
    elif t.rotation == 180:
        x, y = -x, -y
    elif t.rotation == 270:
        x, y = y, -x
    if t.flip:
        z = -z
    return np.stack([x, y, z], axis=-1)


def transform_direction(az, el, t: SpatialTransform):
    az = -np.asarray(az, dtype=np.float64) if t.reflect else np.asarray(az, dtype=np.float64)
    az = wrap_azimuth(az + t.rotation)
    el = -np.asarray(el, dtype=np.float64) if t.flip else np.asarray(el, dtype=np.float64)
    if np.ndim(az) == 0:
        return float(az), float(el)
    return az, el


def acs_labels(frames, t: SpatialTransform):
    """Transform a list of FrameEvents (or a single one); distances are unchanged."""
    if isinstance(frames, FrameEvents):
        return acs_labels([frames], t)[0]
    out = []
    for fe in frames:
        entries = []
        for ev in fe.entries:
            az, el = transform_direction(ev.azimuth, ev.elevation, t)
            entries.append(Event(ev.class_id, az, el, ev.distance))
        out.append(FrameEvents(fe.frame_index, entries))
    return out


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def _shift_columns(arr, rotation, width, axis):
    # +rotation moves content toward smaller columns (azimuth grows leftward)
    return np.roll(arr, -_round_half_up(width * rotation / 360.0), axis=axis)


def avps_frame(img, t: SpatialTransform):
    """Transform an equirectangular frame shaped (H, W, channels) with W = 2H."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    if w != 2 * h:
        raise BadAspect(f"equirectangular frame must be 2:1, got {w}x{h}")
    if t.reflect:
        img = img[:, ::-1]
    img = _shift_columns(img, t.rotation, w, axis=1)
    if t.flip:
        img = img[::-1]
    return np.ascontiguousarray(img)


def avps_visual_features(v, t: SpatialTransform):
    """Apply the transform to (frames, 49) features viewed as 7x7 (elevation x azimuth) maps."""
    v = np.asarray(v)
    if v.shape[-1] != VISUAL_DIM:
        raise ShapeMismatch(f"visual features must have {VISUAL_DIM} dims, got {v.shape}")
    maps = v.reshape(v.shape[:-1] + (GRID, GRID))
    if t.reflect:
        maps = maps[..., ::-1]
    maps = _shift_columns(maps, t.rotation, GRID, axis=-1)
    if t.flip:
        maps = maps[..., ::-1, :]
    return np.ascontiguousarray(maps).reshape(v.shape)


# ---------------------------------------------------------------------------
# binary PPM (P6)

def _ppm_tokens(buf, count, pos):
    out = []
    while len(out) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header")
        out.append(buf[start:pos])
    return out, pos


def read_ppm(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    (magic, w, h, maxval), pos = _ppm_tokens(buf, 4, 0)
    if magic != b"P6":
        raise FormatError(f"{path}: not a binary PPM (P6)")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval > 255:
        raise FormatError("16-bit PPM not supported")
    data = buf[pos + 1:]
    if len(data) < w * h * 3:
        raise FormatError(f"{path}: truncated pixel data")
    return np.frombuffer(data[:w * h * 3], dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(path, img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeMismatch("PPM images must be (H, W, 3)")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.clip(img, 0, 255).astype(np.uint8).tobytes())
