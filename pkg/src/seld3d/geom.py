"""Spherical/Cartesian conversion and the equirectangular pixel map.

Axes: x front, y left, z up. Azimuth is measured counter-clockwise from the
front in degrees and lives in (-180, 180]; elevation lives in [-90, 90].
All functions accept scalars or arrays and broadcast.
"""

from typing import NamedTuple

import numpy as np

from .errors import OutOfBounds, ZeroVector

ZERO_NORM = 1e-12
VIDEO_WIDTH = 1920
VIDEO_HEIGHT = 960


class Direction(NamedTuple):
    azimuth: float
    elevation: float


def wrap_azimuth(az):
    """Wrap degrees into (-180, 180]."""
    w = np.mod(np.asarray(az, dtype=np.float64) + 180.0, 360.0) - 180.0
    w = np.where(w <= -180.0, w + 360.0, w)
    return w[()] if np.ndim(w) == 0 else w


def sph_to_cart(azimuth, elevation):
    """Unit vector(s) for azimuth/elevation in degrees; shape ``(..., 3)``."""
    az = np.deg2rad(np.asarray(azimuth, dtype=np.float64))
    el = np.deg2rad(np.asarray(elevation, dtype=np.float64))
    ce = np.cos(el)
    return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1)


def cart_to_sph(v):
    """Return ``(azimuth, elevation, length)`` for vector(s) ``v``.

    Raises :class:`ZeroVector` if any vector is shorter than 1e-12. At the
    poles azimuth is reported as 0.
    """
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    horiz = np.hypot(x, y)
    length = np.hypot(horiz, z)
    if np.any(length < ZERO_NORM):
        raise ZeroVector("vector norm below 1e-12 carries no direction")
    el = np.rad2deg(np.arctan2(z, horiz))
    az = np.where(horiz <= ZERO_NORM * length, 0.0, np.rad2deg(np.arctan2(y, x)))
    az = wrap_azimuth(az)
    if np.ndim(length) == 0:
        return float(az), float(el), float(length)
    return az, el, length


def angular_distance_deg(u, v):
    """Great-circle angle between two (non-zero) vectors in degrees.

    Uses atan2(|u x v|, u . v), which stays accurate for nearly parallel
    vectors where a clamped arccos loses about 1e-6 degrees.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nu < ZERO_NORM) or np.any(nv < ZERO_NORM):
        raise ZeroVector("angular distance of a zero vector")
    u = u / nu[..., None]
    v = v / nv[..., None]
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    ang = np.rad2deg(np.arctan2(cross, dot))
    return float(ang) if np.ndim(ang) == 0 else ang


def direction_error_deg(az1, el1, az2, el2):
    return angular_distance_deg(sph_to_cart(az1, el1), sph_to_cart(az2, el2))


def pixel_to_angle(col, row, width=VIDEO_WIDTH, height=VIDEO_HEIGHT):
    """Direction of a pixel centre. Left edge is +180 deg, top edge +90 deg."""
    col = np.asarray(col)
    row = np.asarray(row)
    if np.any(col < 0) or np.any(col >= width) or np.any(row < 0) or np.any(row >= height):
        raise OutOfBounds(f"pixel outside {width}x{height} frame")
    az = 180.0 - 360.0 * (col + 0.5) / width
    el = 90.0 - 180.0 * (row + 0.5) / height
    if np.ndim(az) == 0:
        return Direction(float(az), float(el))
    return az, el


def angle_to_grid(azimuth, elevation, width=VIDEO_WIDTH, height=VIDEO_HEIGHT):
    """Continuous (col, row) coordinates; pixel centres sit on integers."""
    az = wrap_azimuth(azimuth)
    el = np.asarray(elevation, dtype=np.float64)
    col = (180.0 - az) / 360.0 * width - 0.5
    row = (90.0 - el) / 180.0 * height - 0.5
    return col, row


def angle_to_pixel(azimuth, elevation, width=VIDEO_WIDTH, height=VIDEO_HEIGHT):
    """Integer pixel containing the direction; inverse of :func:`pixel_to_angle`."""
    el = np.asarray(elevation, dtype=np.float64)
    if np.any(el < -90.0) or np.any(el > 90.0):
        raise OutOfBounds("elevation outside [-90, 90]")
    col, row = angle_to_grid(azimuth, el, width, height)
    col = np.mod(np.floor(col + 0.5).astype(np.int64), width)
    row = np.clip(np.floor(row + 0.5).astype(np.int64), 0, height - 1)
    if np.ndim(col) == 0:
        return int(col), int(row)
    return col, row
