"""Multichannel PCM WAV reading and writing (16- and 32-bit integer)."""

import wave

import numpy as np

from .errors import FormatError

_SCALE = {2: 32768.0, 4: 2147483648.0}
_DTYPE = {2: "<i2", 4: "<i4"}


def read_wav(path):
    """Return ``(samples, sample_rate)`` with samples shaped (channels, n) in [-1, 1)."""
    try:
        with wave.open(str(path), "rb") as wf:
            nch = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if width not in _SCALE:
        raise FormatError(f"{path}: {8 * width}-bit PCM unsupported (need 16 or 32)")
    data = np.frombuffer(raw, dtype=_DTYPE[width])
    if data.size % nch:
        raise FormatError(f"{path}: truncated sample data")
    return (data.reshape(-1, nch).T / _SCALE[width]).astype(np.float64), rate


def write_wav(path, samples, sample_rate, bits=32):
    """Write (channels, n) float samples, clipping to [-1, 1)."""
    width = bits // 8
    if width not in _SCALE:
        raise ValueError("bits must be 16 or 32")
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    scale = _SCALE[width]
    q = np.clip(np.round(x * scale), -scale, scale - 1).astype(_DTYPE[width])
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(x.shape[0])
        wf.setsampwidth(width)
        wf.setframerate(int(sample_rate))
        wf.writeframes(np.ascontiguousarray(q.T).tobytes())
