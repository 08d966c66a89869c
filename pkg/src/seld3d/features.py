"""Audio feature stack (4 log-mel + 3 intensity-vector channels) and A/V alignment.

FOA channels are in ACN order (W, Y, Z, X) with SN3D normalisation.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyClip, ShapeMismatch
from .geom import cart_to_sph

SAMPLE_RATE = 24000
HOP = 480          # 20 ms
WIN = 960          # 40 ms
NFFT = 1024
N_MELS = 64
FMIN = 50.0
FMAX = 12000.0
LOG_EPS = 1e-8
IV_EPS = 1e-8
VIDEO_REPEAT = 5
VISUAL_DIM = 49


@dataclass
class FoaClip:
    samples: np.ndarray   # (4, N)
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[0] != 4:
            raise ShapeMismatch(f"FOA clip needs 4 channels, got shape {self.samples.shape}")

    @property
    def duration(self) -> float:
        return self.samples.shape[1] / self.sample_rate


def _periodic_hann(n):
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(clip, hop=HOP, win_length=WIN, nfft=NFFT):
    """Centred, reflection-padded Hann STFT.

    Returns complex array (channels, frames, nfft // 2 + 1) with
    ``frames = n_samples // hop``.
    """
    x = clip.samples if isinstance(clip, FoaClip) else np.atleast_2d(np.asarray(clip, dtype=np.float64))
    n = x.shape[1]
    n_frames = n // hop
    if n_frames == 0:
        raise EmptyClip(f"clip of {n} samples is shorter than one hop")
    window = np.zeros(nfft)
    lo = (nfft - win_length) // 2
    window[lo:lo + win_length] = _periodic_hann(win_length)
    pad = nfft // 2
    mode = "reflect" if n > pad else "constant"
    xp = np.pad(x, ((0, 0), (pad, pad)), mode=mode)
    idx = np.arange(n_frames)[:, None] * hop + np.arange(nfft)[None, :]
    frames = xp[:, idx] * window
    return np.fft.rfft(frames, n=nfft, axis=-1)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels=N_MELS, nfft=NFFT, sample_rate=SAMPLE_RATE, fmin=FMIN, fmax=FMAX):
    """HTK-scale triangular filters, peak 1; shape (nfft // 2 + 1, n_mels)."""
    freqs = np.arange(nfft // 2 + 1) * sample_rate / nfft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    lower, centre, upper = edges[:-2], edges[1:-1], edges[2:]
    up = (freqs[:, None] - lower) / (centre - lower)
    down = (upper - freqs[:, None]) / (upper - centre)
    return np.maximum(0.0, np.minimum(up, down))


def log_mel(spec, n_mels=N_MELS, melbank=None):
    """log(mel-filtered power + 1e-8) per channel; (channels, T, n_mels)."""
    if melbank is None:
        melbank = mel_filterbank(n_mels, nfft=2 * (spec.shape[-1] - 1))
    power = spec.real ** 2 + spec.imag ** 2
    return np.log(power @ melbank + LOG_EPS)


def intensity_vectors(spec, n_mels=N_MELS, melbank=None):
    """Mel-aggregated, per-cell normalised active intensity (x, y, z); (3, T, n_mels)."""
    if spec.shape[0] != 4:
        raise ShapeMismatch("intensity vectors need a 4-channel ACN spectrogram")
    if melbank is None:
        melbank = mel_filterbank(n_mels, nfft=2 * (spec.shape[-1] - 1))
    w = np.conj(spec[0])
    # ACN: 1 = Y, 2 = Z, 3 = X
    iv = np.stack([np.real(w * spec[3]), np.real(w * spec[1]), np.real(w * spec[2])])
    iv = iv @ melbank
    norm = np.sqrt(np.sum(iv ** 2, axis=0, keepdims=True))
    return iv / (norm + IV_EPS)


def stack_audio_features(logmel, ivs):
    if logmel.shape[0] != 4 or ivs.shape[0] != 3 or logmel.shape[1:] != ivs.shape[1:]:
        raise ShapeMismatch(f"cannot stack log-mel {logmel.shape} with IVs {ivs.shape}")
    return np.concatenate([logmel, ivs], axis=0)


def audio_features(clip, n_mels=N_MELS):
    """Full 7 x T x n_mels stack for a clip."""
    spec = stft(clip)
    bank = mel_filterbank(n_mels)
    return stack_audio_features(log_mel(spec, melbank=bank), intensity_vectors(spec, melbank=bank))


def repeat_visual(v, repeat=VIDEO_REPEAT):
    """Repeat each visual frame ``repeat`` times along time."""
    v = np.asarray(v)
    if v.ndim != 2 or v.shape[1] != VISUAL_DIM:
        raise ShapeMismatch(f"visual features must be (frames, {VISUAL_DIM}), got {v.shape}")
    return np.repeat(v, repeat, axis=0)


def pool_audio_to_video_rate(a):
    """Sum of average and max pooling over windows of 5 frames; (T, D) -> (T/5, D)."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] % VIDEO_REPEAT:
        raise ShapeMismatch(f"need (T, D) with T divisible by {VIDEO_REPEAT}, got {a.shape}")
    out, _ = kernels.temporal_pool_fwd(np.ascontiguousarray(a[None]))
    return out[0]


def estimate_doa_from_ivs(ivs, frames=None):
    """Mean normalised IV direction over selected frames -> (azimuth, elevation).

    Free-field single-source oracle: every populated time-mel cell points at
    the source, so the average does too.
    """
    sel = ivs if frames is None else ivs[:, frames]
    mean = sel.reshape(3, -1).sum(axis=1)
    az, el, _ = cart_to_sph(mean)
    return az, el
