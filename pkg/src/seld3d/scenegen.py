"""Free-field synthetic FOA scenes with exact labels and toy visual features.

Each class owns a frequency band (log-spaced between 200 Hz and 10 kHz);
an event plays band-limited noise or a tone at the band centre with a fixed
RMS, so level encodes distance through the 1/d law.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .codec import Event, FrameEvents
from .features import FoaClip, SAMPLE_RATE, VISUAL_DIM
from .geom import angle_to_grid

LABEL_RATE = 10          # label / video frames per second
SOURCE_RMS = 0.05
MIN_DISTANCE = 0.5
MAX_DISTANCE = 5.0
BAND_LO = 200.0
BAND_HI = 10000.0
BUMP_SIGMA = 1.0
GRID = 7
MAX_POLYPHONY = 2


@dataclass
class SceneEvent:
    class_id: int
    onset: float        # seconds, multiple of 0.1
    offset: float
    azimuth: float
    elevation: float
    distance: float
    signal: str = "noise"   # "noise" or "tone"

    @property
    def frames(self):
        return range(int(round(self.onset * LABEL_RATE)), int(round(self.offset * LABEL_RATE)))


@dataclass
class SceneSpec:
    seed: int
    n_classes: int = 3
    duration: float = 10.0
    events: list = field(default_factory=list)
    noise_db: float | None = None   # diffuse noise level relative to SOURCE_RMS

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * LABEL_RATE))

    def validate(self):
        active = np.zeros((self.n_frames, self.n_classes), dtype=int)
        for ev in self.events:
            if not 0 <= ev.class_id < self.n_classes:
                raise ValueError(f"class {ev.class_id} outside [0, {self.n_classes})")
            if not MIN_DISTANCE <= ev.distance <= MAX_DISTANCE:
                raise ValueError(f"distance {ev.distance} outside [{MIN_DISTANCE}, {MAX_DISTANCE}]")
            if ev.signal not in ("noise", "tone"):
                raise ValueError(f"unknown signal type {ev.signal!r}")
            f = list(ev.frames)
            if not f or f[0] < 0 or f[-1] >= self.n_frames:
                raise ValueError(f"event [{ev.onset}, {ev.offset}) outside the clip")
            active[f, ev.class_id] += 1
        if active.max(initial=0) > 1:
            raise ValueError("two events of one class overlap")
        if active.sum(axis=1).max(initial=0) > MAX_POLYPHONY:
            raise ValueError(f"more than {MAX_POLYPHONY} concurrent events")


def class_bands(n_classes):
    edges = np.geomspace(BAND_LO, BAND_HI, n_classes + 1)
    return list(zip(edges[:-1], edges[1:]))


def random_scene(seed, n_events=4, n_classes=3, duration=10.0, min_len=1.0, max_len=3.0,
                 tone_prob=0.0, noise_db=None, max_tries=1000) -> SceneSpec:
    """Draw a valid scene: at most two concurrent events, one per class at a time."""
    rng = np.random.default_rng(seed)
    spec = SceneSpec(seed, n_classes, duration, [], noise_db)
    n_frames = spec.n_frames
    active = np.zeros((n_frames, n_classes), dtype=int)
    tries = 0
    while len(spec.events) < n_events and tries < max_tries:
        tries += 1
        c = int(rng.integers(n_classes))
        length = int(rng.integers(int(min_len * LABEL_RATE), int(max_len * LABEL_RATE) + 1))
        length = min(length, n_frames)
        start = int(rng.integers(0, n_frames - length + 1))
        span = slice(start, start + length)
        if active[span, c].any() or (active[span].sum(axis=1) >= MAX_POLYPHONY).any():
            continue
        active[span, c] = 1
        az = float(rng.uniform(-180.0, 180.0))
        el = float(np.rad2deg(np.arcsin(rng.uniform(-np.sin(np.deg2rad(60)), np.sin(np.deg2rad(60))))))
        dist = float(rng.uniform(MIN_DISTANCE, MAX_DISTANCE))
        sig = "tone" if rng.random() < tone_prob else "noise"
        spec.events.append(SceneEvent(c, start / LABEL_RATE, (start + length) / LABEL_RATE,
                                      az, el, dist, sig))
    spec.events.sort(key=lambda e: (e.onset, e.class_id))
    return spec


def foa_gains(azimuth, elevation):
    """SN3D first-order encoding gains in ACN order (W, Y, Z, X)."""
    az, el = np.deg2rad(azimuth), np.deg2rad(elevation)
    return np.array([1.0, np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])


def _source_signal(ev, n, band, rng, sample_rate):
    if ev.signal == "tone":
        f0 = np.sqrt(band[0] * band[1])
        x = np.sin(2.0 * np.pi * f0 * np.arange(n) / sample_rate)
    else:
        spec = np.fft.rfft(rng.standard_normal(n))
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        spec[(freqs < band[0]) | (freqs >= band[1])] = 0.0
        x = np.fft.irfft(spec, n=n)
    rms = np.sqrt(np.mean(x ** 2))
    return x * (SOURCE_RMS / rms) if rms > 0 else x


def render_audio(spec: SceneSpec, sample_rate=SAMPLE_RATE) -> FoaClip:
    n = int(round(spec.duration * sample_rate))
    out = np.zeros((4, n))
    bands = class_bands(spec.n_classes)
    for i, ev in enumerate(spec.events):
        rng = np.random.default_rng([spec.seed, i])
        a = int(round(ev.onset * sample_rate))
        b = min(int(round(ev.offset * sample_rate)), n)
        sig = _source_signal(ev, b - a, bands[ev.class_id], rng, sample_rate)
        gain = foa_gains(ev.azimuth, ev.elevation) / max(ev.distance, MIN_DISTANCE)
        out[:, a:b] += gain[:, None] * sig[None, :]
    if spec.noise_db is not None:
        rng = np.random.default_rng([spec.seed, 1_000_003])
        out += rng.standard_normal(out.shape) * SOURCE_RMS * 10.0 ** (spec.noise_db / 20.0)
    return FoaClip(out, sample_rate)


def gaussian_bump(azimuth, elevation, sigma=BUMP_SIGMA):
    """7x7 map (rows = elevation, cols = azimuth) with a bump at the direction."""
    c0, r0 = angle_to_grid(azimuth, elevation, GRID, GRID)
    cols = np.arange(GRID)
    dc = np.mod(cols - c0 + GRID / 2.0, GRID) - GRID / 2.0   # azimuth wraps around
    dr = np.arange(GRID) - r0
    return np.exp(-(dr[:, None] ** 2 + dc[None, :] ** 2) / (2.0 * sigma ** 2))


def render_visual(spec: SceneSpec) -> np.ndarray:
    out = np.zeros((spec.n_frames, VISUAL_DIM))
    for ev in spec.events:
        bump = gaussian_bump(ev.azimuth, ev.elevation).reshape(-1)
        for t in ev.frames:
            out[t] += bump
    return out


def render_labels(spec: SceneSpec) -> list:
    frames = {}
    for ev in spec.events:
        for t in ev.frames:
            frames.setdefault(t, FrameEvents(t)).entries.append(
                Event(ev.class_id, ev.azimuth, ev.elevation, ev.distance))
    for fe in frames.values():
        fe.entries.sort(key=lambda e: e.class_id)
    return [frames[t] for t in sorted(frames)]


def render(spec: SceneSpec, sample_rate=SAMPLE_RATE):
    return render_audio(spec, sample_rate), render_visual(spec), render_labels(spec)


# ---------------------------------------------------------------------------
# key=value scene files

_EVENT_FIELDS = ("class_id", "onset", "offset", "azimuth", "elevation", "distance", "signal")


def write_scene(path, spec: SceneSpec) -> None:
    lines = [f"seed={spec.seed}", f"n_classes={spec.n_classes}", f"duration={spec.duration!r}",
             f"noise_db={'none' if spec.noise_db is None else repr(spec.noise_db)}",
             f"n_events={len(spec.events)}"]
    for i, ev in enumerate(spec.events):
        for name in _EVENT_FIELDS:
            val = getattr(ev, name)
            lines.append(f"event{i}.{name}={val if isinstance(val, str) else repr(val)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_scene(path) -> SceneSpec:
    kv = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                k, _, v = line.partition("=")
                kv[k.strip()] = v.strip()
    noise = kv.get("noise_db", "none")
    spec = SceneSpec(int(kv["seed"]), int(kv.get("n_classes", 3)), float(kv.get("duration", 10.0)),
                     [], None if noise.lower() == "none" else float(noise))
    for i in range(int(kv.get("n_events", 0))):
        p = f"event{i}."
        spec.events.append(SceneEvent(int(kv[p + "class_id"]), float(kv[p + "onset"]),
                                      float(kv[p + "offset"]), float(kv[p + "azimuth"]),
                                      float(kv[p + "elevation"]), float(kv[p + "distance"]),
                                      kv.get(p + "signal", "noise")))
    spec.validate()
    return spec
