"""Dataset assembly, the training loop and inference helpers for the toy network."""

import csv
import logging
from dataclasses import dataclass

import numpy as np

from . import augment, codec, metrics, scenegen, toynet
from .features import audio_features

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    audio: np.ndarray      # (N, 7, T, F)
    visual: np.ndarray     # (N, T/5, 49)
    labels: list           # per clip: list of FrameEvents
    n_classes: int

    def __len__(self):
        return self.audio.shape[0]

    @property
    def n_frames(self):
        return self.visual.shape[1]

    def targets(self):
        return toynet.batch_targets(self.labels, self.n_frames, self.n_classes)


def synth_dataset(n_clips, seed, n_classes=3, n_events=4, noise_db=None, duration=10.0):
    """Render ``n_clips`` scenes and their features; clip i uses seed ``seed * 100003 + i``."""
    audio, visual, labels = [], [], []
    for i in range(n_clips):
        spec = scenegen.random_scene(seed * 100003 + i, n_events=n_events, n_classes=n_classes,
                                     duration=duration, noise_db=noise_db)
        clip, vis, lab = scenegen.render(spec)
        audio.append(audio_features(clip))
        visual.append(vis)
        labels.append(lab)
    return Dataset(np.stack(audio), np.stack(visual), labels, n_classes)


def augment_batch(audio, visual, targets, rng):
    """Apply one random canonical transform per clip (features, visual maps, targets)."""
    audio, visual, targets = audio.copy(), visual.copy(), targets.copy()
    for i, tid in enumerate(rng.integers(0, 8, size=audio.shape[0])):
        t = augment.SpatialTransform.from_id(int(tid))
        audio[i] = augment.acs_features(audio[i], t)
        visual[i] = augment.avps_visual_features(visual[i], t)
        targets[i] = augment.transform_targets(targets[i], t)
    return audio, visual, targets


def fit(cfg, data: Dataset, epochs=200, batch_size=4, peak_lr=5e-4, seed=0,
        dtype=np.float64, log_rows=None, params=None, use_augment=False):
    """Train with Adam under the tri-stage schedule; returns the final TrainState.

    ``log_rows``, if a list, receives (step, lr, total, sed, sce) tuples.
    With ``use_augment`` every clip in a batch gets a random one of the eight
    canonical spatial transforms.
    """
    if params is None:
        params = toynet.init_params(cfg, dtype=dtype)
        toynet.fit_normalizer(params, data.audio)
    state = toynet.TrainState.create(params, seed)
    activity, targets = data.targets()
    n = len(data)
    steps_per_epoch = -(-n // batch_size)
    total = epochs * steps_per_epoch
    audio = data.audio.astype(dtype)
    visual = data.visual.astype(dtype)
    for epoch in range(epochs):
        order = state.rng.permutation(n)
        for b in range(steps_per_epoch):
            idx = np.sort(order[b * batch_size:(b + 1) * batch_size])
            lr = toynet.tri_stage_lr(state.step, total, peak_lr)
            batch = (audio[idx], visual[idx], activity[idx], targets[idx])
            if use_augment:
                a, v, o = augment_batch(batch[0], batch[1], batch[3], state.rng)
                batch = (a, v, batch[2], o)
            state, lb = toynet.train_step(state, batch, lr, cfg)
            if log_rows is not None:
                log_rows.append((state.step, lr, lb.total, lb.sed_loss, lb.sce_loss))
        if epoch % 20 == 0 or epoch == epochs - 1:
            log.info("epoch %d step %d lr %.3g loss %.4f (sed %.4f sce %.4f)",
                     epoch, state.step, lr, lb.total, lb.sed_loss, lb.sce_loss)
    return state


def predict(params, cfg, audio, visual, batch_size=8):
    dtype = params["conv0.W"].dtype
    seds, sces = [], []
    for i in range(0, audio.shape[0], batch_size):
        sed, sce, _ = toynet.forward(params, audio[i:i + batch_size].astype(dtype),
                                     visual[i:i + batch_size].astype(dtype), cfg)
        seds.append(sed)
        sces.append(sce)
    return np.concatenate(seds), np.concatenate(sces)


def decode_clips(sed, sce, sed_threshold=codec.SED_THRESHOLD):
    return [codec.decode_sequence(sed[i], sce[i], sed_threshold) for i in range(sed.shape[0])]


def flatten_clips(per_clip, n_frames):
    """Concatenate per-clip frame lists onto one global frame axis."""
    out = []
    for i, frames in enumerate(per_clip):
        for fe in frames:
            out.append(codec.FrameEvents(i * n_frames + fe.frame_index, list(fe.entries)))
    return out


def evaluate(params, cfg, data: Dataset, sed_threshold=codec.SED_THRESHOLD):
    sed, sce = predict(params, cfg, data.audio, data.visual)
    preds = flatten_clips(decode_clips(sed, sce, sed_threshold), data.n_frames)
    refs = flatten_clips(data.labels, data.n_frames)
    return metrics.aggregate(preds, refs, cfg.n_classes)


def write_log(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "lr", "loss", "sed_loss", "sce_loss"])
        for step, lr, tot, l1, l2 in rows:
            w.writerow([step, repr(float(lr)), repr(float(tot)), repr(float(l1)), repr(float(l2))])
