"""Location- and distance-aware F-score, DOA error and relative distance error.

Matching is frame-wise and class-wise: with at most one prediction and one
reference per (frame, class), a same-class pair in a frame is *matched*. A
matched pair is a true positive when its angular error is at most 20 deg and
its relative distance error at most 1; otherwise it counts as one false
positive and one false negative. Unmatched predictions are false positives,
unmatched references false negatives. DOAE and RDE average over every
matched pair, whether or not it passed the thresholds.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyEval
from .geom import direction_error_deg

ANGLE_THRESHOLD = 20.0
DIST_THRESHOLD = 1.0


@dataclass
class FrameMatch:
    pairs: list = field(default_factory=list)   # (class_id, angle_deg, rel_dist_err, is_tp)
    unmatched_pred: list = field(default_factory=list)   # class ids
    unmatched_ref: list = field(default_factory=list)


@dataclass
class SeldScores:
    f_20_1: float
    doae: float | None    # None: no matched pairs
    rde: float | None
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    n_matched: int

    def report(self) -> str:
        doae = "nan" if self.doae is None else f"{self.doae:.2f}"
        rde = "nan" if self.rde is None else f"{self.rde:.3f}"
        return f"F20/1={self.f_20_1:.3f} DOAE={doae} RDE={rde}"

    def as_dict(self) -> dict:
        return {"f_20_1": self.f_20_1,
                "doae": "no matches" if self.doae is None else self.doae,
                "rde": "no matches" if self.rde is None else self.rde,
                "n_matched": self.n_matched,
                "tp": " ".join(str(int(v)) for v in self.tp),
                "fp": " ".join(str(int(v)) for v in self.fp),
                "fn": " ".join(str(int(v)) for v in self.fn)}


def match_frame(preds, refs, angle_threshold=ANGLE_THRESHOLD, dist_threshold=DIST_THRESHOLD):
    """Match one frame's predictions to references (FrameEvents or None)."""
    p = preds.by_class() if preds is not None else {}
    r = refs.by_class() if refs is not None else {}
    out = FrameMatch()
    for c in sorted(set(p) | set(r)):
        if c in p and c in r:
            pe, re = p[c], r[c]
            ang = float(direction_error_deg(pe.azimuth, pe.elevation, re.azimuth, re.elevation))
            rel = abs(pe.distance - re.distance) / re.distance
            out.pairs.append((c, ang, rel, ang <= angle_threshold and rel <= dist_threshold))
        elif c in p:
            out.unmatched_pred.append(c)
        else:
            out.unmatched_ref.append(c)
    return out


def aggregate(preds, refs, n_classes, angle_threshold=ANGLE_THRESHOLD,
              dist_threshold=DIST_THRESHOLD) -> SeldScores:
    """Score lists of FrameEvents against each other."""
    pmap = {fe.frame_index: fe for fe in preds}
    rmap = {fe.frame_index: fe for fe in refs}
    frames = sorted(set(pmap) | set(rmap))
    if not frames:
        raise EmptyEval("nothing to evaluate: no predictions and no references")
    tp = np.zeros(n_classes, dtype=np.int64)
    fp = np.zeros(n_classes, dtype=np.int64)
    fn = np.zeros(n_classes, dtype=np.int64)
    angles, rels = [], []
    for t in frames:
        m = match_frame(pmap.get(t), rmap.get(t), angle_threshold, dist_threshold)
        for c, ang, rel, ok in m.pairs:
            angles.append(ang)
            rels.append(rel)
            if ok:
                tp[c] += 1
            else:
                fp[c] += 1
                fn[c] += 1
        for c in m.unmatched_pred:
            fp[c] += 1
        for c in m.unmatched_ref:
            fn[c] += 1
    seen = (tp + fp + fn) > 0
    if seen.any():
        f = float(np.mean(2 * tp[seen] / (2 * tp[seen] + fp[seen] + fn[seen])))
    else:
        f = 0.0
    doae = float(np.mean(angles)) if angles else None
    rde = float(np.mean(rels)) if rels else None
    return SeldScores(f, doae, rde, tp, fp, fn, len(angles))


def write_report(scores: SeldScores, txt_path=None, csv_path=None) -> None:
    """key=value text and a one-row CSV (plus per-class rows)."""
    d = scores.as_dict()
    if txt_path is not None:
        with open(txt_path, "w") as fh:
            for k, v in d.items():
                fh.write(f"{k}={v}\n")
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write("class,tp,fp,fn,f\n")
            for c in range(len(scores.tp)):
                tp, fp, fn = int(scores.tp[c]), int(scores.fp[c]), int(scores.fn[c])
                f = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else float("nan")
                fh.write(f"{c},{tp},{fp},{fn},{f!r}\n")
            fh.write(f"all,{int(scores.tp.sum())},{int(scores.fp.sum())},{int(scores.fn.sum())},"
                     f"{scores.f_20_1!r}\n")
