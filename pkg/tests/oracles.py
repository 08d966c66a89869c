"""Independent reference implementations used by tests (no seld3d imports)."""

import math


def _unit(az, el):
    a, e = math.radians(az), math.radians(el)
    return (math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e))


def _angle(u, v):
    dot = sum(x * y for x, y in zip(u, v))
    cx = (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])
    return math.degrees(math.atan2(math.sqrt(sum(c * c for c in cx)), dot))


def brute_force_scores(preds, refs, n_classes, ang_thr=20.0, dist_thr=1.0):
    """preds/refs: lists of (frame, class, az, el, dist) tuples.

    Enumerates every (pred, ref) pair; a pair counts when frame and class
    agree. Returns (macro F, DOAE or None, RDE or None).
    """
    tp = [0] * n_classes
    fp = [0] * n_classes
    fn = [0] * n_classes
    angles, rels = [], []
    used_p, used_r = set(), set()
    for i, p in enumerate(preds):
        for j, r in enumerate(refs):
            if p[0] == r[0] and p[1] == r[1]:
                used_p.add(i)
                used_r.add(j)
                ang = _angle(_unit(p[2], p[3]), _unit(r[2], r[3]))
                rel = abs(p[4] - r[4]) / r[4]
                angles.append(ang)
                rels.append(rel)
                if ang <= ang_thr and rel <= dist_thr:
                    tp[p[1]] += 1
                else:
                    fp[p[1]] += 1
                    fn[p[1]] += 1
    for i, p in enumerate(preds):
        if i not in used_p:
            fp[p[1]] += 1
    for j, r in enumerate(refs):
        if j not in used_r:
            fn[r[1]] += 1
    fs = [2 * tp[c] / (2 * tp[c] + fp[c] + fn[c]) for c in range(n_classes) if tp[c] + fp[c] + fn[c]]
    f = sum(fs) / len(fs) if fs else 0.0
    doae = sum(angles) / len(angles) if angles else None
    rde = sum(rels) / len(rels) if rels else None
    return f, doae, rde

