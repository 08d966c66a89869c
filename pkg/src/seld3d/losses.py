"""Joint SED / SCE objective: BCE on activities plus activity-masked MSE on coordinates."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

CLAMP = 1e-7
SED_WEIGHT = 1.0
SCE_WEIGHT = 2.0


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    sed_loss: float
    sce_loss: float
    sed_weight: float = SED_WEIGHT
    sce_weight: float = SCE_WEIGHT


def sed_bce(pred, truth):
    """Mean binary cross-entropy over all T*C cells and its gradient w.r.t. ``pred``.

    Predictions are clamped to [1e-7, 1 - 1e-7]; the gradient is zero where
    the clamp is active.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs truth {truth.shape}")
    n = pred.size
    p = np.clip(pred, CLAMP, 1.0 - CLAMP)
    value = -np.sum(truth * np.log(p) + (1.0 - truth) * np.log1p(-p)) / n
    inside = (pred >= CLAMP) & (pred <= 1.0 - CLAMP)
    grad = np.where(inside, (-truth / p + (1.0 - truth) / (1.0 - p)) / n, 0.0)
    return float(value), grad


def sce_masked_mse(pred, truth, activity):
    """(1/CT) sum ||(pred - truth) * y||^2 and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    activity = np.asarray(activity, dtype=np.float64)
    if pred.shape != truth.shape or pred.shape[:-1] != activity.shape or pred.shape[-1] != 3:
        raise ShapeMismatch(f"pred {pred.shape}, truth {truth.shape}, activity {activity.shape}")
    n = activity.size
    diff = (pred - truth) * activity[..., None]
    value = np.sum(diff ** 2) / n
    grad = 2.0 * diff * activity[..., None] / n
    return float(value), grad


def total_loss(sed_loss, sce_loss, sed_weight=SED_WEIGHT, sce_weight=SCE_WEIGHT) -> LossBreakdown:
    return LossBreakdown(sed_weight * sed_loss + sce_weight * sce_loss, sed_loss, sce_loss,
                         sed_weight, sce_weight)
