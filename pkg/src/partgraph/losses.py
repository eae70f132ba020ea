"""Training-loss primitives, including matching supervision routed
through the differentiable solver's backward pass."""

import numpy as np

from .errors import InvalidInputError
from .matching import matcher_backward

DEFAULT_EPS = 1e-7


def cross_entropy_map(pred, target, epsilon=DEFAULT_EPS):
    """Mean per-pixel cross entropy, predictions clamped to [eps, 1-eps]."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InvalidInputError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if not 0.0 < epsilon < 0.5:
        raise InvalidInputError("epsilon must lie in (0, 0.5)")
    clamped = np.clip(pred, epsilon, 1.0 - epsilon)
    n_pixels = int(np.prod(pred.shape[:-1])) if pred.ndim > 1 else pred.size
    return float(-(target * np.log(clamped)).sum() / max(n_pixels, 1))


def binary_cross_entropy(pred, target, epsilon=DEFAULT_EPS):
    """Elementwise-mean binary cross entropy -[t log p + (1-t) log(1-p)]."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InvalidInputError(f"shape mismatch: {pred.shape} vs {target.shape}")
    p = np.clip(pred, epsilon, 1.0 - epsilon)
    return float(np.mean(-(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))))


def l1_field(pred, target, mask):
    """Mean |du| + |dv| over masked pixels; empty masks score 0 with a flag.

    Returns (value, empty_mask).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != target.shape or mask.shape != pred.shape[:2]:
        raise InvalidInputError(
            f"shape mismatch: pred {pred.shape}, target {target.shape}, mask {mask.shape}"
        )
    if not mask.any():
        return 0.0, True
    diff = np.abs(pred - target)[mask]
    return float((diff[:, 0] + diff[:, 1]).mean()), False


def matching_loss(relaxed_y, gt_y, epsilon=DEFAULT_EPS):
    """Binary cross entropy on a relaxed assignment matrix.

    Returns (loss, dLoss/dY); the gradient passes through the clamp so a
    saturated entry still receives a finite learning signal, and feeds
    :func:`partgraph.matching.matcher_backward`.
    """
    y = np.asarray(relaxed_y, dtype=np.float64)
    t = np.asarray(gt_y, dtype=np.float64)
    if y.shape != t.shape:
        raise InvalidInputError(f"shape mismatch: {y.shape} vs {t.shape}")
    loss = binary_cross_entropy(y, t, epsilon)
    p = np.clip(y, epsilon, 1.0 - epsilon)
    grad = (p - t) / (p * (1.0 - p)) / max(y.size, 1)
    return loss, grad


def matching_loss_grad_scores(trace, relaxed_y, gt_y, epsilon=DEFAULT_EPS):
    """Convenience hook: loss plus its gradient w.r.t. the score matrix."""
    loss, grad_y = matching_loss(relaxed_y, gt_y, epsilon)
    return loss, matcher_backward(trace, grad_y)


def uncertainty_weight(task_losses, log_variances):
    """Homoscedastic weighting: total = sum_i exp(-s_i) L_i + s_i.

    Returns (total, per-task weighted components).
    """
    losses = np.asarray(task_losses, dtype=np.float64)
    svals = np.asarray(log_variances, dtype=np.float64)
    if losses.shape != svals.shape:
        raise InvalidInputError("one log-variance per task loss required")
    if not (np.isfinite(losses).all() and np.isfinite(svals).all()):
        raise InvalidInputError("losses and log-variances must be finite")
    components = np.exp(-svals) * losses + svals
    return float(components.sum()), components
