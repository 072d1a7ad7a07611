"""Training losses.

Both losses return ``(value, dlogits_or_dpred)`` so callers can feed the
gradient straight into a model's backward pass.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

PROB_FLOOR = 1e-12


def cross_entropy(probs: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy between predicted distributions and target labels.

    Args:
        probs: (N, K) rows of predicted class probabilities.
        targets: (N, K) rows of target distributions (one-hot or soft).

    Returns:
        (loss, dprobs) where loss is the batch mean of -sum(t * log p)
        and dprobs is the gradient w.r.t. probs, already divided by N.
        Probabilities are floored at 1e-12 inside the log so empty classes
        cannot produce infinities.
    """
    if probs.shape != targets.shape or probs.ndim != 2:
        raise ShapeError(
            f"cross_entropy expects matching (N, K) arrays, got {probs.shape} "
            f"and {targets.shape}"
        )
    n = probs.shape[0]
    clipped = np.maximum(probs, PROB_FLOOR)
    loss = float(-(targets * np.log(clipped)).sum() / n)
    dprobs = np.where(probs > PROB_FLOOR, -targets / clipped, 0.0) / n
    return loss, dprobs.astype(probs.dtype)


def sequence_sum_squares(pred: np.ndarray, target: np.ndarray):
    """Summed squared error over every step and class of a sequence batch.

    The loss for one sequence is sum_i ||y_i - t_i||^2 over its steps; a
    batch contributes the plain sum over sequences (no averaging), matching
    the objective the sequence trainer minimizes.

    Args:
        pred: (N, n, K) predicted distributions per step.
        target: (N, n, K) target distributions per step.

    Returns:
        (loss, dpred) with dpred = 2 * (pred - target).
    """
    if pred.shape != target.shape or pred.ndim != 3:
        raise ShapeError(
            f"sequence_sum_squares expects matching (N, n, K) arrays, got "
            f"{pred.shape} and {target.shape}"
        )
    diff = pred - target
    loss = float((diff * diff).sum())
    return loss, (2.0 * diff).astype(pred.dtype)
