"""Numerical gradient verification via central differences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GradCheckReport:
    """Outcome of one gradient check.

    max_rel_err is the worst relative error over all probed coordinates;
    worst names that coordinate as (param_name, flat_index, analytic,
    numeric). num_checked counts coordinates that actually entered the
    comparison (near-zero pairs are skipped).
    """

    max_rel_err: float
    num_checked: int
    worst: tuple | None


def grad_check(loss_and_grads, params: dict, *, rng,
               samples_per_param: int = 5, eps: float = 1e-5,
               atol: float = 1e-8) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    Args:
        loss_and_grads: Zero-argument callable running a full forward and
            backward pass, returning (loss, grads) with grads keyed like
            params. It must be deterministic: fixed inputs, fixed dropout
            masks (or eval mode).
        params: Named float64 parameter arrays, modified in place while
            probing and restored afterwards.
        rng: numpy Generator choosing which coordinates to probe.
        samples_per_param: Coordinates probed per parameter tensor.
        eps: Central difference half-step.
        atol: Coordinates where both |analytic| and |numeric| fall below
            this are skipped; their relative error is meaningless.

    Returns:
        GradCheckReport with the worst relative error found.

    Raises:
        ValueError: If any parameter is not float64. Central differences
            at eps=1e-5 drown in float32 rounding noise.
    """
    for name, p in params.items():
        if p.dtype != np.float64:
            raise ValueError(
                f"grad_check requires float64 parameters, {name!r} is {p.dtype}"
            )
    _, grads = loss_and_grads()
    grads = {k: np.array(v, dtype=np.float64, copy=True)
             for k, v in grads.items()}

    worst_rel = 0.0
    worst = None
    checked = 0
    for name, p in params.items():
        flat = p.reshape(-1)
        k = min(samples_per_param, flat.size)
        for idx in rng.choice(flat.size, size=k, replace=False):
            orig = flat[idx]
            flat[idx] = orig + eps
            loss_plus, _ = loss_and_grads()
            flat[idx] = orig - eps
            loss_minus, _ = loss_and_grads()
            flat[idx] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * eps)
            analytic = float(grads[name].reshape(-1)[idx])
            scale = max(abs(numeric), abs(analytic))
            if scale < atol:
                continue
            checked += 1
            rel = abs(numeric - analytic) / scale
            if rel > worst_rel:
                worst_rel = rel
                worst = (name, int(idx), analytic, float(numeric))
    return GradCheckReport(max_rel_err=worst_rel, num_checked=checked,
                           worst=worst)
