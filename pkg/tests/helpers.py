"""Shared test utilities: finite differences and reference formulas."""

import numpy as np


def central_difference(loss_fn, param: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Numerical gradient of loss_fn() w.r.t. every coordinate of param.

    ``param`` must be the live array loss_fn reads; entries are perturbed
    in place and restored.
    """
    grad = np.zeros_like(param, dtype=np.float64)
    it = np.nditer(param, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = param[idx]
        param[idx] = orig + h
        up = loss_fn()
        param[idx] = orig - h
        down = loss_fn()
        param[idx] = orig
        grad[idx] = (up - down) / (2 * h)
        it.iternext()
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: float = 1e-8) -> float:
    """Worst-case per-coordinate relative error between two gradients."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def ref_sigmoid(x: float, clamp: float = 6.0) -> float:
    x = min(max(x, -clamp), clamp)
    return 1.0 / (1.0 + np.exp(-x))


def ref_sgns_loss(v, u_rows, clamp: float = 6.0) -> float:
    """Reference negative-sampling loss, written independently of the library."""
    v = np.asarray(v, dtype=np.float64)
    total = -np.log(ref_sigmoid(float(np.dot(u_rows[0], v)), clamp))
    for u in u_rows[1:]:
        total -= np.log(1.0 - ref_sigmoid(float(np.dot(u, v)), clamp))
    return float(total)


def ref_bce_loss(probs, labels) -> float:
    """Plain summed-over-types, mean-over-examples binary cross-entropy."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    eps = 1e-12
    per = -(labels * np.log(probs + eps) + (1 - labels) * np.log(1 - probs + eps))
    return float(per.sum(axis=-1).mean())


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
