"""Lawson-Hanson active-set solver for small dense non-negative least squares."""

from __future__ import annotations

import numpy as np


def _passive_lstsq(A, b, passive):
    z = np.zeros(A.shape[1])
    idx = np.flatnonzero(passive)
    if idx.size:
        z[idx] = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
    return z


def nnls(A, b, tol=1e-10, max_iter=None):
    """Solve ``min ||A x - b||_2`` subject to ``x >= 0``.

    ``tol`` is relative to ``||A|| * ||b||`` and decides when the dual vector
    no longer has a positive component worth activating.

    Returns ``(x, residual_norm)``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    n = A.shape[1]
    if max_iter is None:
        max_iter = 3 * n + 30
    threshold = tol * np.linalg.norm(A) * np.linalg.norm(b)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        w = A.T @ (b - A @ x)
        candidates = ~passive & ~blocked
        if not candidates.any() or w[candidates].max() <= threshold:
            break
        j = np.flatnonzero(candidates)[np.argmax(w[candidates])]
        passive[j] = True
        z = _passive_lstsq(A, b, passive)
        if z[j] <= 0:
            # numerically the new column cannot enter; keep it out until x changes
            passive[j] = False
            blocked[j] = True
            continue
        while (z[passive] <= 0).any():
            shrink = np.flatnonzero(passive & (z <= 0))
            ratios = x[shrink] / (x[shrink] - z[shrink])
            k = np.argmin(ratios)
            x = x + ratios[k] * (z - x)
            x[shrink[k]] = 0.0
            passive &= x > 1e-14 * max(np.abs(x).max(), np.finfo(float).tiny)
            x[~passive] = 0.0
            z = _passive_lstsq(A, b, passive)
        x = z
        blocked[:] = False
    else:
        raise RuntimeError("nnls did not converge")
    return x, float(np.linalg.norm(A @ x - b))
