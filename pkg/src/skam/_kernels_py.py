"""NumPy implementations of the geometry kernels (fallback for the compiled module)."""

import numpy as np

_CHUNK = 32768


def zone_any(grad, frames, thresholds):
    """For each point, whether some lattice has projection norm below its threshold.

    Parameters
    ----------
    grad : ndarray, shape (N, d)
        Gradients of H at the sample points.
    frames : ndarray, shape (L, n, d)
        Orthonormal rows spanning each lattice.
    thresholds : ndarray, shape (L,)
        Zone thresholds; the test is ``|P_R grad| < threshold``.

    Returns
    -------
    ndarray of bool, shape (N,)
    """
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    thr2 = np.asarray(thresholds, dtype=np.float64) ** 2
    out = np.zeros(grad.shape[0], dtype=bool)
    if frames.shape[0] == 0:
        return out
    for s in range(0, grad.shape[0], _CHUNK):
        g = grad[s:s + _CHUNK]
        c = np.einsum("pd,lkd->plk", g, frames)
        out[s:s + _CHUNK] = np.any(np.sum(c * c, axis=2) < thr2[None, :], axis=1)
    return out


def interval_union_length(starts, ends):
    """Total length of the union of the intervals in each row.

    Empty intervals (``start >= end``) contribute nothing.
    """
    s = np.asarray(starts, dtype=np.float64)
    e = np.asarray(ends, dtype=np.float64)
    e = np.where(e > s, e, s)
    order = np.argsort(s, axis=1, kind="stable")
    s = np.take_along_axis(s, order, axis=1)
    e = np.take_along_axis(e, order, axis=1)
    reach = np.maximum.accumulate(e, axis=1)
    prev = np.concatenate([np.full((s.shape[0], 1), -np.inf), reach[:, :-1]], axis=1)
    return np.sum(np.maximum(0.0, e - np.maximum(s, prev)), axis=1)
