"""Second-order Volterra (SOV) expansion.

A memory-``P`` SOV filter is linear in an expanded regressor of length
``M = P + P(P+1)/2``::

    u = [x(i), ..., x(i-P+1),                      # linear taps
         x(i)x(i), x(i)x(i-1), ..., x(i-P+1)^2]    # upper-triangular products

and the kernel vector ``w`` uses the same layout: ``h1(0..P-1)`` followed by
``h2(m1, m2)`` for ``m2 >= m1`` in row-major order.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def expanded_length(P: int) -> int:
    """Length ``M`` of the expanded regressor for memory length ``P``."""
    if int(P) != P or P < 1:
        raise ValueError(f"memory length must be a positive integer, got {P!r}")
    P = int(P)
    return P + P * (P + 1) // 2


@lru_cache(maxsize=None)
def quadratic_pairs(P: int) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays ``(m1, m2)`` of the quadratic taps, ``m2 >= m1``, in kernel order."""
    expanded_length(P)
    m1, m2 = np.triu_indices(P)
    m1.flags.writeable = False
    m2.flags.writeable = False
    return m1, m2


def expand(window) -> np.ndarray:
    """Expand input windows into SOV regressors.

    Parameters
    ----------
    window : array_like, shape (..., P)
        Input samples, newest first: ``window[..., j] = x(i - j)``.
        Leading dimensions are treated as a batch.

    Returns
    -------
    numpy.ndarray, shape (..., M)
        Expanded regressor(s).
    """
    window = np.asarray(window, dtype=float)
    if window.ndim == 0 or window.shape[-1] < 1:
        raise ValueError("window must have at least one sample along its last axis")
    m1, m2 = quadratic_pairs(window.shape[-1])
    quad = window[..., m2] * window[..., m1]
    return np.concatenate([window, quad], axis=-1)


def volterra_output(w, u) -> float:
    """Filter output ``w^T u`` for one kernel and one expanded regressor."""
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if w.ndim != 1 or w.shape != u.shape:
        raise ValueError(f"dimension mismatch: kernel {w.shape} vs regressor {u.shape}")
    return float(w @ u)


def memory_from_length(M: int) -> int:
    """Inverse of :func:`expanded_length`; raises if ``M`` is not a valid length."""
    P = 1
    while expanded_length(P) < M:
        P += 1
    if expanded_length(P) != M:
        raise ValueError(f"{M} is not a second-order Volterra length")
    return P


def make_sparse_plant(P: int, active_count: int, rng: np.random.Generator) -> np.ndarray:
    """Random sparse SOV kernel.

    ``active_count`` positions are chosen uniformly without replacement and
    filled with standard normal draws; every other coefficient is exactly zero.
    """
    M = expanded_length(P)
    if int(active_count) != active_count or not 1 <= active_count <= M:
        raise ValueError(f"active_count must be in [1, {M}], got {active_count!r}")
    w = np.zeros(M)
    support = rng.choice(M, size=int(active_count), replace=False)
    w[np.sort(support)] = rng.standard_normal(int(active_count))
    return w


def tapped_windows(x: np.ndarray, P: int) -> np.ndarray:
    """All length-``P`` windows of a signal with zero pre-history.

    ``x`` has shape ``(..., T)``; the result has shape ``(..., T, P)`` with
    ``out[..., i, j] = x[..., i - j]`` and zeros where ``i - j < 0``.
    """
    x = np.asarray(x, dtype=float)
    pad = np.zeros(x.shape[:-1] + (P - 1,))
    xp = np.concatenate([pad, x], axis=-1)
    T = x.shape[-1]
    idx = np.arange(T)[:, None] + (P - 1) - np.arange(P)[None, :]
    return xp[..., idx]
