"""Measurement noise: Gaussian and symmetric alpha-stable (SaS) draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSpec:
    """SaS law with characteristic function ``exp(-scale * |t|**alpha)``.

    ``alpha = 2`` is Gaussian with variance ``2 * scale``; ``alpha = 1`` is
    Cauchy with scale ``scale``.
    """

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def sample_sas(spec: NoiseSpec, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draw(s) from a symmetric alpha-stable law.

    With ``V ~ U(-pi/2, pi/2)`` and ``W ~ Exp(1)``::

        X = sin(a V) / cos(V)**(1/a) * (cos((1 - a) V) / W)**((1 - a)/a)

    has characteristic function ``exp(-|t|**a)``; the result is rescaled by
    ``scale**(1/a)``. One uniform then one exponential variate are consumed
    per sample.
    """
    a = spec.alpha
    V = rng.uniform(-np.pi / 2, np.pi / 2, size=size)
    W = rng.standard_exponential(size=size)
    if a == 1.0:
        X = np.tan(V)
    else:
        X = (np.sin(a * V) / np.cos(V) ** (1.0 / a)
             * (np.cos((1.0 - a) * V) / W) ** ((1.0 - a) / a))
    X = spec.scale ** (1.0 / a) * X
    return float(X) if size is None else X


def sample_gaussian(variance: float, rng: np.random.Generator, size=None):
    """Zero-mean Gaussian draw(s) with the given variance."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    x = np.sqrt(variance) * rng.standard_normal(size=size)
    return float(x) if size is None else x


def alpha_ramp(N: int, lo: float, hi: float) -> tuple[float, ...]:
    """Per-node characteristic exponents spaced linearly from ``lo`` to ``hi``."""
    if N == 1:
        return (float(lo),)
    return tuple(float(a) for a in np.linspace(lo, hi, N))
