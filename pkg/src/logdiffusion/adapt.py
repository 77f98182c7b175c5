"""Per-node diffusion adaptation rules.

Every rule has the form::

    phi_k = w_prev + mu * sum_l c_lk * g(e_l) * u_l  [- rho * za(w_prev)]

with ``e_l = d_l - u_l^T w_prev`` and an error nonlinearity ``g`` that
defines the algorithm:

=========  ==========================================================
dLMS       ``e``
dLMP       ``|e|^(p-1) sign(e)``
dLMLS      ``delta e^3 / (1 + delta e^2)``
dLLAD      ``delta e / (1 + delta |e|)``
dLLMP      ``delta |e|^(2p-1) sign(e) / (1 + delta |e|^p)``
=========  ==========================================================

The last three descend the logarithmic cost ``F - ln(1 + delta F)/delta``
with ``F = e^2``, ``|e|`` and ``|e|^p``; constant factors of ``dF/de`` are
absorbed into ``mu``. ``za`` is the piecewise-linear l0-norm gradient
surrogate of :func:`zero_attraction_grad`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .volterra import volterra_output

# |e| beyond this is raised to powers in log space
_LOG_SPACE_THRESHOLD = 1e100


class NumericFailure(ArithmeticError):
    """A non-finite value appeared during adaptation.

    The harness fills in ``run``, ``iteration`` and ``node`` when it can
    attribute the failure.
    """

    def __init__(self, message, run=None, iteration=None, node=None):
        super().__init__(message)
        self.run = run
        self.iteration = iteration
        self.node = node


class Family(str, enum.Enum):
    DLMS = "dLMS"
    DLMP = "dLMP"
    DLMLS = "dLMLS"
    DLLAD = "dLLAD"
    DLLMP = "dLLMP"

    @property
    def uses_p(self) -> bool:
        return self in (Family.DLMP, Family.DLLMP)

    @property
    def logarithmic(self) -> bool:
        return self in (Family.DLMLS, Family.DLLAD, Family.DLLMP)


class Mode(str, enum.Enum):
    ATC = "ATC"
    CTA = "CTA"


@dataclass(frozen=True)
class AlgorithmSpec:
    """Algorithm identity and hyperparameters.

    ``p`` holds one exponent per node and is only read by dLMP and dLLMP.
    ``rho`` and ``beta`` only matter when ``l0`` is set.
    """

    family: Family
    mu: float
    delta: float = 1.0
    p: tuple[float, ...] = field(default=())
    l0: bool = False
    rho: float = 0.0
    beta: float = 10.0
    mode: Mode = Mode.ATC

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.family.logarithmic and not self.delta > 0:
            raise ValueError(f"delta must be positive for {self.family.value}, got {self.delta}")
        if not self.rho >= 0:
            raise ValueError(f"rho must be non-negative, got {self.rho}")
        if self.l0 and not 5 <= self.beta <= 20:
            raise ValueError(f"beta must lie in [5, 20], got {self.beta}")
        if self.family.uses_p and not self.p:
            raise ValueError(f"{self.family.value} needs per-node exponents p")
        for v in self.p:
            if not 1 <= v <= 2:
                raise ValueError(f"p must lie in [1, 2], got {v}")

    @property
    def label(self) -> str:
        return self.family.value + ("-l0" if self.l0 else "")


@dataclass(frozen=True)
class NeighborDatum:
    """One neighbor's measurement ``(u_l, d_l)`` with its adaptation weight ``c_lk``."""

    u: np.ndarray
    d: float
    weight: float = 1.0
    p: float | None = None

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError(f"adaptation weight must be non-negative, got {self.weight}")


def error(d: float, u, w) -> float:
    """A-priori estimation error ``d - w^T u``."""
    return d - volterra_output(w, u)


def _log_ratio(e, delta, num_power, den_power):
    # sign(e) * delta |e|^num / (1 + delta |e|^den), evaluated without overflow
    la = np.log(np.abs(e))
    ld = np.log(delta)
    return np.sign(e) * np.exp(ld + num_power * la - np.logaddexp(0.0, ld + den_power * la))


def error_nonlinearity(family: Family, e, delta: float = 1.0, p=2.0):
    """Error shaping ``g(e)`` of each algorithm, element-wise over ``e``.

    ``p`` and ``delta`` broadcast against ``e``. ``sign(0)`` is taken as 0.
    """
    family = Family(family)
    e = np.asarray(e, dtype=float)
    p = np.asarray(p, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if family is Family.DLMS:
        g = e.copy()
    elif family is Family.DLMP:
        g = np.abs(e) ** (p - 1.0) * np.sign(e)
    else:
        if family is Family.DLMLS:
            with np.errstate(over="ignore", invalid="ignore"):
                g = delta * e**3 / (1.0 + delta * e**2)
            num, den = 3.0, 2.0
        elif family is Family.DLLAD:
            with np.errstate(over="ignore", invalid="ignore"):
                g = delta * e / (1.0 + delta * np.abs(e))
            num, den = 1.0, 1.0
        else:
            a = np.abs(e)
            with np.errstate(over="ignore", invalid="ignore"):
                g = delta * a ** (2.0 * p - 1.0) * np.sign(e) / (1.0 + delta * a**p)
            num, den = 2.0 * p - 1.0, p
        big = np.abs(e) > _LOG_SPACE_THRESHOLD
        if np.any(big):
            num, den, dl = (np.broadcast_to(a, e.shape)[big] for a in (num, den, delta))
            g = np.array(g, dtype=float)
            g[big] = _log_ratio(e[big], dl, num, den)
    if not np.all(np.isfinite(g)):
        raise NumericFailure(f"non-finite {family.value} update for error(s) {e[~np.isfinite(g)][:3]}")
    return g


def zero_attraction_grad(w, beta: float) -> np.ndarray:
    """Piecewise-linear approximation of the gradient of ``||w||_0``.

    ``-beta^2 w - beta`` on ``[-1/beta, 0)``, ``-beta^2 w + beta`` on
    ``(0, 1/beta]`` and zero elsewhere, including at ``w = 0``. ``beta``
    may be an array broadcasting against ``w``.
    """
    beta = np.asarray(beta, dtype=float)
    if not np.all(beta > 0):
        raise ValueError(f"beta must be positive, got {beta}")
    w = np.asarray(w, dtype=float)
    bound = 1.0 / beta
    neg = (w >= -bound) & (w < 0)
    pos = (w > 0) & (w <= bound)
    return np.where(neg, -beta**2 * w - beta, 0.0) + np.where(pos, -beta**2 * w + beta, 0.0)


def adapt_step(spec: AlgorithmSpec, w_prev, data) -> np.ndarray:
    """Local adaptation ``phi_k`` from the previous estimate and neighbor data.

    Parameters
    ----------
    spec : AlgorithmSpec
    w_prev : array_like, shape (M,)
        Estimate being adapted (``w_{k,i-1}`` in ATC, the combined
        estimate in CTA).
    data : sequence of NeighborDatum
        Measurements from the neighborhood; ``datum.p`` is required for
        dLMP and dLLMP.

    Raises
    ------
    ValueError
        On dimension mismatch or a missing exponent.
    NumericFailure
        If the update is not finite.
    """
    w_prev = np.asarray(w_prev, dtype=float)
    update = np.zeros_like(w_prev)
    for datum in data:
        u = np.asarray(datum.u, dtype=float)
        e = error(datum.d, u, w_prev)
        if spec.family.uses_p:
            if datum.p is None:
                raise ValueError(f"{spec.family.value} needs an exponent p on every datum")
            p = datum.p
        else:
            p = 2.0
        g = error_nonlinearity(spec.family, e, spec.delta, p)
        with np.errstate(over="ignore", invalid="ignore"):
            update = update + (datum.weight * g) * u
    with np.errstate(over="ignore", invalid="ignore"):
        phi = w_prev + spec.mu * update
    if spec.l0:
        phi = phi - spec.rho * zero_attraction_grad(w_prev, spec.beta)
    if not np.all(np.isfinite(phi)):
        raise NumericFailure("non-finite local estimate")
    return phi


def adapt_batch(family: Family, w, u, d, mu, delta=1.0, p=2.0) -> np.ndarray:
    """Single-datum update ``w + mu g(d - w^T u) u`` for many independent problems.

    ``w`` and ``u`` have shape ``(..., M)``; ``d``, ``mu``, ``delta`` and
    ``p`` broadcast over the leading dimensions. Zero attraction is not
    applied.
    """
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    e = np.asarray(d, dtype=float) - np.sum(w * u, axis=-1)
    g = error_nonlinearity(family, e, delta, p)
    return w + (np.asarray(mu, dtype=float) * g)[..., None] * u


def combine(a_column, phis, tol: float = 1e-12) -> np.ndarray:
    """Weighted average ``sum_l a_lk phi_l`` over a neighborhood."""
    a_column = np.asarray(a_column, dtype=float)
    phis = [np.asarray(phi, dtype=float) for phi in phis]
    if a_column.ndim != 1 or len(a_column) != len(phis) or not phis:
        raise ValueError("need exactly one weight per estimate")
    if np.any(a_column < 0) or abs(a_column.sum() - 1.0) > tol:
        raise ValueError("combination weights must be non-negative and sum to one")
    if any(phi.shape != phis[0].shape for phi in phis):
        raise ValueError("estimates differ in length")
    out = np.zeros_like(phis[0])
    for a, phi in zip(a_column, phis):
        out = out + a * phi
    return out


def log_cost(F: float, delta: float, form: str = "log1p") -> float:
    """Scalar logarithmic cost of an error measure ``F``.

    ``form="log1p"`` gives ``F - ln(1 + delta F)/delta``, the cost whose
    gradient factor ``delta F/(1 + delta F)`` the update rules follow.
    ``form="log"`` gives ``F - ln(delta F)/delta`` and needs ``F > 0``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if form == "log1p":
        if F < 0:
            raise ValueError(f"F must be non-negative, got {F}")
        return F - math.log1p(delta * F) / delta
    if form == "log":
        if not F > 0:
            raise ValueError(f"F must be positive, got {F}")
        return F - math.log(delta * F) / delta
    raise ValueError(f"unknown cost form {form!r}")
