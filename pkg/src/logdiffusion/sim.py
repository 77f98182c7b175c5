"""Monte-Carlo harness for diffusion estimation of a sparse Volterra plant.

Each run draws, per node, an i.i.d. unit-variance Gaussian input signal and
a noise sequence from that node's own generator (seeded from
``(seed, run, node)``), so a run's trace does not depend on which other
runs it is simulated alongside. Runs are simulated in batches: all state is
held in ``(runs, nodes, M)`` arrays and every operation is element-wise or
a fixed-order reduction, which keeps batched results bitwise equal to
one-run-at-a-time results.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import topology as topo
from .adapt import AlgorithmSpec, Mode, NumericFailure, error_nonlinearity, zero_attraction_grad
from .noise import NoiseSpec, sample_gaussian, sample_sas
from .volterra import expand, expanded_length, make_sparse_plant, volterra_output

log = logging.getLogger(__name__)

STEADY_FRACTION = 0.1


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = "random"          # random | ring | file
    nodes: int = 20
    degree: int = 4
    seed: int = 0
    weights: str = "uniform"      # uniform | metropolis | identity
    share_gradients: bool = False  # c = a instead of c = I
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("random", "ring", "file"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("topology kind 'file' needs a path")
        if self.weights not in topo.WEIGHT_RULES:
            raise ValueError(f"unknown weight rule {self.weights!r}")
        if self.nodes < 1:
            raise ValueError("nodes must be positive")


@dataclass(frozen=True)
class PlantConfig:
    memory: int = 4
    active: int = 3
    seed: int = 0

    def __post_init__(self):
        M = expanded_length(self.memory)
        if not 1 <= self.active <= M:
            raise ValueError(f"active must be in [1, {M}], got {self.active}")


@dataclass(frozen=True)
class NoiseConfig:
    """Per-node noise laws.

    For ``kind="sas"`` node ``k`` draws from the SaS law with exponent
    ``alpha[k]`` and dispersion ``scale[k]``; for ``kind="gaussian"``
    ``scale[k]`` is the variance and ``alpha`` is ignored.
    """

    kind: str = "sas"
    alpha: tuple[float, ...] = ()
    scale: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("sas", "gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "scale", tuple(float(s) for s in self.scale))
        for s in self.scale:
            if not s > 0:
                raise ValueError(f"noise scale must be positive, got {s}")
        if self.kind == "sas":
            for a in self.alpha:
                NoiseSpec(a, 1.0)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a Monte-Carlo experiment depends on, per-node values resolved."""

    algorithm: AlgorithmSpec
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    plant: PlantConfig = field(default_factory=PlantConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    iterations: int = 5000
    runs: int = 25
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        N = self.topology.nodes
        if len(self.noise.scale) != N:
            raise ValueError(f"noise.scale needs {N} entries, got {len(self.noise.scale)}")
        if self.noise.kind == "sas" and len(self.noise.alpha) != N:
            raise ValueError(f"noise.alpha needs {N} entries, got {len(self.noise.alpha)}")
        if self.algorithm.family.uses_p and len(self.algorithm.p) != N:
            raise ValueError(f"algorithm.p needs {N} entries, got {len(self.algorithm.p)}")

    @property
    def label(self) -> str:
        return self.name or self.algorithm.label


@dataclass
class NodeState:
    w: np.ndarray
    phi: np.ndarray


@dataclass
class NmsdTrace:
    """Network mean-square deviation per iteration (linear scale)."""

    values: np.ndarray
    name: str = ""
    failed_runs: tuple[int, ...] = ()

    @property
    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.values)

    def steady_state_db(self, fraction: float = STEADY_FRACTION) -> float:
        """Mean of the dB trace over the final ``fraction`` of iterations."""
        return float(np.mean(self.db[steady_slice(len(self.values), fraction)]))

    def to_csv(self) -> str:
        rows = ["iteration,nmsd_linear,nmsd_db"]
        rows += [f"{i},{float(v)!r},{float(db)!r}"
                 for i, (v, db) in enumerate(zip(self.values, self.db), 1)]
        return "\n".join(rows) + "\n"


def steady_slice(n: int, fraction: float = STEADY_FRACTION) -> slice:
    return slice(n - max(1, int(round(fraction * n))), n)


def settling_iteration(trace_db, target_db: float, tolerance_db: float = 3.0) -> int:
    """First iteration (1-based) at which the dB trace is within ``tolerance_db`` of ``target_db``."""
    hits = np.flatnonzero(np.asarray(trace_db) <= target_db + tolerance_db)
    return int(hits[0]) + 1 if hits.size else len(trace_db) + 1


# -- measurement model -----------------------------------------------------------


def generate_measurement(w_o, window, noise_draw: float):
    """Expanded regressor and noisy plant output ``d = u^T w_o + v``."""
    u = expand(window)
    return u, volterra_output(w_o, u) + noise_draw


def nmsd(states, w_o) -> float:
    """Average over nodes of ``||w_k - w_o||^2``."""
    w_o = np.asarray(w_o, dtype=float)
    total = 0.0
    for s in states:
        w = np.asarray(getattr(s, "w", s), dtype=float)
        if w.shape != w_o.shape:
            raise ValueError(f"dimension mismatch: {w.shape} vs {w_o.shape}")
        total += float(np.sum((w - w_o) ** 2))
    return total / len(states)


# -- experiment construction ---------------------------------------------------------


class Experiment:
    """Realized network, weights and plant for an :class:`ExperimentSpec`."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        tc = spec.topology
        if tc.kind == "random":
            self.topology = topo.random_connected_graph(tc.nodes, tc.degree, np.random.default_rng(tc.seed))
        elif tc.kind == "ring":
            self.topology = topo.ring_graph(tc.nodes)
        else:
            self.topology, _ = topo.load_network(tc.path)
            if self.topology.node_count != tc.nodes:
                raise ValueError(f"{tc.path} has {self.topology.node_count} nodes, config says {tc.nodes}")
        self.A = topo.WEIGHT_RULES[tc.weights](self.topology)
        self.C = self.A if tc.share_gradients else np.eye(tc.nodes)
        pc = spec.plant
        self.w_o = make_sparse_plant(pc.memory, pc.active, np.random.default_rng(pc.seed))

    @property
    def N(self) -> int:
        return self.topology.node_count

    @property
    def P(self) -> int:
        return self.spec.plant.memory

    @cached_property
    def p(self) -> np.ndarray:
        alg = self.spec.algorithm
        return np.asarray(alg.p if alg.family.uses_p else [2.0] * self.N, dtype=float)

    def node_rng(self, run: int, node: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.spec.seed, spawn_key=(run, node)))

    def node_streams(self, run: int, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Input signal ``x_k(0..T-1)`` and noise ``v_k(0..T-1)`` of one node in one run."""
        T = self.spec.iterations
        nc = self.spec.noise
        rng = self.node_rng(run, node)
        x = rng.standard_normal(T)
        if nc.kind == "sas":
            v = sample_sas(NoiseSpec(nc.alpha[node], nc.scale[node]), rng, size=T)
        else:
            v = sample_gaussian(nc.scale[node], rng, size=T)
        return x, v


def _dot(a, b):
    # fixed-order reduction over the last axis
    out = a[..., 0] * b[..., 0]
    for m in range(1, a.shape[-1]):
        out = out + a[..., m] * b[..., m]
    return out


def _combine_all(A, phi):
    # w[:, k] = sum_l A[l, k] phi[:, l], summed in ascending l
    out = np.zeros_like(phi)
    for l in range(A.shape[0]):
        out = out + A[l][None, :, None] * phi[:, l, None, :]
    return out


def _adapt_all(exp: Experiment, w, u, d):
    alg = exp.spec.algorithm
    if exp.spec.topology.share_gradients:
        # e[r, l, k]: neighbor l's datum against node k's estimate
        e = d[:, :, None] - _dot(u[:, :, None, :], w[:, None, :, :])
        g = error_nonlinearity(alg.family, e, alg.delta, exp.p[None, :, None])
        update = np.zeros_like(w)
        for l in range(exp.N):
            update = update + (exp.C[l][None, :] * g[:, l, :])[..., None] * u[:, l, None, :]
    else:
        e = d - _dot(u, w)
        g = error_nonlinearity(alg.family, e, alg.delta, exp.p[None, :])
        update = g[..., None] * u
    phi = w + alg.mu * update
    if alg.l0:
        phi = phi - alg.rho * zero_attraction_grad(w, alg.beta)
    return phi


def _locate_failure(runs, iteration, *arrays):
    for arr in arrays:
        bad = ~np.isfinite(arr)
        if bad.any():
            idx = np.argwhere(bad)[0]
            node = int(idx[1]) if arr.ndim > 1 else None
            return NumericFailure(
                f"non-finite state in run {runs[idx[0]]}, iteration {iteration}"
                + (f", node {node}" if node is not None else ""),
                runs[idx[0]], iteration, node)
    return NumericFailure(f"numeric failure at iteration {iteration}", None, iteration, None)


def simulate(exp: Experiment, runs) -> np.ndarray:
    """NMSD traces, shape ``(len(runs), iterations)``, for a batch of runs."""
    runs = list(runs)
    R, N, P, T = len(runs), exp.N, exp.P, exp.spec.iterations
    xp = np.zeros((R, N, T + P - 1))
    v = np.empty((R, N, T))
    for a, r in enumerate(runs):
        for k in range(N):
            xp[a, k, P - 1:], v[a, k] = exp.node_streams(r, k)
    with np.errstate(over="ignore", invalid="ignore"):
        return _iterate(exp, runs, xp, v)


def _iterate(exp, runs, xp, v):
    N, P, T = exp.N, exp.P, exp.spec.iterations
    traces = np.empty((len(runs), T))
    lags = np.arange(P)
    w_o = exp.w_o
    w = np.zeros((len(runs), N, w_o.size))
    atc = exp.spec.algorithm.mode is Mode.ATC
    for i in range(T):
        u = expand(xp[:, :, i + P - 1 - lags])
        d = _dot(u, w_o) + v[:, :, i]
        try:
            if atc:
                w = _combine_all(exp.A, _adapt_all(exp, w, u, d))
            else:
                w = _adapt_all(exp, _combine_all(exp.A, w), u, d)
        except NumericFailure:
            raise _locate_failure(runs, i + 1, d - _dot(u, w), w) from None
        dev = w - w_o
        traces[:, i] = _dot(dev, dev).mean(axis=1)
        if not np.isfinite(traces[:, i]).all():
            raise _locate_failure(runs, i + 1, w, traces[:, i])
    return traces


def run_once(spec: ExperimentSpec, run_index: int, experiment: Experiment | None = None) -> NmsdTrace:
    exp = experiment or Experiment(spec)
    return NmsdTrace(simulate(exp, [run_index])[0], spec.label)


def _chunks(items, n):
    n = max(1, min(n, len(items)))
    bounds = np.linspace(0, len(items), n + 1).round().astype(int)
    return [items[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def monte_carlo(spec: ExperimentSpec, threads: int = 1, partial: bool = False,
                experiment: Experiment | None = None) -> NmsdTrace:
    """Average NMSD trace over ``spec.runs`` independent runs.

    Runs are split into ``threads`` contiguous batches; the result does not
    depend on the split. With ``partial=True`` failing runs are dropped (and
    listed in ``failed_runs``) instead of aborting the experiment.
    """
    exp = experiment or Experiment(spec)
    runs = list(range(spec.runs))
    batches = _chunks(runs, threads)

    def work(batch):
        try:
            return batch, simulate(exp, batch), ()
        except NumericFailure:
            if not partial:
                raise
        ok, rows, failed = [], [], []
        for r in batch:
            try:
                rows.append(simulate(exp, [r])[0])
                ok.append(r)
            except NumericFailure as exc:
                log.warning("dropping run %d: %s", r, exc)
                failed.append(r)
        return ok, np.array(rows).reshape(len(ok), spec.iterations), tuple(failed)

    if len(batches) == 1:
        results = [work(batches[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(batches)) as pool:
            results = list(pool.map(work, batches))
    traces = np.concatenate([rows for _, rows, _ in results])
    failed = tuple(r for *_, f in results for r in f)
    if not len(traces):
        raise NumericFailure("every run failed", None, None, None)
    return NmsdTrace(np.mean(traces, axis=0), spec.label, failed)
