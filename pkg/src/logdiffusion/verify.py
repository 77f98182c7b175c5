"""Built-in numerical self-checks run by ``logdiffusion verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import topology as topo
from .adapt import AlgorithmSpec, NeighborDatum, adapt_step, log_cost, zero_attraction_grad
from .noise import NoiseSpec, sample_gaussian, sample_sas
from .volterra import expand


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)


def check_volterra_expansion(rng, trials=200) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        P = int(rng.integers(1, 7))
        x = rng.standard_normal(P)
        u = expand(x)
        h1 = rng.standard_normal(P)
        h2 = {(a, b): rng.standard_normal() for a in range(P) for b in range(a, P)}
        w = np.concatenate([h1, [h2[k] for k in sorted(h2)]])
        direct = sum(h1[m] * x[m] for m in range(P))
        direct += sum(c * x[b] * x[a] for (a, b), c in h2.items())
        worst = max(worst, abs(w @ u - direct) / max(1.0, abs(direct)))
    return CheckResult("volterra-expansion", worst < 1e-12, f"max relative error {worst:.2e}")


def _random_data(rng, M, n):
    return [NeighborDatum(rng.standard_normal(M), float(rng.standard_normal() * 3),
                          float(rng.uniform(0, 1)), None) for _ in range(n)]


def check_reduction_identity(rng, trials=2000) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        M = int(rng.integers(2, 15))
        w = rng.standard_normal(M)
        mu, delta = rng.uniform(1e-3, 0.1), rng.uniform(0.1, 10)
        data = _random_data(rng, M, int(rng.integers(1, 5)))
        for p, other in ((1.0, "dLLAD"), (2.0, "dLMLS")):
            pd = [NeighborDatum(d.u, d.d, d.weight, p) for d in data]
            a = adapt_step(AlgorithmSpec("dLLMP", mu, delta, (p,)), w, pd)
            b = adapt_step(AlgorithmSpec(other, mu, delta), w, data)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("reduction-identity", worst < 1e-12, f"max difference {worst:.2e}")


def _fd_gradient(J, w, h=1e-6):
    g = np.empty_like(w)
    for m in range(w.size):
        step = np.zeros_like(w)
        step[m] = h
        g[m] = (J(w + step) - J(w - step)) / (2 * h)
    return g


def check_gradient_consistency(rng, points=100, adapt=adapt_step) -> CheckResult:
    worst = 0.0
    for p in (1.3, 1.7, 2.0, "square"):
        n = 0
        while n < points:
            M = 5
            u = rng.standard_normal(M)
            w = rng.standard_normal(M) * 0.3
            d = float(rng.standard_normal() * 2)
            e0 = d - u @ w
            if not 0.1 < abs(e0) < 5:
                continue
            n += 1
            delta, mu = rng.uniform(0.2, 5), 0.01
            if p == "square":
                F = lambda e: e * e  # noqa: E731
                spec, datum = AlgorithmSpec("dLMLS", mu, delta), NeighborDatum(u, d)
            else:
                F = lambda e, p=p: abs(e) ** p  # noqa: E731
                spec, datum = AlgorithmSpec("dLLMP", mu, delta, (p,)), NeighborDatum(u, d, 1.0, p)
            descent = -_fd_gradient(lambda v: log_cost(F(d - u @ v), delta), w)
            step = adapt(spec, w, [datum]) - w
            scale = (step @ descent) / (descent @ descent)
            rel = np.linalg.norm(step - scale * descent) / np.linalg.norm(step)
            if not scale > 0:
                rel = np.inf
            worst = max(worst, rel)
    return CheckResult("gradient-consistency", worst < 1e-5, f"max relative error {worst:.2e}")


def check_attraction_region(rng, trials=100_000, grad=zero_attraction_grad) -> CheckResult:
    beta = rng.uniform(5, 20, trials)
    w = rng.uniform(-2, 2, trials) / beta
    w[:100] = 0.0
    g = grad(w, beta)
    inside = (np.abs(w) > 0) & (np.abs(w) <= 1 / beta)
    bad = int(np.sum((g != 0) != inside))
    # |grad| <= beta, so this rho can never step past zero
    rho = 0.5 * np.abs(w) / beta
    moved = w - rho * g
    pull_ok = bool(np.all(np.abs(moved[inside]) < np.abs(w[inside])))
    return CheckResult("attraction-region", bad == 0 and pull_ok,
                       f"{bad} support mismatches, pull toward zero {'ok' if pull_ok else 'violated'}")


def check_combination_matrices(rng, topologies=100) -> CheckResult:
    failures = []
    for t in range(topologies):
        N = int(rng.integers(2, 51))
        d = int(rng.integers(1, min(N - 1, 8) + 1))
        g = topo.random_connected_graph(N, d, rng)
        for rule in ("uniform", "metropolis"):
            A = topo.WEIGHT_RULES[rule](g)
            try:
                topo.check_combination_matrix(A, g)
            except ValueError as exc:
                failures.append(f"{rule} #{t}: {exc}")
                continue
            if not np.array_equal(A != 0, g.adjacency()):
                failures.append(f"{rule} #{t}: sparsity pattern differs from the graph")
    return CheckResult("combination-matrix", not failures,
                       failures[0] if failures else f"{topologies} topologies x 2 rules")


def check_sas_distribution(rng, n=100_000, sampler=sample_sas) -> CheckResult:
    scale = 0.7
    a = sampler(NoiseSpec(2.0, scale), rng, size=n)
    b = sample_gaussian(2 * scale, rng, size=n)
    ks = stats.ks_2samp(a, b).pvalue
    heavy = np.quantile(np.abs(sampler(NoiseSpec(1.2, 1.0), rng, size=10 * n)), 0.999)
    light = np.quantile(np.abs(sampler(NoiseSpec(1.8, 1.0), rng, size=10 * n)), 0.999)
    x = sampler(NoiseSpec(1.5, 1.0), rng, size=n)
    sym = stats.binomtest(int(np.sum(x > 0)), int(np.sum(x != 0)), 0.5).pvalue
    ok = ks > 0.01 and heavy > light and sym > 0.01
    return CheckResult("sas-distribution", ok,
                       f"KS p={ks:.3f}, q99.9 |x| {heavy:.1f} (1.2) vs {light:.1f} (1.8), sign p={sym:.3f}")


CHECKS = (
    check_volterra_expansion,
    check_reduction_identity,
    check_gradient_consistency,
    check_attraction_region,
    check_combination_matrices,
    check_sas_distribution,
)


def run_checks(seed: int = 0, checks=CHECKS) -> list[CheckResult]:
    return [check(np.random.default_rng([seed, i])) for i, check in enumerate(checks)]
