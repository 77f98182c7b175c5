"""Experiment configuration files and run manifests.

A config is a YAML mapping::

    name: fig1
    iterations: 5000
    runs: 25
    seed: 1                      # master seed of all per-run streams
    out: out                     # output directory (optional)
    partial: false               # drop numerically failing runs instead of aborting
    topology: {kind: random, nodes: 20, degree: 4, seed: 2, weights: uniform}
    plant: {memory: 4, active: 3, seed: 3}
    noise: {kind: sas, alpha: {ramp: [1.2, 1.8]}, scale: 0.05}
    algorithms:                  # or a single `algorithm:` mapping
      - {family: dLMS}
      - {family: dLLMP, l0: true, name: dLLMP-l0}

Per-node values (``noise.alpha``, ``noise.scale``, ``p``) accept a scalar,
a list with one entry per node, or a generator (``{ramp: [lo, hi]}`` for
alpha, ``{random: [lo, hi]}`` for p). Algorithm fields left out are taken
from the bundled ``configs/defaults.yaml``. Unknown keys are errors.

A manifest is the fully resolved config of a single variant plus a
``derived`` section describing what the seeds produced; loading it gives
back the identical :class:`~logdiffusion.sim.ExperimentSpec`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .adapt import AlgorithmSpec
from .noise import alpha_ramp
from .sim import Experiment, ExperimentSpec, NoiseConfig, PlantConfig, TopologyConfig

# spawn key of the stream that draws random per-node exponents
P_STREAM = (2**32 - 1,)

TOP_KEYS = {"name", "iterations", "runs", "seed", "out", "partial", "topology", "plant", "noise",
            "algorithm", "algorithms"}
TOPOLOGY_KEYS = {"kind", "nodes", "degree", "seed", "weights", "share_gradients", "path"}
PLANT_KEYS = {"memory", "active", "seed"}
NOISE_KEYS = {"kind", "alpha", "scale"}
ALGORITHM_KEYS = {"name", "family", "mu", "delta", "p", "l0", "rho", "beta", "mode"}


class ConfigError(ValueError):
    """Invalid or unparsable configuration."""


@dataclass
class Config:
    specs: list[ExperimentSpec]
    out: str = "out"
    name: str = ""
    partial: bool = False


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("logdiffusion") / "configs" / name))


def _load_yaml(text: str, source: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: {problem}") from None


def read_yaml(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    doc = _load_yaml(text, str(path))
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(str, unknown))}")


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``key.path=value`` overrides; values are parsed as YAML scalars."""
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        value = _load_yaml(raw, f"override {key}")
        parts = key.split(".")
        node = doc
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[_index(part, node, key)]
            else:
                node = node.setdefault(part, {})
        last = parts[-1]
        if isinstance(node, list):
            node[_index(last, node, key)] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise ConfigError(f"override {key}: cannot descend into a scalar")
    return doc


def _index(part, seq, key):
    try:
        i = int(part)
        seq[i]
    except (ValueError, IndexError):
        raise ConfigError(f"override {key}: bad list index {part!r}") from None
    return i


def _per_node(value, N, where, generator=None, rng=None):
    if isinstance(value, dict):
        if generator is None or set(value) != {generator}:
            raise ConfigError(f"{where}: unsupported generator {sorted(value)}")
        bounds = value[generator]
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise ConfigError(f"{where}.{generator}: expected [lo, hi]")
        lo, hi = map(float, bounds)
        if generator == "ramp":
            return alpha_ramp(N, lo, hi)
        return tuple(float(v) for v in rng().uniform(lo, hi, N))
    if isinstance(value, list):
        if len(value) != N:
            raise ConfigError(f"{where}: expected {N} entries, got {len(value)}")
        return tuple(float(v) for v in value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),) * N
    raise ConfigError(f"{where}: expected a number, a list or a generator")


def _scalar(value, kind, where):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool) != (kind is bool) or not isinstance(value, kind):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {value!r}")
    return value


def _typed(mapping, types, where):
    return {k: _scalar(v, types[k], f"{where}.{k}") if types.get(k) and v is not None else v
            for k, v in mapping.items()}


_TOPOLOGY_TYPES = {"kind": str, "nodes": int, "degree": int, "seed": int, "weights": str,
                   "share_gradients": bool, "path": str}
_PLANT_TYPES = {"memory": int, "active": int, "seed": int}
_ALGORITHM_TYPES = {"name": str, "family": str, "mu": float, "delta": float, "l0": bool,
                    "rho": float, "beta": float, "mode": str}


def load_defaults() -> dict:
    return read_yaml(bundled_path("defaults.yaml"))


def build_config(doc: dict, source: str = "<config>", defaults: dict | None = None) -> Config:
    """Validate a parsed config document and resolve it into experiment specs."""
    _check_keys(doc, TOP_KEYS, source)
    defaults = load_defaults() if defaults is None else defaults
    try:
        topology = TopologyConfig(**_typed(_section(doc, "topology", TOPOLOGY_KEYS, source),
                                           _TOPOLOGY_TYPES, "topology"))
        plant = PlantConfig(**_typed(_section(doc, "plant", PLANT_KEYS, source), _PLANT_TYPES, "plant"))
        N = topology.nodes
        seed = _scalar(doc.get("seed", 0), int, "seed")
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

        raw_noise = _section(doc, "noise", NOISE_KEYS, source)
        kind = _scalar(raw_noise.get("kind", "sas"), str, "noise.kind")
        alpha = _per_node(raw_noise.get("alpha", 2.0), N, "noise.alpha", "ramp") if kind == "sas" else ()
        scale = _per_node(raw_noise.get("scale", 1.0), N, "noise.scale")
        noise = NoiseConfig(kind, alpha, scale)

        if "algorithm" in doc and "algorithms" in doc:
            raise ConfigError(f"{source}: give either 'algorithm' or 'algorithms', not both")
        variants = doc.get("algorithms", [doc["algorithm"]] if "algorithm" in doc else None)
        if not isinstance(variants, list) or not variants:
            raise ConfigError(f"{source}: 'algorithms' must be a non-empty list")

        def p_rng():
            return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=P_STREAM))

        specs = []
        for j, raw in enumerate(variants):
            where = f"algorithms[{j}]"
            _check_keys(raw, ALGORITHM_KEYS, where)
            family = _scalar(raw.get("family"), str, f"{where}.family")
            base = defaults.get(family)
            if base is None:
                raise ConfigError(f"{where}.family: unknown algorithm family {family!r}")
            merged = _typed({**base, **raw}, _ALGORITHM_TYPES, where)
            name = merged.pop("name", None) or ""
            p = merged.pop("p", None)
            merged["p"] = _per_node(p, N, f"{where}.p", "random", p_rng) if p is not None else ()
            algorithm = AlgorithmSpec(**merged)
            specs.append(ExperimentSpec(
                algorithm=algorithm, topology=topology, plant=plant, noise=noise,
                iterations=_scalar(doc.get("iterations", 5000), int, "iterations"),
                runs=_scalar(doc.get("runs", 25), int, "runs"),
                seed=seed, name=name or algorithm.label))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    names = [s.label for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"{source}: variant names must be unique, got {names}")
    out = doc.get("out", "out")
    partial = _scalar(doc.get("partial", False), bool, "partial")
    return Config(specs, str(out), str(doc.get("name", "")), partial)


def _section(doc, key, allowed, source):
    section = doc.get(key, {}) or {}
    _check_keys(section, allowed, f"{source}: {key}")
    return section


def load_config(path, overrides=()) -> Config:
    doc = apply_overrides(read_yaml(path), overrides)
    return build_config(doc, str(path))


# -- manifests -------------------------------------------------------------------


def spec_to_dict(spec: ExperimentSpec) -> dict:
    """Config document (single ``algorithm``) that resolves back to ``spec``."""
    t, pl, n, a = spec.topology, spec.plant, spec.noise, spec.algorithm
    topology = {"kind": t.kind, "nodes": t.nodes, "degree": t.degree, "seed": t.seed,
                "weights": t.weights, "share_gradients": t.share_gradients}
    if t.path is not None:
        topology["path"] = t.path
    noise = {"kind": n.kind, "scale": list(n.scale)}
    if n.kind == "sas":
        noise["alpha"] = list(n.alpha)
    algorithm = {"name": spec.label, "family": a.family.value, "mu": a.mu, "delta": a.delta,
                 "l0": a.l0, "rho": a.rho, "beta": a.beta, "mode": a.mode.value}
    if a.p:
        algorithm["p"] = list(a.p)
    return {"name": spec.label, "iterations": spec.iterations, "runs": spec.runs, "seed": spec.seed,
            "topology": topology, "plant": {"memory": pl.memory, "active": pl.active, "seed": pl.seed},
            "noise": noise, "algorithm": algorithm}


def manifest_dict(spec: ExperimentSpec, experiment: Experiment | None = None,
                  failed_runs=()) -> dict:
    exp = experiment or Experiment(spec)
    doc = spec_to_dict(spec)
    doc["derived"] = {
        "run_streams": "numpy SeedSequence(seed, spawn_key=(run, node)): "
                       "input x first, then the node's noise sequence",
        "p_stream": f"numpy SeedSequence(seed, spawn_key={P_STREAM})",
        "edges": [list(e) for e in exp.topology.edges()],
        "plant": [float(c) for c in exp.w_o],
        "failed_runs": list(failed_runs),
    }
    return doc


def dump_manifest(spec, experiment=None, failed_runs=()) -> str:
    return yaml.safe_dump(manifest_dict(spec, experiment, failed_runs), sort_keys=False)


def load_manifest(path) -> ExperimentSpec:
    doc = read_yaml(path)
    doc.pop("derived", None)
    # manifests carry every algorithm field, so no defaults are merged in
    family = doc.get("algorithm", {}).get("family")
    config = build_config(doc, str(path), defaults={family: {}} if isinstance(family, str) else {})
    return config.specs[0]
