import numpy as np
import pytest
import yaml

from logdiffusion.adapt import Family, Mode
from logdiffusion.config import (ConfigError, apply_overrides, build_config, bundled_path, dump_manifest,
                                 load_config, load_manifest, read_yaml)
from logdiffusion.sim import Experiment

BASE = """
name: small
iterations: 50
runs: 2
seed: 9
topology: {kind: random, nodes: 5, degree: 2, seed: 1}
plant: {memory: 2, active: 2, seed: 2}
noise: {kind: sas, alpha: {ramp: [1.2, 1.8]}, scale: 0.1}
algorithms:
  - {family: dLMS}
  - {family: dLLMP, l0: true}
  - {family: dLMP, p: [1.1, 1.2, 1.3, 1.4, 1.5]}
"""


def write(tmp_path, text, name="c.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_build_resolves_defaults(tmp_path):
    config = load_config(write(tmp_path, BASE))
    assert config.name == "small"
    assert [s.label for s in config.specs] == ["dLMS", "dLLMP-l0", "dLMP"]
    dlms, dllmp, dlmp = config.specs
    assert dlms.algorithm.mu == 0.01 and dlms.algorithm.mode is Mode.ATC
    assert dllmp.algorithm.family is Family.DLLMP and dllmp.algorithm.delta == 1.0
    assert all(1.0 <= p <= 2.0 for p in dllmp.algorithm.p) and len(dllmp.algorithm.p) == 5
    assert dlmp.algorithm.p == (1.1, 1.2, 1.3, 1.4, 1.5)
    assert dlms.noise.alpha[0] == 1.2 and dlms.noise.alpha[-1] == 1.8
    assert dlms.noise.scale == (0.1,) * 5


def test_random_p_reproducible(tmp_path):
    a = load_config(write(tmp_path, BASE)).specs[1].algorithm.p
    b = load_config(write(tmp_path, BASE)).specs[1].algorithm.p
    c = load_config(write(tmp_path, BASE), ["seed=10"]).specs[1].algorithm.p
    assert a == b and a != c


@pytest.mark.parametrize("text, match", [
    (BASE + "bogus: 1\n", "unknown key.*bogus"),
    (BASE.replace("seed: 1}", "seed: 1, colour: red}"), "colour"),
    (BASE.replace("{family: dLMS}", "{family: dLMS, speed: 3}"), "speed"),
    (BASE.replace("{family: dLMS}", "{family: LMS}"), "unknown algorithm family"),
    (BASE.replace("runs: 2", "runs: two"), "runs"),
    (BASE.replace("scale: 0.1", "scale: [0.1, 0.2]"), "5 entries"),
    (BASE.replace("{family: dLMS}", "{family: dLMS, mu: -1}"), "mu must be positive"),
    (BASE.replace("{family: dLMP, p", "{family: dLLMP, l0: true, p"), "unique"),
])
def test_invalid_configs(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, text))


def test_parse_error_has_position(tmp_path):
    path = write(tmp_path, "name: x\nruns: [1, 2\n")
    with pytest.raises(ConfigError, match=r"c\.yaml:\d+:\d+"):
        read_yaml(path)


def test_missing_file_names_path(tmp_path):
    with pytest.raises(ConfigError, match="nope.yaml"):
        read_yaml(tmp_path / "nope.yaml")


def test_overrides():
    doc = yaml.safe_load(BASE)
    out = apply_overrides(doc, ["runs=1", "noise.scale=0.3", "algorithms.1.mu=0.5", "topology.weights=metropolis"])
    assert out["runs"] == 1 and out["noise"]["scale"] == 0.3
    assert out["algorithms"][1]["mu"] == 0.5
    assert out["topology"]["weights"] == "metropolis"
    assert doc["runs"] == 2  # input untouched
    with pytest.raises(ConfigError):
        apply_overrides(doc, ["runs"])
    with pytest.raises(ConfigError, match="bad list index"):
        apply_overrides(doc, ["algorithms.7.mu=1"])


def test_manifest_roundtrip(tmp_path):
    for spec in load_config(write(tmp_path, BASE)).specs:
        exp = Experiment(spec)
        text = dump_manifest(spec, exp, failed_runs=(1,))
        doc = yaml.safe_load(text)
        assert doc["derived"]["failed_runs"] == [1]
        assert doc["derived"]["plant"] == [float(c) for c in exp.w_o]
        path = write(tmp_path, text, f"{spec.label}.manifest")
        assert load_manifest(path) == spec


def test_bundled_configs_load():
    for name in ("fig1.yaml", "fig2.yaml"):
        config = load_config(bundled_path(name))
        assert len(config.specs) == 10
        assert {s.algorithm.family for s in config.specs} == set(Family)
        assert sum(s.algorithm.l0 for s in config.specs) == 5
    fig1 = load_config(bundled_path("fig1.yaml")).specs[0]
    assert fig1.topology.nodes == 20 and fig1.plant.memory == 4
    assert np.allclose(fig1.noise.alpha, 2.0)


def test_single_algorithm_form():
    doc = yaml.safe_load(BASE)
    doc.pop("algorithms")
    doc["algorithm"] = {"family": "dLLAD", "delta": 3}
    config = build_config(doc)
    assert len(config.specs) == 1 and config.specs[0].algorithm.delta == 3.0
