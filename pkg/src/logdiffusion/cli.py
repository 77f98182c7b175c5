"""Command-line front end: ``logdiffusion run | verify | figures``.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .adapt import NumericFailure
from .config import Config, ConfigError, apply_overrides, build_config, bundled_path, dump_manifest, read_yaml
from .sim import Experiment, monte_carlo
from .verify import run_checks

log = logging.getLogger("logdiffusion")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
FIGURE_CONFIGS = ("fig1.yaml", "fig2.yaml")


def _load(path, args) -> Config:
    overrides = list(args.set or ())
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    doc = apply_overrides(read_yaml(path), overrides)
    return build_config(doc, str(path))


def _run_variants(config: Config, args):
    """Monte-Carlo traces of every variant, as ``(spec, experiment, trace)``."""
    results = []
    for spec in config.specs:
        t0 = time.perf_counter()
        exp = Experiment(spec)
        try:
            trace = monte_carlo(spec, threads=args.threads, partial=args.partial or config.partial, experiment=exp)
        except NumericFailure as exc:
            exc.variant = spec.label
            raise
        log.info("%s: %d runs x %d iterations in %.1fs, steady state %.2f dB",
                 spec.label, spec.runs, spec.iterations, time.perf_counter() - t0,
                 trace.steady_state_db())
        results.append((spec, exp, trace))
    return results


def run_command(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config")
    config = _load(args.config, args)
    out = Path(args.out or config.out)
    out.mkdir(parents=True, exist_ok=True)
    for spec, exp, trace in _run_variants(config, args):
        (out / f"{spec.label}.csv").write_text(trace.to_csv())
        (out / f"{spec.label}.manifest").write_text(dump_manifest(spec, exp, trace.failed_runs))
        print(f"wrote {out / spec.label}.csv")
    return EXIT_OK


def verify_command(args) -> int:
    results = run_checks(args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:22s} {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def figure_table(results) -> str:
    """Combined CSV: iteration then one NMSD-dB column per variant."""
    labels = [spec.label for spec, _, _ in results]
    columns = np.array([trace.db for _, _, trace in results])
    rows = ["iteration," + ",".join(labels)]
    for i in range(columns.shape[1]):
        rows.append(f"{i + 1}," + ",".join(repr(float(v)) for v in columns[:, i]))
    return "\n".join(rows) + "\n"


def figures_command(args) -> int:
    paths = [Path(args.config)] if args.config else [bundled_path(name) for name in FIGURE_CONFIGS]
    configs = [(_load(p, args), p) for p in paths]
    for config, path in configs:
        out = Path(args.out or config.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = config.name or path.stem
        results = _run_variants(config, args)
        (out / f"{stem}.csv").write_text(figure_table(results))
        (out / f"{stem}.manifest").write_text(
            "---\n".join(dump_manifest(spec, exp, trace.failed_runs) for spec, exp, trace in results))
        print(f"wrote {out / stem}.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (YAML)")
    common.add_argument("--out", help="output directory (default: the config's 'out', else ./out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry, e.g. runs=1 or noise.scale=0.1 (repeatable)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for Monte-Carlo runs")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--partial", action="store_true",
                        help="drop runs that fail numerically instead of aborting")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="logdiffusion",
        description="Diffusion estimation of sparse Volterra networks with logarithmic-cost algorithms.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the variants of a config, write CSV + manifest")
    sub.add_parser("verify", parents=[common], help="run the built-in numerical self-checks")
    sub.add_parser("figures", parents=[common],
                   help="run the bundled Gaussian and SaS comparisons, write fig1.csv / fig2.csv")
    return parser


COMMANDS = {"run": run_command, "verify": verify_command, "figures": figures_command}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        variant = getattr(exc, "variant", "?")
        print(f"numeric failure in variant {variant} (run {exc.run}, iteration {exc.iteration}): {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
