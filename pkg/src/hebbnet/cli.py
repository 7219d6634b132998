"""Command-line entry point: ``python -m hebbnet --mode ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from . import harness
from .harness import ExperimentConfig, derive_seed
from .patterns import IngestionError, ParseError, load_patterns, load_pgm
from .theory import DivergenceError
from .topology import ConfigurationError, EstimationError, TopologyConfig, build_topology, \
    estimate_cycle_probabilities

_DEFAULT_M0 = {"stability": 1.0, "retrieval": 0.1, "sweep": 0.1, "image": 0.3}
_DEFAULT_TF = {"image": 10}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hebbnet", description="Hebbian attractor networks on small-world graphs.")
    p.add_argument("--mode", choices=harness.MODES, default="stability")
    p.add_argument("--budget", type=float, default=1e6, help="synapse budget N*K")
    p.add_argument("--gamma", type=_floats, default=[1.0], help="connectivity K/N, or a list")
    p.add_argument("--omega", type=_floats, default=[0.0], help="randomness, or a list")
    p.add_argument("--m0", type=float, default=None, help="initial overlap (mode-dependent default)")
    p.add_argument("--tf", type=int, default=None, help="dynamics truncation time (default 20, image 10)")
    p.add_argument("--pmax", type=int, default=None, help="patterns to store (default K)")
    p.add_argument("--delta-p", type=int, default=25, help="averaging window in P")
    p.add_argument("--eval-every", type=int, default=None, help="evaluation stride in P")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patterns", help="pattern file to store instead of random patterns")
    p.add_argument("--image", nargs="+", help="grayscale PGM file(s) for image mode")
    p.add_argument("--patch", type=int, default=None,
                   help="fixed patch side in image mode (default: from budget and gamma)")
    p.add_argument("--filter", choices=("gradient", "diff2"), default="gradient")
    p.add_argument("--ak-source", choices=("graph", "red", "fc"), default="graph")
    p.add_argument("--walks", type=int, default=200_000)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args, mode: str) -> ExperimentConfig:
    m0 = args.m0 if args.m0 is not None else _DEFAULT_M0.get(mode, 1.0)
    return ExperimentConfig(
        synapse_budget=int(args.budget), gamma=args.gamma[0], omega=args.omega[0], m0=m0,
        t_f=args.tf if args.tf is not None else _DEFAULT_TF.get(mode, 20), P_max=args.pmax, delta_P=args.delta_p, eval_every=args.eval_every,
        trials=args.trials, seed=args.seed, mode=mode, walks=args.walks, k_max=args.kmax,
    )


def _report_curve(curve, out):
    print(f"N={curve.N} K={curve.K} alpha_max={curve.alpha_max:.4f} "
          f"i_max={curve.i_max:.4f} se={curve.i_max_se:.4f}", file=out)


def _report_sweep(table, omegas, out):
    for r in sorted(table.rows, key=lambda r: (r.omega, r.gamma)):
        note = f" error={r.error}" if r.error else ""
        print(f"omega={r.omega:g} gamma={r.gamma:g} N={r.N} K={r.K} alpha_max={r.alpha_max:.4f} "
              f"i_max={r.i_max:.4f} se={r.i_se:.4f}{note}", file=out)
    for w in omegas:
        if table.for_omega(w):
            print(f"omega={w:g} gamma_opt={table.gamma_opt(w):g}", file=out)


def _run(args, out) -> None:
    mode = args.mode
    config = _config(args, mode)
    if mode in ("stability", "retrieval"):
        patterns = load_patterns(args.patterns) if args.patterns else None
        curve = harness.run_experiment(config, patterns=patterns)
        if args.out:
            harness.emit_csv(curve, args.out, config)
        _report_curve(curve, out)
    elif mode == "sweep":
        table = harness.sweep_topology(config, args.gamma, args.omega, workers=args.workers)
        if args.out:
            harness.emit_csv(table, args.out, config)
        _report_sweep(table, args.omega, out)
    elif mode == "image":
        if not args.image:
            raise ConfigurationError("image mode needs --image <file.pgm>")
        images = [load_pgm(path) for path in args.image]
        config = replace(config, patch_size=args.patch)
        source = harness.image_source(images, args.filter)
        table = harness.sweep_topology(config, args.gamma, args.omega, workers=args.workers,
                                       pattern_source=source)
        if args.out:
            harness.emit_csv(table, args.out, config)
        _report_sweep(table, args.omega, out)
    elif mode == "theory":
        res = harness.run_theory(config, args.ak_source, out=args.out)
        print(f"alpha_c={res.alpha_c:.4f} alpha_max={res.alpha_max:.4f} i_max={res.i_max:.4f}", file=out)
    elif mode == "ak":
        N, K = config.sizes()
        graph = build_topology(TopologyConfig(N, K, config.omega, symmetric=True, seed=config.seed))
        a = estimate_cycle_probabilities(graph, K, k_max=config.k_max, walks=config.walks,
                                         rng=derive_seed(config.seed, 2), workers=args.workers)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(f"# N={N} K={K} omega={config.omega} seed={config.seed} walks={a.walks}\n")
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["k", "a_k", "stderr"])
                for k, (v, s) in enumerate(zip(a.a, a.stderr)):
                    w.writerow([k, f"{v:.10g}", f"{s:.10g}"])
        print(" ".join(f"a_{k}={v:.4f}" for k, v in enumerate(a.a[:7])), file=out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        _run(args, sys.stdout)
    except (ConfigurationError, ParseError, IngestionError, EstimationError, DivergenceError) as exc:
        print(f"hebbnet: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hebbnet: error: {exc}", file=sys.stderr)
        return 1
    return 0
