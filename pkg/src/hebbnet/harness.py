"""Stability / retrieval experiments over topology and load, and their CSV output."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import theory
from .metrics import info_rate
from .network import DynamicsConfig, SynapticWeights, init_state_from_pattern, learn_pattern, run
from .patterns import ImageIngestConfig, PatternSet, generate_random_patterns, image_patterns
from .topology import (
    ConfigurationError,
    TopologyConfig,
    build_topology,
    estimate_cycle_probabilities,
    fc_preset,
    red_preset,
)

log = logging.getLogger(__name__)

MODES = ("stability", "retrieval", "theory", "sweep", "ak", "image")


@dataclass(frozen=True)
class ExperimentConfig:
    synapse_budget: int = 1_000_000
    gamma: float = 1.0
    omega: float = 0.0
    m0: float = 1.0
    t_f: int = 20
    P_max: int | None = None  # default K
    delta_P: int = 25
    eval_every: int | None = None  # default max(1, K // 200)
    trials: int = 3
    seed: int = 0
    mode: str = "stability"
    T: float = 0.0
    stop_fraction: float = 0.25
    patch_size: int | None = None  # fixes N = patch_size**2; image mode derives it otherwise
    walks: int = 200_000
    k_max: int = 20

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not -1.0 <= self.m0 <= 1.0:
            raise ConfigurationError(f"m0 must lie in [-1, 1], got {self.m0}")
        if self.t_f < 1 or self.delta_P < 1 or self.trials < 1:
            raise ConfigurationError("t_f, delta_P and trials must be positive")

    def sizes(self) -> tuple[int, int]:
        """(N, K) from the synapse budget; in image mode N is a square patch."""
        if self.mode == "image" or self.patch_size is not None:
            side = self.patch_size or max(2, round((self.synapse_budget / self.gamma) ** 0.25))
            N = side * side
            K = min(N - 1, max(1, round(self.gamma * N)))
            return N, K
        K = max(1, round(math.sqrt(self.synapse_budget * self.gamma)))
        N = max(K + 1, round(K / self.gamma))
        return N, K

    def stride(self, K: int) -> int:
        return self.eval_every if self.eval_every else max(1, K // 200)

    def pattern_cap(self, K: int) -> int:
        return self.P_max if self.P_max is not None else K


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(2, np.uint32).view(np.uint64)[0])


@dataclass
class TrialCurve:
    P: np.ndarray
    m: np.ndarray
    i: np.ndarray
    m_recent: np.ndarray
    i_recent: np.ndarray


@dataclass
class InfoCurve:
    alpha: np.ndarray
    m_mean: np.ndarray
    m_se: np.ndarray
    i_mean: np.ndarray
    i_se: np.ndarray
    i_recent: np.ndarray
    alpha_max: float
    i_max: float
    i_max_se: float
    N: int
    K: int
    trials: list[TrialCurve] = field(default_factory=list, repr=False)


def window_average(P: np.ndarray, y: np.ndarray, delta_P: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of ``y`` over evaluations within delta_P / 2 of each P."""
    mean = np.empty(P.size)
    se = np.empty(P.size)
    half = delta_P / 2.0
    for n, p in enumerate(P):
        sel = y[(P > p - half) & (P <= p + half)]
        mean[n] = sel.mean()
        se[n] = sel.std(ddof=1) / math.sqrt(sel.size) if sel.size > 1 else 0.0
    return mean, se


class _TrailingStop:
    """Signals once the trailing delta_P window mean of i falls below ``frac`` of its best."""

    def __init__(self, delta_P: int, frac: float):
        self.delta_P, self.frac = delta_P, frac
        self.P: list[int] = []
        self.i: list[float] = []
        self.best, self.best_P = 0.0, 0

    def __call__(self, P: int, i: float) -> bool:
        self.P.append(P)
        self.i.append(i)
        window = [v for p, v in zip(self.P, self.i) if p > P - self.delta_P]
        mean = sum(window) / len(window)
        if mean > self.best:
            self.best, self.best_P = mean, P
        return self.best > 0 and mean < self.frac * self.best and P - self.best_P >= self.delta_P


def run_trial(config: ExperimentConfig, trial_seed: int, patterns: PatternSet | None = None,
              pattern_source=None) -> TrialCurve:
    N, K = config.sizes()
    streams = np.random.SeedSequence(trial_seed).spawn(4)
    graph_rng, pattern_rng, probe_rng, init_rng = (np.random.default_rng(s) for s in streams)
    graph = build_topology(TopologyConfig(N, K, config.omega, seed=trial_seed), graph_rng)
    P_cap = config.pattern_cap(K)
    if patterns is None:
        patterns = pattern_source(P_cap, N, pattern_rng) if pattern_source else \
            generate_random_patterns(P_cap, N, pattern_rng)
    if patterns.N != N:
        raise ConfigurationError(f"patterns have length {patterns.N}, network has N={N}")
    P_cap = min(P_cap, patterns.P)
    dyn = DynamicsConfig(T=config.T, t_f=config.t_f, noise_seed=derive_seed(trial_seed, 1))
    weights = SynapticWeights(graph, K)
    stride = config.stride(K)
    rec = {"P": [], "m": [], "i": [], "m_recent": [], "i_recent": []}
    stop = _TrailingStop(config.delta_P, config.stop_fraction)
    for mu in range(1, P_cap + 1):
        learn_pattern(weights, graph, patterns[mu - 1])
        if mu != 1 and mu % stride:
            continue
        alpha = mu / K
        out = []
        for probe in (int(probe_rng.integers(0, mu)), mu - 1):
            xi = patterns[probe]
            res = run(init_state_from_pattern(xi, config.m0, init_rng), weights, graph, dyn, xi)
            out.append(abs(res.overlaps[-1]))
        rec["P"].append(mu)
        rec["m"].append(out[0])
        rec["i"].append(info_rate(alpha, out[0]))
        rec["m_recent"].append(out[1])
        rec["i_recent"].append(info_rate(alpha, out[1]))
        if stop(mu, rec["i"][-1]):
            break
    return TrialCurve(**{k: np.asarray(v, dtype=np.float64 if k != "P" else np.int64)
                         for k, v in rec.items()})


def _combine(config: ExperimentConfig, trials: list[TrialCurve], N: int, K: int) -> InfoCurve:
    """Window-average each trial, then mean and standard error across trials.

    With a single trial the standard error is taken within the window instead.
    """
    P = max(trials, key=lambda t: t.P.size).P
    out = {}
    for key in ("m", "i", "i_recent"):
        rows = np.full((len(trials), P.size), np.nan)
        within = np.zeros(P.size)
        for n, t in enumerate(trials):
            mean, se = window_average(t.P, getattr(t, key), config.delta_P)
            rows[n, :mean.size] = mean
            within[:se.size] = se
        count = np.sum(~np.isnan(rows), axis=0)
        mean = np.nanmean(rows, axis=0)
        if len(trials) == 1:
            se = within
        else:
            dev = np.where(np.isnan(rows), 0.0, rows - mean) ** 2
            with np.errstate(invalid="ignore", divide="ignore"):
                se = np.where(count > 1, np.sqrt(dev.sum(axis=0) / (count - 1) / count), 0.0)
        out[key] = (mean, se)
    i_mean, i_se = out["i"]
    if i_mean.size == 0 or i_mean.max() <= 0:
        i_max, a_max, se_max = 0.0, 0.0, 0.0
    else:
        j = int(np.argmax(i_mean))  # first maximum, so ties go to the smaller load
        i_max, a_max, se_max = float(i_mean[j]), float(P[j] / K), float(i_se[j])
    return InfoCurve(P / K, out["m"][0], out["m"][1], i_mean, i_se, out["i_recent"][0],
                     a_max, i_max, se_max, N, K, trials)


def run_experiment(config: ExperimentConfig, patterns: PatternSet | None = None,
                   pattern_source=None) -> InfoCurve:
    """Learn patterns one by one, probing retrieval from overlap m0 after each stride."""
    N, K = config.sizes()
    trials = [run_trial(config, derive_seed(config.seed, t), patterns, pattern_source)
              for t in range(config.trials)]
    curve = _combine(config, trials, N, K)
    log.info("gamma=%g omega=%g N=%d K=%d: alpha_max=%.4f i_max=%.4f +- %.4f",
             config.gamma, config.omega, N, K, curve.alpha_max, curve.i_max, curve.i_max_se)
    return curve


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    omega: float
    gamma: float
    alpha_max: float
    i_max: float
    i_se: float
    N: int = 0
    K: int = 0
    error: str | None = None


@dataclass
class SweepTable:
    rows: list[SweepRow]

    def for_omega(self, omega: float) -> list[SweepRow]:
        return sorted((r for r in self.rows if r.omega == omega and r.error is None),
                      key=lambda r: -r.gamma)

    def gamma_opt(self, omega: float) -> float:
        rows = self.for_omega(omega)
        return max(rows, key=lambda r: r.i_max).gamma


def _cell(args):
    config, pattern_source = args
    try:
        curve = run_experiment(config, pattern_source=pattern_source)
        return SweepRow(config.omega, config.gamma, curve.alpha_max, curve.i_max, curve.i_max_se,
                        curve.N, curve.K)
    except Exception as exc:  # recorded per cell, the sweep goes on
        log.warning("cell gamma=%g omega=%g failed: %s", config.gamma, config.omega, exc)
        return SweepRow(config.omega, config.gamma, float("nan"), float("nan"), float("nan"),
                        error=str(exc))


def sweep_topology(base: ExperimentConfig, gammas, omegas, workers: int = 1,
                   pattern_source=None) -> SweepTable:
    cells = sorted((float(w), float(g)) for w in omegas for g in gammas)
    if not cells:
        raise ConfigurationError("gamma and omega lists must be non-empty")
    jobs = [(replace(base, omega=w, gamma=g, seed=derive_seed(base.seed, n)), pattern_source)
            for n, (w, g) in enumerate(cells)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_cell, jobs))
    else:
        rows = [_cell(j) for j in jobs]
    return SweepTable(rows)


# --------------------------------------------------------------------------
# theory and cycle statistics


def cycle_source(config: ExperimentConfig, source: str = "graph"):
    """a_k from a preset ("red", "fc") or measured on a symmetric generated graph."""
    if source == "red":
        return red_preset()
    if source == "fc":
        return fc_preset()
    if source != "graph":
        raise ConfigurationError(f"unknown a_k source {source!r}")
    N, K = config.sizes()
    graph = build_topology(TopologyConfig(N, K, config.omega, symmetric=True, seed=config.seed))
    return estimate_cycle_probabilities(graph, K, k_max=config.k_max, walks=config.walks,
                                        rng=derive_seed(config.seed, 2))


def run_theory(config: ExperimentConfig, source: str = "graph", alpha_grid=None, out=None):
    a = cycle_source(config, source)
    result = theory.scan_info(a, alpha_grid)
    result.meta = {"source": source}
    if out is not None:
        theory.write_theory_csv(result, out, {**_echo(config), "ak_source": source})
    return result


# --------------------------------------------------------------------------
# CSV


def _echo(config: ExperimentConfig) -> dict:
    d = asdict(config)
    if config.patch_size is None:
        d.pop("patch_size")
    N, K = config.sizes()
    d.update(N=N, K=K)
    return d


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def emit_csv(result, path, config: ExperimentConfig | None = None) -> None:
    """Write an InfoCurve or SweepTable with the configuration echoed as ``#`` comments."""
    with open(path, "w", newline="") as fh:
        if config is not None:
            for key, val in _echo(config).items():
                fh.write(f"# {key}={val}\n")
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(result, SweepTable):
            w.writerow(["omega", "gamma", "alpha_max", "i_max", "i_se"])
            for r in sorted(result.rows, key=lambda r: (r.omega, r.gamma)):
                w.writerow([_fmt(r.omega), _fmt(r.gamma), _fmt(r.alpha_max), _fmt(r.i_max),
                            _fmt(r.i_se)])
        else:
            fh.write(f"# alpha_max={_fmt(result.alpha_max)} i_max={_fmt(result.i_max)}\n")
            w.writerow(["alpha", "m_mean", "m_se", "i_mean", "i_se"])
            for row in zip(result.alpha, result.m_mean, result.m_se, result.i_mean, result.i_se):
                w.writerow([_fmt(v) for v in row])


def image_source(images, filter: str = "gradient", threshold_mode: str = "median"):
    """Pattern factory drawing random square patches, sized to the network, from ``images``."""
    return _ImageSource(list(images), filter, threshold_mode)


@dataclass
class _ImageSource:
    images: list
    filter: str
    threshold_mode: str

    def __call__(self, P: int, N: int, rng: np.random.Generator) -> PatternSet:
        side = math.isqrt(N)
        if side * side != N:
            raise ConfigurationError(f"image patterns need a square network, got N={N}")
        ingest = ImageIngestConfig(side, self.filter, self.threshold_mode)
        return image_patterns(self.images, ingest, P, rng)
