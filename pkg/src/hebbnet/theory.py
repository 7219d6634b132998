"""Zero-temperature mean-field fixed points for (m, chi, r) and the information they carry.

The Gaussian kernels use the convention ``gauss_erf(x) = 2 * int_0^x phi``,
i.e. the standard error function at ``x / sqrt(2)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import info_rate, mutual_information
from .topology import CycleProbabilities

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
TAIL_TOL = 1e-8
COLLAPSE_M = 1e-6
RETRIEVAL_M = 1e-3


class DivergenceError(ArithmeticError):
    """The cycle series sum a_k (k+1) chi^k has not converged by k_max."""


def gauss_phi(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def gauss_erf(x: float) -> float:
    return math.erf(x / _SQRT2)


def _coeffs(a) -> list[float]:
    c = np.asarray(a.a if isinstance(a, CycleProbabilities) else a, dtype=np.float64)
    return [float(v) for v in c]


def _series(chi: float, c: list[float]) -> float:
    k_max = len(c) - 1
    if k_max > 0:
        tail = max(c[k] * (k + 1) * chi**k for k in range(k_max - 1, k_max + 1))
        if tail >= TAIL_TOL:
            raise DivergenceError(f"series term {tail:.3g} at k_max={k_max}, chi={chi:.6g}")
    r = 0.0
    for k in range(k_max, -1, -1):
        r = r * chi + c[k] * (k + 1)
    return r


def r_from_chi(chi: float, a) -> float:
    """Noise multiplier r = sum_k a_k (k+1) chi^k, truncated at k_max."""
    return _series(chi, _coeffs(a))


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 200_000
    damping: float = 0.5  # weight kept on the previous iterate
    m_init: float = 1.0
    accelerate: bool = True  # Aitken extrapolation every third step


@dataclass(frozen=True)
class FixedPointSolution:
    m: float
    chi: float
    r: float
    alpha: float
    converged: bool
    iterations: int

    @property
    def MI(self) -> float:
        return mutual_information(self.m)

    @property
    def i(self) -> float:
        return info_rate(self.alpha, self.m)


def residuals(sol: FixedPointSolution, a) -> tuple[float, float, float]:
    s = math.sqrt(sol.r * sol.alpha)
    x = sol.m / s
    return (abs(gauss_erf(x) - sol.m),
            abs(2.0 * gauss_phi(x) / s - sol.chi),
            abs(r_from_chi(sol.chi, a) - sol.r))


def solve_fixed_point(alpha: float, a, config: SolverConfig = SolverConfig()) -> FixedPointSolution:
    """Damped iteration of m = erf(m/sqrt(r alpha)), chi = 2 phi(.)/sqrt(r alpha), r = r(chi).

    Starts from ``m_init`` and ``r = a_0``.  A run that collapses below 1e-6 is
    reported as the converged trivial solution m = 0.
    """
    if alpha <= 0:
        raise ValueError(f"load must be positive, got {alpha}")
    c = _coeffs(a)
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    lam = 1.0 - config.damping

    def update(m, r):
        # sequential sweep: chi sees the freshly updated m
        s = math.sqrt(r * alpha)
        m = gauss_erf(m / s)
        return m, 2.0 * gauss_phi(m / s) / s

    m, r = config.m_init, c[0]
    hist = []
    for it in range(1, config.max_iter + 1):
        m_new, chi = update(m, r)
        if m_new < COLLAPSE_M:
            return FixedPointSolution(0.0, chi, r, alpha, True, it)
        r_new = _series(chi, c)
        res = max(abs(m_new - m), abs(r_new - r))
        if res < config.tol:
            return FixedPointSolution(m_new, chi, r_new, alpha, True, it)
        m += lam * (m_new - m)
        r += lam * (r_new - r)
        if not config.accelerate:
            continue
        hist.append((m, r))
        if len(hist) == 3:
            (m0, r0), (m1, r1), (m2, r2) = hist
            hist.clear()
            m_acc, r_acc = _aitken(m0, m1, m2), _aitken(r0, r1, r2)
            if (_forward(m0, m1, m2, m_acc) and _forward(r0, r1, r2, r_acc)
                    and 0.0 <= m_acc <= 1.0 and r_acc > 0.0):
                try:
                    m_a, chi_a = update(m_acc, r_acc)
                    res_acc = max(abs(m_a - m_acc), abs(_series(chi_a, c) - r_acc))
                except (DivergenceError, ZeroDivisionError, ValueError):
                    continue
                if res_acc < res:
                    m, r = m_acc, r_acc
    return FixedPointSolution(m, chi, r, alpha, False, config.max_iter)


def _forward(x0, x1, x2, x_acc) -> bool:
    """Extrapolate only along a contracting run, never back against the drift."""
    d1, d2 = x1 - x0, x2 - x1
    if d2 == 0.0:
        return True
    return abs(d2) < abs(d1) and d1 * d2 > 0 and (x_acc - x2) * d2 >= 0


def _aitken(x0: float, x1: float, x2: float) -> float:
    denom = x2 - 2.0 * x1 + x0
    if denom == 0.0:
        return x2
    return x2 - (x2 - x1) ** 2 / denom


def retrieves(alpha: float, a, config: SolverConfig = SolverConfig()) -> bool:
    try:
        sol = solve_fixed_point(alpha, a, config)
    except DivergenceError:
        return False
    return sol.converged and sol.m > RETRIEVAL_M


def find_capacity(a, config: SolverConfig = SolverConfig(), lo: float = 1e-3, hi: float = 2.0,
                  xtol: float = 1e-4) -> float:
    """Largest load on (lo, hi] with a retrieval solution (m > 1e-3), by bisection."""
    if not retrieves(lo, a, config):
        return 0.0
    if retrieves(hi, a, config):
        return hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if retrieves(mid, a, config):
            lo = mid
        else:
            hi = mid
    return lo


def _info_at(alpha, a, config) -> float:
    try:
        sol = solve_fixed_point(alpha, a, config)
    except DivergenceError:
        return 0.0
    return sol.i if sol.converged else 0.0


def golden_max(f, lo: float, hi: float, xtol: float = 1e-4) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal ``f`` on [lo, hi]."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > xtol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


@dataclass
class TheorySweepResult:
    alphas: np.ndarray
    solutions: list[FixedPointSolution | None]
    errors: list[str | None]
    alpha_c: float
    alpha_max: float
    i_max: float
    m_max: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def info(self) -> np.ndarray:
        return np.array([s.i if s is not None and s.converged else np.nan for s in self.solutions])


def default_alpha_grid() -> np.ndarray:
    return np.round(np.arange(0.005, 0.801, 0.005), 6)


def scan_info(a, alpha_grid=None, config: SolverConfig = SolverConfig()) -> TheorySweepResult:
    """Solve on a load grid and locate the maximum of i = alpha MI(m)."""
    grid = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=np.float64)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("alpha grid must be strictly ascending")
    sols, errs = [], []
    for alpha in grid:
        try:
            sols.append(solve_fixed_point(float(alpha), a, config))
            errs.append(None)
        except DivergenceError as exc:
            sols.append(None)
            errs.append(str(exc))
    info = np.array([s.i if s is not None and s.converged else -1.0 for s in sols])
    alpha_c = find_capacity(a, config)
    if info.max() <= 0:
        return TheorySweepResult(grid, sols, errs, alpha_c, 0.0, 0.0, meta={})
    j = int(np.argmax(info))
    lo = float(grid[max(j - 1, 0)])
    hi = float(grid[min(j + 1, grid.size - 1)])
    alpha_max, i_max = golden_max(lambda x: _info_at(x, a, config), lo, hi)
    if info[j] > i_max:
        alpha_max, i_max = float(grid[j]), float(info[j])
    best = solve_fixed_point(alpha_max, a, config)
    return TheorySweepResult(grid, sols, errs, alpha_c, alpha_max, i_max, best.m)


def write_theory_csv(result: TheorySweepResult, path, comments: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for key, val in (comments or {}).items():
            fh.write(f"# {key}={val}\n")
        fh.write(f"# alpha_c={result.alpha_c:.10g} alpha_max={result.alpha_max:.10g} "
                 f"i_max={result.i_max:.10g}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "m", "chi", "r", "MI", "i", "converged"])
        for alpha, sol in zip(result.alphas, result.solutions):
            if sol is None:
                w.writerow([f"{alpha:.10g}", "nan", "nan", "nan", "nan", "nan", "diverged"])
            else:
                w.writerow([f"{alpha:.10g}", f"{sol.m:.10g}", f"{sol.chi:.10g}", f"{sol.r:.10g}",
                            f"{sol.MI:.10g}", f"{sol.i:.10g}", str(sol.converged).lower()])
