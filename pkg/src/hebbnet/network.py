"""Hebbian storage on adjacency lists and synchronous sign dynamics.

Weights are kept as integer counts ``K * W_ij = sum_mu xi_i xi_j`` aligned with
the graph's ``indices`` array, so fields are exact integers and runs are
bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from .metrics import DimensionError
from .topology import AdjacencyGraph


@numba.njit(cache=True)
def _hebb_update(indptr, indices, counts, xi):
    for i in range(indptr.size - 1):
        a = xi[i]
        for e in range(indptr[i], indptr[i + 1]):
            counts[e] += a * xi[indices[e]]


class SynapticWeights:
    """Hebb weights on the edges of ``graph``; ``values = counts / K``."""

    def __init__(self, graph: AdjacencyGraph, K: int):
        self.graph = graph
        self.K = int(K)
        self.patterns_learned = 0
        self._matrix = sp.csr_matrix(
            (np.zeros(graph.edge_count, dtype=np.int32), graph.indices, graph.indptr),
            shape=(graph.N, graph.N),
        )

    @property
    def counts(self) -> np.ndarray:
        return self._matrix.data

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.K

    def row(self, i: int) -> np.ndarray:
        g = self.graph
        return self.counts[g.indptr[i]:g.indptr[i + 1]] / self.K

    def field_counts(self, sigma: np.ndarray) -> np.ndarray:
        """K * h for every neuron, as exact integers."""
        return self._matrix @ sigma.astype(np.int32)

    def dump(self, path) -> None:
        """Text triples ``i j K*W_ij``."""
        g = self.graph
        rows = g.rows()
        with open(path, "w") as fh:
            for i, j, c in zip(rows.tolist(), g.indices.tolist(), self.counts.tolist()):
                fh.write(f"{i} {j} {c}\n")


def learn_pattern(weights: SynapticWeights, graph: AdjacencyGraph, pattern) -> SynapticWeights:
    xi = np.asarray(pattern)
    if xi.shape != (graph.N,):
        raise DimensionError(f"pattern has shape {xi.shape}, network has {graph.N} neurons")
    if weights.graph is not graph and weights.counts.size != graph.edge_count:
        raise DimensionError("weights are not aligned with this graph")
    m = weights._matrix
    _hebb_update(m.indptr, m.indices, m.data, xi.astype(np.int32))
    weights.patterns_learned += 1
    return weights


def learn_patterns(weights: SynapticWeights, graph: AdjacencyGraph, patterns) -> SynapticWeights:
    for xi in patterns:
        learn_pattern(weights, graph, xi)
    return weights


@dataclass
class NetworkState:
    sigma: np.ndarray
    t: int = 0

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.int8)


@dataclass(frozen=True)
class DynamicsConfig:
    T: float = 0.0
    t_f: int = 20
    detect_fixed_point: bool = True
    noise_seed: int = 0

    def __post_init__(self):
        if self.t_f < 1:
            raise ValueError(f"t_f must be at least 1, got {self.t_f}")
        if self.T < 0:
            raise ValueError(f"noise amplitude must be non-negative, got {self.T}")


def local_field(i: int, state: NetworkState, weights: SynapticWeights, graph: AdjacencyGraph) -> float:
    nb = graph.neighbors(i)
    c = weights.counts[graph.indptr[i]:graph.indptr[i + 1]].astype(np.int64)
    return float(np.dot(c, state.sigma[nb].astype(np.int64))) / weights.K


def noise(seed: int, t: int, N: int) -> np.ndarray:
    """Standard normal draws for step ``t``; entry i always belongs to neuron i."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, t]))).standard_normal(N)


def step_parallel(state: NetworkState, weights: SynapticWeights, graph: AdjacencyGraph,
                  config: DynamicsConfig = DynamicsConfig()) -> NetworkState:
    """sigma_i <- sign(h_i + T x_i) for all i at once; a zero argument keeps sigma_i."""
    h = weights.field_counts(state.sigma)
    if config.T > 0:
        u = h / weights.K + config.T * noise(config.noise_seed, state.t, graph.N)
    else:
        u = h
    new = np.where(u > 0, 1, np.where(u < 0, -1, state.sigma)).astype(np.int8)
    return NetworkState(new, state.t + 1)


@dataclass
class RunResult:
    final: NetworkState
    overlaps: np.ndarray
    stop_reason: str  # "fixed_point" or "truncated"


def run(state: NetworkState, weights: SynapticWeights, graph: AdjacencyGraph,
        config: DynamicsConfig, pattern) -> RunResult:
    """Iterate parallel updates until a fixed point (T = 0 only) or ``t_f`` steps."""
    xi = np.asarray(pattern, dtype=np.int64)
    N = xi.size
    m = [float(np.dot(state.sigma, xi)) / N]
    reason = "truncated"
    for _ in range(config.t_f):
        nxt = step_parallel(state, weights, graph, config)
        m.append(float(np.dot(nxt.sigma, xi)) / N)
        fixed = config.T == 0 and np.array_equal(nxt.sigma, state.sigma)
        state = nxt
        if fixed and config.detect_fixed_point:
            reason = "fixed_point"
            break
    return RunResult(state, np.array(m), reason)


def init_state_from_pattern(pattern, m0: float, rng: np.random.Generator) -> NetworkState:
    """Copy of the pattern with each site kept with probability (1 + m0) / 2."""
    if not -1.0 <= m0 <= 1.0:
        raise ValueError(f"initial overlap must lie in [-1, 1], got {m0}")
    xi = np.asarray(pattern, dtype=np.int8)
    keep = rng.random(xi.size) < (1.0 + m0) / 2.0
    return NetworkState(np.where(keep, xi, -xi).astype(np.int8), 0)
