"""Ring-plus-shortcut (Newman-Watts) connectivity graphs and their cycle statistics.

A graph is stored as CSR-style adjacency lists: ``indices[indptr[i]:indptr[i+1]]``
are the neurons feeding neuron ``i``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Explicit per-pair Bernoulli draws are used below this many candidate pairs, or
# whenever the link probability is high enough that rejection sampling would stall.
_DENSE_PAIR_LIMIT = 4_000_000
_DENSE_MIN_P = 0.01
_ROW_CHUNK_PAIRS = 1 << 22
_WALK_CHUNK = 1 << 15


class ConfigurationError(ValueError):
    """Raised for topology parameters that cannot produce a valid graph."""


class EstimationError(RuntimeError):
    """Raised when cycle probabilities cannot be estimated on a graph."""


@dataclass(frozen=True)
class TopologyConfig:
    """Size, connectivity and randomness of a ring-with-shortcuts network.

    ``K_n = round((1 - omega) * K)`` links go to ring neighbours, the remaining
    ``K_r = K - K_n`` are random on average.  In symmetric mode the local part
    is the even-width window ``i +- 1 .. i +- K_n // 2``.
    """

    N: int
    K: int
    omega: float = 0.0
    symmetric: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.N < 2 or self.K < 1:
            raise ConfigurationError(f"need N >= 2 and K >= 1, got N={self.N}, K={self.K}")
        if not 0.0 <= self.omega <= 1.0:
            raise ConfigurationError(f"omega must lie in [0, 1], got {self.omega}")
        if self.K > self.N - 1:
            raise ConfigurationError(f"K={self.K} exceeds N-1={self.N - 1}")

    @property
    def gamma(self) -> float:
        return self.K / self.N

    @property
    def K_n(self) -> int:
        kn = int(round((1.0 - self.omega) * self.K))
        if self.symmetric:
            kn -= kn % 2
        return kn

    @property
    def K_r(self) -> int:
        return self.K - self.K_n

    @property
    def effective_omega(self) -> float:
        return self.K_r / self.K


@dataclass
class AdjacencyGraph:
    N: int
    indptr: np.ndarray
    indices: np.ndarray
    config: TopologyConfig | None = None
    _keys: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def edge_count(self) -> int:
        return int(self.indices.size)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def rows(self) -> np.ndarray:
        """Source-row index of every stored edge."""
        return np.repeat(np.arange(self.N, dtype=np.int64), self.degrees)

    def edge_keys(self) -> np.ndarray:
        """Sorted ``i * N + j`` codes of all edges, for membership tests."""
        if self._keys is None:
            self._keys = np.sort(self.rows() * self.N + self.indices.astype(np.int64))
        return self._keys

    def has_edges(self, i, j) -> np.ndarray:
        keys = self.edge_keys()
        q = np.asarray(i, dtype=np.int64) * self.N + np.asarray(j, dtype=np.int64)
        pos = np.searchsorted(keys, q)
        pos = np.minimum(pos, keys.size - 1)
        return keys[pos] == q

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(k // self.N), int(k % self.N)) for k in self.edge_keys()}

    def is_symmetric(self) -> bool:
        keys = self.edge_keys()
        rev = np.sort((keys % self.N) * self.N + keys // self.N)
        return bool(np.array_equal(keys, rev))

    def to_dense(self) -> np.ndarray:
        c = np.zeros((self.N, self.N), dtype=np.int64)
        c[self.rows(), self.indices] = 1
        return c

    def validate(self) -> None:
        rows = self.rows()
        if np.any(self.indices == rows):
            raise ConfigurationError("graph contains self-loops")
        if np.unique(self.edge_keys()).size != self.edge_count:
            raise ConfigurationError("graph contains duplicate edges")


def _assemble(N, local_rows, local_cols, rand_rows, rand_cols, config=None) -> AdjacencyGraph:
    """Order each row as local links (by ring distance) followed by random links (by index)."""
    rows = np.concatenate([local_rows, rand_rows]).astype(np.int64)
    cols = np.concatenate([local_cols, rand_cols]).astype(np.int64)
    local_rank = np.tile(np.arange(local_rows.size // N if N else 0, dtype=np.int64), N) \
        if local_rows.size else np.empty(0, dtype=np.int64)
    secondary = np.concatenate([local_rank, N + rand_cols.astype(np.int64)])
    order = np.lexsort((secondary, rows))
    counts = np.bincount(rows, minlength=N)
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return AdjacencyGraph(N=N, indptr=indptr, indices=cols[order].astype(np.int32), config=config)


def _local_offsets(config: TopologyConfig) -> np.ndarray:
    if config.symmetric:
        h = config.K_n // 2
        ks = np.arange(1, h + 1)
        return np.stack([-ks, ks], axis=1).ravel()
    return -np.arange(1, config.K_n + 1)


def _distinct_per_row(rng, rows, M, N):
    """Draw one offset in [1, M] per entry of ``rows``, distinct within each row."""
    offs = rng.integers(1, M + 1, size=rows.size)
    while True:
        keys = rows * N + offs
        order = np.argsort(keys, kind="stable")
        sk = keys[order]
        dup = np.zeros(rows.size, dtype=bool)
        dup[order[1:]] = sk[1:] == sk[:-1]
        n_dup = int(dup.sum())
        if n_dup == 0:
            return offs
        offs[dup] = rng.integers(1, M + 1, size=n_dup)


def _random_directed(config, rng):
    N, M = config.N, config.N - 1 - config.K_n
    if config.K_r == 0 or M <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    p = min(1.0, config.K_r / M)
    if N * M <= _DENSE_PAIR_LIMIT or p >= _DENSE_MIN_P:
        rows, offs = [], []
        step = max(1, _ROW_CHUNK_PAIRS // M)
        for start in range(0, N, step):
            r, u = np.nonzero(rng.random((min(step, N - start), M)) < p)
            rows.append(r + start)
            offs.append(u + 1)
        rows, offs = np.concatenate(rows), np.concatenate(offs)
    else:
        counts = rng.binomial(M, p, size=N)
        rows = np.repeat(np.arange(N, dtype=np.int64), counts)
        offs = _distinct_per_row(rng, rows, M, N)
    return rows, (rows + offs) % N


def _random_symmetric(config, rng):
    N, h = config.N, config.K_n // 2
    M = N - 1 - 2 * h
    if config.K_r == 0 or M <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    p = min(1.0, config.K_r / M)
    n_pairs = N * M // 2
    if N * M <= _DENSE_PAIR_LIMIT or p >= _DENSE_MIN_P:
        # each unordered pair {i, j}, i < j, appears once as (i, j - i)
        a, b = [], []
        step = max(1, _ROW_CHUNK_PAIRS // M)
        span = np.arange(h + 1, N - h, dtype=np.int64)
        for start in range(0, N, step):
            i = np.repeat(np.arange(start, min(start + step, N), dtype=np.int64), M)
            j = i + np.tile(span, i.size // M)
            ok = j < N
            i, j = i[ok], j[ok]
            hit = rng.random(i.size) < p
            a.append(i[hit])
            b.append(j[hit])
        a, b = np.concatenate(a), np.concatenate(b)
    else:
        total = int(rng.binomial(n_pairs, p))
        keys = np.empty(0, dtype=np.int64)
        need = total
        while need:
            i = rng.integers(0, N, size=need)
            j = (i + rng.integers(h + 1, N - h, size=need)) % N
            new = np.minimum(i, j) * N + np.maximum(i, j)
            keys = np.unique(np.concatenate([keys, new]))
            need = total - keys.size
        # np.unique sorts, so the result is independent of draw order within a round
        a, b = keys // N, keys % N
    return np.concatenate([a, b]), np.concatenate([b, a])


def build_topology(config: TopologyConfig, rng: np.random.Generator | None = None) -> AdjacencyGraph:
    """Build the ring lattice plus random shortcuts described by ``config``.

    Random links are Bernoulli per candidate pair (ordered, or unordered in
    symmetric mode) with probability ``K_r / M``, where ``M`` counts the pairs
    not already linked locally, so the expected random degree is exactly ``K_r``.
    """
    if config.K_n >= config.N:
        raise ConfigurationError(f"K_n={config.K_n} must be below N={config.N}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    N = config.N
    offsets = _local_offsets(config)
    local_rows = np.repeat(np.arange(N, dtype=np.int64), offsets.size)
    local_cols = (local_rows + np.tile(offsets, N)) % N
    if config.symmetric:
        rr, rc = _random_symmetric(config, rng)
    else:
        rr, rc = _random_directed(config, rng)
    return _assemble(N, local_rows, local_cols, rr, rc, config)


def symmetrize(graph: AdjacencyGraph) -> AdjacencyGraph:
    """Symmetric closure: add ``j -> i`` for every ``i -> j`` that lacks it.

    Existing row order is kept; added neighbours follow, sorted by index.
    """
    N = graph.N
    rows = graph.rows()
    cols = graph.indices.astype(np.int64)
    keys = graph.edge_keys()
    rev = np.unique(cols * N + rows)
    new = np.setdiff1d(rev, keys, assume_unique=True)
    new_rows, new_cols = new // N, new % N
    pos = np.arange(cols.size) - graph.indptr[rows]
    all_rows = np.concatenate([rows, new_rows])
    secondary = np.concatenate([pos, cols.size + new_cols])
    order = np.lexsort((secondary, all_rows))
    counts = np.bincount(all_rows, minlength=N)
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.concatenate([cols, new_cols])[order].astype(np.int32)
    return AdjacencyGraph(N=N, indptr=indptr, indices=indices, config=graph.config)


def degree_stats(graph: AdjacencyGraph) -> dict[str, float]:
    d = graph.degrees.astype(np.float64)
    return {"min": float(d.min()), "max": float(d.max()), "mean": float(d.mean()), "variance": float(d.var())}


def write_graph(graph: AdjacencyGraph, path) -> None:
    """Write the ``i: j1 j2 ...`` text dump, headed by ``N= K= omega= seed=``."""
    cfg = graph.config
    K = cfg.K if cfg else ""
    omega = cfg.effective_omega if cfg else ""
    seed = cfg.seed if cfg else ""
    with open(path, "w") as fh:
        fh.write(f"N={graph.N} K={K} omega={omega} seed={seed}\n")
        for i in range(graph.N):
            fh.write(f"{i}: " + " ".join(map(str, graph.neighbors(i).tolist())) + "\n")


def read_graph(path) -> AdjacencyGraph:
    lines = Path(path).read_text().splitlines()
    header = dict(tok.split("=", 1) for tok in lines[0].split())
    N = int(header["N"])
    lists = []
    for lineno, line in enumerate(lines[1:], start=2):
        head, _, rest = line.partition(":")
        if int(head) != len(lists):
            raise ValueError(f"line {lineno}: expected neuron {len(lists)}, found {head}")
        lists.append([int(t) for t in rest.split()])
    if len(lists) != N:
        raise ValueError(f"expected {N} adjacency lines, found {len(lists)}")
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum([len(x) for x in lists], out=indptr[1:])
    indices = np.array([j for x in lists for j in x], dtype=np.int32)
    return AdjacencyGraph(N=N, indptr=indptr, indices=indices)


# --------------------------------------------------------------------------
# cycle probabilities a_k = gamma * Tr[(C/K)^(k+2)]


@dataclass
class CycleProbabilities:
    a: np.ndarray
    stderr: np.ndarray
    walks: int = 0

    @property
    def k_max(self) -> int:
        return self.a.size - 1


def fc_preset(k_max: int = 400) -> CycleProbabilities:
    """Fully connected limit: a_k = 1 for every k."""
    return CycleProbabilities(np.ones(k_max + 1), np.zeros(k_max + 1))


def red_preset(k_max: int = 20) -> CycleProbabilities:
    """Random extremely diluted limit: only a_0 = 1 survives."""
    a = np.zeros(k_max + 1)
    a[0] = 1.0
    return CycleProbabilities(a, np.zeros(k_max + 1))


def _walk_chunk(graph, K, k_max, n, seed_seq):
    """Sum and sum of squares of the per-walk estimators for a_0..a_k_max."""
    rng = np.random.Generator(np.random.Philox(seed_seq))
    deg = graph.degrees
    start = rng.integers(0, graph.N, size=n)
    v = start.copy()
    w = np.ones(n)
    s1 = np.empty(k_max + 1)
    s2 = np.empty(k_max + 1)
    for k in range(k_max + 1):
        # walk has made k+1 steps; the last step back to the start is taken in expectation
        d = deg[v]
        w *= d / K
        v = graph.indices[graph.indptr[v] + (rng.random(n) * d).astype(np.int64)]
        est = np.where(graph.has_edges(v, start), w, 0.0)
        s1[k] = est.sum()
        s2[k] = np.dot(est, est)
    return s1, s2


def estimate_cycle_probabilities(graph: AdjacencyGraph, K: int, k_max: int = 20,
                                 walks: int = 100_000, rng=None,
                                 workers: int = 1) -> CycleProbabilities:
    """Monte Carlo estimate of a_k = gamma Tr[(C/K)^(k+2)], k = 0..k_max.

    Walks start at a uniform neuron, move to a uniform actual neighbour and carry
    the importance weight prod deg(v_t)/K, so that K * mean(weighted returns)
    is unbiased for a_k even when degrees differ from K.  Walks are processed
    in fixed-size chunks, each with its own stream derived from ``rng``.
    """
    if not graph.is_symmetric():
        raise EstimationError("cycle probabilities need a symmetric graph; symmetrize() it first")
    isolated = np.flatnonzero(graph.degrees == 0)
    if isolated.size:
        raise EstimationError(f"neuron {int(isolated[0])} has no neighbours")
    if isinstance(rng, np.random.Generator):
        entropy = int(rng.integers(0, 2**63))
    else:
        entropy = 0 if rng is None else int(rng)
    sizes = [_WALK_CHUNK] * (walks // _WALK_CHUNK)
    if walks % _WALK_CHUNK:
        sizes.append(walks % _WALK_CHUNK)
    graph.edge_keys()
    seqs = [np.random.SeedSequence(entropy, spawn_key=(c,)) for c in range(len(sizes))]
    jobs = list(zip(sizes, seqs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _walk_chunk(graph, K, k_max, *job), jobs))
    else:
        parts = [_walk_chunk(graph, K, k_max, *job) for job in jobs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / walks
    var = np.maximum(s2 / walks - mean**2, 0.0) * walks / max(walks - 1, 1)
    return CycleProbabilities(a=mean, stderr=np.sqrt(var / walks), walks=walks)


def exact_cycle_probabilities(graph: AdjacencyGraph, K: int, k_max: int = 20) -> np.ndarray:
    """Dense matrix-power traces; only for small graphs."""
    c = graph.to_dense().astype(np.float64) / K
    out = np.empty(k_max + 1)
    p = c @ c
    for k in range(k_max + 1):
        out[k] = (K / graph.N) * np.trace(p)
        p = p @ c
    return out


def check_series_tail(a: CycleProbabilities, chi: float, tol: float = 1e-8) -> bool:
    """True if the last term of sum a_k (k+1) chi^k is below ``tol``; warns otherwise."""
    k = a.k_max
    term = a.a[k] * (k + 1) * chi**k
    if term >= tol:
        warnings.warn(f"cycle series not converged at k_max={k}: term {term:.3g} at chi={chi:.3g}")
        return False
    return True

