"""Binary pattern sets: random generation, text storage and edge-map images."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    """Malformed pattern file; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class IngestionError(ValueError):
    pass


@dataclass(frozen=True)
class PatternSet:
    bits: np.ndarray  # (P, N) int8 of +1/-1

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError("pattern bits must be a (P, N) array")
        if not np.all(np.abs(b) == 1):
            raise ValueError("pattern values must be +1 or -1")
        object.__setattr__(self, "bits", b.astype(np.int8))

    @property
    def P(self) -> int:
        return self.bits.shape[0]

    @property
    def N(self) -> int:
        return self.bits.shape[1]

    def __getitem__(self, mu):
        return self.bits[mu]

    def __eq__(self, other):
        return isinstance(other, PatternSet) and np.array_equal(self.bits, other.bits)


def generate_random_patterns(P: int, N: int, rng: np.random.Generator) -> PatternSet:
    if P < 1 or N < 1:
        raise ValueError(f"need P >= 1 and N >= 1, got P={P}, N={N}")
    bits = rng.integers(0, 2, size=(P, N), dtype=np.int8) * 2 - 1
    return PatternSet(bits.astype(np.int8))


def save_patterns(patterns: PatternSet, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"P={patterns.P} N={patterns.N}\n")
        for row in patterns.bits:
            fh.write(" ".join("1" if v > 0 else "-1" for v in row) + "\n")


_VALUES = {"1": 1, "+1": 1, "-1": -1}


def load_patterns(path) -> PatternSet:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty pattern file", 1)
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        P, N = int(header["P"]), int(header["N"])
    except (ValueError, KeyError):
        raise ParseError(f"expected header 'P=<p> N=<n>', got {lines[0]!r}", 1) from None
    if P < 1 or N < 1:
        raise ParseError(f"header declares P={P}, N={N}", 1)
    body = lines[1:]
    if len(body) != P:
        raise ParseError(f"header declares {P} patterns, found {len(body)}", len(lines))
    bits = np.empty((P, N), dtype=np.int8)
    for mu, line in enumerate(body):
        lineno = mu + 2
        toks = line.split()
        if len(toks) != N:
            raise ParseError(f"expected {N} values, found {len(toks)}", lineno)
        for n, tok in enumerate(toks):
            v = _VALUES.get(tok)
            if v is None:
                raise ParseError(f"value {tok!r} at position {n} is not +1 or -1", lineno)
            bits[mu, n] = v
    return PatternSet(bits)


# --------------------------------------------------------------------------
# images


@dataclass(frozen=True)
class ImageIngestConfig:
    """How a square patch of a grayscale image becomes a +1/-1 edge pattern.

    filter: ``"gradient"`` (3x3 central differences) or ``"diff2"``
    (largest 2-point difference with a horizontal or vertical neighbour).
    threshold_mode: ``"median"`` marks the upper half of the nonzero edge
    strengths, ``"fixed"`` marks strengths above ``threshold``.
    """

    patch_size: int
    filter: str = "gradient"
    threshold_mode: str = "median"
    threshold: float = 0.0
    origin_mode: str = "random"
    origin: tuple[int, int] = (0, 0)

    @property
    def N(self) -> int:
        return self.patch_size**2


def load_pgm(path) -> np.ndarray:
    """Read an 8-bit grayscale PGM (P2 or P5) into a uint8 array."""
    from PIL import Image

    try:
        with Image.open(path) as im:
            if im.format != "PPM" or im.mode != "L":
                raise IngestionError(f"{path}: not an 8-bit grayscale PGM (mode {im.mode})")
            return np.asarray(im, dtype=np.uint8).copy()
    except OSError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def save_pgm(image: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(path, format="PPM")


def edge_strength(patch: np.ndarray, kind: str = "gradient") -> np.ndarray:
    f = np.asarray(patch, dtype=np.float64)
    if kind == "gradient":
        p = np.pad(f, 1, mode="edge")
        gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
        gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    elif kind == "diff2":
        dx = np.abs(np.diff(f, axis=1))
        dy = np.abs(np.diff(f, axis=0))
        gx = np.zeros_like(f)
        gy = np.zeros_like(f)
        gx[:, :-1] = dx
        gx[:, 1:] = np.maximum(gx[:, 1:], dx)
        gy[:-1, :] = dy
        gy[1:, :] = np.maximum(gy[1:, :], dy)
    else:
        raise ValueError(f"unknown edge filter {kind!r}")
    return np.hypot(gx, gy)


def binarize(strength: np.ndarray, mode: str = "median", threshold: float = 0.0) -> np.ndarray:
    """+1 for edges, -1 elsewhere; zero-strength pixels are never edges."""
    g = np.asarray(strength, dtype=np.float64).ravel()
    out = -np.ones(g.size, dtype=np.int8)
    if mode == "fixed":
        out[g > threshold] = 1
    elif mode == "median":
        # rank split: ties broken by pixel order, so exactly half are marked when possible
        n_on = min(g.size // 2, int(np.count_nonzero(g > 0)))
        order = np.argsort(-g, kind="stable")
        out[order[:n_on]] = 1
    else:
        raise ValueError(f"unknown threshold mode {mode!r}")
    return out


def image_to_pattern(image: np.ndarray, config: ImageIngestConfig,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    img = np.asarray(image)
    s = config.patch_size
    if img.ndim != 2 or img.shape[0] < s or img.shape[1] < s:
        raise IngestionError(f"image of shape {img.shape} is smaller than a {s}x{s} patch")
    if config.origin_mode == "random":
        if rng is None:
            raise ValueError("random patch origin needs an rng")
        y = int(rng.integers(0, img.shape[0] - s + 1))
        x = int(rng.integers(0, img.shape[1] - s + 1))
    else:
        y, x = config.origin
        if y < 0 or x < 0 or y + s > img.shape[0] or x + s > img.shape[1]:
            raise IngestionError(f"patch at {(y, x)} does not fit in image of shape {img.shape}")
    patch = img[y:y + s, x:x + s]
    return binarize(edge_strength(patch, config.filter), config.threshold_mode, config.threshold)


def image_patterns(images: list[np.ndarray], config: ImageIngestConfig, P: int,
                   rng: np.random.Generator) -> PatternSet:
    """P patterns, each from a random image and (by default) a random patch."""
    bits = np.empty((P, config.N), dtype=np.int8)
    for mu in range(P):
        img = images[int(rng.integers(0, len(images)))]
        bits[mu] = image_to_pattern(img, config, rng)
    return PatternSet(bits)
