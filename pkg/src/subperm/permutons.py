"""Permutons as point samplers, and Monte Carlo pattern densities."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from math import comb, sqrt
from typing import Mapping, Optional

import numpy as np

from .perm import Permutation, all_permutations, as_permutation, pattern_counts

MAX_TIE_RETRIES = 100
EXACT_MAX_K = 4
EXACT_MAX_N = 40


def make_rng(seed=None) -> np.random.Generator:
    """A numpy Generator from an int seed, an existing Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class Permuton:
    """A probability measure on the unit square with uniform marginals, seen through sampling."""

    def sample(self, rng: np.random.Generator, size) -> tuple[np.ndarray, np.ndarray]:
        """Arrays ``x, y`` of i.i.d. points with the given shape."""
        raise NotImplementedError

    def point(self, rng) -> tuple[float, float]:
        x, y = self.sample(make_rng(rng), 1)
        return float(x[0]), float(y[0])


class Lebesgue(Permuton):
    def sample(self, rng, size):
        return rng.random(size), rng.random(size)

    def __repr__(self):
        return "Lebesgue()"


class FromPermutation(Permuton):
    """The permuton of a permutation: uniform mass on the cells ``(i, sigma(i))``."""

    def __init__(self, sigma):
        self.sigma = as_permutation(sigma)
        self._values = np.asarray(self.sigma, dtype=float)

    def sample(self, rng, size):
        n = len(self.sigma)
        cols = rng.integers(0, n, size=size)
        x = (cols + rng.random(size)) / n
        y = (self._values[cols] - 1 + rng.random(size)) / n
        return x, y

    def __repr__(self):
        return f"FromPermutation({self.sigma!r})"


def _has_ties(a: np.ndarray) -> np.ndarray:
    s = np.sort(a, axis=-1)
    return np.any(s[..., 1:] == s[..., :-1], axis=-1)


def _draw_patterns(mu: Permuton, k: int, m: int, rng) -> np.ndarray:
    """An ``(m, k)`` array of 1-based patterns, each induced by ``k`` fresh points."""
    x, y = mu.sample(rng, (m, k))
    for _ in range(MAX_TIE_RETRIES):
        bad = _has_ties(x) | _has_ties(y)
        if not bad.any():
            break
        rx, ry = mu.sample(rng, (int(bad.sum()), k))
        x[bad], y[bad] = rx, ry
    else:
        raise RuntimeError("could not resolve ties after repeated resampling")
    order = np.argsort(x, axis=1)
    ys = np.take_along_axis(y, order, axis=1)
    return np.argsort(np.argsort(ys, axis=1), axis=1) + 1


def perm_from_permuton(mu: Permuton, k: int, rng=None) -> Permutation:
    """Pattern of ``k`` i.i.d. points of ``mu`` read left to right."""
    if k < 1:
        raise ValueError("k must be at least 1")
    row = _draw_patterns(mu, k, 1, make_rng(rng))[0]
    return Permutation._trusted(int(v) for v in row)


def estimate_occ(pi, mu: Permuton, samples: int, rng=None) -> tuple[float, float]:
    """Monte Carlo estimate of the pattern density of ``pi`` in ``mu`` with its standard error."""
    pi = as_permutation(pi)
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = make_rng(rng)
    hits = 0
    chunk = 1 << 16
    done = 0
    target = np.asarray(pi)
    while done < samples:
        m = min(chunk, samples - done)
        pats = _draw_patterns(mu, len(pi), m, rng)
        hits += int(np.all(pats == target, axis=1).sum())
        done += m
    p_hat = hits / samples
    return p_hat, sqrt(p_hat * (1 - p_hat) / samples)


def density_vector(sigma, k: int, mode: str = "exact", budget: Optional[int] = None, rng=None) -> dict:
    """Densities of every size-``k`` pattern in ``sigma``.

    ``exact`` enumerates all position subsets and returns Fractions; it is
    limited to ``k <= 4`` and ``|sigma| <= 40`` unless ``budget`` raises the
    subset limit.  ``sampled`` draws ``budget`` uniform subsets (default 10^4).
    """
    sigma = as_permutation(sigma)
    n = len(sigma)
    if k > n:
        raise ValueError(f"k = {k} exceeds |sigma| = {n}")
    if mode == "exact":
        limit = comb(EXACT_MAX_N, EXACT_MAX_K) if budget is None else budget
        if comb(n, k) > limit or (budget is None and (k > EXACT_MAX_K or n > EXACT_MAX_N)):
            raise ValueError(f"exact mode over budget for n = {n}, k = {k}")
        total = comb(n, k)
        counts = pattern_counts(sigma, k)
        return {p: Fraction(counts.get(p, 0), total) for p in all_permutations(k)}
    if mode == "sampled":
        m = 10_000 if budget is None else budget
        rng = make_rng(rng)
        values = np.asarray(sigma)
        # uniform k-subsets of positions: sort the first k entries of random permutations
        keys = rng.random((m, n))
        idx = np.sort(np.argpartition(keys, k - 1, axis=1)[:, :k], axis=1)
        sub = values[idx]
        pats = np.argsort(np.argsort(sub, axis=1), axis=1) + 1
        out = {}
        for p in all_permutations(k):
            out[p] = float(np.all(pats == np.asarray(p), axis=1).mean())
        return out
    raise ValueError(f"unknown mode {mode!r}")


def diagram_export(sigma) -> list[tuple[float, float]]:
    """Diagram of ``sigma`` rescaled to the unit square (cell centres)."""
    sigma = as_permutation(sigma)
    n = len(sigma)
    return [((i + 0.5) / n, (v - 0.5) / n) for i, v in enumerate(sigma)]


def points_to_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y"])
    for x, y in points:
        writer.writerow([format(x, ".15g"), format(y, ".15g")])
    return buf.getvalue()


def points_from_csv(text: str) -> list[tuple[float, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["x", "y"]:
        raise ValueError("missing x,y header")
    return [(float(a), float(b)) for a, b in rows[1:]]


def density_to_json(densities: Mapping) -> str:
    return json.dumps({str(as_permutation(p)): format(float(v), ".15g") for p, v in densities.items()}, indent=2)


def density_from_json(text: str) -> dict[Permutation, float]:
    return {as_permutation(k): float(v) for k, v in json.loads(text).items()}


__all__ = [
    "FromPermutation", "Lebesgue", "Permuton", "density_from_json", "density_to_json",
    "density_vector", "diagram_export", "estimate_occ", "make_rng", "perm_from_permuton",
    "points_from_csv", "points_to_csv",
]
