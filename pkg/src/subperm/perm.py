"""Permutations, patterns and occurrence counting.

Permutations are stored in one-line notation with 1-based values.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations
from math import comb
from typing import Iterable, Sequence


class Permutation(tuple):
    """Immutable permutation of ``{1, ..., n}`` in one-line notation.

    ``Permutation((2, 4, 1, 3))`` is the permutation 2413.  Being a tuple
    subclass, instances hash, compare and sort like their value sequence.
    """

    __slots__ = ()

    def __new__(cls, values: Iterable[int]):
        values = tuple(int(v) for v in values)
        n = len(values)
        if n < 1:
            raise ValueError("a permutation has size at least 1")
        if sorted(values) != list(range(1, n + 1)):
            raise ValueError(f"{values!r} is not a permutation of 1..{n}")
        return super().__new__(cls, values)

    @classmethod
    def _trusted(cls, values):
        # skips validation; callers guarantee a valid one-line notation
        return tuple.__new__(cls, values)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls._trusted(range(1, n + 1))

    @classmethod
    def decreasing(cls, n: int) -> "Permutation":
        return cls._trusted(range(n, 0, -1))

    @property
    def size(self) -> int:
        return len(self)

    def __str__(self) -> str:
        return " ".join(map(str, self))

    def __repr__(self) -> str:
        return f"Permutation({format_compact(self)})"

    def is_increasing(self) -> bool:
        return all(v == i + 1 for i, v in enumerate(self))

    def is_decreasing(self) -> bool:
        n = len(self)
        return all(v == n - i for i, v in enumerate(self))


def parse_permutation(text: str) -> Permutation:
    """Parse ``"2 4 1 3"`` or, for sizes up to 9, the digit string ``"2413"``."""
    text = text.strip()
    if not text:
        raise ValueError("empty permutation text")
    if any(c.isspace() for c in text):
        return Permutation(int(tok) for tok in text.split())
    if not text.isdigit():
        raise ValueError(f"cannot parse permutation {text!r}")
    if len(text) > 9:
        raise ValueError("contiguous digit strings are only accepted for n <= 9")
    return Permutation(int(c) for c in text)


def parse_index_set(text: str) -> tuple[int, ...]:
    """Parse a comma-separated list of 1-based indices such as ``"2,5,7"``."""
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def format_compact(perm: Sequence[int]) -> str:
    """Digit-string rendering for n <= 9, space-separated otherwise."""
    if len(perm) <= 9:
        return "".join(map(str, perm))
    return " ".join(map(str, perm))


def as_permutation(obj) -> Permutation:
    """Coerce strings, tuples and lists to :class:`Permutation`."""
    if isinstance(obj, Permutation):
        return obj
    if isinstance(obj, str):
        return parse_permutation(obj)
    return Permutation(obj)


def standardize(values: Sequence) -> Permutation:
    """Return the permutation order-isomorphic to a sequence of distinct values."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0] * len(values)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return Permutation._trusted(ranks)


def pattern_at(sigma: Sequence[int], indices: Iterable[int]) -> Permutation:
    """Pattern ``pat_I(sigma)`` induced by the 1-based index set ``indices``.

    >>> str(pattern_at(Permutation((6, 5, 8, 3, 1, 2, 4, 7)), (2, 5, 7)))
    '3 1 2'
    """
    idx = tuple(indices)
    if not idx:
        raise ValueError("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate indices in {idx!r}")
    n = len(sigma)
    for i in idx:
        if not 1 <= i <= n:
            raise IndexError(f"index {i} out of range 1..{n}")
    idx = sorted(idx)
    return standardize([sigma[i - 1] for i in idx])


def _patterns_of_size(sigma: Sequence[int], k: int):
    vals = tuple(sigma)
    for sub in combinations(vals, k):
        yield standardize(sub)


def occ_count(pi: Sequence[int], sigma: Sequence[int]) -> int:
    """Number of ``|pi|``-subsets of positions of ``sigma`` inducing ``pi``."""
    k = len(pi)
    if k > len(sigma):
        return 0
    target = tuple(pi)
    return sum(1 for p in _patterns_of_size(sigma, k) if p == target)


def occ_density(pi: Sequence[int], sigma: Sequence[int]) -> Fraction:
    """Proportion of occurrences, ``occ(pi, sigma) / C(|sigma|, |pi|)``."""
    k, n = len(pi), len(sigma)
    if k > n:
        raise ValueError(f"pattern size {k} exceeds permutation size {n}")
    return Fraction(occ_count(pi, sigma), comb(n, k))


def pattern_counts(sigma: Sequence[int], k: int) -> dict[Permutation, int]:
    """Occurrence counts of every size-``k`` pattern of ``sigma`` (absent ones omitted)."""
    counts: dict[Permutation, int] = {}
    for p in _patterns_of_size(sigma, k):
        counts[p] = counts.get(p, 0) + 1
    return counts


def substitute(theta: Sequence[int], blocks: Sequence[Sequence[int]]) -> Permutation:
    """Substitution ``theta[blocks[0], ..., blocks[d-1]]``.

    Block ``i`` occupies the ``i``-th run of positions and a value interval
    whose rank among the blocks is ``theta[i]``.
    """
    d = len(theta)
    if len(blocks) != d:
        raise ValueError(f"skeleton of size {d} needs {d} blocks, got {len(blocks)}")
    sizes = [len(b) for b in blocks]
    # value offset of block i = total size of blocks with a smaller skeleton value
    by_rank = sorted(range(d), key=lambda i: theta[i])
    offset = [0] * d
    acc = 0
    for i in by_rank:
        offset[i] = acc
        acc += sizes[i]
    out = []
    for i, block in enumerate(blocks):
        out.extend(v + offset[i] for v in block)
    return Permutation(out)


def _window_is_interval(sigma: Sequence[int], lo: int, hi: int) -> bool:
    vals = sigma[lo:hi + 1]
    return max(vals) - min(vals) == hi - lo


def intervals(sigma: Sequence[int]) -> list[tuple[int, int]]:
    """All proper nontrivial intervals as 0-based inclusive position pairs."""
    n = len(sigma)
    found = []
    for i in range(n):
        lo = hi = sigma[i]
        for j in range(i + 1, n):
            v = sigma[j]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
            if hi - lo == j - i and j - i + 1 < n:
                found.append((i, j))
    return found


def is_simple(sigma: Sequence[int]) -> bool:
    """True iff ``|sigma| > 2`` and no window of length 2..n-1 is an interval.

    Sizes 1 and 2 are deliberately not simple.
    """
    n = len(sigma)
    if n <= 2:
        return False
    for i in range(n):
        lo = hi = sigma[i]
        for j in range(i + 1, n):
            v = sigma[j]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
            if hi - lo == j - i and j - i + 1 < n:
                return False
    return True


def ascents_descents(pi: Sequence[int]) -> tuple[int, int]:
    asc = sum(1 for a, b in zip(pi, pi[1:]) if a < b)
    return asc, len(pi) - 1 - asc


def reverse(sigma: Sequence[int]) -> Permutation:
    return Permutation._trusted(tuple(reversed(sigma)))


def complement(sigma: Sequence[int]) -> Permutation:
    n = len(sigma)
    return Permutation._trusted(tuple(n + 1 - v for v in sigma))


def inverse(sigma: Sequence[int]) -> Permutation:
    inv = [0] * len(sigma)
    for i, v in enumerate(sigma, start=1):
        inv[v - 1] = i
    return Permutation._trusted(inv)


def all_permutations(k: int) -> list[Permutation]:
    """All permutations of size ``k`` in lexicographic order."""
    return [Permutation._trusted(p) for p in permutations(range(1, k + 1))]
