"""Seeded random generation of trees and permutations.

Every sampler takes ``rng``: an int seed, a :class:`numpy.random.Generator`
or None.  Passing the same seed reproduces the same output.
"""
from __future__ import annotations

from bisect import bisect_right
from math import ceil, floor, log
from typing import Iterable, Optional

import numpy as np

from .perm import Permutation, as_permutation
from .permutons import Lebesgue, Permuton, make_rng, perm_from_permuton
from .singular import FiniteFamily, lambda_eval, lambda_prime, solve_kappa
from .trees import LEAF, MINUS, PLUS, Node, normalize_label, perm_of_tree, tree_size

DEFAULT_MAX_TRIES = 10_000_000


def _build(labels: list, children: list, root: int):
    """Turn index-based node tables into nested ``Node`` objects without recursion."""
    built: dict[int, object] = {}
    stack = [(root, False)]
    while stack:
        i, ready = stack.pop()
        kids = children[i]
        if kids is None:
            built[i] = LEAF
            continue
        if ready:
            built[i] = Node(labels[i], tuple(built.pop(c) for c in kids))
        else:
            stack.append((i, True))
            stack.extend((c, False) for c in kids)
    return built[root]


# ---------------------------------------------------------------------------
# uniform binary trees


def _remy_tables(n: int, rng):
    # node 0 starts as the only leaf; children[i] is None for leaves
    children: list = [None]
    parent = [-1]
    root = 0
    draws = rng.random((max(n - 1, 0), 2))
    for step in range(n - 1):
        size = len(children)
        target = min(int(draws[step, 0] * size), size - 1)
        leaf = size
        inner = size + 1
        children.append(None)
        parent.append(inner)
        kids = [target, leaf] if draws[step, 1] < 0.5 else [leaf, target]
        children.append(kids)
        up = parent[target]
        parent.append(up)
        parent[target] = inner
        if up == -1:
            root = inner
        else:
            siblings = children[up]
            siblings[siblings.index(target)] = inner
    return children, root


def remy_binary_tree(n: int, rng=None):
    """Uniform complete binary plane tree with ``n`` leaves, unlabeled."""
    if n < 1:
        raise ValueError("n must be at least 1")
    children, root = _remy_tables(n, make_rng(rng))
    return _build([None] * len(children), children, root)


def biased_signed_tree(n: int, p: float, rng=None):
    """Uniform binary tree whose internal nodes are PLUS with probability ``p``, else MINUS."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(rng)
    children, root = _remy_tables(n, rng)
    signs = rng.random(len(children)) < p
    labels = [PLUS if s else MINUS for s in signs]
    return _build(labels, children, root)


def biased_signed_permutation(n: int, p: float, rng=None) -> Permutation:
    return perm_of_tree(biased_signed_tree(n, p, rng))


# ---------------------------------------------------------------------------
# stable trees


def marchal_tree(k: int, delta: float, rng=None):
    """Plane tree shape with ``k`` leaves from Marchal's growth rule.

    The current tree is planted.  The next leaf goes onto an edge with
    weight ``delta - 1`` (a uniform side of the new binary node) or onto an
    internal vertex with ``c`` children with weight ``c - delta`` (a uniform
    slot among ``c + 1``).
    """
    if not 1 < delta < 2:
        raise ValueError(f"delta = {delta} outside (1, 2)")
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = make_rng(rng)
    children: list = [None]
    parent = [-1]
    root = 0
    internal = 0
    for _ in range(k - 1):
        nodes = len(children)
        edge_weight = (delta - 1) * nodes
        vertex_weight = (nodes - 1) - internal * delta
        if rng.random() * (edge_weight + vertex_weight) < edge_weight:
            target = int(rng.integers(nodes))
            leaf, inner = nodes, nodes + 1
            children.append(None)
            parent.append(inner)
            kids = [target, leaf] if rng.random() < 0.5 else [leaf, target]
            children.append(kids)
            up = parent[target]
            parent.append(up)
            parent[target] = inner
            internal += 1
            if up == -1:
                root = inner
            else:
                siblings = children[up]
                siblings[siblings.index(target)] = inner
        else:
            # a uniform non-root node names its parent with probability c/(nodes-1);
            # accepting with probability (c - delta)/c leaves weight c - delta
            while True:
                child = int(rng.integers(nodes))
                v = parent[child]
                if v == -1:
                    continue
                c = len(children[v])
                if rng.random() * c < c - delta:
                    break
            slot = int(rng.integers(c + 1))
            children.append(None)
            parent.append(v)
            children[v].insert(slot, nodes)
    return _build([None] * len(children), children, root)


def stable_permutation(n: int, delta: float, nu: Optional[Permuton] = None, rng=None) -> Permutation:
    """Permutation of a Marchal tree whose nodes carry patterns drawn from ``nu``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = make_rng(rng)
    nu = Lebesgue() if nu is None else nu
    shape = marchal_tree(n, delta, rng)
    return perm_of_tree(_label_with_permuton(shape, nu, rng))


def _label_with_permuton(t, nu, rng):
    order, stack = [], [t]
    while stack:
        x = stack.pop()
        order.append(x)
        if x is not LEAF:
            stack.extend(x.children)
    done: dict[int, object] = {}
    for x in reversed(order):
        if x is LEAF:
            continue
        kids = tuple(LEAF if c is LEAF else done.pop(id(c)) for c in x.children)
        label = normalize_label(perm_from_permuton(nu, len(kids), rng))
        done[id(x)] = Node(label, kids)
    return done[id(t)]


# ---------------------------------------------------------------------------
# Boltzmann sampling of a substitution-closed class


class _Uniforms:
    """Buffered uniforms from a numpy Generator; per-call overhead dominates otherwise."""

    def __init__(self, rng, block: int = 1 << 14):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block).tolist()
        self.pos = 0

    def __call__(self) -> float:
        if self.pos == self.block:
            self.buf = self.rng.random(self.block).tolist()
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


class BoltzmannSampler:
    """Boltzmann sampler for canonical trees over a finite family at parameter ``z``.

    Root choices follow the terms of ``T = z + 2 u^2/(1-u) + sum T^|alpha|``
    and ``u = z + u^2/(1-u) + sum T^|alpha|`` with ``u`` the not-PLUS series.
    """

    def __init__(self, family: Iterable = (), z: Optional[float] = None, target: Optional[float] = None):
        self.spec = FiniteFamily(family)
        self.members = list(self.spec.members)
        kappa = solve_kappa(self.spec)
        self.tau = kappa / (1 + kappa)
        self.rho = self.tau - lambda_eval(self.spec, self.tau)
        if z is None:
            z = 0.99 * self.rho if target is None else self.tune(target)
        if not 0 < z < self.rho:
            raise ValueError(f"z = {z} must lie in (0, rho = {self.rho})")
        self.z = z
        self.u = self._u_of(z)
        self.t = self.u / (1 - self.u)
        u, t = self.u, self.t
        seq = u * u / (1 - u)
        simple_w = [t ** len(a) for a in self.members]
        # cumulative tables: outcomes are 'L', PLUS, MINUS, or an index into members
        self._t_outcomes = ["L", PLUS, MINUS] + list(range(len(self.members)))
        self._t_cum = np.cumsum([z, seq, seq] + simple_w) / t
        self._np_outcomes = ["L", MINUS] + list(range(len(self.members)))
        self._np_cum = np.cumsum([z, seq] + simple_w) / u
        self._nm_outcomes = ["L", PLUS] + list(range(len(self.members)))
        self._nm_cum = self._np_cum
        self._log_u = log(u)

    def _u_of(self, z: float) -> float:
        lo, hi = 0.0, self.tau
        for _ in range(200):
            mid = (lo + hi) / 2
            if mid - lambda_eval(self.spec, mid) < z:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    def expected_size(self, z: float) -> float:
        u = self._u_of(z)
        du = 1 / (1 - lambda_prime(self.spec, u))
        t = u / (1 - u)
        dt = du / (1 - u) ** 2
        return z * dt / t

    def tune(self, target: float) -> float:
        """Parameter whose expected size is ``target`` (bisection on ``(0, rho)``)."""
        if target <= 1:
            return self.rho * 1e-9
        lo, hi = 0.0, self.rho * (1 - 1e-12)
        if self.expected_size(hi) < target:
            return hi
        for _ in range(100):
            mid = (lo + hi) / 2
            if self.expected_size(mid) < target:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    def _pick(self, cum, outcomes, r):
        i = bisect_right(cum, r)
        return outcomes[min(i, len(outcomes) - 1)]

    def try_sample(self, max_size: int, uniform) -> Optional[object]:
        """One Boltzmann draw, or None once it grows beyond ``max_size`` leaves."""
        t_cum, np_cum = self._t_cum.tolist(), self._np_cum.tolist()
        labels: list = []
        children: list = []
        # pending slots: (parent index or -1, kind) where kind is 'T', 'np' or 'nm'
        pending = [(-1, "T")]
        leaves = 0
        root = None
        while pending:
            par, kind = pending.pop()
            r = uniform()
            if kind == "T":
                out = self._pick(t_cum, self._t_outcomes, r)
            elif kind == "np":
                out = self._pick(np_cum, self._np_outcomes, r)
            else:
                out = self._pick(np_cum, self._nm_outcomes, r)
            idx = len(labels)
            if out == "L":
                labels.append(None)
                children.append(None)
                leaves += 1
                if leaves > max_size:
                    return None
            elif out == PLUS or out == MINUS:
                # sequence of at least two children: 1 + geometric(1 - u)
                d = 2 + int(log(1.0 - uniform()) / self._log_u)
                labels.append(out)
                children.append([])
                child_kind = "np" if out == PLUS else "nm"
                pending.extend((idx, child_kind) for _ in range(d))
            else:
                alpha = self.members[out]
                labels.append(normalize_label(alpha))
                children.append([])
                pending.extend((idx, "T") for _ in range(len(alpha)))
            if par == -1:
                root = idx
            else:
                children[par].append(idx)
            if len(pending) + leaves > max_size:
                return None
        return _build(labels, children, root)


def boltzmann_class_sample(family: Iterable, target_n: int, window: float = 0.0, rng=None,
                           z: Optional[float] = None, max_tries: int = DEFAULT_MAX_TRIES,
                           sampler: Optional[BoltzmannSampler] = None) -> Permutation:
    """A uniform member of the class whose size lies within ``window`` of ``target_n``.

    Draws are rejected until the size lands in
    ``[ceil(target_n (1 - window)), floor(target_n (1 + window))]``.
    """
    if target_n < 1:
        raise ValueError("target size must be at least 1")
    lo, hi = _window(target_n, window)
    if hi == 1:
        return Permutation((1,))
    if sampler is None:
        sampler = BoltzmannSampler(family, z=z, target=target_n)
    return _sample_in_window(sampler, lo, hi, _Uniforms(make_rng(rng)), max_tries)


def _window(target_n: int, window: float) -> tuple[int, int]:
    lo = max(1, ceil(target_n * (1 - window) - 1e-9))
    hi = floor(target_n * (1 + window) + 1e-9)
    if hi < lo:
        raise ValueError("empty size window")
    return lo, hi


def _sample_in_window(sampler, lo, hi, uniform, max_tries) -> Permutation:
    for _ in range(max_tries):
        t = sampler.try_sample(hi, uniform)
        if t is not None and tree_size(t) >= lo:
            return perm_of_tree(t)
    raise RuntimeError(f"no sample in the size window after {max_tries} attempts")


def boltzmann_class_samples(family: Iterable, target_n: int, count: int, window: float = 0.0,
                            rng=None, z: Optional[float] = None,
                            max_tries: int = DEFAULT_MAX_TRIES) -> list[Permutation]:
    """``count`` independent draws sharing one tuned sampler."""
    if target_n < 1:
        raise ValueError("target size must be at least 1")
    lo, hi = _window(target_n, window)
    if hi == 1:
        return [Permutation((1,))] * count
    sampler = BoltzmannSampler(family, z=z, target=target_n)
    uniform = _Uniforms(make_rng(rng))
    return [_sample_in_window(sampler, lo, hi, uniform, max_tries) for _ in range(count)]


__all__ = [
    "BoltzmannSampler", "biased_signed_permutation", "biased_signed_tree",
    "boltzmann_class_sample", "boltzmann_class_samples", "marchal_tree", "remy_binary_tree",
    "stable_permutation",
]
