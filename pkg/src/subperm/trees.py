"""Substitution trees, canonical decomposition and induced trees.

Labels are normalised: increasing skeletons become :data:`PLUS`, decreasing
ones :data:`MINUS`, and anything else is kept as a :class:`Permutation`
(simple or not).  A label of ``None`` marks an unlabeled shape, as produced
by the tree samplers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import comb
from typing import Iterable, Iterator, Optional, Sequence, Union

from .perm import (
    Permutation,
    all_permutations,
    as_permutation,
    is_simple,
    parse_permutation,
    standardize,
)

PLUS = "+"
MINUS = "-"

Label = Union[str, Permutation, None]

DEFAULT_PATTERN_CAP = 6
DEFAULT_CLASS_CAP = 10


class Leaf:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "LEAF"

    def __reduce__(self):
        return (Leaf, ())

    @property
    def size(self) -> int:
        return 1


LEAF = Leaf()


@dataclass(frozen=True)
class Node:
    label: Label
    children: tuple

    def __post_init__(self):
        d = len(self.children)
        if d < 2:
            raise ValueError("internal nodes need at least two children")
        if isinstance(self.label, Permutation):
            if len(self.label) != d:
                raise ValueError(f"label {self.label!r} has arity {len(self.label)}, got {d} children")
            if self.label.is_increasing() or self.label.is_decreasing():
                raise ValueError("monotone labels must be given as PLUS / MINUS")
        elif self.label not in (PLUS, MINUS, None):
            raise ValueError(f"bad node label {self.label!r}")

    @property
    def size(self) -> int:
        return tree_size(self)

    def __repr__(self):
        return f"Node({format_tree(self)})"


Tree = Union[Leaf, Node]


def normalize_label(theta: Sequence[int]) -> Label:
    """Map a skeleton permutation to PLUS / MINUS / itself."""
    theta = Permutation._trusted(tuple(theta)) if not isinstance(theta, Permutation) else theta
    if theta.is_increasing():
        return PLUS
    if theta.is_decreasing():
        return MINUS
    return theta


def label_permutation(label: Label, arity: int) -> Permutation:
    """Skeleton permutation of a label at the given arity."""
    if label == PLUS:
        return Permutation.identity(arity)
    if label == MINUS:
        return Permutation.decreasing(arity)
    if label is None:
        raise ValueError("unlabeled shape has no skeleton permutation")
    return label


def is_linear(label: Label) -> bool:
    return label == PLUS or label == MINUS


def plus(*children) -> Node:
    return Node(PLUS, tuple(children))


def minus(*children) -> Node:
    return Node(MINUS, tuple(children))


def node(label, *children) -> Node:
    if isinstance(label, str) and label not in (PLUS, MINUS):
        label = as_permutation(label)
    if not isinstance(label, str) and label is not None:
        label = normalize_label(as_permutation(label))
    return Node(label, tuple(children))


def tree_size(t: Tree) -> int:
    """Number of leaves."""
    total = 0
    stack = [t]
    while stack:
        x = stack.pop()
        if x is LEAF:
            total += 1
        else:
            stack.extend(x.children)
    return total


def internal_nodes(t: Tree) -> list[tuple[tuple[int, ...], Node]]:
    """Internal nodes in preorder as ``(path, node)``; a path lists child indices from the root."""
    out = []
    stack = [((), t)]
    while stack:
        path, x = stack.pop()
        if x is LEAF:
            continue
        out.append((path, x))
        for i in range(len(x.children) - 1, -1, -1):
            stack.append((path + (i,), x.children[i]))
    return out


def subtree_at(t: Tree, path: Sequence[int]) -> Tree:
    for i in path:
        t = t.children[i]
    return t


def perm_of_tree(t: Tree) -> Permutation:
    """Permutation encoded by a substitution tree (iterative, safe for deep trees)."""
    if t is LEAF:
        return Permutation._trusted((1,))
    # postorder pass for leaf counts
    sizes: dict[int, int] = {}
    order = []
    stack = [t]
    while stack:
        x = stack.pop()
        order.append(x)
        if x is not LEAF:
            stack.extend(x.children)
    for x in reversed(order):
        if x is LEAF:
            continue
        sizes[id(x)] = sum(1 if c is LEAF else sizes[id(c)] for c in x.children)
    values = []
    # preorder with value offsets; children pushed right-to-left so leaves come out left-to-right
    stack = [(t, 0)]
    while stack:
        x, base = stack.pop()
        if x is LEAF:
            values.append(base + 1)
            continue
        theta = label_permutation(x.label, len(x.children))
        csz = [1 if c is LEAF else sizes[id(c)] for c in x.children]
        d = len(csz)
        offsets = [0] * d
        acc = 0
        for i in sorted(range(d), key=theta.__getitem__):
            offsets[i] = acc
            acc += csz[i]
        for i in range(d - 1, -1, -1):
            stack.append((x.children[i], base + offsets[i]))
    return Permutation._trusted(values)


# ---------------------------------------------------------------------------
# canonical decomposition


def _plus_blocks(sigma: Sequence[int]) -> list[tuple[int, int]]:
    blocks, start, hi = [], 0, 0
    for i, v in enumerate(sigma):
        hi = max(hi, v)
        if hi == i + 1:
            blocks.append((start, i + 1))
            start = i + 1
    return blocks


def _minus_blocks(sigma: Sequence[int]) -> list[tuple[int, int]]:
    n = len(sigma)
    blocks, start, lo = [], 0, n + 1
    for i, v in enumerate(sigma):
        lo = min(lo, v)
        if lo == n - i:
            blocks.append((start, i + 1))
            start = i + 1
    return blocks


def _maximal_proper_blocks(sigma: Sequence[int]) -> list[tuple[int, int]]:
    n = len(sigma)
    # longest[i] = end (exclusive) of the longest proper interval starting at i
    longest = list(range(1, n + 1))
    for i in range(n):
        lo = hi = sigma[i]
        for j in range(i + 1, n):
            v = sigma[j]
            lo = min(lo, v)
            hi = max(hi, v)
            if hi - lo == j - i and j - i + 1 < n:
                longest[i] = j + 1
    blocks, i = [], 0
    while i < n:
        blocks.append((i, longest[i]))
        i = longest[i]
    return blocks


def canonical_tree(sigma) -> Tree:
    """Unique canonical tree of ``sigma``.

    The root is PLUS over the maximal sum-indecomposable blocks, MINUS over
    the maximal skew-indecomposable blocks, or a simple skeleton whose
    children are the maximal proper intervals.
    """
    sigma = tuple(as_permutation(sigma))
    if len(sigma) == 1:
        return LEAF
    for label, splitter in ((PLUS, _plus_blocks), (MINUS, _minus_blocks)):
        blocks = splitter(sigma)
        if len(blocks) > 1:
            return Node(label, tuple(canonical_tree(standardize(sigma[a:b])) for a, b in blocks))
    blocks = _maximal_proper_blocks(sigma)
    skeleton = standardize([sigma[a] for a, _ in blocks])
    return Node(skeleton, tuple(canonical_tree(standardize(sigma[a:b])) for a, b in blocks))


def is_canonical(t: Tree, family: Optional[Iterable] = None) -> bool:
    """Check the canonical-tree conditions, optionally restricting simple labels to ``family``."""
    allowed = None if family is None else {as_permutation(a) for a in family}
    for _, x in internal_nodes(t):
        if x.label is None:
            return False
        if isinstance(x.label, Permutation):
            if not is_simple(x.label):
                return False
            if allowed is not None and x.label not in allowed:
                return False
        else:
            if any(c is not LEAF and c.label == x.label for c in x.children):
                return False
    return True


# ---------------------------------------------------------------------------
# induced trees


def _induced(t: Tree, marked: set[int], first_leaf: int, track: bool):
    """Returns (induced subtree or None, leaves in t, source-nonlinear flags by new path)."""
    if t is LEAF:
        return (LEAF if first_leaf in marked else None), 1, {}
    kept, positions, flags_list = [], [], []
    offset = first_leaf
    for i, c in enumerate(t.children):
        sub, n, flags = _induced(c, marked, offset, track)
        offset += n
        if sub is not None:
            kept.append(sub)
            positions.append(i)
            flags_list.append(flags)
    size = offset - first_leaf
    if not kept:
        return None, size, {}
    if len(kept) == 1:
        return kept[0], size, flags_list[0]
    if t.label is None:
        label = None
    else:
        theta = label_permutation(t.label, len(t.children))
        label = normalize_label(standardize([theta[i] for i in positions]))
    flags = {}
    if track:
        flags[()] = not is_linear(t.label)
        for j, f in enumerate(flags_list):
            for path, v in f.items():
                flags[(j,) + path] = v
    return Node(label, tuple(kept)), size, flags


def induced_tree(t: Tree, indices: Iterable[int]) -> Tree:
    """Tree ``t_I`` induced by a set of 1-based leaf indices (depth-first, left to right)."""
    marked = set(indices)
    n = tree_size(t)
    if len(marked) < 2:
        raise ValueError("an induced tree needs at least two marked leaves")
    bad = [i for i in marked if not 1 <= i <= n]
    if bad:
        raise IndexError(f"leaf indices {bad} out of range 1..{n}")
    sub, _, _ = _induced(t, marked, 1, False)
    return sub


def induced_tree_with_sources(t: Tree, indices: Iterable[int]):
    """Induced tree plus the set of its node paths whose source node in ``t`` is nonlinear."""
    marked = set(indices)
    sub, _, flags = _induced(t, marked, 1, True)
    return sub, frozenset(p for p, nonlinear in flags.items() if nonlinear)


# ---------------------------------------------------------------------------
# expanded trees and all substitution trees of a permutation


@lru_cache(maxsize=None)
def binary_shapes(n: int) -> tuple:
    """All complete binary plane shapes with ``n`` leaves (labels None)."""
    if n == 1:
        return (LEAF,)
    out = []
    for i in range(1, n):
        for left in binary_shapes(i):
            for right in binary_shapes(n - i):
                out.append(Node(None, (left, right)))
    return tuple(out)


def _relabel(shape: Tree, label: Label) -> Tree:
    if shape is LEAF:
        return LEAF
    return Node(label, tuple(_relabel(c, label) for c in shape.children))


def _graft(shape: Tree, subtrees: list) -> Tree:
    """Replace the leaves of ``shape`` left to right by ``subtrees`` (consumed)."""
    if shape is LEAF:
        return subtrees.pop(0)
    return Node(shape.label, tuple(_graft(c, subtrees) for c in shape.children))


def expanded_trees(pi) -> list[Tree]:
    """All expanded trees of ``pi``: linear canonical nodes inflated into binary combs of all shapes."""
    return list(_expand(canonical_tree(pi)))


def _expand(t: Tree) -> Iterator[Tree]:
    if t is LEAF:
        yield LEAF
        return
    child_options = [list(_expand(c)) for c in t.children]
    if is_linear(t.label):
        shapes = [_relabel(s, t.label) for s in binary_shapes(len(t.children))]
    else:
        shapes = [Node(t.label, (LEAF,) * len(t.children))]
    for shape in shapes:
        for kids in product(*child_options):
            yield _graft(shape, list(kids))


def _merge_edge(t: Tree, path: tuple[int, ...]) -> Tree:
    """Merge the internal node at ``path`` (nonempty) into its parent."""
    if len(path) == 1:
        i = path[0]
        child = t.children[i]
        theta = label_permutation(t.label, len(t.children))
        inner = label_permutation(child.label, len(child.children))
        blocks = [(1,)] * len(t.children)
        blocks[i] = inner
        from .perm import substitute  # local import keeps the module header tidy

        merged = substitute(theta, blocks)
        kids = t.children[:i] + child.children + t.children[i + 1:]
        return Node(normalize_label(merged), kids)
    i = path[0]
    kids = list(t.children)
    kids[i] = _merge_edge(kids[i], path[1:])
    return Node(t.label, tuple(kids))


def enumerate_substitution_trees(pi, cap: int = DEFAULT_PATTERN_CAP) -> list[Tree]:
    """All substitution trees encoding ``pi``.

    Generated from the expanded trees and closed under single-edge merges.
    """
    pi = as_permutation(pi)
    if len(pi) > cap:
        raise ValueError(f"pattern size {len(pi)} above cap {cap}")
    return list(_substitution_trees_cached(pi))


@lru_cache(maxsize=512)
def _substitution_trees_cached(pi: Permutation) -> tuple:
    seen = set()
    frontier = []
    for t in expanded_trees(pi):
        if t not in seen:
            seen.add(t)
            frontier.append(t)
    while frontier:
        t = frontier.pop()
        for path, _ in internal_nodes(t):
            if not path:
                continue
            merged = _merge_edge(t, path)
            if merged not in seen:
                seen.add(merged)
                frontier.append(merged)
    return tuple(sorted(seen, key=format_tree))


# ---------------------------------------------------------------------------
# expanded-tree statistics


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def expanded_tree_count(pi) -> tuple[int, int, int, int, list[Permutation]]:
    """``(N_tilde, N, r_plus, r_minus, simple_labels)`` from the canonical tree of ``pi``."""
    t = canonical_tree(pi)
    n_tilde, r_plus, r_minus, simples = 1, 0, 0, []
    for _, x in internal_nodes(t):
        d = len(x.children)
        if x.label == PLUS:
            n_tilde *= catalan(d - 1)
            r_plus += d - 1
        elif x.label == MINUS:
            n_tilde *= catalan(d - 1)
            r_minus += d - 1
        else:
            simples.append(x.label)
    n_sep = n_tilde if not simples else 0
    return n_tilde, n_sep, r_plus, r_minus, sorted(simples)


def default_of_binarity(pi) -> int:
    """Sum of ``|theta| - 2`` over the simple labels of the canonical tree."""
    return sum(len(theta) - 2 for theta in expanded_tree_count(pi)[4])


def is_separable(pi) -> bool:
    return not expanded_tree_count(pi)[4]


# ---------------------------------------------------------------------------
# class enumeration


def _compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    for cuts in combinations(range(1, n), parts - 1):
        bounds = (0,) + cuts + (n,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def canonical_trees(family: Sequence[Permutation], n: int, forbid: Label = None) -> list[Tree]:
    """All canonical trees with ``n`` leaves over ``family``; ``forbid`` excludes a root label."""
    fam = tuple(sorted(as_permutation(a) for a in family))
    return list(_canonical_trees(fam, n, forbid))


@lru_cache(maxsize=None)
def _canonical_trees(family: tuple, n: int, forbid: Label) -> tuple:
    if n == 1:
        return (LEAF,)
    out = []
    for label in (PLUS, MINUS):
        if label == forbid:
            continue
        for d in range(2, n + 1):
            for sizes in _compositions(n, d):
                options = [_canonical_trees(family, s, label) for s in sizes]
                for kids in product(*options):
                    out.append(Node(label, kids))
    for alpha in family:
        d = len(alpha)
        if d > n:
            continue
        for sizes in _compositions(n, d):
            options = [_canonical_trees(family, s, None) for s in sizes]
            for kids in product(*options):
                out.append(Node(alpha, kids))
    return tuple(out)


def enumerate_class(family: Iterable, n: int, cap: int = DEFAULT_CLASS_CAP) -> list[Permutation]:
    """Sorted list of the size-``n`` permutations of the substitution closure of ``family``."""
    fam = [as_permutation(a) for a in family]
    for alpha in fam:
        if not is_simple(alpha):
            raise ValueError(f"{alpha!r} is not simple")
    if n > cap:
        raise ValueError(f"class size {n} above cap {cap}")
    return sorted({perm_of_tree(t) for t in canonical_trees(fam, n)})


# ---------------------------------------------------------------------------
# text format


def format_tree(t: Tree) -> str:
    if t is LEAF:
        return "L"
    if t.label == PLUS:
        head = "+"
    elif t.label == MINUS:
        head = "-"
    elif t.label is None:
        head = "*"
    else:
        head = "[" + " ".join(map(str, t.label)) + "]"
    return "(" + head + " " + " ".join(format_tree(c) for c in t.children) + ")"


def _tokenize(text: str) -> list[str]:
    tokens, i = [], 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            tokens.append(c)
            i += 1
        elif c == "[":
            j = text.index("]", i)
            tokens.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()[":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_tree(text: str) -> Tree:
    """Inverse of :func:`format_tree`."""
    tokens = _tokenize(text)
    pos = 0

    def parse() -> Tree:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of tree text")
        tok = tokens[pos]
        pos += 1
        if tok == "L":
            return LEAF
        if tok != "(":
            raise ValueError(f"unexpected token {tok!r}")
        head = tokens[pos]
        pos += 1
        if head == "+":
            label: Label = PLUS
        elif head == "-":
            label = MINUS
        elif head == "*":
            label = None
        elif head.startswith("["):
            label = normalize_label(parse_permutation(head[1:-1]) if head[1:-1].strip() else ())
        else:
            raise ValueError(f"bad node head {head!r}")
        kids = []
        while pos < len(tokens) and tokens[pos] != ")":
            kids.append(parse())
        if pos >= len(tokens):
            raise ValueError("unbalanced parentheses")
        pos += 1
        return Node(label, tuple(kids))

    t = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens after tree")
    return t


def shape_of(t: Tree) -> Tree:
    """Forget the labels."""
    if t is LEAF:
        return LEAF
    return Node(None, tuple(shape_of(c) for c in t.children))


def plane_shapes(k: int) -> list[Tree]:
    """All plane shapes with ``k`` leaves and no unary nodes."""
    return list(_plane_shapes(k))


@lru_cache(maxsize=None)
def _plane_shapes(k: int) -> tuple:
    if k == 1:
        return (LEAF,)
    out = []
    for d in range(2, k + 1):
        for sizes in _compositions(k, d):
            for kids in product(*(_plane_shapes(s) for s in sizes)):
                out.append(Node(None, kids))
    return tuple(out)


__all__ = [
    "LEAF", "Leaf", "Node", "PLUS", "MINUS", "Tree",
    "all_permutations", "binary_shapes", "canonical_tree", "canonical_trees", "catalan",
    "default_of_binarity", "enumerate_class", "enumerate_substitution_trees",
    "expanded_tree_count", "expanded_trees", "format_tree", "induced_tree",
    "induced_tree_with_sources", "internal_nodes", "is_canonical", "is_linear",
    "is_separable", "label_permutation", "minus", "node", "normalize_label",
    "parse_tree", "perm_of_tree", "plane_shapes", "plus", "shape_of", "subtree_at",
    "tree_size",
]
