"""Exact truncated power series and the tree-counting generating functions.

Everything here is exact.  Coefficients are Python ints when integral and
:class:`fractions.Fraction` otherwise; integer-only products go through a
Kronecker-substitution fast path, which keeps order-500 computations with
~1300-bit coefficients to a fraction of a second per product.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterable, Optional, Sequence, Union

from .perm import Permutation, as_permutation, is_simple, occ_count
from .trees import (
    LEAF,
    MINUS,
    PLUS,
    enumerate_substitution_trees,
    internal_nodes,
    is_linear,
    label_permutation,
    tree_size,
)

Number = Union[int, Fraction]

DEFAULT_ORDER = 500


def _norm(c) -> Number:
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def _all_int(xs) -> bool:
    return all(type(c) is int for c in xs)


# ---------------------------------------------------------------------------
# polynomial products


def _pack(coeffs: Sequence[int], nbytes: int) -> int:
    return int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in coeffs), "little")


def _unpack(value: int, nbytes: int, count: int) -> list[int]:
    # the product also carries terms beyond the truncation; drop them
    value &= (1 << (8 * nbytes * count)) - 1
    raw = value.to_bytes(nbytes * count, "little")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") for i in range(count)]


def _kronecker_nonneg(a: list[int], b: list[int], n: int) -> list[int]:
    # each output coefficient is a sum of at most min(len) products
    bits = max(a).bit_length() + max(b).bit_length() + min(len(a), len(b)).bit_length() + 1
    nbytes = (bits + 7) // 8
    prod = _pack(a, nbytes) * _pack(b, nbytes)
    return _unpack(prod, nbytes, n + 1)


def _split_sign(a: list[int]):
    pos = [c if c > 0 else 0 for c in a]
    neg = [-c if c < 0 else 0 for c in a]
    return pos, (neg if any(neg) else None)


def _mul_int(a: list[int], b: list[int], n: int) -> list[int]:
    a, b = a[: n + 1], b[: n + 1]
    if not any(a) or not any(b):
        return [0] * (n + 1)
    if min(len(a), len(b)) <= 8:
        return _mul_schoolbook(a, b, n)
    ap, an = _split_sign(a)
    bp, bn = _split_sign(b)
    out = _kronecker_nonneg(ap, bp, n) if any(ap) and any(bp) else [0] * (n + 1)
    for x, y, sign in ((ap, bn, -1), (an, bp, -1), (an, bn, 1)):
        if x is not None and y is not None and any(x) and any(y):
            part = _kronecker_nonneg(x, y, n)
            out = [o + sign * p for o, p in zip(out, part)]
    return out


def _mul_schoolbook(a, b, n: int) -> list:
    out = [0] * (n + 1)
    for i, x in enumerate(a):
        if not x or i > n:
            continue
        for j in range(min(len(b), n + 1 - i)):
            if b[j]:
                out[i + j] += x * b[j]
    return out


def _mul(a, b, n: int) -> list:
    if _all_int(a) and _all_int(b):
        return _mul_int(list(a), list(b), n)
    return [_norm(c) for c in _mul_schoolbook(a, b, n)]


# ---------------------------------------------------------------------------


class TruncatedSeries:
    """A power series known exactly modulo ``z^(order+1)``.

    ``coeffs[i]`` is the coefficient of ``z^i`` for ``0 <= i <= order``.
    Binary operations truncate to the smaller order of the two operands.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Iterable, order: Optional[int] = None):
        cs = [_norm(c if isinstance(c, (int, Fraction)) else Fraction(c)) for c in coeffs]
        if order is None:
            order = max(len(cs) - 1, 0)
        if order < 0:
            raise ValueError("order must be nonnegative")
        cs = cs[: order + 1] + [0] * (order + 1 - len(cs))
        self.coeffs = cs
        self.order = order

    # constructors
    @classmethod
    def zero(cls, order: int) -> "TruncatedSeries":
        return cls._raw([0] * (order + 1), order)

    @classmethod
    def one(cls, order: int) -> "TruncatedSeries":
        return cls.monomial(0, order)

    @classmethod
    def monomial(cls, k: int, order: int, coeff: Number = 1) -> "TruncatedSeries":
        cs = [0] * (order + 1)
        if k <= order:
            cs[k] = coeff
        return cls(cs, order)

    @classmethod
    def z(cls, order: int) -> "TruncatedSeries":
        return cls.monomial(1, order)

    @classmethod
    def _raw(cls, coeffs: list, order: int) -> "TruncatedSeries":
        s = object.__new__(cls)
        s.coeffs = coeffs
        s.order = order
        return s

    # basic protocol
    def __getitem__(self, n: int) -> Number:
        if n < 0:
            return 0
        if n > self.order:
            raise IndexError(f"coefficient {n} beyond truncation order {self.order}")
        return self.coeffs[n]

    def __len__(self) -> int:
        return self.order + 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.order, tuple(self.coeffs)))

    def __repr__(self) -> str:
        terms = [f"{c}*z^{i}" for i, c in enumerate(self.coeffs[:8]) if c]
        more = " + ..." if self.order >= 8 else ""
        return f"TruncatedSeries({' + '.join(terms) or '0'}{more}; O(z^{self.order + 1}))"

    def truncate(self, order: int) -> "TruncatedSeries":
        order = min(order, self.order)
        return TruncatedSeries._raw(self.coeffs[: order + 1], order)

    def is_integral(self) -> bool:
        return _all_int(self.coeffs)

    def is_nonnegative(self) -> bool:
        return all(c >= 0 for c in self.coeffs)

    def valuation(self) -> Optional[int]:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return None

    # arithmetic
    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries.monomial(0, self.order, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        n = min(self.order, other.order)
        return TruncatedSeries._raw([_norm(a + b) for a, b in zip(self.coeffs[: n + 1], other.coeffs)], n)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries._raw([-c for c in self.coeffs], self.order)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries._raw([_norm(c * other) for c in self.coeffs], self.order)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        n = min(self.order, other.order)
        return TruncatedSeries._raw(_mul(self.coeffs, other.coeffs, n), n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / other)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = TruncatedSeries.one(self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def inverse(self) -> "TruncatedSeries":
        """Multiplicative inverse; the constant term must be nonzero."""
        f = self.coeffs
        if f[0] == 0:
            raise ZeroDivisionError("series with zero constant term is not invertible")
        n = self.order
        unit = f[0] in (1, -1)
        inv0 = f[0] if unit else Fraction(1) / f[0]
        g = [0] * (n + 1)
        g[0] = _norm(inv0)
        nz = [(i, c) for i, c in enumerate(f) if c and i > 0]
        for m in range(1, n + 1):
            acc = 0
            for i, c in nz:
                if i > m:
                    break
                acc += c * g[m - i]
            g[m] = _norm(-acc * inv0)
        return TruncatedSeries._raw(g, n)

    def quasi_inverse(self) -> "TruncatedSeries":
        """``1 / (1 - f)`` for ``f(0) = 0``."""
        if self.coeffs[0] != 0:
            raise ValueError("quasi-inverse needs a zero constant term")
        return (1 - self).inverse()

    def derivative(self) -> "TruncatedSeries":
        n = self.order
        if n == 0:
            return TruncatedSeries._raw([0], 0)
        return TruncatedSeries._raw([_norm(i * self.coeffs[i]) for i in range(1, n + 1)], n - 1)

    def shift(self, k: int) -> "TruncatedSeries":
        """Multiply by ``z^k``; the known order grows by ``k``."""
        return TruncatedSeries._raw([0] * k + list(self.coeffs), self.order + k)

    def compose(self, g: "TruncatedSeries") -> "TruncatedSeries":
        """``self(g)`` for ``g(0) = 0`` by Horner's rule."""
        if g.coeffs[0] != 0:
            raise ValueError("composition needs g(0) = 0")
        n = min(self.order, g.order)
        g = g.truncate(n)
        deg = n
        while deg > 0 and self.coeffs[deg] == 0:
            deg -= 1
        acc = TruncatedSeries.monomial(0, n, self.coeffs[deg])
        for i in range(deg - 1, -1, -1):
            acc = acc * g
            acc.coeffs[0] = _norm(acc.coeffs[0] + self.coeffs[i])
        return acc

    def evaluate(self, x: float) -> float:
        """Float value of the truncated polynomial at ``x``."""
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    # serialization
    def to_json(self) -> dict:
        return {"order": self.order, "coefficients": [str(Fraction(c)) for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict) -> "TruncatedSeries":
        return cls([Fraction(c) for c in data["coefficients"]], int(data["order"]))


def series_add(f, g):
    return f + g


def series_mul(f, g):
    return f * g


def series_divide(f, g):
    return f / g


def series_compose(f, g):
    return f.compose(g)


def series_derivative(f):
    return f.derivative()


def series_reciprocal(f):
    """``1/(1-f)`` for ``f(0) = 0``."""
    return f.quasi_inverse()


# ---------------------------------------------------------------------------
# families


def normalize_family(family: Iterable) -> tuple[Permutation, ...]:
    """Sorted, duplicate-free tuple of simple permutations."""
    fam = sorted({as_permutation(a) for a in family})
    for alpha in fam:
        if not is_simple(alpha):
            raise ValueError(f"{alpha!r} is not a simple permutation")
    return tuple(fam)


def s_polynomial(family: Iterable, order: Optional[int] = None) -> TruncatedSeries:
    """``sum over the family of z^|alpha|``."""
    fam = normalize_family(family)
    top = max((len(a) for a in fam), default=0)
    if order is None:
        order = max(top, 1)
    cs = [0] * (order + 1)
    for alpha in fam:
        if len(alpha) <= order:
            cs[len(alpha)] += 1
    return TruncatedSeries(cs, order)


def occ_series(theta, family: Iterable, order: Optional[int] = None) -> TruncatedSeries:
    """``sum over alpha in the family of occ(theta, alpha) z^(|alpha| - |theta|)``."""
    theta = as_permutation(theta)
    fam = normalize_family(family)
    k = len(theta)
    top = max((len(a) - k for a in fam), default=0)
    if order is None:
        order = max(top, 0)
    cs = [0] * (order + 1)
    for alpha in fam:
        e = len(alpha) - k
        if 0 <= e <= order:
            cs[e] += occ_count(theta, alpha)
    return TruncatedSeries(cs, order)


# ---------------------------------------------------------------------------
# trees without marks


def _solve_recurrence(s: TruncatedSeries, order: int) -> TruncatedSeries:
    degrees = [m for m in range(2, s.order + 1) if s.coeffs[m]]
    top = max(degrees, default=1)
    u = [0] * (order + 1)
    t = [0] * (order + 1)
    # powers[m][n] = [z^n] T^m for 2 <= m <= top
    powers = {m: [0] * (order + 1) for m in range(2, top + 1)}
    for n in range(1, order + 1):
        for m in range(2, top + 1):
            prev = t if m == 2 else powers[m - 1]
            powers[m][n] = sum(t[i] * prev[n - i] for i in range(1, n))
        conv = sum(u[i] * t[n - i] for i in range(1, n))
        u[n] = (1 if n == 1 else 0) + conv + sum(s.coeffs[m] * powers[m][n] for m in degrees)
        t[n] = u[n] + conv
    return TruncatedSeries(u, order)


def _lambda_series(u: TruncatedSeries, s: TruncatedSeries) -> TruncatedSeries:
    q = u.quasi_inverse()
    t = u * q
    return u * t + s.compose(t)


def _solve_newton(s: TruncatedSeries, order: int) -> TruncatedSeries:
    sp = s.derivative() if s.order > 0 else s
    done = 1
    u = TruncatedSeries.z(order).truncate(1)
    while done < order:
        done = min(2 * done + 1, order)
        u = TruncatedSeries(u.coeffs, done)
        s_cut = s.truncate(done) if s.order >= done else TruncatedSeries(s.coeffs, done)
        sp_cut = TruncatedSeries(sp.coeffs, done) if sp.order < done else sp.truncate(done)
        q = u.quasi_inverse()
        t = u * q
        f = TruncatedSeries.z(done) + u * t + s_cut.compose(t) - u
        fprime = (1 + sp_cut.compose(t)) * q * q - 2
        u = u - f * fprime.inverse()
    return u.truncate(order)


def solve_t_notplus(s_series: TruncatedSeries, order: int, method: str = "recurrence") -> TruncatedSeries:
    """Series of canonical trees whose root is not PLUS.

    Solves ``u = z + u^2/(1-u) + S(u/(1-u))`` to the given order, either by
    peeling one coefficient at a time (``"recurrence"``) or by Newton
    iteration on series (``"newton"``).
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if any(s_series.coeffs[i] for i in range(min(4, s_series.order + 1))):
        raise ValueError("S must have no terms below z^4")
    if method == "recurrence":
        return _solve_recurrence(s_series, order)
    if method == "newton":
        return _solve_newton(s_series, order)
    raise ValueError(f"unknown method {method!r}")


def t_from_t_notplus(t_np: TruncatedSeries) -> TruncatedSeries:
    """``T = u / (1 - u)``."""
    if t_np.coeffs[0] != 0:
        raise ValueError("T_not+ must vanish at 0")
    return t_np * t_np.quasi_inverse()


def class_counts(family: Iterable, n_max: int) -> list[int]:
    """``[|<S>_1|, ..., |<S>_n_max|]``."""
    fam = normalize_family(family)
    u = solve_t_notplus(s_polynomial(fam, n_max), n_max)
    t = t_from_t_notplus(u)
    return [int(t[n]) for n in range(1, n_max + 1)]


# ---------------------------------------------------------------------------
# trees with one marked leaf


@dataclass(frozen=True)
class MarkedSeriesPack:
    t_prime: TruncatedSeries
    t_plus: TruncatedSeries
    t_minus: TruncatedSeries
    t_np_prime: TruncatedSeries
    t_np_plus: TruncatedSeries
    t_np_minus: TruncatedSeries
    t_nm_prime: TruncatedSeries
    t_nm_plus: TruncatedSeries
    t_nm_minus: TruncatedSeries
    w: TruncatedSeries


def marked_series(t_np: TruncatedSeries, t: TruncatedSeries, s_series: TruncatedSeries) -> MarkedSeriesPack:
    """Series of trees with one marked leaf, counted by unmarked leaves."""
    order = min(t_np.order, t.order)
    t_np, t = t_np.truncate(order), t.truncate(order)
    q = t_np.quasi_inverse()
    w = q * q - 1
    sp = s_series.derivative() if s_series.order > 0 else s_series
    sp = TruncatedSeries(sp.coeffs, order) if sp.order < order else sp.truncate(order)
    sp_t = sp.compose(t)
    x = w * sp_t + w + sp_t
    t_plus = x.quasi_inverse()
    t_nm_plus = t_plus * (1 + w).inverse()
    t_np_plus = x * t_nm_plus
    t_prime = t.derivative()
    u_prime = t_np.derivative()
    return MarkedSeriesPack(
        t_prime=t_prime,
        t_plus=t_plus,
        t_minus=t_plus,
        t_np_prime=u_prime,
        t_np_plus=t_np_plus,
        t_np_minus=t_nm_plus,
        t_nm_prime=u_prime,
        t_nm_plus=t_nm_plus,
        t_nm_minus=t_np_plus,
        w=w,
    )


@dataclass(frozen=True)
class SeriesBundle:
    """Everything needed to evaluate decorated-tree series for one family."""

    family: tuple
    order: int
    s: TruncatedSeries
    t_np: TruncatedSeries
    t: TruncatedSeries
    marked: MarkedSeriesPack


@lru_cache(maxsize=16)
def series_bundle(family: tuple, order: int) -> SeriesBundle:
    s = s_polynomial(family, order)
    u = solve_t_notplus(s, order)
    t = t_from_t_notplus(u)
    return SeriesBundle(family, order, s, u, t, marked_series(u, t, s))


def _bundle_for(family, order: int) -> SeriesBundle:
    return series_bundle(normalize_family(family), order)


@lru_cache(maxsize=256)
def _occ_of_t(theta: Permutation, family: tuple, order: int) -> Optional[TruncatedSeries]:
    occ = occ_series(theta, family, order)
    if not any(occ.coeffs):
        return None
    return occ.compose(series_bundle(family, order).t)


# ---------------------------------------------------------------------------
# decorated trees


def nonlinear_nodes(t0) -> frozenset:
    return frozenset(path for path, x in internal_nodes(t0) if not is_linear(x.label))


def _decorated_factors(t0, v_s: frozenset, bundle: SeriesBundle) -> Optional[list[TruncatedSeries]]:
    """Factors of the product formula, or None when an occurrence series vanishes."""
    pack = bundle.marked
    order = bundle.order
    factors = []
    nodes = internal_nodes(t0)
    if () in v_s:
        factors.append(pack.t_prime)
    elif t0.label == PLUS:
        factors.append(pack.t_plus)
    else:
        factors.append(pack.t_minus)
    for path, x in nodes:
        d_prime = d_plus = d_minus = 0
        for i, c in enumerate(x.children):
            cpath = path + (i,)
            if c is LEAF or cpath in v_s:
                d_prime += 1
            elif c.label == PLUS:
                d_plus += 1
            else:
                d_minus += 1
        d = len(x.children)
        if path in v_s:
            theta = label_permutation(x.label, d)
            occ = _occ_of_t(theta, bundle.family, order)
            if occ is None:
                return None
            factors.append(occ)
            factors.extend([pack.t_prime] * d_prime)
            factors.extend([pack.t_plus] * d_plus)
            factors.extend([pack.t_minus] * d_minus)
        else:
            if x.label == PLUS:
                seq, prime, plus_, minus_ = bundle.t_np, pack.t_np_prime, pack.t_np_plus, pack.t_np_minus
            else:
                seq, prime, plus_, minus_ = bundle.t_np, pack.t_nm_prime, pack.t_nm_plus, pack.t_nm_minus
            factors.append(seq.quasi_inverse() ** (d + 1))
            factors.extend([prime] * d_prime)
            factors.extend([plus_] * d_plus)
            factors.extend([minus_] * d_minus)
    return factors


def _check_decoration(t0, v_s) -> frozenset:
    if t0 is LEAF:
        raise ValueError("decorated trees need at least one internal node")
    v_s = frozenset(tuple(p) for p in v_s)
    paths = {path for path, _ in internal_nodes(t0)}
    if not v_s <= paths:
        raise ValueError("v_s contains paths that are not internal nodes")
    missing = nonlinear_nodes(t0) - v_s
    if missing:
        raise ValueError(f"v_s must contain every nonlinear node; missing {sorted(missing)}")
    return v_s


def decorated_tree_series(t0, v_s, family: Iterable, order: int) -> TruncatedSeries:
    """Series of marked canonical trees inducing ``t0`` with simple-ancestor set ``v_s``.

    ``v_s`` is a set of node paths (tuples of child indices from the root).
    The series counts trees by their total number of leaves.
    """
    v_s = _check_decoration(t0, v_s)
    k = tree_size(t0)
    if order < k:
        return TruncatedSeries.zero(order)
    bundle = _bundle_for(family, order)
    factors = _decorated_factors(t0, v_s, bundle)
    inner_order = order - k
    acc = TruncatedSeries.one(inner_order)
    if factors is not None:
        for f in factors:
            acc = acc * f.truncate(inner_order)
    else:
        acc = TruncatedSeries.zero(inner_order)
    return acc.shift(k)


def _coefficient_of_product(factors: list[TruncatedSeries], m: int) -> Number:
    if m < 0:
        return 0
    acc = TruncatedSeries.one(m)
    for f in factors[:-1]:
        acc = acc * f.truncate(m)
    last = factors[-1]
    return _norm(sum(acc.coeffs[i] * last.coeffs[m - i] for i in range(m + 1)))


def decorations(t0) -> list[frozenset]:
    """All admissible ``v_s``: supersets of the nonlinear nodes."""
    required = nonlinear_nodes(t0)
    optional = sorted({path for path, _ in internal_nodes(t0)} - required)
    out = []
    for r in range(len(optional) + 1):
        for extra in combinations(optional, r):
            out.append(required | frozenset(extra))
    return out


def marked_tree_count(pi, family: Iterable, n: int, order: Optional[int] = None) -> int:
    """Number of pairs ``(sigma, I)`` with ``sigma`` in the class of size ``n`` and ``pat_I(sigma) = pi``."""
    pi = as_permutation(pi)
    k = len(pi)
    order = n if order is None else order
    if n > order:
        raise ValueError(f"size {n} exceeds series order {order}")
    if k > n:
        return 0
    if k == 1:
        return n * int(_bundle_for(family, order).t[n])
    bundle = _bundle_for(family, order)
    total = 0
    for t0 in enumerate_substitution_trees(pi):
        for v_s in decorations(t0):
            factors = _decorated_factors(t0, v_s, bundle)
            if factors is None:
                continue
            total += _coefficient_of_product(factors, n - k)
    return total


def exact_expected_occ(pi, family: Iterable, n: int, order: Optional[int] = None) -> Fraction:
    """Exact ``E[occ(pi, sigma_n)]/C(n,k)`` for ``sigma_n`` uniform in the class at size ``n``."""
    pi = as_permutation(pi)
    order = n if order is None else order
    if n > order:
        raise ValueError(f"size {n} exceeds series order {order}")
    k = len(pi)
    if k > n:
        raise ValueError(f"pattern size {k} exceeds n = {n}")
    bundle = _bundle_for(family, order)
    size = bundle.t[n]
    return Fraction(marked_tree_count(pi, family, n, order), comb(n, k) * size)


__all__ = [
    "DEFAULT_ORDER", "MarkedSeriesPack", "SeriesBundle", "TruncatedSeries",
    "class_counts", "decorated_tree_series", "decorations", "exact_expected_occ",
    "marked_series", "marked_tree_count", "nonlinear_nodes", "normalize_family",
    "occ_series", "s_polynomial", "series_add", "series_bundle", "series_compose",
    "series_derivative", "series_divide", "series_mul", "series_reciprocal",
    "solve_t_notplus", "t_from_t_notplus",
]
