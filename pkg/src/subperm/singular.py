"""Numeric singularity analysis of the tree-counting series.

A family of simple permutations enters only through a handful of numeric
evaluators (its generating function and the first two derivatives, plus
occurrence series of small patterns), which lets finite and infinite
families share one code path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from functools import lru_cache
from math import comb, factorial, gamma, inf, isfinite, sqrt
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence

from .perm import Permutation, all_permutations, as_permutation, is_simple, occ_count
from .series import normalize_family, occ_series
from .trees import (
    LEAF,
    catalan,
    default_of_binarity,
    enumerate_substitution_trees,
    expanded_tree_count,
    internal_nodes,
    label_permutation,
    shape_of,
    tree_size,
)

ROOT_TOL = 1e-12
EQ_TOL = 1e-9
MAX_BISECTION = 200

STANDARD = "standard"
CRITICAL = "critical"
DEGENERATE = "degenerate"
INDETERMINATE = "indeterminate"

Evaluator = Callable[[float], float]


# ---------------------------------------------------------------------------
# family specifications


class FamilySpec:
    """Numeric view of a family of simple permutations."""

    name: str = "family"
    r_s: float = inf

    def s(self, x: float) -> float:
        raise NotImplementedError

    def s_prime(self, x: float) -> float:
        raise NotImplementedError

    def s_double_prime(self, x: float) -> float:
        raise NotImplementedError

    def occ(self, theta, x: float) -> float:
        """Occurrence series of ``theta`` evaluated at ``x``."""
        theta = as_permutation(theta)
        if theta == (1, 2):
            return self.occ12(x)
        if theta == (2, 1):
            return self.occ21(x)
        raise KeyError(f"no occurrence evaluator for {theta!r}")

    def occ12(self, x: float) -> float:
        raise NotImplementedError

    def occ21(self, x: float) -> float:
        raise NotImplementedError

    def is_finite(self) -> bool:
        return False

    def occ_bounds(self, x: float) -> Optional[tuple[tuple[float, float], tuple[float, float]]]:
        """Rigorous ``((lo12, hi12), (lo21, hi21))`` when the family supports it."""
        return None


class FiniteFamily(FamilySpec):
    """A finite list of simple permutations; all evaluators are polynomials."""

    def __init__(self, members: Iterable = (), name: Optional[str] = None):
        self.members = normalize_family(members)
        self.name = name or (",".join(str(m).replace(" ", "") for m in self.members) or "separable")
        self.r_s = inf
        self._sizes: Dict[int, int] = {}
        for alpha in self.members:
            self._sizes[len(alpha)] = self._sizes.get(len(alpha), 0) + 1

    def is_finite(self) -> bool:
        return True

    def s(self, x):
        return sum(c * x ** m for m, c in self._sizes.items())

    def s_prime(self, x):
        return sum(c * m * x ** (m - 1) for m, c in self._sizes.items())

    def s_double_prime(self, x):
        return sum(c * m * (m - 1) * x ** (m - 2) for m, c in self._sizes.items())

    @lru_cache(maxsize=None)
    def _occ_poly(self, theta: Permutation) -> tuple:
        return tuple(occ_series(theta, self.members).coeffs)

    def occ(self, theta, x):
        coeffs = self._occ_poly(as_permutation(theta))
        return sum(c * x ** i for i, c in enumerate(coeffs) if c)

    def occ12(self, x):
        return self.occ((1, 2), x)

    def occ21(self, x):
        return self.occ((2, 1), x)

    def __repr__(self):
        return f"FiniteFamily({self.name!r})"


@dataclass
class SymbolicFamily(FamilySpec):
    """An infinite family described by closed-form evaluators.

    ``occ_truncated`` and ``tail_bound`` are optional: the former returns
    truncated ``(occ12, occ21)`` sums at ``x`` and the latter nonnegative
    bounds ``(tail12, tail21)`` on what the truncation leaves out.
    ``critical_exponent`` lets a caller assert the singular exponent of a
    critical family.
    """

    name: str
    r_s: float
    s: Evaluator
    s_prime: Evaluator
    s_double_prime: Evaluator
    occ12: Evaluator
    occ21: Evaluator
    occ_truncated: Optional[Callable[[float], tuple[float, float]]] = None
    tail_bound: Optional[Callable[[float], tuple[float, float]]] = None
    extra_occ: Dict[Permutation, Evaluator] = field(default_factory=dict)
    critical_exponent: Optional[float] = None
    s_prime_limit: Optional[float] = None

    def occ(self, theta, x):
        theta = as_permutation(theta)
        if theta in self.extra_occ:
            return self.extra_occ[theta](x)
        return FamilySpec.occ(self, theta, x)

    def occ_bounds(self, x):
        if self.occ_truncated is None or self.tail_bound is None:
            return None
        t12, t21 = self.occ_truncated(x)
        b12, b21 = self.tail_bound(x)
        lo12, hi12, lo21, hi21 = t12, t12 + b12, t21, t21 + b21
        # occ12 + occ21 = S''/2 exactly, so each bound also constrains the other series
        total = self.s_double_prime(x) / 2
        lo12, hi12 = max(lo12, total - hi21), min(hi12, total - lo21)
        lo21, hi21 = max(lo21, total - hi12), min(hi21, total - lo12)
        return (lo12, hi12), (lo21, hi21)


def as_family(obj) -> FamilySpec:
    if isinstance(obj, FamilySpec):
        return obj
    if isinstance(obj, str):
        return builtin_family(obj)
    return FiniteFamily(obj)


# -- increasing oscillations -------------------------------------------------


def increasing_oscillations() -> SymbolicFamily:
    """Simple increasing oscillations: two of each size from 4 on."""

    def s(z):
        return 2 * z ** 4 / (1 - z)

    def sp(z):
        h = 1 / (1 - z)
        return 2 * (4 * z ** 3 * h + z ** 4 * h * h)

    def spp(z):
        h = 1 / (1 - z)
        return 2 * (12 * z ** 2 * h + 8 * z ** 3 * h ** 2 + 2 * z ** 4 * h ** 3)

    def occ12(z):
        return 2 * z ** 2 * (3 - 3 * z + z ** 2) / (1 - z) ** 3

    def occ21(z):
        return 2 * z ** 2 * (3 - 2 * z) / (1 - z) ** 2

    return SymbolicFamily("increasing-oscillations", 1.0, s, sp, spp, occ12, occ21)


# -- simple permutations avoiding 321 ---------------------------------------


def _av321_parts(z):
    q = sqrt(1 - 2 * z - 3 * z * z)
    f = 1 - z - 2 * z * z - 2 * z ** 3 - q
    h = 1 / (2 + 2 * z)
    return q, f, h


def _av321_s(z):
    _, f, h = _av321_parts(z)
    return f * h


def _av321_sp(z):
    q, f, h = _av321_parts(z)
    if q == 0:
        return inf
    qp = -(1 + 3 * z) / q
    fp = -1 - 4 * z - 6 * z * z - qp
    hp = -2 / (2 + 2 * z) ** 2
    return fp * h + f * hp


def _av321_spp(z):
    q, f, h = _av321_parts(z)
    if q == 0:
        return inf
    qp = -(1 + 3 * z) / q
    qpp = -3 / q - (1 + 3 * z) ** 2 / q ** 3
    fp = -1 - 4 * z - 6 * z * z - qp
    fpp = -4 - 12 * z - qpp
    hp = -2 / (2 + 2 * z) ** 2
    hpp = 8 / (2 + 2 * z) ** 3
    return fpp * h + 2 * fp * hp + f * hpp


@lru_cache(maxsize=None)
def av321_simple_statistics(max_size: int = 12) -> dict[int, tuple[int, int]]:
    """``{m: (number of simples in Av(321) of size m, their total inversions)}``.

    Av(321) is grown by inserting the maximum, which keeps 321-avoidance
    exactly when everything to its right is increasing.
    """
    stats = {}
    level = [(1,)]
    for n in range(2, max_size + 1):
        grown = []
        for s in level:
            i = len(s)
            while True:
                grown.append(s[:i] + (n,) + s[i:])
                if i == 0 or (i < len(s) and s[i - 1] > s[i]):
                    break
                i -= 1
        level = grown
        count = inversions = 0
        for p in level:
            if is_simple(p):
                count += 1
                inversions += sum(1 for a in range(n) for b in range(a + 1, n) if p[a] > p[b])
        stats[n] = (count, inversions)
    return stats


@lru_cache(maxsize=None)
def av321_simple_counts(max_size: int) -> tuple[int, ...]:
    """Exact coefficients ``s_0..s_max_size`` of the closed-form series."""
    n = max_size + 3
    # sqrt(1 - 2z - 3z^2) via q^2 = a
    a = [0] * (n + 1)
    a[0], a[1], a[2] = 1, -2, -3
    q = [0] * (n + 1)
    q[0] = 1
    for m in range(1, n + 1):
        q[m] = (a[m] - sum(q[i] * q[m - i] for i in range(1, m))) // 2
    num = [-c for c in q]
    for i, c in enumerate((1, -1, -2, -2)):
        num[i] += c
    # divide by 2(1 + z)
    out = [0] * (n + 1)
    for m in range(n + 1):
        out[m] = num[m] - (out[m - 1] if m else 0)
    return tuple(c // 2 for c in out[: max_size + 1])


def av321_simples(truncation: int = 12, tail_terms: int = 400) -> SymbolicFamily:
    """Simple permutations of Av(321), with interval support for ``p``.

    The inversion data is exact up to ``truncation``; beyond it a size-m
    member contributes at most ``m^2/4`` inversions and at most ``C(m,2)``
    non-inversions.
    """
    stats = av321_simple_statistics(truncation)
    counts = av321_simple_counts(truncation + tail_terms)

    def truncated(x):
        o21 = sum(inv * x ** (m - 2) for m, (_, inv) in stats.items())
        o12 = sum((cnt * comb(m, 2) - inv) * x ** (m - 2) for m, (cnt, inv) in stats.items())
        return o12, o21

    def tail(x):
        t12 = t21 = 0.0
        for m in range(truncation + 1, truncation + tail_terms + 1):
            w = counts[m] * x ** (m - 2)
            t21 += w * m * m / 4
            t12 += w * comb(m, 2)
        return t12, t21

    def occ21(x):
        # truncated value plus half the tail bound as a point estimate
        return truncated(x)[1] + tail(x)[1] / 2

    def occ12(x):
        # the two occurrence series add up to S''/2
        return _av321_spp(x) / 2 - occ21(x)

    return SymbolicFamily(
        "av321-simples", 1 / 3, _av321_s, _av321_sp, _av321_spp, occ12, occ21,
        occ_truncated=truncated, tail_bound=tail,
    )


BUILTIN_FAMILIES = {
    "increasing-oscillations": increasing_oscillations,
    "av321-simples": av321_simples,
}


def builtin_family(name: str) -> FamilySpec:
    try:
        return BUILTIN_FAMILIES[name]()
    except KeyError:
        raise KeyError(f"unknown built-in family {name!r}; choose from {sorted(BUILTIN_FAMILIES)}") from None


# ---------------------------------------------------------------------------
# Lambda and friends


def lambda_radius(spec: FamilySpec) -> float:
    return 1.0 if spec.r_s == inf else spec.r_s / (1 + spec.r_s)


def _check_u(spec, u):
    if not 0 <= u < lambda_radius(spec):
        raise ValueError(f"u = {u} outside [0, {lambda_radius(spec)})")


def lambda_eval(spec: FamilySpec, u: float) -> float:
    _check_u(spec, u)
    v = u / (1 - u)
    return u * u / (1 - u) + spec.s(v)


def lambda_prime(spec: FamilySpec, u: float) -> float:
    _check_u(spec, u)
    v = u / (1 - u)
    return (1 + spec.s_prime(v)) / (1 - u) ** 2 - 1


def lambda_double_prime(spec: FamilySpec, u: float) -> float:
    _check_u(spec, u)
    v = u / (1 - u)
    return 2 * (1 + spec.s_prime(v)) / (1 - u) ** 3 + spec.s_double_prime(v) / (1 - u) ** 4


# ---------------------------------------------------------------------------
# regimes


def _threshold(r: float) -> float:
    return 2 / (1 + r) ** 2 - 1


def _safe(f, x) -> float:
    try:
        v = f(x)
    except (OverflowError, ZeroDivisionError, ValueError):
        return inf
    return v if isfinite(v) else inf


def classify_regime(spec, eq_tol: float = EQ_TOL, max_probes: int = 60) -> str:
    """Sign of ``S'(R_S) - 2/(1+R_S)^2 + 1`` by monotone probing below ``R_S``."""
    spec = as_family(spec)
    r = spec.r_s
    if spec.is_finite() or r == inf or r > sqrt(2) - 1:
        return STANDARD
    if r <= 0:
        raise ValueError("R_S must be positive")
    c = _threshold(r)
    known_limit = getattr(spec, "s_prime_limit", None)
    if known_limit is not None:
        return _compare_limit(known_limit, c, eq_tol)
    prev = None
    for j in range(1, max_probes + 1):
        v = _safe(spec.s_prime, r * (1 - 2.0 ** -j))
        if v == inf or v > c + eq_tol:
            return STANDARD
        if prev is not None and abs(v - prev) < eq_tol:
            return _compare_limit(v, c, eq_tol)
        prev = v
    return INDETERMINATE


def _compare_limit(value, c, eq_tol):
    if abs(value - c) <= eq_tol:
        return CRITICAL
    return STANDARD if value > c else DEGENERATE


def _kappa_function(spec):
    return lambda t: _safe(spec.s_prime, t) - _threshold(t)


def solve_kappa(spec, tol: float = ROOT_TOL, max_iter: int = MAX_BISECTION) -> float:
    """Unique root of ``S'(t) = 2/(1+t)^2 - 1`` in ``(0, R_S)`` by bisection."""
    spec = as_family(spec)
    g = _kappa_function(spec)
    lo = 0.0
    if spec.r_s == inf:
        hi = 1.0
        while g(hi) <= 0:
            hi *= 2
            if hi > 1e6:
                raise ValueError("no sign change found for kappa")
    else:
        hi = spec.r_s
        # S' may be undefined at R_S itself; probe just below it
        probe = hi * (1 - 1e-15)
        if g(probe) <= 0:
            raise ValueError("no sign change below R_S; the family is not in the standard regime")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = (lo + hi) / 2
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


# ---------------------------------------------------------------------------
# constants


def p_from_occ(kappa: float, occ12: float, occ21: float) -> float:
    c = (1 + kappa) ** 3
    return (c * occ12 + 1) / (c * (occ12 + occ21) + 2)


@dataclass
class RegimeReport:
    regime: str
    kappa: Optional[float] = None
    tau: Optional[float] = None
    rho: Optional[float] = None
    beta: Optional[float] = None
    lambda_: Optional[float] = None
    gamma: Optional[float] = None
    nu_plus: Optional[float] = None
    nu_minus: Optional[float] = None
    p: Optional[float] = None
    p_interval: Optional[tuple[float, float]] = None

    FIELDS = ("regime", "kappa", "tau", "rho", "beta", "lambda", "gamma", "nu_plus", "nu_minus", "p", "p_interval")

    def gamma_table(self) -> dict[tuple[str, str], float]:
        """Leading constants keyed by (root constraint, mark type).

        Root constraints are ``""``, ``"not+"`` and ``"not-"``; mark types
        are ``"'"``, ``"+"`` and ``"-"``.  Every entry is ``gamma`` times a
        power of ``lambda``: one factor for an unconstrained root, one for
        an unconstrained mark.
        """
        g, lam = self.gamma, self.lambda_
        table = {}
        for sub, a in (("", 1), ("not+", 0), ("not-", 0)):
            for sup, b in (("'", 1), ("+", 0), ("-", 0)):
                table[(sub, sup)] = g * lam ** (a + b)
        return table

    def to_dict(self) -> dict:
        def fmt(x):
            return None if x is None else format(x, ".15g")

        out = {"regime": self.regime}
        for name in self.FIELDS[1:-1]:
            attr = "lambda_" if name == "lambda" else name
            out[name] = fmt(getattr(self, attr))
        out["p_interval"] = None if self.p_interval is None else [fmt(x) for x in self.p_interval]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegimeReport":
        def num(x):
            return None if x is None else float(x)

        kw = {name if name != "lambda" else "lambda_": num(data.get(name)) for name in cls.FIELDS[1:-1]}
        interval = data.get("p_interval")
        return cls(
            regime=data["regime"],
            p_interval=None if interval is None else (float(interval[0]), float(interval[1])),
            **kw,
        )

    @classmethod
    def from_json(cls, text: str) -> "RegimeReport":
        return cls.from_dict(json.loads(text))


def p_interval(spec, kappa: float) -> Optional[tuple[float, float]]:
    """Rigorous range of ``p`` from truncated occurrence sums plus tail bounds.

    Each of the two occurrence series is bounded on its own; ``p`` grows with
    the 12-series and shrinks with the 21-series.
    """
    bounds = as_family(spec).occ_bounds(kappa)
    if bounds is None:
        return None
    (lo12, hi12), (lo21, hi21) = bounds
    return p_from_occ(kappa, lo12, hi21), p_from_occ(kappa, hi12, lo21)


def standard_constants(spec, tol: float = ROOT_TOL) -> RegimeReport:
    spec = as_family(spec)
    kappa = solve_kappa(spec, tol)
    tau = kappa / (1 + kappa)
    rho = tau - lambda_eval(spec, tau)
    beta = sqrt(2 * rho / lambda_double_prime(spec, tau))
    lam = 1 / (1 - tau) ** 2
    gam = beta * (1 - tau) ** 2 / (2 * rho)
    nu_p, nu_m = spec.occ12(kappa), spec.occ21(kappa)
    return RegimeReport(
        regime=STANDARD, kappa=kappa, tau=tau, rho=rho, beta=beta, lambda_=lam, gamma=gam,
        nu_plus=nu_p, nu_minus=nu_m, p=p_from_occ(kappa, nu_p, nu_m),
        p_interval=p_interval(spec, kappa),
    )


def regime_report(spec, tol: float = ROOT_TOL, eq_tol: float = EQ_TOL) -> RegimeReport:
    """Classify, then fill in whatever constants the regime supports."""
    spec = as_family(spec)
    regime = classify_regime(spec, eq_tol)
    if regime == STANDARD:
        return standard_constants(spec, tol)
    report = RegimeReport(regime=regime)
    delta = getattr(spec, "critical_exponent", None)
    if regime == CRITICAL and delta is not None and delta > 2:
        r = spec.r_s
        x = r * (1 - 1e-12)
        report.p = p_from_occ(r, spec.occ12(x), spec.occ21(x))
    return report


# ---------------------------------------------------------------------------
# limit densities


def limit_density_standard(pi, report: RegimeReport) -> float:
    """Pattern density of the biased Brownian separable permuton."""
    pi = as_permutation(pi)
    k = len(pi)
    if k == 1:
        return 1.0
    _, n_sep, r_plus, r_minus, _ = expanded_tree_count(pi)
    p = report.p
    return n_sep / catalan(k - 1) * p ** r_plus * (1 - p) ** r_minus


def b_pi_constant(pi, report: RegimeReport, spec) -> float:
    """Leading constant of ``E[occ] ~ B n^(-db/2)`` in the standard regime."""
    pi = as_permutation(pi)
    spec = as_family(spec)
    k = len(pi)
    n_tilde, _, r_plus, r_minus, simples = expanded_tree_count(pi)
    db = sum(len(t) - 2 for t in simples)
    tau, rho, beta, p = report.tau, report.rho, report.beta, report.p
    kappa = tau / (1 - tau)
    prefactor = factorial(k) * sqrt(math.pi) / (2 ** (2 * k - 2 - db) * gamma(k - (db + 1) / 2))
    value = n_tilde * prefactor * p ** r_plus * (1 - p) ** r_minus
    for theta in simples:
        value *= (beta / (1 - tau) ** 2) ** len(theta) * spec.occ(theta, kappa) / rho
    return value


def nu_stable(t0, delta: float) -> float:
    """Probability of the plane shape of ``t0`` under the delta-stable induced-tree law."""
    if not 1 < delta < 2:
        raise ValueError(f"delta = {delta} outside (1, 2)")
    k = tree_size(t0)
    if k == 1:
        return 1.0
    value = float(factorial(k))
    for j in range(1, k):
        value /= j * delta - 1
    for _, x in internal_nodes(t0):
        d = len(x.children)
        w = delta - 1
        for m in range(2, d):
            w *= m - delta
        value *= w / factorial(d)
    return value


def _check_delta_table(table: Mapping[Permutation, float], tol: float):
    by_size: dict[int, list[float]] = {}
    for theta, v in table.items():
        if v < 0:
            raise ValueError(f"negative weight for {theta!r}")
        by_size.setdefault(len(theta), []).append(v)
    for d, values in by_size.items():
        total = sum(values)
        complete = len(values) == factorial(d)
        if (complete and abs(total - 1) > tol) or total > 1 + tol:
            raise ValueError(f"weights of size {d} sum to {total}, not 1")


def limit_density_stable(pi, delta: float, table: Mapping, tol: float = 1e-9) -> float:
    """Pattern density of the delta-stable permuton driven by the label law ``table``."""
    pi = as_permutation(pi)
    weights = {as_permutation(k): float(v) for k, v in table.items()}
    _check_delta_table(weights, tol)
    if len(pi) == 1:
        return 1.0
    total = 0.0
    for t0 in enumerate_substitution_trees(pi):
        term = nu_stable(t0, delta)
        for _, x in internal_nodes(t0):
            theta = label_permutation(x.label, len(x.children))
            if theta not in weights:
                raise KeyError(f"missing weight for {theta!r}")
            term *= weights[theta]
        total += term
    return total


def degenerate_limit(k: int, constants: Mapping) -> dict[Permutation, float]:
    """Normalise user-supplied constants into a distribution on size-``k`` patterns."""
    values = {p: 0.0 for p in all_permutations(k)}
    for key, v in constants.items():
        key = as_permutation(key)
        if len(key) != k:
            raise ValueError(f"{key!r} is not of size {k}")
        if v < 0:
            raise ValueError("constants must be nonnegative")
        values[key] = float(v)
    total = sum(values.values())
    if total <= 0:
        raise ValueError("constants have zero total mass")
    return {p: v / total for p, v in values.items()}


# ---------------------------------------------------------------------------
# transfer


def _check_exponent(delta):
    if float(delta).is_integer() and delta >= 0:
        raise ValueError("the exponent must not be a nonnegative integer")


def log_transfer_estimate(constant: float, rho: float, delta: float, n: int) -> float:
    """Natural log of ``|C rho^-n n^-(delta+1) / Gamma(-delta)|``."""
    _check_exponent(delta)
    if rho <= 0 or n < 1:
        raise ValueError("need rho > 0 and n >= 1")
    return (math.log(abs(constant)) - n * math.log(rho) - (delta + 1) * math.log(n)
            - math.lgamma(-delta))


def transfer_estimate(constant: float, rho: float, delta: float, n: int) -> Decimal:
    """Leading-order coefficient estimate ``C rho^-n n^-(delta+1) / Gamma(-delta)``.

    Returned as a :class:`~decimal.Decimal` because the values overflow
    floats for the sizes of interest.
    """
    _check_exponent(delta)
    if rho <= 0 or n < 1:
        raise ValueError("need rho > 0 and n >= 1")
    with localcontext() as ctx:
        ctx.prec = 40
        value = (Decimal(constant) * (Decimal(1) / Decimal(rho)) ** n
                 * Decimal(n) ** Decimal(-(delta + 1)) / Decimal(gamma(-delta)))
        return +value


__all__ = [
    "BUILTIN_FAMILIES", "CRITICAL", "DEGENERATE", "EQ_TOL", "FamilySpec", "FiniteFamily",
    "INDETERMINATE", "ROOT_TOL", "RegimeReport", "STANDARD", "SymbolicFamily", "as_family",
    "av321_simple_counts", "av321_simple_statistics", "av321_simples", "b_pi_constant",
    "builtin_family", "classify_regime", "degenerate_limit", "increasing_oscillations",
    "lambda_double_prime", "lambda_eval", "lambda_prime", "lambda_radius",
    "limit_density_stable", "limit_density_standard", "log_transfer_estimate", "nu_stable",
    "p_from_occ", "p_interval", "regime_report", "solve_kappa", "standard_constants",
    "transfer_estimate",
]
