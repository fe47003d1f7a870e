"""Command-line interface: ``subperm <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .perm import parse_permutation
from .permutons import (
    FromPermutation,
    Lebesgue,
    density_to_json,
    density_vector,
    diagram_export,
    estimate_occ,
    make_rng,
    points_to_csv,
)
from .samplers import biased_signed_permutation, boltzmann_class_samples, stable_permutation
from .series import (
    DEFAULT_ORDER,
    exact_expected_occ,
    s_polynomial,
    solve_t_notplus,
    t_from_t_notplus,
)
from .singular import BUILTIN_FAMILIES, EQ_TOL, ROOT_TOL, FiniteFamily, builtin_family, regime_report
from .trees import canonical_tree, expanded_tree_count, format_tree

EMPTY_FAMILY_NAMES = {"", "none", "empty", "separable", "∅", "{}"}


class CliError(Exception):
    pass


def parse_family(text: Optional[str]):
    """Inline comma-separated simples, a built-in name, or an empty marker."""
    text = (text or "").strip()
    if text.lower() in EMPTY_FAMILY_NAMES:
        return FiniteFamily(())
    if text in BUILTIN_FAMILIES:
        return builtin_family(text)
    return FiniteFamily(parse_permutation(tok) for tok in text.split(",") if tok.strip())


def _finite_members(spec):
    if not spec.is_finite():
        raise CliError(f"family {spec.name!r} is not finite; this subcommand needs an explicit list")
    return spec.members


def _seed(args) -> int:
    if args.seed is None:
        raise CliError("--seed is required for randomized commands")
    return args.seed


# ---------------------------------------------------------------------------


def cmd_decompose(args) -> str:
    sigma = parse_permutation(args.permutation)
    tree = canonical_tree(sigma)
    n_tilde, n_sep, r_plus, r_minus, simples = expanded_tree_count(sigma)
    db = sum(len(t) - 2 for t in simples)
    if args.format == "json":
        return json.dumps({
            "tree": format_tree(tree), "n_tilde": n_tilde, "n": n_sep, "r_plus": r_plus,
            "r_minus": r_minus, "db": db, "simple_labels": [str(t) for t in simples],
        }, indent=2)
    return "\n".join([
        f"tree: {format_tree(tree)}",
        f"n_tilde: {n_tilde}",
        f"n: {n_sep}",
        f"r_plus: {r_plus}",
        f"r_minus: {r_minus}",
        f"db: {db}",
    ])


def cmd_count(args) -> str:
    members = _finite_members(parse_family(args.family))
    order = args.n_max
    t = t_from_t_notplus(solve_t_notplus(s_polynomial(members, order), order))
    if args.format == "json":
        return json.dumps(t.to_json())
    return "\n".join(f"{n} {t[n]}" for n in range(1, order + 1))


def cmd_exact_occ(args) -> str:
    members = _finite_members(parse_family(args.family))
    pi = parse_permutation(args.pattern)
    order = args.order if args.order is not None else args.n
    value = exact_expected_occ(pi, members, args.n, order)
    if args.format == "json":
        return json.dumps({"pattern": str(pi), "n": args.n, "value": str(value)})
    return str(value)


def cmd_report(args) -> str:
    spec = parse_family(args.family)
    report = regime_report(spec, tol=args.tol, eq_tol=args.eq_tol)
    return report.to_json()


def _permuton_arg(text: str):
    if text == "lebesgue":
        return Lebesgue()
    if text.startswith("perm:"):
        return FromPermutation(parse_permutation(text[5:]))
    raise CliError(f"unknown permuton {text!r}; use 'lebesgue' or 'perm:<sigma>'")


def _samples(args) -> list:
    seed = _seed(args)
    rng = make_rng(seed)
    if args.kind == "brownian":
        return [biased_signed_permutation(args.n, args.p, rng) for _ in range(args.count)]
    if args.kind == "stable":
        nu = _permuton_arg(args.nu)
        return [stable_permutation(args.n, args.delta, nu, rng) for _ in range(args.count)]
    if args.kind == "class":
        members = _finite_members(parse_family(args.family))
        return boltzmann_class_samples(members, args.n, args.count, window=args.window, rng=rng)
    raise CliError(f"unknown sample kind {args.kind!r}")


def cmd_sample(args) -> str:
    return "\n".join(str(s) for s in _samples(args))


def cmd_diagram(args) -> str:
    if args.permutation is not None:
        sigma = parse_permutation(args.permutation)
    else:
        if args.kind is None:
            raise CliError("give a permutation or --kind with sampling parameters")
        args.count = 1
        sigma = _samples(args)[0]
    return points_to_csv(diagram_export(sigma)).rstrip("\n")


def cmd_estimate_density(args) -> str:
    sigma = parse_permutation(args.permutation)
    if args.pattern is not None:
        rng = make_rng(_seed(args))
        est, err = estimate_occ(parse_permutation(args.pattern), FromPermutation(sigma), args.samples, rng)
        return json.dumps({"estimate": format(est, ".15g"), "stderr": format(err, ".15g")})
    if args.mode == "sampled":
        dens = density_vector(sigma, args.k, "sampled", budget=args.samples, rng=make_rng(_seed(args)))
    else:
        dens = density_vector(sigma, args.k, "exact")
    return density_to_json(dens)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", default="", help="inline simples '2413,3142', a built-in name, or empty")
    common.add_argument("--order", type=int, default=None, help=f"series truncation order (default: n, at most {DEFAULT_ORDER} suggested)")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed (required for sampling)")
    common.add_argument("--tol", type=float, default=ROOT_TOL)
    common.add_argument("--eq-tol", type=float, default=EQ_TOL)
    common.add_argument("--out", default=None, help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default="text")

    parser = argparse.ArgumentParser(prog="subperm", description="Substitution-closed permutation classes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="canonical tree and expanded-tree data")
    p.add_argument("permutation")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("count", parents=[common], help="class sizes from the generating function")
    p.add_argument("--n-max", type=int, required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("exact-occ", parents=[common], help="exact expected pattern density at size n")
    p.add_argument("pattern")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_exact_occ)

    p = sub.add_parser("report", parents=[common], help="regime and limit constants as JSON")
    p.set_defaults(func=cmd_report)

    def add_sampling(p, count_default=1):
        p.add_argument("--kind", choices=("class", "brownian", "stable"))
        p.add_argument("--n", type=int, default=10)
        p.add_argument("--count", type=int, default=count_default)
        p.add_argument("--p", type=float, default=0.5)
        p.add_argument("--delta", type=float, default=1.5)
        p.add_argument("--nu", default="lebesgue", help="'lebesgue' or 'perm:<sigma>'")
        p.add_argument("--window", type=float, default=0.0)

    p = sub.add_parser("sample", parents=[common], help="random permutations, one per line")
    add_sampling(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagram", parents=[common], help="diagram points as CSV")
    p.add_argument("permutation", nargs="?")
    add_sampling(p)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("estimate-density", parents=[common], help="pattern densities of a permutation")
    p.add_argument("permutation")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--pattern", default=None, help="Monte Carlo density of one pattern in the permuton of the permutation")
    p.set_defaults(func=cmd_estimate_density)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sample" and args.kind is None:
        parser.error("sample needs --kind")
    try:
        output = args.func(args)
    except (CliError, ValueError, KeyError, IndexError, RuntimeError, ZeroDivisionError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(output + "\n")
    else:
        sys.stdout.write(output + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
