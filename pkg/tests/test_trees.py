from itertools import combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subperm.perm import Permutation, all_permutations, is_simple, occ_count, pattern_at, standardize
from subperm.perm import parse_permutation as P
from subperm.trees import (
    LEAF,
    MINUS,
    PLUS,
    Node,
    binary_shapes,
    canonical_tree,
    canonical_trees,
    catalan,
    default_of_binarity,
    enumerate_class,
    enumerate_substitution_trees,
    expanded_tree_count,
    expanded_trees,
    format_tree,
    induced_tree,
    induced_tree_with_sources,
    internal_nodes,
    is_canonical,
    is_separable,
    minus,
    node,
    normalize_label,
    parse_tree,
    perm_of_tree,
    plane_shapes,
    plus,
    shape_of,
    tree_size,
)

from conftest import permutations_st


# ---- oracles -------------------------------------------------------------

def is_interval(values):
    return max(values) - min(values) == len(values) - 1


def brute_substitution_trees(pi):
    """Every way to cut pi into >= 2 consecutive interval blocks, recursively."""
    pi = tuple(pi)
    if len(pi) == 1:
        return {LEAF}
    out = set()
    n = len(pi)
    for r in range(1, n):
        for cuts in combinations(range(1, n), r):
            bounds = (0,) + cuts + (n,)
            blocks = [pi[a:b] for a, b in zip(bounds, bounds[1:])]
            if not all(is_interval(b) for b in blocks):
                continue
            label = normalize_label(standardize([b[0] for b in blocks]))
            kids = [brute_substitution_trees(standardize(b)) for b in blocks]
            for combo in product(*kids):
                out.add(Node(label, tuple(combo)))
    return out


def brute_class(family, n):
    fam = [P(s) if isinstance(s, str) else s for s in family]
    out = []
    for sigma in all_permutations(n):
        ok = True
        for m in range(4, n + 1):
            for I in combinations(range(1, n + 1), m):
                pat = pattern_at(sigma, I)
                if is_simple(pat) and pat not in fam:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(sigma)
    return out


# ---- tests ---------------------------------------------------------------

class TestNodes:
    def test_validation(self):
        with pytest.raises(ValueError):
            Node(PLUS, (LEAF,))
        with pytest.raises(ValueError):
            Node(P("2413"), (LEAF, LEAF))
        with pytest.raises(ValueError):
            Node(P("123"), (LEAF,) * 3)
        with pytest.raises(ValueError):
            Node("x", (LEAF, LEAF))

    def test_node_normalizes_monotone(self):
        assert node("12", LEAF, LEAF) == plus(LEAF, LEAF)
        assert node("321", LEAF, LEAF, LEAF) == minus(LEAF, LEAF, LEAF)


class TestPermOfTree:
    def test_example(self):
        t = plus(minus(LEAF, LEAF), LEAF, minus(LEAF, LEAF))
        assert perm_of_tree(t) == P("21354")

    def test_simple_root(self):
        t = node("2413", LEAF, plus(LEAF, LEAF), LEAF, LEAF)
        assert perm_of_tree(t) == P("24513")
        assert tree_size(t) == 5

    def test_unlabeled_raises(self):
        with pytest.raises(ValueError):
            perm_of_tree(Node(None, (LEAF, LEAF)))


class TestCanonical:
    @pytest.mark.parametrize("sigma, text", [
        ("21534", "(+ (- L L) (- L (+ L L)))"),
        ("3412", "(- (+ L L) (+ L L))"),
        ("1", "L"),
        ("123", "(+ L L L)"),
        ("2413", "([2 4 1 3] L L L L)"),
    ])
    def test_examples(self, sigma, text):
        t = canonical_tree(P(sigma))
        assert format_tree(t) == text
        assert is_canonical(t)

    def test_round_trip_all_small(self):
        for n in range(1, 8):
            for sigma in all_permutations(n):
                t = canonical_tree(sigma)
                assert perm_of_tree(t) == sigma
                assert is_canonical(t)

    def test_noncanonical_detected(self):
        assert not is_canonical(plus(plus(LEAF, LEAF), LEAF))
        assert not is_canonical(node("2413", LEAF, LEAF, LEAF, LEAF), family=[P("3142")])

    @settings(max_examples=100)
    @given(permutations_st(max_size=10))
    def test_round_trip_property(self, sigma):
        t = canonical_tree(sigma)
        assert perm_of_tree(t) == sigma
        assert parse_tree(format_tree(t)) == t
        for _, x in internal_nodes(t):
            if not isinstance(x.label, str):
                assert is_simple(x.label)


class TestInduced:
    def test_examples(self):
        t = canonical_tree(P("21534"))
        assert induced_tree(t, {1, 3}) == plus(LEAF, LEAF)
        assert induced_tree(canonical_tree(P("2413")), {1, 2}) == plus(LEAF, LEAF)

    def test_errors(self):
        t = canonical_tree(P("2413"))
        with pytest.raises(ValueError):
            induced_tree(t, {1})
        with pytest.raises(IndexError):
            induced_tree(t, {1, 5})

    @settings(max_examples=60)
    @given(permutations_st(min_size=2, max_size=8), st.data())
    def test_induced_encodes_pattern(self, sigma, data):
        idx = sorted(data.draw(st.sets(st.integers(1, len(sigma)), min_size=2)))
        t = canonical_tree(sigma)
        assert perm_of_tree(induced_tree(t, idx)) == pattern_at(sigma, idx)

    def test_sources(self):
        t = canonical_tree(P("25134"))  # root 2413 with a + child
        sub, nonlinear = induced_tree_with_sources(t, {4, 5})
        assert sub == plus(LEAF, LEAF)
        assert nonlinear == frozenset()
        sub, nonlinear = induced_tree_with_sources(t, {2, 3})
        assert sub == minus(LEAF, LEAF)
        assert nonlinear == frozenset({()})
        sub, nonlinear = induced_tree_with_sources(t, {1, 2, 4})
        assert nonlinear == frozenset({()})


class TestSubstitutionTrees:
    @pytest.mark.parametrize("pi, count", [("1", 1), ("12", 1), ("123", 3), ("2413", 1), ("1324", 6), ("2143", 4)])
    def test_counts(self, pi, count):
        assert len(enumerate_substitution_trees(P(pi))) == count

    def test_against_block_oracle(self):
        for n in range(1, 6):
            for pi in all_permutations(n):
                got = set(enumerate_substitution_trees(pi))
                assert got == brute_substitution_trees(pi), pi
                assert all(perm_of_tree(t) == pi for t in got)

    def test_cap(self):
        with pytest.raises(ValueError):
            enumerate_substitution_trees(P("1234567"))


class TestExpanded:
    def test_counts(self):
        assert expanded_tree_count(P("21534"))[:4] == (1, 1, 2, 2)
        assert expanded_tree_count(P("1324"))[:4] == (2, 2, 2, 1)
        n_tilde, n, rp, rm, simples = expanded_tree_count(P("2413"))
        assert (n_tilde, n, rp, rm, simples) == (1, 0, 0, 0, [P("2413")])
        assert expanded_tree_count(P("12345"))[0] == catalan(4) == 14

    def test_expanded_are_binary_linear(self):
        for n in range(1, 6):
            for pi in all_permutations(n):
                trees = expanded_trees(pi)
                assert len(trees) == len(set(trees)) == expanded_tree_count(pi)[0]
                for t in trees:
                    assert perm_of_tree(t) == pi
                    for _, x in internal_nodes(t):
                        if x.label in (PLUS, MINUS):
                            assert len(x.children) == 2

    def test_separable(self):
        assert is_separable(P("21534"))
        assert not is_separable(P("25314"))
        assert default_of_binarity(P("2413")) == 2
        assert default_of_binarity(P("25134")) == 2
        # separable permutations of size n: large Schroeder numbers
        assert [sum(is_separable(p) for p in all_permutations(n)) for n in range(1, 7)] == [1, 2, 6, 22, 90, 394]

    def test_catalan(self):
        assert [catalan(n) for n in range(6)] == [1, 1, 2, 5, 14, 42]
        assert [len(binary_shapes(n)) for n in range(1, 7)] == [catalan(n - 1) for n in range(1, 7)]


class TestClasses:
    def test_separable_class(self):
        assert [len(enumerate_class([], n)) for n in range(1, 8)] == [1, 2, 6, 22, 90, 394, 1806]

    def test_two_simples(self):
        fam = [P("2413"), P("3142")]
        assert [len(enumerate_class(fam, n)) for n in range(1, 7)] == [1, 2, 6, 24, 114, 590]

    def test_against_brute_force(self):
        for fam in ([], ["2413"], ["2413", "3142"], ["2413", "3142", "24153"]):
            famp = [P(s) for s in fam]
            for n in range(1, 7):
                assert sorted(enumerate_class(famp, n)) == sorted(brute_class(famp, n)), (fam, n)

    def test_canonical_trees_distinct(self):
        fam = [P("2413"), P("3142")]
        trees = canonical_trees(fam, 6)
        perms = [perm_of_tree(t) for t in trees]
        assert len(perms) == len(set(perms)) == 590
        assert all(is_canonical(t, fam) for t in trees)

    def test_cap(self):
        with pytest.raises(ValueError):
            enumerate_class([], 11)


class TestFormat:
    def test_parse(self):
        t = parse_tree("(+ (- L L) ([2 4 1 3] L L L L))")
        assert perm_of_tree(t) == P("214635")
        assert format_tree(t) == "(+ (- L L) ([2 4 1 3] L L L L))"
        assert parse_tree("(* L (* L L))") == Node(None, (LEAF, Node(None, (LEAF, LEAF))))

    @pytest.mark.parametrize("bad", ["", "(+ L", "(+ L L) L", "(? L L)", "(+ L)"])
    def test_parse_errors(self, bad):
        with pytest.raises(ValueError):
            parse_tree(bad)

    def test_monotone_bracket_label_normalized(self):
        assert parse_tree("([1 2] L L)") == plus(LEAF, LEAF)

    def test_shapes(self):
        # plane trees without unary nodes: little Schroeder numbers
        assert [len(plane_shapes(k)) for k in range(1, 7)] == [1, 1, 3, 11, 45, 197]
        assert shape_of(canonical_tree(P("21534"))) == parse_tree("(* (* L L) (* L (* L L)))")
