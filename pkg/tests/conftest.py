import pytest
from hypothesis import strategies as st
from scipy.stats import chisquare

from subperm.perm import Permutation


@st.composite
def permutations_st(draw, min_size=1, max_size=8):
    n = draw(st.integers(min_size, max_size))
    values = draw(st.permutations(range(1, n + 1)))
    return Permutation(values)


def chi_square_pvalue(observed: dict, expected_probs: dict) -> float:
    """Goodness of fit of observed counts to a probability table (zero-probability keys must be unobserved)."""
    total = sum(observed.values())
    keys = [k for k, p in expected_probs.items() if p > 0]
    stray = [k for k in observed if expected_probs.get(k, 0) == 0 and observed[k]]
    if stray:
        return 0.0
    obs = [observed.get(k, 0) for k in keys]
    exp = [expected_probs[k] * total for k in keys]
    return float(chisquare(obs, exp).pvalue)


@pytest.fixture
def chi2():
    return chi_square_pvalue
