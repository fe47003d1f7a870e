"""Substitution-closed permutation classes: exact enumeration, limit constants and sampling."""
from .perm import (
    Permutation,
    ascents_descents,
    complement,
    inverse,
    is_simple,
    occ_count,
    occ_density,
    parse_permutation,
    pattern_at,
    reverse,
    substitute,
)
from .trees import (
    LEAF,
    MINUS,
    PLUS,
    Node,
    canonical_tree,
    default_of_binarity,
    enumerate_class,
    enumerate_substitution_trees,
    expanded_tree_count,
    format_tree,
    induced_tree,
    parse_tree,
    perm_of_tree,
)
from .series import (
    TruncatedSeries,
    class_counts,
    decorated_tree_series,
    exact_expected_occ,
    marked_series,
    occ_series,
    s_polynomial,
    solve_t_notplus,
    t_from_t_notplus,
)
from .singular import (
    FiniteFamily,
    RegimeReport,
    SymbolicFamily,
    b_pi_constant,
    builtin_family,
    classify_regime,
    limit_density_stable,
    limit_density_standard,
    nu_stable,
    regime_report,
    solve_kappa,
    standard_constants,
    transfer_estimate,
)
from .permutons import FromPermutation, Lebesgue, density_vector, estimate_occ, perm_from_permuton
from .samplers import (
    biased_signed_permutation,
    boltzmann_class_sample,
    marchal_tree,
    remy_binary_tree,
    stable_permutation,
)

__version__ = "0.1.0"
