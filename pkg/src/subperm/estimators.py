"""scikit-learn style wrappers around the functional core."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .perm import all_permutations, as_permutation
from .permutons import density_vector, make_rng
from .series import exact_expected_occ
from .singular import (
    EQ_TOL,
    ROOT_TOL,
    STANDARD,
    as_family,
    b_pi_constant,
    limit_density_standard,
    regime_report,
)


class PatternDensityTransformer(BaseEstimator, TransformerMixin):
    """Map permutations to their vector of size-``k`` pattern densities.

    Columns follow the lexicographic order of the ``k!`` patterns.
    """

    def __init__(self, k=3, mode="exact", n_samples=10_000, random_state=None):
        self.k = k
        self.mode = mode
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.patterns_ = all_permutations(self.k)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "patterns_")
        rng = make_rng(self.random_state)
        rows = []
        for sigma in X:
            dens = density_vector(as_permutation(sigma), self.k, self.mode,
                                  budget=None if self.mode == "exact" else self.n_samples, rng=rng)
            rows.append([float(dens[p]) for p in self.patterns_])
        return np.asarray(rows, dtype=float).reshape(len(rows), len(self.patterns_))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "patterns_")
        return np.asarray(["".join(map(str, p)) if self.k <= 9 else str(p) for p in self.patterns_], dtype=object)


class SubstitutionClassModel(BaseEstimator):
    """Limit behaviour of uniform permutations in a substitution-closed class.

    ``fit`` ignores its data argument and computes the regime report of
    ``family``.  ``predict`` returns limiting pattern densities (standard
    regime only).
    """

    def __init__(self, family=(), tol=ROOT_TOL, eq_tol=EQ_TOL):
        self.family = family
        self.tol = tol
        self.eq_tol = eq_tol

    def fit(self, X=None, y=None):
        self.spec_ = as_family(self.family)
        self.report_ = regime_report(self.spec_, self.tol, self.eq_tol)
        self.regime_ = self.report_.regime
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        if self.regime_ != STANDARD:
            raise ValueError(f"limit densities need the standard regime, got {self.regime_}")
        return np.asarray([limit_density_standard(as_permutation(p), self.report_) for p in X])

    def leading_constants(self, X):
        """``B`` in ``E[occ] ~ B n^(-db/2)`` for each pattern."""
        check_is_fitted(self, "report_")
        return np.asarray([b_pi_constant(as_permutation(p), self.report_, self.spec_) for p in X])

    def expected_density(self, pattern, n, order=None):
        """Exact finite-size expected density (finite families only)."""
        check_is_fitted(self, "report_")
        if not self.spec_.is_finite():
            raise ValueError("exact densities need a finite family")
        return exact_expected_occ(pattern, self.spec_.members, n, order)
