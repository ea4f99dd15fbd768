"""scikit-learn transformer over flattened periodic samples."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .littlewood_paley import block_grad_l2_norms, block_l2_norms, build_cutoffs
from .spectral import Grid, transform


class LittlewoodPaleyTransformer(TransformerMixin, BaseEstimator):
    """Map scalar fields sampled on an n^3 periodic grid to dyadic block features.

    Each row of ``X`` is one field flattened in C order (length n^3).

    Parameters
    ----------
    output : {"l2", "grad_l2", "bernstein"}
        ``||Delta_q f||_2``, ``||grad Delta_q f||_2`` or their ratio
        ``||grad Delta_q f|| / (2^q ||Delta_q f||)`` (NaN on empty blocks).
    transition_sharpness : float
        Steepness of the cutoff transition.
    """

    def __init__(self, output: str = "l2", transition_sharpness: float = 1.0):
        self.output = output
        self.transition_sharpness = transition_sharpness

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n = round(X.shape[1] ** (1.0 / 3.0))
        if n**3 != X.shape[1]:
            raise ValueError(f"rows must hold n^3 samples, got {X.shape[1]}")
        if self.output not in ("l2", "grad_l2", "bernstein"):
            raise ValueError(f"unknown output {self.output!r}")
        self.grid_ = Grid(int(n))
        self.cutoffs_ = build_cutoffs(self.transition_sharpness)
        self.q_indices_ = np.array(list(self.cutoffs_.block_indices(self.grid_)))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        grid, cut = self.grid_, self.cutoffs_
        out = np.empty((X.shape[0], self.q_indices_.size))
        scale = 2.0 ** self.q_indices_.astype(float)
        for i, row in enumerate(X):
            f = transform(row.reshape(grid.shape), grid)
            if self.output == "l2":
                out[i] = block_l2_norms(f, cut)
            elif self.output == "grad_l2":
                out[i] = block_grad_l2_norms(f, cut)
            else:
                b = block_l2_norms(f, cut)
                g = block_grad_l2_norms(f, cut)
                with np.errstate(divide="ignore", invalid="ignore"):
                    out[i] = np.where(b > 0, g / (scale * b), math.nan)
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "grid_")
        return np.array([f"{self.output}_q{q}" for q in self.q_indices_], dtype=object)
