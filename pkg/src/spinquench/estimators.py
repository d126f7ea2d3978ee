"""Sklearn-style estimators wrapping the survival-probability models.

``fit`` takes the component data (energies, weights) of an initial state
and estimates the analytic model parameters; ``predict`` evaluates the
analytic survival probability on a time grid.  Both classes follow the
scikit-learn contract (get_params / set_params, fitted attributes with
trailing underscores), so they compose with the wider ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .coherent import ComponentDistribution
from .multisequence import (
    detect_subsequences, fit_sequence, pair_parameters, sp_multi,
)
from .survival import estimate_parameters, sp_analytic, ipr

__all__ = ["SurvivalProbabilityModel", "MultiSequenceSurvivalModel"]


def _as_distribution(energies, weights) -> ComponentDistribution:
    e = np.asarray(energies, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if e.size != w.size:
        raise ValueError("energies and weights must have equal length")
    order = np.argsort(e)
    return ComponentDistribution(energies=e[order], weights=w[order])


class SurvivalProbabilityModel(BaseEstimator):
    """Single-sequence analytic survival probability.

    Parameters
    ----------
    enforce_gate : bool
        Refuse non-Gaussian states (window capture < 0.99 or poor
        quadratic spectrum fit) instead of silently extrapolating.
    """

    def __init__(self, enforce_gate: bool = True):
        self.enforce_gate = enforce_gate

    def fit(self, energies, weights=None):
        """Estimate (sigma, omega1, e2) from component data.

        ``energies`` may be a (n, 2) array of (E_k, |c_k|^2) rows, or a
        1-d energy array with ``weights`` passed separately.
        """
        energies = np.asarray(energies, dtype=float)
        if weights is None:
            if energies.ndim != 2 or energies.shape[1] != 2:
                raise ValueError("pass (n, 2) rows of (E_k, weight) or explicit weights")
            energies, weights = energies[:, 0], energies[:, 1]
        dist = _as_distribution(energies, weights)
        self.sequence_model_ = estimate_parameters(dist, enforce_gate=self.enforce_gate)
        self.ipr_ = ipr(dist)
        self.t_decay_ = self.sequence_model_.t_decay
        return self

    def predict(self, times):
        """Analytic SP(t) on a time grid."""
        check_is_fitted(self, "sequence_model_")
        return sp_analytic(self.sequence_model_, np.asarray(times, dtype=float)).values


class MultiSequenceSurvivalModel(BaseEstimator):
    """Multi-sequence analytic survival probability with interference terms.

    Parameters mirror ``detect_subsequences``; after ``fit`` the detected
    sequences, per-sequence models, and pairwise interference parameters
    are available as fitted attributes.
    """

    def __init__(self, weight_floor: float = 1e-5, gap_tolerance: float = 0.25,
                 min_sequence_weight: float = 0.01):
        self.weight_floor = weight_floor
        self.gap_tolerance = gap_tolerance
        self.min_sequence_weight = min_sequence_weight

    def fit(self, energies, weights=None):
        energies = np.asarray(energies, dtype=float)
        if weights is None:
            if energies.ndim != 2 or energies.shape[1] != 2:
                raise ValueError("pass (n, 2) rows of (E_k, weight) or explicit weights")
            energies, weights = energies[:, 0], energies[:, 1]
        dist = _as_distribution(energies, weights)
        self.sequences_ = detect_subsequences(
            dist, weight_floor=self.weight_floor,
            gap_tolerance=self.gap_tolerance,
            min_sequence_weight=self.min_sequence_weight)
        for seq in self.sequences_:
            fit_sequence(seq)
        self.pairs_ = [
            pair_parameters(self.sequences_[a], self.sequences_[b],
                            index_i=a, index_j=b)
            for a in range(len(self.sequences_))
            for b in range(a + 1, len(self.sequences_))
        ]
        self.ipr_ = ipr(dist)
        self.t_decay_ = self.sequences_[0].model.t_decay
        return self

    def predict(self, times):
        check_is_fitted(self, "sequences_")
        series, _ = sp_multi(self.sequences_, self.pairs_,
                             np.asarray(times, dtype=float))
        return series.values

    def predict_envelope(self, times):
        check_is_fitted(self, "sequences_")
        _, env = sp_multi(self.sequences_, self.pairs_,
                          np.asarray(times, dtype=float))
        return env
