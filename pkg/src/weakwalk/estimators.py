"""Thin scikit-learn style wrappers around the walk test and the Pauli screen.

Only the parameter-handling half of the estimator contract fits here: the
"fit" step solves for protocol parameters (or stores a hypothesis table)
rather than learning from labelled data.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_eigenvalue_table, check_eps_star_array, check_probability, n_qubits_of
from .params import ProtocolTargets, solve
from .pauli import PauliChannelSpec, PauliTestConfig, run_estimation_demo
from .survival import survival_curve


class WeakWalkTest(BaseEstimator):
    """Single-stage test: recorder |0> -> accept H0 (no signal), |1> -> accept H1.

    Parameters
    ----------
    gamma : float
        Target -ln S1 at signal strength ``eps``.
    eps : float
        Signal strength the test must detect.
    s0_min : float
        Required survival under H0.
    slack : float
        Fraction of the background budget spent by the locked m*theta.
    """

    def __init__(self, gamma=3.0, eps=0.25, s0_min=0.5, slack=0.9):
        self.gamma = gamma
        self.eps = eps
        self.s0_min = s0_min
        self.slack = slack

    def fit(self, X=None, y=None):
        check_probability(self.s0_min, "s0_min")
        params = solve(ProtocolTargets(float(self.gamma), float(self.eps), float(self.s0_min), float(self.slack)))
        self.m_ = params.m
        self.theta_ = params.theta
        self.s0_ = params.achieved_s0
        self.s1_ = params.achieved_s1
        self.classes_ = np.array([0, 1])
        return self

    def score_samples(self, X) -> np.ndarray:
        """Exact-track log survival of the recorder for each eps_star."""
        check_is_fitted(self, "m_")
        eps = check_eps_star_array(X)
        return np.array([survival_curve(self.m_, self.theta_, float(e), "exact").final_log_survival for e in eps])

    def predict_proba(self, X) -> np.ndarray:
        s = np.exp(self.score_samples(X))
        return np.column_stack([s, 1.0 - s])

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]


class PauliEigenvalueScreen(BaseEstimator):
    """Screen channels against a hypothesized eigenvalue table.

    ``fit`` takes the hypothesized table (one row of length 4^n). ``predict``
    takes rows of true eigenvalues and returns the verdict strings
    ``"hypothesis_1"`` / ``"hypothesis_2"``.
    """

    def __init__(self, eps_p=0.4, inner_s0=0.99, inner_s1=0.01):
        self.eps_p = eps_p
        self.inner_s0 = inner_s0
        self.inner_s1 = inner_s1

    def fit(self, X, y=None):
        table = check_eigenvalue_table(np.atleast_2d(np.asarray(X, dtype=float)))
        if table.shape[0] != 1:
            raise ValueError(f"fit expects a single hypothesized table, got {table.shape[0]} rows")
        self.hypothesized_ = table[0]
        self.n_qubits_ = n_qubits_of(table)
        self.test_config_ = PauliTestConfig(float(self.eps_p), max(self.n_qubits_, 2))
        self.inner_targets_ = (check_probability(self.inner_s0, "inner_s0"),
                               check_probability(self.inner_s1, "inner_s1"))
        return self

    def _run(self, X):
        check_is_fitted(self, "hypothesized_")
        rows = check_eigenvalue_table(np.atleast_2d(np.asarray(X, dtype=float)))
        if rows.shape[1] != self.hypothesized_.shape[0]:
            raise ValueError(f"rows have {rows.shape[1]} eigenvalues, hypothesis has {self.hypothesized_.shape[0]}")
        return [
            run_estimation_demo(PauliChannelSpec(self.n_qubits_, r), self.hypothesized_, self.test_config_,
                                self.inner_targets_, check_encoding=False)
            for r in rows
        ]

    def decision_function(self, X) -> np.ndarray:
        """M3 overwrite probability per row; at or above e^-3 means hypothesis 2."""
        return np.array([r.m3_overwrite for r in self._run(X)])

    def predict(self, X) -> np.ndarray:
        return np.array([r.verdict.value for r in self._run(X)])
