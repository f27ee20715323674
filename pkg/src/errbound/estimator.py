"""Estimator-style wrapper around :func:`errbound.analyzer.analyze`."""
from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analyzer import ProblemInstance, analyze


class ErrorBoundAnalyzer(BaseEstimator):
    """Fits the local error-bound modulus of a composite inequality.

    ``fit`` takes a :class:`ProblemInstance`; constructor arguments left as
    ``None`` keep the instance's own settings. After fitting, ``predict``
    returns the error-bound estimate ``tau * max(f(g(x)), 0)`` of
    ``d(x, S)`` for points near ``x_bar``.
    """

    def __init__(self, radii=None, samples_per_radius=None, random_state=None, agreement_gap=None):
        self.radii = radii
        self.samples_per_radius = samples_per_radius
        self.random_state = random_state
        self.agreement_gap = agreement_gap

    def _instance(self, problem):
        if not isinstance(problem, ProblemInstance):
            raise TypeError(f"expected a ProblemInstance, got {type(problem).__name__}")
        changes = {}
        if self.radii is not None:
            changes["radii"] = tuple(self.radii)
        if self.samples_per_radius is not None:
            changes["samples_per_radius"] = int(self.samples_per_radius)
        if self.random_state is not None:
            changes["seed"] = int(self.random_state)
        if self.agreement_gap is not None:
            changes["tolerances"] = replace(problem.tolerances, agreement_gap=float(self.agreement_gap))
        return replace(problem, **changes) if changes else problem

    def fit(self, problem, y=None):
        self.problem_ = self._instance(problem)
        self.report_ = analyze(self.problem_)
        self.tau_theoretical_ = self.report_.tau_theoretical
        self.tau_empirical_ = self.report_.tau_empirical
        # the formula value is only meaningful when its hypotheses hold
        self.tau_ = self.tau_theoretical_ if self.report_.theoretical_applicable else self.tau_empirical_
        self.diagnosis_ = self.report_.diagnosis
        self.n_features_in_ = self.problem_.n
        return self

    def decision_function(self, X):
        """``f(g(x))`` row-wise; nonpositive on the solution set."""
        check_is_fitted(self, "report_")
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.atleast_1d(self.problem_.phi(X))

    def predict(self, X):
        """Estimated ``d(x, S)`` bound ``tau * [f(g(x))]_+``."""
        viol = np.maximum(self.decision_function(X), 0.0)
        with np.errstate(invalid="ignore"):
            out = self.tau_ * viol
        return np.where(viol == 0, 0.0, out)
