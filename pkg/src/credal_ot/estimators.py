"""Scikit-learn style wrappers that fit transport maps between point clouds.

``fit(X, y)`` takes source samples ``X`` and target samples ``y`` (both
``(n_samples, n_features)``); ``transform`` moves points with the fitted map.
Points that were not seen in ``fit`` are moved like their nearest fitted
source point.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .credal_core import DiscreteDistribution, EpsContamination
from .exceptions import DomainError, InputError
from .ot_classical.gaussian import GaussianPair, gaussian_monge_map, map_cost
from .ot_lower import solve_lpm, solve_rlpk

_METRICS = {"euclidean": ("euclidean", 1.0), "sqeuclidean": ("euclidean", 2.0),
            "cityblock": ("cityblock", 1.0)}


def check_weights(w, n: int) -> np.ndarray:
    if w is None:
        return np.full(n, 1.0 / n)
    w = check_array(w, ensure_2d=False, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
        raise InputError("sample weights need one nonnegative entry per sample")
    return w / w.sum()


def check_epsilon(eps) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise InputError(f"epsilon must lie in [0, 1], got {eps!r}")
    return eps


def check_pair(X, y):
    if y is None:
        raise InputError("fit needs target samples y")
    X = check_array(X, dtype=float)
    y = check_array(y, dtype=float)
    if X.shape[1] != y.shape[1]:
        raise InputError("source and target samples have different numbers of features")
    return X, y


def _cost(X, y, metric, p_exponent):
    if metric not in _METRICS:
        raise InputError(f"unknown metric {metric!r}; choose from {sorted(_METRICS)}")
    name, default_p = _METRICS[metric]
    p = default_p if p_exponent is None else float(p_exponent)
    if not p >= 1:
        raise InputError("p_exponent must be >= 1")
    return cdist(X, y, metric=name) ** p


class _PointCloudTransport(TransformerMixin, BaseEstimator):
    def _nearest(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != self.source_.shape[1]:
            raise InputError("X has a different number of features than in fit")
        return cdist(X, self.source_).argmin(axis=1)

    def transform(self, X):
        check_is_fitted(self, "images_")
        return self.images_[self._nearest(X)]


class LowerKantorovichTransport(_PointCloudTransport):
    """Optimal restricted lower Kantorovich plan between weighted samples.

    ``value_`` is the lower objective, ``(1 - epsilon)`` times
    ``classical_value_``.  ``transform`` applies the barycentric projection of
    the optimal plan.
    """

    def __init__(self, epsilon=0.0, metric="sqeuclidean", p_exponent=None):
        self.epsilon = epsilon
        self.metric = metric
        self.p_exponent = p_exponent

    def fit(self, X, y=None, source_weights=None, target_weights=None):
        X, y = check_pair(X, y)
        eps = check_epsilon(self.epsilon)
        p = DiscreteDistribution.from_masses(check_weights(source_weights, len(X)))
        q = DiscreteDistribution.from_masses(check_weights(target_weights, len(y)))
        cost = _cost(X, y, self.metric, self.p_exponent)
        plan, value, info = solve_rlpk(EpsContamination(p, eps), EpsContamination(q, eps),
                                       cost, log=True)
        G = plan.matrix
        rows = G.sum(axis=1)
        safe = np.where(rows > 0, rows, 1.0)
        self.source_ = X
        self.plan_ = G
        self.lower_plan_ = plan
        self.value_ = value
        self.classical_value_ = float(np.sum(G * cost))
        self.n_iter_ = info["iterations"]
        self.images_ = np.where(rows[:, None] > 0, (G @ y) / safe[:, None], X)
        return self


class LowerMongeTransport(_PointCloudTransport):
    """Optimal lower Monge map between small weighted samples (exhaustive search)."""

    def __init__(self, epsilon=0.0, metric="sqeuclidean", p_exponent=None):
        self.epsilon = epsilon
        self.metric = metric
        self.p_exponent = p_exponent

    def fit(self, X, y=None, source_weights=None, target_weights=None):
        X, y = check_pair(X, y)
        eps = check_epsilon(self.epsilon)
        p = DiscreteDistribution.from_masses(check_weights(source_weights, len(X)))
        q = DiscreteDistribution.from_masses(check_weights(target_weights, len(y)))
        cost = _cost(X, y, self.metric, self.p_exponent)
        found = solve_lpm(EpsContamination(p, eps), EpsContamination(q, eps), cost)
        if found is None:
            raise DomainError("no map pushes the source weights onto the target weights")
        T, value = found
        self.source_ = X
        self.assignment_ = T.assignment.copy()
        self.value_ = value
        self.images_ = y[self.assignment_]
        return self


class GaussianLinearMap(TransformerMixin, BaseEstimator):
    """Linear optimal map between Gaussian fits of centred source and target samples."""

    def __init__(self, a=None):
        self.a = a

    def fit(self, X, y=None):
        X, y = check_pair(X, y)
        sigma_p = np.atleast_2d(np.cov(X, rowvar=False))
        sigma_q = np.atleast_2d(np.cov(y, rowvar=False))
        pair = GaussianPair(sigma_p, sigma_q, self.a)
        self.matrix_ = gaussian_monge_map(pair)
        self.cost_ = map_cost(pair, self.matrix_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise InputError("X has a different number of features than in fit")
        return X @ self.matrix_.T


class QuantileTransport1D(TransformerMixin, BaseEstimator):
    """Monotone rearrangement ``F_y^{-1} o F_X`` between one-dimensional samples.

    Both empirical cdfs are linearly interpolated between order statistics.
    """

    def fit(self, X, y=None):
        X, y = check_pair(X, y)
        if X.shape[1] != 1:
            raise InputError("QuantileTransport1D needs a single feature")
        self.source_sorted_ = np.sort(X[:, 0])
        self.target_sorted_ = np.sort(y[:, 0])
        return self

    def transform(self, X):
        check_is_fitted(self, "source_sorted_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise InputError("QuantileTransport1D needs a single feature")
        xs, ys = self.source_sorted_, self.target_sorted_
        u = np.interp(X[:, 0], xs, np.linspace(0.0, 1.0, xs.size))
        return np.interp(u, np.linspace(0.0, 1.0, ys.size), ys)[:, None]
