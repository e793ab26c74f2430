"""Scikit-learn style estimators wrapping the low-degree learners.

These follow the standard fit/predict contract and inherit get_params and
set_params from BaseEstimator, so they compose with pipelines, grid search
and cross-validation. The quantum regressor consumes flattened classical
descriptions of product states; the classical one consumes plain (m, n)
point arrays.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .basis import SiteBasis
from .bloch import rotation_to_z_axis
from .learner import (
    ClassicalHypothesis,
    Hypothesis,
    classical_feature_subsets,
    direct_coefficient_estimation,
    feature_index,
    feature_matrix,
    fit_least_squares,
)


def _as_descriptions(X, n_sites=None):
    """Coerce (m, n, 3) or flattened (m, 3n) input into (m, n, 3)."""
    x = np.asarray(X, dtype=float)
    if x.ndim == 2:
        if x.shape[1] % 3 != 0:
            raise ValueError("flattened descriptions need 3 columns per site")
        x = x.reshape(x.shape[0], x.shape[1] // 3, 3)
    if x.ndim != 3 or x.shape[2] != 3:
        raise ValueError(f"expected (m, n, 3) descriptions, got shape {np.shape(X)}")
    if n_sites is not None and x.shape[1] != n_sites:
        raise ValueError(f"expected {n_sites} sites, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("descriptions must be finite")
    return x


class LowDegreeChannelRegressor(RegressorMixin, BaseEstimator):
    """Linear regression over degree-limited site-basis feature products.

    Predicts scalar channel observations from classical descriptions of
    product input states. Site bases (rotation and mean length per site) are
    taken from ``site_bases`` when given, otherwise estimated from the
    training descriptions' empirical site means.

    Parameters
    ----------
    degree : int
        Maximum number of non-identity letters per feature word.
    ridge : float
        Tikhonov weight for the normal-equations solve.
    site_bases : list of SiteBasis or None
        Fixed per-site bases; None estimates them in fit.

    Attributes
    ----------
    hypothesis_ : Hypothesis
        The fitted predictor.
    coef_ : ndarray of shape (n_features,)
        Feature weights, aligned with ``feature_index_``.
    """

    def __init__(self, degree: int = 2, ridge: float = 1e-8, site_bases=None):
        self.degree = degree
        self.ridge = ridge
        self.site_bases = site_bases

    def fit(self, X, y):
        x = _as_descriptions(X)
        y = np.asarray(y, dtype=float)
        if y.shape != (x.shape[0],):
            raise ValueError("y must be one scalar label per sample")
        n = x.shape[1]
        if self.site_bases is not None:
            bases = list(self.site_bases)
            if len(bases) != n:
                raise ValueError("site_bases length must match number of sites")
        else:
            bases = []
            for i in range(n):
                mean = x[:, i, :].mean(axis=0)
                mu = min(float(np.linalg.norm(mean)), 1.0 - 1e-9)
                bases.append(SiteBasis(rotation_to_z_axis(mean), mu))
        index = feature_index(n, self.degree)
        vals = np.empty_like(x)
        for i, b in enumerate(bases):
            vals[:, i, :] = b.site_values(x[:, i, :])
        feats = feature_matrix(vals, index)
        weights = fit_least_squares(feats, y, self.ridge)
        self.n_sites_ = n
        self.n_features_in_ = X.shape[1] if np.asarray(X).ndim == 2 else 3 * n
        self.feature_index_ = index
        self.coef_ = weights
        self.hypothesis_ = Hypothesis(bases, self.degree, index, weights)
        return self

    def predict(self, X):
        check_is_fitted(self, "hypothesis_")
        x = _as_descriptions(X, self.n_sites_)
        return self.hypothesis_.predict(x)


class LowDegreeClassicalRegressor(RegressorMixin, BaseEstimator):
    """Low-degree fit over centered coordinate products of (m, n) inputs.

    ``method='regression'`` solves ridge least squares; ``method='direct'``
    estimates each centered-product coefficient as an empirical mean, which
    equals the orthonormal projection when the coordinates are independent.
    Centers and scales default to the training data's column statistics.

    Attributes
    ----------
    hypothesis_ : ClassicalHypothesis
    coef_ : ndarray of shape (n_features,)
    coef_stderr_ : ndarray, only for the direct method
    """

    def __init__(
        self,
        degree: int = 2,
        ridge: float = 1e-8,
        method: str = "regression",
        mu=None,
        sigma=None,
    ):
        self.degree = degree
        self.ridge = ridge
        self.method = method
        self.mu = mu
        self.sigma = sigma

    def fit(self, X, y):
        x = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError("X must be (m, n) and y (m,)")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("inputs must be finite")
        n = x.shape[1]
        mu = np.full(n, self.mu, dtype=float) if np.isscalar(self.mu) else (
            np.asarray(self.mu, dtype=float) if self.mu is not None else x.mean(axis=0)
        )
        sigma = np.full(n, self.sigma, dtype=float) if np.isscalar(self.sigma) else (
            np.asarray(self.sigma, dtype=float) if self.sigma is not None else x.std(axis=0)
        )
        active = np.flatnonzero(sigma > 1e-9)
        sigma = np.where(sigma > 1e-9, sigma, 1.0)
        subsets = classical_feature_subsets(n, self.degree, active)
        if self.method == "regression":
            hyp = ClassicalHypothesis(mu, sigma, self.degree, subsets, np.zeros(len(subsets)))
            feats = hyp.features(x)
            hyp.weights = fit_least_squares(feats, y, self.ridge)
        elif self.method == "direct":
            coeffs, stderrs = direct_coefficient_estimation(x, y, subsets, mu, sigma)
            hyp = ClassicalHypothesis(mu, sigma, self.degree, subsets, coeffs)
            self.coef_stderr_ = stderrs
        else:
            raise ValueError("method must be 'regression' or 'direct'")
        self.n_features_in_ = n
        self.subsets_ = subsets
        self.coef_ = hyp.weights
        self.hypothesis_ = hyp
        return self

    def predict(self, X):
        check_is_fitted(self, "hypothesis_")
        x = np.asarray(X, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_features_in_:
            raise ValueError("X must be (m, n) with the fitted column count")
        return self.hypothesis_.predict(x)
