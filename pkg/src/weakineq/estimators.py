"""scikit-learn style wrappers around the rate-function estimators."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.linear_model import LinearRegression
from sklearn.utils.validation import check_is_fitted

from .capacity import beta_from_capacity
from .hardy import hardy_bounds
from .rates import RateFunction
from .verifier import empirical_beta, make_family


def _features(s):
    L = np.log(1.0 / np.asarray(s, float).ravel())
    return np.column_stack([L, np.log(L)])


class RateExponentRegressor(RegressorMixin, BaseEstimator):
    """Fit ``log beta = log C + p log(1/s) + q log log(1/s)``.

    ``fit(s, beta)`` takes ``s`` in ``(0, 1/e)``; ``predict`` returns
    ``beta`` (not its log).  ``score`` is R^2 in log scale.
    """

    def __init__(self, fit_q=True):
        self.fit_q = fit_q

    def fit(self, X, y):
        s = np.asarray(X, float).ravel()
        y = np.asarray(y, float).ravel()
        if s.size != y.size or s.size < 3:
            raise ValueError("need matching s and beta arrays with >= 3 points")
        if np.any(s <= 0) or np.any(s >= np.exp(-1)) or np.any(y <= 0):
            raise ValueError("need 0 < s < 1/e and beta > 0")
        F = _features(s) if self.fit_q else _features(s)[:, :1]
        self.model_ = LinearRegression().fit(F, np.log(y))
        coef = self.model_.coef_
        self.p_ = float(coef[0])
        self.q_ = float(coef[1]) if self.fit_q else 0.0
        self.log_C_ = float(self.model_.intercept_)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        F = _features(X) if self.fit_q else _features(X)[:, :1]
        return np.exp(self.model_.predict(F))

    def score(self, X, y, sample_weight=None):
        check_is_fitted(self, "model_")
        F = _features(X) if self.fit_q else _features(X)[:, :1]
        return self.model_.score(F, np.log(np.asarray(y, float).ravel()), sample_weight)

    def to_rate(self, s_max=np.exp(-1)):
        check_is_fitted(self, "model_")
        return RateFunction.power(float(np.exp(self.log_C_)), max(self.p_, 0.0), max(self.q_, 0.0), s_max)


class CapacityRateEstimator(BaseEstimator):
    """``fit(mu)`` estimates the WLSI rate of a :class:`~weakineq.measure.Measure1D`.

    Attributes after fitting: ``beta_`` (capacity rate), ``exponents_``
    (a fitted :class:`RateExponentRegressor`), ``hardy_`` (Hardy bounds of
    the fitted shape) and ``certified_`` (``upper * shape``).
    """

    def __init__(self, kernel="half", s_lo=None, s_hi=1e-2, n_fit=200):
        self.kernel = kernel
        self.s_lo = s_lo
        self.s_hi = s_hi
        self.n_fit = n_fit

    def fit(self, X, y=None):
        mu = X
        self.beta_ = beta_from_capacity(mu, kernel=self.kernel)
        lo = self.beta_.table[0][0] if self.s_lo is None else self.s_lo
        hi = min(self.s_hi, self.beta_.table[0][-1])
        s = np.geomspace(lo, hi, self.n_fit)
        self.exponents_ = RateExponentRegressor().fit(s, self.beta_(s))
        # the shape must be non-increasing: clip fitted exponents at 0
        shape = RateFunction.power(1.0, max(self.exponents_.p_, 0.0), max(self.exponents_.q_, 0.0))
        self.hardy_ = hardy_bounds(mu, shape)
        self.certified_ = shape.scaled(self.hardy_.upper)
        return self

    def predict(self, X):
        check_is_fitted(self, "certified_")
        return self.certified_(np.asarray(X, float))


class EmpiricalRateEstimator(BaseEstimator):
    """``fit(mu)`` computes the family lower bound on the WLSI rate."""

    def __init__(self, kinds=("capacity_ramps", "tilts", "indicators_smoothed", "random_piecewise"),
                 s_grid=None, seed=0):
        self.kinds = kinds
        self.s_grid = s_grid
        self.seed = seed

    def fit(self, X, y=None):
        mu = X
        fam = None
        for k in self.kinds:
            part = make_family(mu, k, seed=self.seed) if k == "random_piecewise" else make_family(mu, k)
            fam = part if fam is None else fam + part
        s = np.geomspace(1e-6, 1e-1, 30) if self.s_grid is None else np.asarray(self.s_grid, float)
        self.details_ = empirical_beta(mu, fam, s, return_details=True)
        self.beta_ = self.details_.rate
        return self

    def predict(self, X):
        check_is_fitted(self, "beta_")
        return self.beta_(np.asarray(X, float))
