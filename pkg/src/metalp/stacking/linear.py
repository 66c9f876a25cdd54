"""L1/L2-regularised logistic regression by accelerated proximal gradient."""
from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


class Standardizer:
    """Centre and scale columns.

    Columns that are constant during fitting carry no information, and a
    later shift in them (graph-level features change between the training and
    observed graphs) must not move predictions, so they map to 0.
    """

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        sd = X.std(axis=0)
        # a constant column picks up ~1e-16 relative jitter from the mean
        constant = sd <= 1e-12 * np.maximum(1.0, np.abs(self.mean_))
        self.scale_ = np.where(constant, 1.0, sd)
        self.constant_ = constant
        return self

    def transform(self, X):
        Z = (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_
        Z[:, self.constant_] = 0.0
        return Z


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LogisticRegression:
    """Minimises ``R(w) + C * sum_i log(1 + exp(-s_i (x_i.w + b)))``.

    ``R`` is ``0.5*||w||^2`` (``penalty="l2"``) or ``||w||_1`` (``"l1"``);
    the intercept is not penalised and ``s_i = 2*y_i - 1``. Features are
    standardised internally, so ``w`` lives in standardised units.

    The solver is FISTA with the fixed step ``1/L`` and gradient-based
    adaptive restart.
    """

    def __init__(self, C=1.0, penalty="l2", tol=1e-7, max_iter=20000):
        if penalty not in ("l1", "l2"):
            raise ValueError("penalty must be 'l1' or 'l2'")
        if C <= 0:
            raise ValueError("C must be positive")
        self.C = C
        self.penalty = penalty
        self.tol = tol
        self.max_iter = max_iter

    def objective(self, X, y, w=None, b=None) -> float:
        """The regularised objective at ``(w, b)`` in standardised units."""
        w = self.coef_ if w is None else w
        b = self.intercept_ if b is None else b
        Z = self.scaler_.transform(X)
        s = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
        loss = _log1pexp(-s * (Z @ w + b)).sum()
        reg = 0.5 * w @ w if self.penalty == "l2" else np.abs(w).sum()
        return float(reg + self.C * loss)

    def fit(self, X, y) -> "LogisticRegression":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        self.scaler_ = Standardizer().fit(X)
        Z = np.hstack([self.scaler_.transform(X), np.ones((n, 1))])
        lam = 1.0 / (self.C * n)
        L = np.linalg.norm(Z, 2) ** 2 / (4.0 * n)
        if self.penalty == "l2":
            L += lam
        step = 1.0 / L

        def grad(v):
            g = Z.T @ (_sigmoid(Z @ v) - y) / n
            if self.penalty == "l2":
                g[:d] += lam * v[:d]
            return g

        def prox(v):
            if self.penalty == "l1":
                v = v.copy()
                v[:d] = np.sign(v[:d]) * np.maximum(np.abs(v[:d]) - step * lam, 0.0)
            return v

        x = np.zeros(d + 1)
        z = x.copy()
        t = 1.0
        self.n_iter_ = self.max_iter
        for it in range(self.max_iter):
            x_new = prox(z - step * grad(z))
            if np.max(np.abs(x_new - x)) < self.tol * max(1.0, np.max(np.abs(x_new))):
                x = x_new
                self.n_iter_ = it + 1
                break
            if np.dot(z - x_new, x_new - x) > 0:  # momentum is pointing uphill
                t = 1.0
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            x, t = x_new, t_new
        else:
            logger.warning("logistic regression did not converge in %d iterations", self.max_iter)
        self.coef_ = x[:d]
        self.intercept_ = float(x[d])
        return self

    def decision_function(self, X) -> np.ndarray:
        return self.scaler_.transform(X) @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))
