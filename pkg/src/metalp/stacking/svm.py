"""RBF support vector classifier: SMO dual solver plus Platt calibration."""
from __future__ import annotations

import logging

import numpy as np

from .linear import Standardizer

logger = logging.getLogger(__name__)

_TAU = 1e-12


def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo(K: np.ndarray, y: np.ndarray, C: float, eps: float = 1e-3, max_iter: int | None = None):
    """Solve the C-SVC dual with second-order working-set selection.

    Minimises ``0.5 a'Qa - sum(a)`` s.t. ``0 <= a <= C`` and ``y'a = 0`` where
    ``Q = (y y') * K`` and ``y`` is +-1. Returns ``(alpha, rho)``; the decision
    function is ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = len(y)
    max_iter = max_iter or max(10_000_000, 100 * n)
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K).copy()
    for it in range(max_iter):
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(yG[up])])
        m_up = yG[i]
        if m_up - yG[low].min() < eps:
            break
        cand = low & (yG < m_up)
        b = m_up - yG[cand]
        a = diag[i] + diag[cand] - 2.0 * K[i, cand]
        a = np.where(a > 0, a, _TAU)
        idx = np.flatnonzero(cand)
        j = int(idx[np.argmin(-(b * b) / a)])

        Qi = y[i] * y * K[i]
        Qj = y[j] * y * K[j]
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Qi[j], _TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Qi[j], _TAU)
            delta = (G[i] - G[j]) / quad
            s = ai + aj
            ai -= delta
            aj += delta
            if s > C:
                if ai > C:
                    ai, aj = C, s - C
            elif aj < 0:
                aj, ai = 0.0, s
            if s > C:
                if aj > C:
                    aj, ai = C, s - C
            elif ai < 0:
                ai, aj = 0.0, s
        G += Qi * (ai - alpha[i]) + Qj * (aj - alpha[j])
        alpha[i], alpha[j] = ai, aj
    else:
        logger.warning("SMO stopped at the iteration limit")

    yG = -y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = -yG[free].mean()
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        hi = yG[up].max() if up.any() else 0.0
        lo = yG[low].min() if low.any() else 0.0
        rho = -(hi + lo) / 2.0
    return alpha, float(rho)


def platt(f: np.ndarray, y: np.ndarray, max_iter: int = 100) -> tuple[float, float]:
    """Fit ``P(y=1|f) = 1 / (1 + exp(A f + B))`` by regularised Newton steps."""
    f = np.asarray(f, dtype=np.float64)
    pos = float((y > 0).sum())
    neg = float(len(y) - pos)
    t = np.where(y > 0, (pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0))
    A, B = 0.0, np.log((neg + 1.0) / (pos + 1.0))

    def nll(A, B):
        z = A * f + B
        return float(np.sum(t * z + np.logaddexp(0.0, -z)))

    cur = nll(A, B)
    for _ in range(max_iter):
        z = A * f + B
        p = 0.5 * (1.0 - np.tanh(0.5 * z))  # 1/(1+exp(z))
        q = 1.0 - p
        d1 = t - q  # derivative of nll wrt z
        d2 = p * q
        g1, g2 = np.dot(d1, f), d1.sum()
        h11, h22, h21 = np.dot(d2, f * f) + 1e-12, d2.sum() + 1e-12, np.dot(d2, f)
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            new = nll(A + step * dA, B + step * dB)
            if new < cur + 1e-4 * step * gd:
                A, B, cur = A + step * dA, B + step * dB, new
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


class SVC:
    """RBF C-SVC on standardised features with Platt-scaled probabilities.

    ``gamma="scale"`` means ``1 / (n_features * Var(X))`` computed on the
    standardised training matrix. Training sets larger than ``max_rows`` are
    stratified-subsampled (the dual needs the full kernel matrix in memory).
    """

    def __init__(self, C=1.0, gamma="scale", eps=1e-3, max_rows=3000, seed=0):
        self.C = C
        self.gamma = gamma
        self.eps = eps
        self.max_rows = max_rows
        self.seed = seed

    def fit(self, X, y) -> "SVC":
        from ..graph import derive_rng
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if len(np.unique(y)) < 2:
            raise ValueError("SVC needs both classes")
        if len(X) > self.max_rows:
            rng = derive_rng(self.seed, 7)
            keep = []
            for c in (0, 1):
                idx = np.flatnonzero(y == c)
                take = max(1, int(round(self.max_rows * len(idx) / len(X))))
                keep.append(np.sort(rng.choice(idx, min(take, len(idx)), replace=False)))
            keep = np.sort(np.concatenate(keep))
            X, y = X[keep], y[keep]
        self.scaler_ = Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        var = Z.var()
        self.gamma_ = (1.0 / (Z.shape[1] * var) if var > 0 else 1.0) if self.gamma == "scale" else float(self.gamma)
        s = np.where(y > 0, 1.0, -1.0)
        K = rbf_kernel(Z, Z, self.gamma_)
        alpha, rho = smo(K, s, self.C, self.eps)
        sv = alpha > 0
        self.support_ = Z[sv]
        self.dual_coef_ = alpha[sv] * s[sv]
        self.rho_ = rho
        f = K[:, sv] @ self.dual_coef_ - rho
        self.platt_ = platt(f, s)
        return self

    def decision_function(self, X) -> np.ndarray:
        Z = self.scaler_.transform(X)
        out = np.empty(len(Z))
        for start in range(0, len(Z), 2048):
            blk = Z[start:start + 2048]
            out[start:start + 2048] = rbf_kernel(blk, self.support_, self.gamma_) @ self.dual_coef_ - self.rho_
        return out

    def predict_proba(self, X) -> np.ndarray:
        A, B = self.platt_
        z = A * self.decision_function(X) + B
        return 0.5 * (1.0 - np.tanh(0.5 * z))
