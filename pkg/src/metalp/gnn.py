"""Minimal GCN / GraphSAGE link predictors with hand-written backpropagation.

Model
-----
Learnable node embeddings ``H0`` (no external features) pass through
``L`` message-passing layers ``H_{l+1} = act(S H_l W_l)`` where ``S`` is the
symmetric-normalised adjacency with self-loops (GCN) or the row-mean over a
node and its neighbours (SAGE). Hidden layers use ReLU and dropout; the last
layer is linear. A pair is scored by a two-layer MLP on ``h_i * h_j`` followed
by a sigmoid, and trained with binary cross-entropy against freshly sampled
non-edges every epoch, using Adam and global-norm gradient clipping.

Every layer implements ``forward`` returning a cache and ``backward``
consuming it; :func:`loss_and_grads` chains them.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .eval import auc_tie
from .graph import Graph, derive_rng, derive_seed, non_edges, sample_negatives

logger = logging.getLogger(__name__)

EPS = 1e-15
ARCHITECTURES = ("GCN", "SAGE")
_POOL_LIMIT = 4_000_000


@dataclass(frozen=True)
class GnnConfig:
    architecture: str = "GCN"
    num_layers: int = 2
    hidden_channels: int = 64
    embedding_dim: int | None = None  # defaults to hidden_channels
    dropout: float = 0.5
    learning_rate: float = 0.005
    epochs: int = 200
    patience: int = 20
    clip: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}")
        if self.num_layers < 1 or self.hidden_channels < 1:
            raise ValueError("num_layers and hidden_channels must be positive")

    @property
    def k(self) -> int:
        return self.embedding_dim or self.hidden_channels


GNN_GRID = tuple((layers, hidden) for layers in (2, 3, 4) for hidden in (32, 64, 128))


# --- operators ---------------------------------------------------------------

def gcn_operator(graph: Graph) -> sp.csr_matrix:
    """``D^-1/2 (A + I) D^-1/2`` with ``D`` the degrees of ``A + I``."""
    a = graph.adjacency() + sp.identity(graph.n, format="csr")
    d = 1.0 / np.sqrt(np.asarray(a.sum(axis=1)).ravel())
    return sp.csr_matrix(sp.diags(d) @ a @ sp.diags(d))


def sage_operator(graph: Graph) -> sp.csr_matrix:
    """Row-mean over each node and its neighbours."""
    a = graph.adjacency() + sp.identity(graph.n, format="csr")
    d = 1.0 / np.asarray(a.sum(axis=1)).ravel()
    return sp.csr_matrix(sp.diags(d) @ a)


def operator(graph: Graph, architecture: str) -> sp.csr_matrix:
    return gcn_operator(graph) if architecture == "GCN" else sage_operator(graph)


def _relu(x):
    return np.maximum(x, 0.0)


def _identity(x):
    return x


def _apply_layer(S, H, W, activation):
    act = {"relu": _relu, "identity": _identity}.get(activation, activation)
    return act(S @ (H @ W))


def gcn_layer(graph: Graph, H, W, activation="relu") -> np.ndarray:
    """One GCN propagation step without dropout."""
    return _apply_layer(gcn_operator(graph), np.asarray(H, float), np.asarray(W, float), activation)


def sage_layer(graph: Graph, H, W, activation="relu") -> np.ndarray:
    """One mean-aggregation step without dropout."""
    return _apply_layer(sage_operator(graph), np.asarray(H, float), np.asarray(W, float), activation)


def init_embeddings(n: int, k: int, seed: int) -> np.ndarray:
    """``n x k`` matrix with i.i.d. entries in ``(-1/sqrt(k), 1/sqrt(k))``."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    b = 1.0 / np.sqrt(k)
    return derive_rng(seed, 31).uniform(-b, b, size=(n, k))


def _glorot(rng, fan_in, fan_out):
    b = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-b, b, size=(fan_in, fan_out))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# --- model -------------------------------------------------------------------

@dataclass
class GnnModel:
    config: GnnConfig
    params: dict  # H0, W0..W{L-1}, F1, b1, F2, b2
    history: list = field(default_factory=list)
    best_epoch: int = 0

    @classmethod
    def initialise(cls, n: int, config: GnnConfig) -> "GnnModel":
        rng = derive_rng(config.seed, 32)
        k, h = config.k, config.hidden_channels
        params = {"H0": init_embeddings(n, k, config.seed)}
        dims = [k] + [h] * config.num_layers
        for l in range(config.num_layers):
            params[f"W{l}"] = _glorot(rng, dims[l], dims[l + 1])
        params["F1"] = _glorot(rng, h, h)
        params["b1"] = np.zeros(h)
        params["F2"] = _glorot(rng, h, 1)
        params["b2"] = np.zeros(1)
        return cls(config, params)

    def copy(self) -> "GnnModel":
        return GnnModel(self.config, {k: v.copy() for k, v in self.params.items()},
                        list(self.history), self.best_epoch)

    def digest(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name]).tobytes())
        return h.hexdigest()

    def embed(self, S) -> np.ndarray:
        H, _ = encode(self.params, S, self.config.num_layers, 0.0, None)
        return H

    def score(self, S, pairs) -> np.ndarray:
        return score_edges(self.embed(S), pairs, self.params)


def encode(params, S, num_layers, dropout, rng):
    """Forward through the message-passing layers; returns ``(H, cache)``."""
    H = params["H0"]
    cache = []
    for l in range(num_layers):
        SH = S @ H
        Z = SH @ params[f"W{l}"]
        last = l == num_layers - 1
        if last:
            out, mask = Z, None
        else:
            out = _relu(Z)
            mask = None
            if dropout > 0 and rng is not None:
                mask = (rng.random(out.shape) >= dropout) / (1.0 - dropout)
                out = out * mask
        cache.append((SH, Z, mask, last))
        H = out
    return H, cache


def encode_backward(params, S, cache, dH, grads):
    """Backpropagate ``dH`` through the layers, filling ``grads``."""
    for l in range(len(cache) - 1, -1, -1):
        SH, Z, mask, last = cache[l]
        dZ = dH
        if not last:
            if mask is not None:
                dZ = dZ * mask
            dZ = dZ * (Z > 0)
        grads[f"W{l}"] = SH.T @ dZ
        dH = S.T @ (dZ @ params[f"W{l}"].T)
    grads["H0"] = np.asarray(dH)


def mlp_forward(params, z):
    a = z @ params["F1"] + params["b1"]
    r = _relu(a)
    logit = (r @ params["F2"] + params["b2"])[:, 0]
    return logit, (z, a, r)


def mlp_backward(params, cache, dlogit, grads):
    z, a, r = cache
    d = dlogit[:, None]
    grads["F2"] = r.T @ d
    grads["b2"] = d.sum(axis=0)
    da = (d @ params["F2"].T) * (a > 0)
    grads["F1"] = z.T @ da
    grads["b1"] = da.sum(axis=0)
    return da @ params["F1"].T


def score_edges(H, pairs, params) -> np.ndarray:
    """``sigmoid(MLP(h_i * h_j))`` for each pair."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    logit, _ = mlp_forward(params, H[pairs[:, 0]] * H[pairs[:, 1]])
    return _sigmoid(logit)


def bce_loss(pos_scores, neg_scores) -> float:
    """Mean ``-log(p + eps)`` over positives plus mean ``-log(1 - p + eps)`` over negatives."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both score sets must be nonempty")
    return float(np.mean(-np.log(pos + EPS)) + np.mean(-np.log(1.0 - neg + EPS)))


def loss_and_grads(params, S, num_layers, pos, neg, dropout=0.0, rng=None):
    """Total loss and the gradient of every parameter block."""
    pos = np.asarray(pos, dtype=np.int64).reshape(-1, 2)
    neg = np.asarray(neg, dtype=np.int64).reshape(-1, 2)
    H, enc_cache = encode(params, S, num_layers, dropout, rng)
    pairs = np.vstack([pos, neg])
    hi, hj = H[pairs[:, 0]], H[pairs[:, 1]]
    logit, mlp_cache = mlp_forward(params, hi * hj)
    y = _sigmoid(logit)
    npos, nneg = len(pos), len(neg)
    yp, yn = y[:npos], y[npos:]
    loss = float(np.mean(-np.log(yp + EPS)) + np.mean(-np.log(1.0 - yn + EPS)))
    dy = y * (1.0 - y)  # d sigmoid / d logit
    dlogit = np.concatenate([-dy[:npos] / (yp + EPS) / npos, dy[npos:] / (1.0 - yn + EPS) / nneg])
    grads = {}
    dz = mlp_backward(params, mlp_cache, dlogit, grads)
    dH = np.zeros_like(H)
    np.add.at(dH, pairs[:, 0], dz * hj)
    np.add.at(dH, pairs[:, 1], dz * hi)
    encode_backward(params, S, enc_cache, dH, grads)
    return loss, grads


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_gradients(grads: dict, tau: float) -> float:
    """Scale ``grads`` in place so their global L2 norm is at most ``tau``."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm > tau:
        scale = tau / norm if norm > 0 else 0.0
        for k in grads:
            grads[k] *= scale
    return norm


def train_step(model: GnnModel, S, opt: Adam, pos, neg, rng=None, dropout=None) -> float:
    """One Adam update on explicit positive/negative pairs; returns the loss."""
    p = model.config.dropout if dropout is None else dropout
    loss, grads = loss_and_grads(model.params, S, model.config.num_layers, pos, neg, p, rng)
    if not np.isfinite(loss):
        norms = {k: float(np.linalg.norm(v)) for k, v in model.params.items()}
        raise FloatingPointError(f"non-finite loss {loss}; parameter norms {norms}")
    clip_gradients(grads, model.config.clip)
    opt.step(model.params, grads)
    return loss


class _NegativeSampler:
    def __init__(self, graph: Graph, seed: int):
        self.graph, self.seed = graph, seed
        total = graph.n * (graph.n - 1) // 2
        self.pool = non_edges(graph) if total <= _POOL_LIMIT else None

    def draw(self, count: int, epoch: int) -> np.ndarray:
        if self.pool is not None:
            if len(self.pool) == 0:
                raise ValueError("graph has no non-edges")
            rng = derive_rng(self.seed, 41, epoch)
            size = min(count, len(self.pool))
            return self.pool[np.sort(rng.choice(len(self.pool), size, replace=False))]
        return sample_negatives(self.graph, count, derive_seed(self.seed, 41, epoch)).pairs


def train_gnn(graph: Graph, config: GnnConfig, validation=None, epochs: int | None = None,
              model: GnnModel | None = None) -> GnnModel:
    """Fit a model on the edges of ``graph``.

    Parameters
    ----------
    validation : tuple of (pos_pairs, neg_pairs), optional
        If given, tie-credit AUC is tracked every epoch, training stops after
        ``config.patience`` epochs without improvement, and the best
        parameters are returned.
    epochs : int, optional
        Overrides ``config.epochs``.
    """
    if graph.m < 1:
        raise ValueError("graph has no edges")
    S = operator(graph, config.architecture)
    model = model.copy() if model is not None else GnnModel.initialise(graph.n, config)
    opt = Adam(model.params, config.learning_rate)
    sampler = _NegativeSampler(graph, config.seed)
    drop_rng = derive_rng(config.seed, 42)
    n_epochs = config.epochs if epochs is None else epochs
    best, best_auc, stale = model.copy(), -np.inf, 0
    for epoch in range(1, n_epochs + 1):
        neg = sampler.draw(graph.m, epoch)
        loss = train_step(model, S, opt, graph.edges, neg, drop_rng)
        row = {"epoch": epoch, "loss": loss}
        if validation is not None:
            scores_p = model.score(S, validation[0])
            scores_n = model.score(S, validation[1])
            val = auc_tie(scores_p, scores_n)
            row["val_auc"] = val
            if val > best_auc:
                best_auc, stale = val, 0
                best = model.copy()
                best.best_epoch = epoch
            else:
                stale += 1
        model.history.append(row)
        if validation is not None and stale >= config.patience:
            break
    if validation is None:
        model.best_epoch = n_epochs
        return model
    best.history = model.history
    return best


@dataclass(frozen=True)
class TuningResult:
    config: GnnConfig
    table: tuple  # ((num_layers, hidden), val_auc, best_epoch) per cell


def tune_gnn(nested, architecture: str = "GCN", grid=GNN_GRID, seed: int = 0,
             validation_negatives=None, base: GnnConfig | None = None) -> TuningResult:
    """Grid search on the inner split; first cell wins ties.

    Models train on the inner training graph and are scored on the inner
    held-out edges against ``validation_negatives`` (non-edges of the
    observed graph when not given). The returned config carries the best
    cell and its early-stopping epoch count.
    """
    g_train = nested.training
    pos = nested.inner.heldout
    if validation_negatives is None:
        validation_negatives = sample_negatives(nested.observed, max(len(pos), 1), derive_seed(seed, 43)).pairs
    base = base or GnnConfig(architecture=architecture, seed=seed)
    table = []
    best_cfg, best_auc = None, -np.inf
    for layers, hidden in grid:
        cfg = replace(base, architecture=architecture, num_layers=layers, hidden_channels=hidden,
                      seed=derive_seed(seed, layers, hidden))
        model = train_gnn(g_train, cfg, validation=(pos, validation_negatives))
        val = max((r["val_auc"] for r in model.history), default=float("nan"))
        table.append(((layers, hidden), val, model.best_epoch))
        logger.debug("%s cell (%d, %d): AUC %.4f at epoch %d", architecture, layers, hidden, val, model.best_epoch)
        if val > best_auc:
            best_auc = val
            best_cfg = replace(cfg, epochs=max(model.best_epoch, 1))
    if best_cfg is None:
        layers, hidden = grid[0]
        best_cfg = replace(base, architecture=architecture, num_layers=layers, hidden_channels=hidden)
    return TuningResult(best_cfg, tuple(table))


def save_checkpoint(model: GnnModel, path) -> None:
    from .stacking import save_model
    save_model(model, path, kind="metalp-gnn", config=model.config.__dict__)


def load_checkpoint(path) -> GnnModel:
    from .stacking import load_model
    return load_model(path, kind="metalp-gnn")
