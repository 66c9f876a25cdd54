"""Pure-Python kernels; reference semantics for ``_ckernels.pyx``.

Both backends must agree bit-for-bit. That constrains the code: sums are
accumulated sequentially in sample order, the random stream is splitmix64,
and feature visiting order is a lazily drawn Fisher-Yates permutation.
"""
from __future__ import annotations

from collections import deque

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def bounded(self, k: int) -> int:
        return self.next() % k


def graph_paths(indptr, indices, n, want_dist=True):
    """All-source BFS.

    Returns ``(dist, betweenness, load)`` where ``dist`` is an ``(n, n)``
    int32 matrix with ``-1`` for unreachable pairs (or ``None``), and both
    centralities use the unordered-pair convention (halved sums over sources).
    """
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    adj = [indices[indptr[v]:indptr[v + 1]].tolist() for v in range(n)]
    dist_all = np.full((n, n), -1, dtype=np.int32) if want_dist else None
    bc = [0.0] * n
    load = [0.0] * n
    for s in range(n):
        dist = [-1] * n
        sigma = [0.0] * n
        dist[s] = 0
        sigma[s] = 1.0
        order = []
        q = deque([s])
        while q:
            v = q.popleft()
            order.append(v)
            dv = dist[v] + 1
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dv
                    q.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
        delta = [0.0] * n
        inflow = [0.0] * n
        for w in reversed(order):
            if w == s:
                continue
            dw = dist[w] - 1
            npred = 0
            for v in adj[w]:
                if dist[v] == dw:
                    npred += 1
            coeff = (1.0 + delta[w]) / sigma[w]
            share = (1.0 + inflow[w]) / npred
            for v in adj[w]:
                if dist[v] == dw:
                    delta[v] += sigma[v] * coeff
                    inflow[v] += share
            bc[w] += delta[w]
            load[w] += inflow[w]
        if want_dist:
            dist_all[s] = dist
    bc_arr = np.asarray(bc) / 2.0
    load_arr = np.asarray(load) / 2.0
    return dist_all, bc_arr, load_arr


def build_tree(codes, g, h, samples, features, n_bins, max_depth, max_features,
               min_samples_leaf, min_child_weight, reg_lambda, min_gain, seed):
    """Grow one histogram tree.

    Parameters
    ----------
    codes : uint8 array, shape (n_features, n_rows)
        Binned feature codes, feature-major.
    g, h : float64 arrays, shape (n_rows,)
        First- and second-order statistics. Leaves predict ``G / (H + lambda)``
        and a split's gain is ``GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)``.
    samples : int64 array
        Rows that participate (weights of zero must already be excluded).
    features : int64 array
        Candidate features; ``max_features`` of the non-constant ones are
        examined per node in a random order.

    Returns
    -------
    tuple of arrays ``(feature, bin, left, right, value, gain, weight)``;
    leaves have ``feature == -1``.
    """
    rng = SplitMix64(seed)
    work = np.array(samples, dtype=np.int64)
    feats = np.array(features, dtype=np.int64)
    nf = len(feats)
    lam = float(reg_lambda)
    out_f, out_b, out_l, out_r, out_v, out_gain, out_w = [], [], [], [], [], [], []

    def new_node():
        out_f.append(-1)
        out_b.append(0)
        out_l.append(-1)
        out_r.append(-1)
        out_v.append(0.0)
        out_gain.append(0.0)
        out_w.append(0.0)
        return len(out_f) - 1

    stack = [(new_node(), 0, len(work), 0)]
    while stack:
        node, start, end, depth = stack.pop()
        idx = work[start:end]
        cnt = end - start
        G = float(np.cumsum(g[idx])[-1]) if cnt else 0.0
        H = float(np.cumsum(h[idx])[-1]) if cnt else 0.0
        out_v[node] = G / (H + lam) if (H + lam) > 0 else 0.0
        out_w[node] = H
        if depth >= max_depth or cnt < 2 * min_samples_leaf or H < 2.0 * min_child_weight:
            continue
        parent = G * G / (H + lam) if (H + lam) > 0 else 0.0
        best_gain = -np.inf
        best_f = -1
        best_b = -1
        perm = feats.copy()
        visited = 0
        for k in range(nf):
            j = k + rng.bounded(nf - k)
            perm[k], perm[j] = perm[j], perm[k]
            f = int(perm[k])
            nb = int(n_bins[f])
            col = codes[f, idx]
            hc = np.bincount(col, minlength=nb)
            if np.count_nonzero(hc) < 2:
                continue
            visited += 1
            hg = np.bincount(col, weights=g[idx], minlength=nb)
            hh = np.bincount(col, weights=h[idx], minlength=nb)
            cl = np.cumsum(hc)[:-1]
            GL = np.cumsum(hg)[:-1]
            HL = np.cumsum(hh)[:-1]
            cr = cnt - cl
            GR = G - GL
            HR = H - HL
            ok = (cl >= min_samples_leaf) & (cr >= min_samples_leaf) & (HL >= min_child_weight) & (HR >= min_child_weight)
            # empty bins would duplicate the previous threshold
            ok &= hc[:-1] > 0
            if ok.any():
                with np.errstate(divide="ignore", invalid="ignore"):
                    gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent
                gain = np.where(ok, gain, -np.inf)
                b = int(np.argmax(gain))
                if gain[b] > best_gain:
                    best_gain = float(gain[b])
                    best_f = f
                    best_b = b
            if visited >= max_features:
                break
        if best_f < 0 or not (best_gain > min_gain):
            continue
        col = codes[best_f, idx]
        go_left = col <= best_b
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        work[start:start + len(left_idx)] = left_idx
        work[start + len(left_idx):end] = right_idx
        out_f[node] = best_f
        out_b[node] = best_b
        out_gain[node] = best_gain
        lnode = new_node()
        rnode = new_node()
        out_l[node] = lnode
        out_r[node] = rnode
        mid = start + len(left_idx)
        stack.append((rnode, mid, end, depth + 1))
        stack.append((lnode, start, mid, depth + 1))
    return (np.asarray(out_f, dtype=np.int64), np.asarray(out_b, dtype=np.int64),
            np.asarray(out_l, dtype=np.int64), np.asarray(out_r, dtype=np.int64),
            np.asarray(out_v, dtype=np.float64), np.asarray(out_gain, dtype=np.float64),
            np.asarray(out_w, dtype=np.float64))


def predict_tree(X, feature, threshold, left, right, value):
    """Route each row of ``X`` to a leaf; ``x <= threshold`` goes left."""
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(len(X), dtype=np.int64)
    active = feature[node] >= 0
    rows = np.arange(len(X))
    while active.any():
        r = rows[active]
        nd = node[r]
        f = feature[nd]
        go_left = X[r, f] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active[r] = feature[node[r]] >= 0
    return value[node]
