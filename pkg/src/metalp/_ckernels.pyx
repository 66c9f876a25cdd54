# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics mirror ``metalp._pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY

cnp.import_array()


cdef inline uint64_t _splitmix(uint64_t* state) nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def graph_paths(indptr, indices, Py_ssize_t n, bint want_dist=True):
    cdef const int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t rows = n if want_dist else 1
    shape = (rows, n)
    dist_all_arr = np.full(shape, -1, dtype=np.int32)
    cdef int32_t[:, ::1] dist_all = dist_all_arr
    bc_arr = np.zeros(n, dtype=np.float64)
    load_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] bc = bc_arr
    cdef double[::1] load = load_arr
    cdef int64_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef double[::1] sigma = np.empty(n, dtype=np.float64)
    cdef double[::1] delta = np.empty(n, dtype=np.float64)
    cdef double[::1] inflow = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] order = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t s, v, w, k, head, tail, npred
    cdef int64_t dv, dw
    cdef double coeff, share
    with nogil:
        for s in range(n):
            for v in range(n):
                dist[v] = -1
                sigma[v] = 0.0
                delta[v] = 0.0
                inflow[v] = 0.0
            dist[s] = 0
            sigma[s] = 1.0
            head = 0
            tail = 0
            order[tail] = s
            tail += 1
            while head < tail:
                v = order[head]
                head += 1
                dv = dist[v] + 1
                for k in range(ip[v], ip[v + 1]):
                    w = ix[k]
                    if dist[w] < 0:
                        dist[w] = dv
                        order[tail] = w
                        tail += 1
                    if dist[w] == dv:
                        sigma[w] += sigma[v]
            for head in range(tail - 1, -1, -1):
                w = order[head]
                if w == s:
                    continue
                dw = dist[w] - 1
                npred = 0
                for k in range(ip[w], ip[w + 1]):
                    if dist[ix[k]] == dw:
                        npred += 1
                coeff = (1.0 + delta[w]) / sigma[w]
                share = (1.0 + inflow[w]) / npred
                for k in range(ip[w], ip[w + 1]):
                    v = ix[k]
                    if dist[v] == dw:
                        delta[v] += sigma[v] * coeff
                        inflow[v] += share
                bc[w] += delta[w]
                load[w] += inflow[w]
            if want_dist:
                for v in range(n):
                    dist_all[s, v] = <int32_t>dist[v]
    for v in range(n):
        bc[v] = bc[v] / 2.0
        load[v] = load[v] / 2.0
    return (dist_all_arr if want_dist else None), bc_arr, load_arr


def build_tree(codes, g, h, samples, features, n_bins, int max_depth, int max_features,
               int min_samples_leaf, double min_child_weight, double reg_lambda,
               double min_gain, seed):
    cdef const uint8_t[:, ::1] cd = np.ascontiguousarray(codes, dtype=np.uint8)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef int64_t[::1] work = np.array(samples, dtype=np.int64)
    cdef const int64_t[::1] feats = np.ascontiguousarray(features, dtype=np.int64)
    cdef const int64_t[::1] nbins = np.ascontiguousarray(n_bins, dtype=np.int64)
    cdef Py_ssize_t nf = feats.shape[0]
    cdef Py_ssize_t nsamp = work.shape[0]
    cdef int64_t[::1] perm = np.empty(max(nf, 1), dtype=np.int64)
    cdef int64_t[::1] buf = np.empty(max(nsamp, 1), dtype=np.int64)
    cdef Py_ssize_t maxb = 1
    cdef Py_ssize_t k
    for k in range(nbins.shape[0]):
        if nbins[k] > maxb:
            maxb = nbins[k]
    cdef double[::1] hg = np.empty(maxb, dtype=np.float64)
    cdef double[::1] hh = np.empty(maxb, dtype=np.float64)
    cdef int64_t[::1] hc = np.empty(maxb, dtype=np.int64)

    # growable node storage
    cdef Py_ssize_t cap = 64
    f_arr = np.full(cap, -1, dtype=np.int64)
    b_arr = np.zeros(cap, dtype=np.int64)
    l_arr = np.full(cap, -1, dtype=np.int64)
    r_arr = np.full(cap, -1, dtype=np.int64)
    v_arr = np.zeros(cap, dtype=np.float64)
    gn_arr = np.zeros(cap, dtype=np.float64)
    w_arr = np.zeros(cap, dtype=np.float64)
    cdef Py_ssize_t n_nodes = 1

    # explicit stack: node, start, end, depth
    stack = [(0, 0, nsamp, 0)]
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t node, start, end, depth, i, j, b, nb, nonzero, visited, cnt, best_f, best_b, f, mid, lpos, rpos
    cdef int64_t tmp, s_idx, cl, cr
    cdef double G, H, lam = reg_lambda, parent, best_gain, GL, HL, GR, HR, gain
    cdef int64_t[::1] fv
    cdef int64_t[::1] bv
    cdef int64_t[::1] lv
    cdef int64_t[::1] rv
    cdef double[::1] vv
    cdef double[::1] gnv
    cdef double[::1] wv
    while stack:
        node, start, end, depth = stack.pop()
        if n_nodes + 2 > cap:
            cap *= 2
            f_arr = np.concatenate([f_arr, np.full(cap - len(f_arr), -1, dtype=np.int64)])
            b_arr = np.concatenate([b_arr, np.zeros(cap - len(b_arr), dtype=np.int64)])
            l_arr = np.concatenate([l_arr, np.full(cap - len(l_arr), -1, dtype=np.int64)])
            r_arr = np.concatenate([r_arr, np.full(cap - len(r_arr), -1, dtype=np.int64)])
            v_arr = np.concatenate([v_arr, np.zeros(cap - len(v_arr), dtype=np.float64)])
            gn_arr = np.concatenate([gn_arr, np.zeros(cap - len(gn_arr), dtype=np.float64)])
            w_arr = np.concatenate([w_arr, np.zeros(cap - len(w_arr), dtype=np.float64)])
        fv = f_arr
        bv = b_arr
        lv = l_arr
        rv = r_arr
        vv = v_arr
        gnv = gn_arr
        wv = w_arr
        best_f = -1
        best_b = -1
        best_gain = -INFINITY
        with nogil:
            cnt = end - start
            G = 0.0
            H = 0.0
            for i in range(start, end):
                G += gv[work[i]]
            for i in range(start, end):
                H += hv[work[i]]
            vv[node] = G / (H + lam) if (H + lam) > 0 else 0.0
            wv[node] = H
            if not (depth >= max_depth or cnt < 2 * min_samples_leaf or H < 2.0 * min_child_weight):
                parent = G * G / (H + lam) if (H + lam) > 0 else 0.0
                for k in range(nf):
                    perm[k] = feats[k]
                visited = 0
                for k in range(nf):
                    j = k + <Py_ssize_t>(_splitmix(&state) % <uint64_t>(nf - k))
                    tmp = perm[k]
                    perm[k] = perm[j]
                    perm[j] = tmp
                    f = perm[k]
                    nb = nbins[f]
                    for b in range(nb):
                        hg[b] = 0.0
                        hh[b] = 0.0
                        hc[b] = 0
                    for i in range(start, end):
                        s_idx = work[i]
                        b = cd[f, s_idx]
                        hc[b] += 1
                    nonzero = 0
                    for b in range(nb):
                        if hc[b] > 0:
                            nonzero += 1
                    if nonzero < 2:
                        continue
                    visited += 1
                    for i in range(start, end):
                        s_idx = work[i]
                        b = cd[f, s_idx]
                        hg[b] += gv[s_idx]
                        hh[b] += hv[s_idx]
                    cl = 0
                    GL = 0.0
                    HL = 0.0
                    for b in range(nb - 1):
                        cl += hc[b]
                        GL += hg[b]
                        HL += hh[b]
                        if hc[b] == 0:
                            continue
                        cr = cnt - cl
                        GR = G - GL
                        HR = H - HL
                        if cl < min_samples_leaf or cr < min_samples_leaf or HL < min_child_weight or HR < min_child_weight:
                            continue
                        gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent
                        if gain > best_gain:
                            best_gain = gain
                            best_f = f
                            best_b = b
                    if visited >= max_features:
                        break
                if best_f >= 0 and best_gain > min_gain:
                    lpos = start
                    rpos = 0
                    for i in range(start, end):
                        s_idx = work[i]
                        if cd[best_f, s_idx] <= best_b:
                            work[lpos] = s_idx
                            lpos += 1
                        else:
                            buf[rpos] = s_idx
                            rpos += 1
                    for i in range(rpos):
                        work[lpos + i] = buf[i]
        if best_f >= 0 and best_gain > min_gain and not (depth >= max_depth or cnt < 2 * min_samples_leaf or H < 2.0 * min_child_weight):
            mid = lpos
            fv[node] = best_f
            bv[node] = best_b
            gnv[node] = best_gain
            lv[node] = n_nodes
            rv[node] = n_nodes + 1
            stack.append((n_nodes + 1, mid, end, depth + 1))
            stack.append((n_nodes, start, mid, depth + 1))
            n_nodes += 2
    return (f_arr[:n_nodes].copy(), b_arr[:n_nodes].copy(), l_arr[:n_nodes].copy(),
            r_arr[:n_nodes].copy(), v_arr[:n_nodes].copy(), gn_arr[:n_nodes].copy(),
            w_arr[:n_nodes].copy())


def predict_tree(X, feature, threshold, left, right, value):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef int64_t node
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            node = 0
            while fv[node] >= 0:
                if xv[i, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            ov[i] = vv[node]
    return out
