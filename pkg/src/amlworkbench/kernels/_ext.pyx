# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled backend for the hot embedding kernels.

Expression-for-expression transcription of ``_purepy.py``; compiled with
-ffp-contract=off so both backends produce bit-identical results. Any change
here must be mirrored in the pure-Python module.
"""

from libc.math cimport exp, isfinite, log, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

from .errors import BallViolationError, DegeneratePairError, DivergenceError

BACKEND = "ext"


def pair_distance(u, v):
    """Distance between two points of the unit ball (see _purepy.pair_distance)."""
    cdef double[:] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t dim = uv.shape[0]
    cdef Py_ssize_t i
    cdef double su = 0.0, sv = 0.0, sd = 0.0
    cdef double ui, vi, di, alpha, beta, gamma
    for i in range(dim):
        ui = uv[i]
        vi = vv[i]
        su += ui * ui
        sv += vi * vi
        di = ui - vi
        sd += di * di
    if su >= 1.0 or sv >= 1.0:
        raise BallViolationError("point norm >= 1 is outside the open unit ball")
    alpha = 1.0 - su
    beta = 1.0 - sv
    gamma = 1.0 + 2.0 * sd / (alpha * beta)
    return log(gamma + sqrt(gamma * gamma - 1.0))


def pair_distance_grad(u, v):
    """Distance plus Euclidean gradients (see _purepy.pair_distance_grad)."""
    cdef double[:] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[:] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t dim = uv.shape[0]
    cdef Py_ssize_t i
    cdef double su = 0.0, sv = 0.0, sd = 0.0, dot = 0.0
    cdef double ui, vi, di
    cdef double alpha, beta, gamma, root, dist, cu, au, cv, av
    for i in range(dim):
        ui = uv[i]
        vi = vv[i]
        su += ui * ui
        sv += vi * vi
        di = ui - vi
        sd += di * di
        dot += ui * vi
    if su >= 1.0 or sv >= 1.0:
        raise BallViolationError("point norm >= 1 is outside the open unit ball")
    if sd == 0.0:
        raise DegeneratePairError("coincident points: distance gradient undefined")
    alpha = 1.0 - su
    beta = 1.0 - sv
    gamma = 1.0 + 2.0 * sd / (alpha * beta)
    root = sqrt(gamma * gamma - 1.0)
    if root == 0.0:
        raise DegeneratePairError("pair numerically coincident: gradient underflow")
    dist = log(gamma + root)
    cu = 4.0 / (beta * root)
    au = (sv - 2.0 * dot + 1.0) / (alpha * alpha)
    cv = 4.0 / (alpha * root)
    av = (su - 2.0 * dot + 1.0) / (beta * beta)
    gu = np.empty(dim, dtype=np.float64)
    gv = np.empty(dim, dtype=np.float64)
    cdef double[:] guv = gu
    cdef double[:] gvv = gv
    for i in range(dim):
        ui = uv[i]
        vi = vv[i]
        guv[i] = cu * (au * ui - vi / alpha)
        gvv[i] = cv * (av * vi - ui / beta)
    return dist, gu, gv


cdef int _update_row_c(double[:, ::1] emb, Py_ssize_t node, double* grad,
                       double lr, double eps, double* scratch) except -1:
    cdef Py_ssize_t dim = emb.shape[1]
    cdef Py_ssize_t i
    cdef int tries
    cdef double ti, n2 = 0.0
    cdef double rem, factor, nn2 = 0.0, xi, maxn, scale
    for i in range(dim):
        ti = emb[node, i]
        n2 += ti * ti
    rem = 1.0 - n2
    factor = rem * rem / 4.0
    for i in range(dim):
        xi = emb[node, i] - lr * (factor * grad[i])
        scratch[i] = xi
        nn2 += xi * xi
    maxn = 1.0 - eps
    # rescale can land a ulp outside; repeat (bounded) until truly contained
    tries = 0
    while nn2 > maxn * maxn and tries < 16:
        scale = maxn / sqrt(nn2)
        nn2 = 0.0
        for i in range(dim):
            xi = scratch[i] * scale
            scratch[i] = xi
            nn2 += xi * xi
        tries += 1
    for i in range(dim):
        if not isfinite(scratch[i]):
            raise DivergenceError(node)
        emb[node, i] = scratch[i]
    return 0


def edge_step(emb_arr, anchor, pos, negs, weight, lr, eps):
    """One weighted training step (see _purepy.edge_step for the contract)."""
    cdef double w = weight
    if w == 0.0:
        return 0.0
    cdef double[:, ::1] emb = emb_arr
    cdef double lr_c = lr
    cdef double eps_c = eps
    cdef Py_ssize_t anc = anchor
    cdef Py_ssize_t dim = emb.shape[1]
    cdef long[:] negv = np.ascontiguousarray(negs, dtype=np.int64)
    cdef Py_ssize_t k = negv.shape[0]
    cdef Py_ssize_t m = k + 1
    cdef Py_ssize_t i, s, r, t
    cdef double ui, vi, di, sv, sd, dot, beta, gamma, root
    cdef double su = 0.0
    for i in range(dim):
        ui = emb[anc, i]
        su += ui * ui
    cdef double alpha = 1.0 - su

    cdef Py_ssize_t* targets = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    cdef double* dist = <double*> malloc(m * sizeof(double))
    cdef double* root_ = <double*> malloc(m * sizeof(double))
    cdef double* beta_ = <double*> malloc(m * sizeof(double))
    cdef double* sv_ = <double*> malloc(m * sizeof(double))
    cdef double* dot_ = <double*> malloc(m * sizeof(double))
    cdef int* valid = <int*> malloc(m * sizeof(int))
    cdef int* alive = <int*> malloc(m * sizeof(int))
    cdef double* ganchor = <double*> malloc(dim * sizeof(double))
    cdef double* gtarget = <double*> malloc(m * dim * sizeof(double))
    cdef double* scratch = <double*> malloc(dim * sizeof(double))
    if (targets == NULL or dist == NULL or root_ == NULL or beta_ == NULL
            or sv_ == NULL or dot_ == NULL or valid == NULL or alive == NULL
            or ganchor == NULL or gtarget == NULL or scratch == NULL):
        free(targets); free(dist); free(root_); free(beta_); free(sv_)
        free(dot_); free(valid); free(alive); free(ganchor); free(gtarget)
        free(scratch)
        raise MemoryError()

    cdef double dmin, z, loss, p, cu, au, cv, av, c
    cdef double* gt
    cdef double* gs
    cdef double* gr
    try:
        targets[0] = pos
        for s in range(k):
            targets[s + 1] = negv[s]

        for s in range(m):
            t = targets[s]
            sv = 0.0
            sd = 0.0
            dot = 0.0
            for i in range(dim):
                ui = emb[anc, i]
                vi = emb[t, i]
                sv += vi * vi
                di = ui - vi
                sd += di * di
                dot += ui * vi
            valid[s] = 0
            if sd == 0.0:
                if s == 0:
                    return float("nan")
                continue
            beta = 1.0 - sv
            gamma = 1.0 + 2.0 * sd / (alpha * beta)
            root = sqrt(gamma * gamma - 1.0)
            if root == 0.0:
                if s == 0:
                    return float("nan")
                continue
            dist[s] = log(gamma + root)
            root_[s] = root
            beta_[s] = beta
            sv_[s] = sv
            dot_[s] = dot
            valid[s] = 1

        dmin = dist[0]
        for s in range(1, m):
            if valid[s] and dist[s] < dmin:
                dmin = dist[s]
        z = 0.0
        for s in range(m):
            if valid[s]:
                z += exp(dmin - dist[s])
        loss = w * (dist[0] + (log(z) - dmin))

        for i in range(dim):
            ganchor[i] = 0.0
        for s in range(m):
            alive[s] = 0
            if not valid[s]:
                continue
            t = targets[s]
            beta = beta_[s]
            root = root_[s]
            cu = 4.0 / (beta * root)
            au = (sv_[s] - 2.0 * dot_[s] + 1.0) / (alpha * alpha)
            cv = 4.0 / (alpha * root)
            av = (su - 2.0 * dot_[s] + 1.0) / (beta * beta)
            p = exp(dmin - dist[s]) / z
            if s == 0:
                c = w * (1.0 - p)
            else:
                c = -(w * p)
            gt = gtarget + s * dim
            for i in range(dim):
                ui = emb[anc, i]
                vi = emb[t, i]
                ganchor[i] += c * (cu * (au * ui - vi / alpha))
                gt[i] = c * (cv * (av * vi - ui / beta))
            alive[s] = 1

        for s in range(m):
            if not alive[s]:
                continue
            for r in range(s + 1, m):
                if alive[r] and targets[r] == targets[s]:
                    gs = gtarget + s * dim
                    gr = gtarget + r * dim
                    for i in range(dim):
                        gs[i] += gr[i]
                    alive[r] = 0

        _update_row_c(emb, anc, ganchor, lr_c, eps_c, scratch)
        for s in range(m):
            if alive[s]:
                _update_row_c(emb, targets[s], gtarget + s * dim, lr_c, eps_c,
                              scratch)
        return loss
    finally:
        free(targets); free(dist); free(root_); free(beta_); free(sv_)
        free(dot_); free(valid); free(alive); free(ganchor); free(gtarget)
        free(scratch)


def max_sq_norm(emb_arr):
    """Largest squared row norm of the embedding matrix."""
    cdef double[:, ::1] emb = emb_arr
    cdef Py_ssize_t n = emb.shape[0]
    cdef Py_ssize_t dim = emb.shape[1]
    cdef Py_ssize_t r, i
    cdef double ti, n2, best = 0.0
    for r in range(n):
        n2 = 0.0
        for i in range(dim):
            ti = emb[r, i]
            n2 += ti * ti
        if n2 > best:
            best = n2
    return best
