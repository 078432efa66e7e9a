"""Pure-Python fallback for the hot embedding kernels.

This module mirrors the compiled extension (``_ext.pyx``) expression for
expression: both backends perform the same IEEE-754 operations in the same
order, so a training run produces bit-identical trajectories on either one.
Keep the two files in sync; any change here must be transcribed to the .pyx.
"""

from math import exp, isfinite, log, sqrt

import numpy as np

from .errors import BallViolationError, DegeneratePairError, DivergenceError

BACKEND = "purepy"


def pair_distance(u, v):
    """Distance between two points of the unit ball.

    arcosh(1 + 2*|u-v|^2 / ((1-|u|^2)(1-|v|^2))), evaluated as
    log(g + sqrt(g^2-1)). Coincident points return exactly 0.
    """
    dim = len(u)
    su = 0.0
    sv = 0.0
    sd = 0.0
    for i in range(dim):
        ui = float(u[i])
        vi = float(v[i])
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
    """Distance plus Euclidean gradients with respect to both points.

    Returns (d, grad_u, grad_v). Raises DegeneratePairError when the points
    coincide (the gradient is undefined at zero distance).
    """
    dim = len(u)
    su = 0.0
    sv = 0.0
    sd = 0.0
    dot = 0.0
    for i in range(dim):
        ui = float(u[i])
        vi = float(v[i])
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
        # sd underflowed relative to the norms; treat as coincident
        raise DegeneratePairError("pair numerically coincident: gradient underflow")
    dist = log(gamma + root)
    cu = 4.0 / (beta * root)
    au = (sv - 2.0 * dot + 1.0) / (alpha * alpha)
    cv = 4.0 / (alpha * root)
    av = (su - 2.0 * dot + 1.0) / (beta * beta)
    gu = np.empty(dim, dtype=np.float64)
    gv = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        ui = float(u[i])
        vi = float(v[i])
        gu[i] = cu * (au * ui - vi / alpha)
        gv[i] = cv * (av * vi - ui / beta)
    return dist, gu, gv


def _update_row(emb, node, grad, lr, eps):
    """Riemannian rescale, gradient step, and ball projection for one row."""
    dim = emb.shape[1]
    n2 = 0.0
    for i in range(dim):
        ti = float(emb[node, i])
        n2 += ti * ti
    rem = 1.0 - n2
    factor = rem * rem / 4.0
    nn2 = 0.0
    new = [0.0] * dim
    for i in range(dim):
        xi = float(emb[node, i]) - lr * (factor * grad[i])
        new[i] = xi
        nn2 += xi * xi
    maxn = 1.0 - eps
    # rescale can land a ulp outside; repeat (bounded) until truly contained
    tries = 0
    while nn2 > maxn * maxn and tries < 16:
        scale = maxn / sqrt(nn2)
        nn2 = 0.0
        for i in range(dim):
            xi = new[i] * scale
            new[i] = xi
            nn2 += xi * xi
        tries += 1
    for i in range(dim):
        if not isfinite(new[i]):
            raise DivergenceError(node)
        emb[node, i] = new[i]


def edge_step(emb, anchor, pos, negs, weight, lr, eps):
    """One weighted training step for a positive pair plus sampled negatives.

    Loss: weight * (d(u,v) + log sum_{x in {v} ∪ negs} exp(-d(u,x))).
    Gradients are taken against the pre-step coordinates, Riemannian-rescaled
    per node, applied with step size lr, and each touched row is projected
    back into the ball of radius 1-eps. Returns the loss; returns NaN and
    makes no update when the positive pair is exactly coincident. Exactly
    coincident negatives are skipped. weight == 0 is a no-op returning 0.
    """
    if weight == 0.0:
        return 0.0
    dim = emb.shape[1]
    k = len(negs)
    m = k + 1

    su = 0.0
    for i in range(dim):
        ui = float(emb[anchor, i])
        su += ui * ui
    alpha = 1.0 - su

    targets = [0] * m
    targets[0] = pos
    for j in range(k):
        targets[j + 1] = int(negs[j])

    dist = [0.0] * m
    root_ = [0.0] * m
    beta_ = [0.0] * m
    sv_ = [0.0] * m
    dot_ = [0.0] * m
    valid = [False] * m
    for s in range(m):
        t = targets[s]
        sv = 0.0
        sd = 0.0
        dot = 0.0
        for i in range(dim):
            ui = float(emb[anchor, i])
            vi = float(emb[t, i])
            sv += vi * vi
            di = ui - vi
            sd += di * di
            dot += ui * vi
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
        valid[s] = True

    dmin = dist[0]
    for s in range(1, m):
        if valid[s] and dist[s] < dmin:
            dmin = dist[s]
    z = 0.0
    for s in range(m):
        if valid[s]:
            z += exp(dmin - dist[s])
    loss = weight * (dist[0] + (log(z) - dmin))

    coef = [0.0] * m
    for s in range(m):
        if valid[s]:
            p = exp(dmin - dist[s]) / z
            if s == 0:
                coef[s] = weight * (1.0 - p)
            else:
                coef[s] = -(weight * p)

    ganchor = [0.0] * dim
    gtarget = [None] * m
    for s in range(m):
        if not valid[s]:
            continue
        t = targets[s]
        beta = beta_[s]
        root = root_[s]
        cu = 4.0 / (beta * root)
        au = (sv_[s] - 2.0 * dot_[s] + 1.0) / (alpha * alpha)
        cv = 4.0 / (alpha * root)
        av = (su - 2.0 * dot_[s] + 1.0) / (beta * beta)
        c = coef[s]
        gt = [0.0] * dim
        for i in range(dim):
            ui = float(emb[anchor, i])
            vi = float(emb[t, i])
            ganchor[i] += c * (cu * (au * ui - vi / alpha))
            gt[i] = c * (cv * (av * vi - ui / beta))
        gtarget[s] = gt

    # merge duplicate targets into their first slot so each row updates once
    for s in range(m):
        if not valid[s] or gtarget[s] is None:
            continue
        for r in range(s + 1, m):
            if valid[r] and gtarget[r] is not None and targets[r] == targets[s]:
                gs = gtarget[s]
                gr = gtarget[r]
                for i in range(dim):
                    gs[i] += gr[i]
                gtarget[r] = None

    _update_row(emb, anchor, ganchor, lr, eps)
    for s in range(m):
        if valid[s] and gtarget[s] is not None:
            _update_row(emb, targets[s], gtarget[s], lr, eps)
    return loss


def max_sq_norm(emb):
    """Largest squared row norm of the embedding matrix."""
    n, dim = emb.shape
    best = 0.0
    for r in range(n):
        n2 = 0.0
        for i in range(dim):
            ti = float(emb[r, i])
            n2 += ti * ti
        if n2 > best:
            best = n2
    return best
