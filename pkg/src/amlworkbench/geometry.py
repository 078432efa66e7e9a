"""Exact, side-effect-free geometry of the open unit ball.

Points live strictly inside the Euclidean unit ball (norm <= 1 - eps); the
distance is the hyperbolic one, arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2))),
which blows up toward the boundary. All functions are pure and safe for
concurrent use; the mutable embedding matrix is owned by the training loop.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .kernels import BallViolationError, DegeneratePairError

DEFAULT_EPS_BALL = 1e-5
RNG_ALGORITHM = "PCG64"  # numpy PCG64; seeds reproduce runs exactly


def _as_point(p) -> np.ndarray:
    arr = np.ascontiguousarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D point, got shape {arr.shape}")
    return arr


def poincare_distance(u, v) -> float:
    """Hyperbolic distance between two ball points.

    Symmetric, nonnegative, zero only for coincident points. Raises
    BallViolationError when either norm is >= 1.
    """
    return kernels.pair_distance(_as_point(u), _as_point(v))


def distance_gradient(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean gradients of the distance with respect to u and v.

    Undefined for coincident points: raises DegeneratePairError so callers
    can skip or perturb the pair instead of silently stalling on a zero.
    """
    _, gu, gv = kernels.pair_distance_grad(_as_point(u), _as_point(v))
    return gu, gv


def riemannian_rescale(theta, euclidean_grad) -> np.ndarray:
    """Convert a Euclidean gradient at theta to the manifold gradient.

    The metric conversion factor is ((1 - |theta|^2)^2) / 4.
    """
    t = _as_point(theta)
    g = _as_point(euclidean_grad)
    sq = float(np.dot(t, t))
    if sq >= 1.0:
        raise BallViolationError("point norm >= 1 is outside the open unit ball")
    factor = (1.0 - sq) ** 2 / 4.0
    return factor * g


def project_into_ball(p, eps: float = DEFAULT_EPS_BALL) -> np.ndarray:
    """Retract a vector into the ball of radius 1 - eps.

    Vectors already inside pass through unchanged (idempotent); longer ones
    are rescaled to norm exactly 1 - eps with direction preserved. The zero
    vector passes through.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    arr = _as_point(p).copy()
    maxn = 1.0 - eps
    norm = float(np.linalg.norm(arr))
    tries = 0
    # rescale can land a ulp outside; repeat (bounded) so the op is idempotent
    while norm > maxn and tries < 16:
        arr *= maxn / norm
        norm = float(np.linalg.norm(arr))
        tries += 1
    return arr


def project_rows(matrix: np.ndarray, eps: float = DEFAULT_EPS_BALL) -> np.ndarray:
    """Row-wise ball projection for an (n, dim) matrix, in place."""
    maxn = 1.0 - eps
    for _ in range(16):
        norms = np.linalg.norm(matrix, axis=1)
        over = norms > maxn
        if not over.any():
            break
        matrix[over] *= (maxn / norms[over])[:, None]
    return matrix


def random_init(
    n: int,
    dim: int = 3,
    std: float = 0.001,
    seed: int | np.random.SeedSequence = 0,
    eps: float = DEFAULT_EPS_BALL,
) -> np.ndarray:
    """Gaussian initialization close to the origin (zero mean, given std).

    Deterministic per seed (PCG64). Rows are projected into the ball, though
    at std << 1 the projection never fires in practice.
    """
    if n <= 0 or dim <= 0:
        raise ValueError("n and dim must be positive")
    if std <= 0:
        raise ValueError("std must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    matrix = rng.normal(0.0, std, size=(n, dim))
    return project_rows(matrix, eps)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Full distance matrix for an (n, dim) array of ball points.

    Vectorized for analysis-scale inputs; the per-pair kernels remain the
    reference implementation.
    """
    x = np.asarray(points, dtype=np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    if (sq >= 1.0).any():
        raise BallViolationError("point norm >= 1 is outside the open unit ball")
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    gamma = 1.0 + 2.0 * d2 / ((1.0 - sq)[:, None] * (1.0 - sq)[None, :])
    return np.arccosh(np.maximum(gamma, 1.0))


def distances_from(points: np.ndarray, origin_index: int) -> np.ndarray:
    """Distances from one row of an (n, dim) array to every row."""
    x = np.asarray(points, dtype=np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    u = x[origin_index]
    su = sq[origin_index]
    d2 = np.maximum(sq - 2.0 * (x @ u) + su, 0.0)
    gamma = 1.0 + 2.0 * d2 / ((1.0 - su) * (1.0 - sq))
    return np.arccosh(np.maximum(gamma, 1.0))


__all__ = [
    "BallViolationError",
    "DEFAULT_EPS_BALL",
    "DegeneratePairError",
    "RNG_ALGORITHM",
    "distance_gradient",
    "distances_from",
    "pairwise_distances",
    "poincare_distance",
    "project_into_ball",
    "project_rows",
    "random_init",
    "riemannian_rescale",
]
