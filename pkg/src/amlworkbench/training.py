"""Training loop for ball embeddings of weighted relation graphs.

Each epoch shuffles the edge list and, per edge, samples k non-neighbor
negatives for the source node, then takes one step on the weighted loss

    weight * ( d(u, v) + log sum_{x in {v} ∪ negatives} exp(-d(u, x)) )

with per-node Riemannian rescaling and projection back into the ball. The
run is deterministic per seed in single-threaded mode: one PCG64 stream
initializes the matrix, a second drives shuffling and negative sampling, and
the per-step arithmetic is delegated to the twin kernels (compiled or pure).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .entitygraph import RelationEdge
from .geometry import random_init
from .kernels import DegeneratePairError, DivergenceError


class GraphTooSmallError(ValueError):
    """Not enough non-neighbors to sample the requested negatives."""


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int, entity_id: str):
        super().__init__(
            f"non-finite update at iteration {iteration} for entity {entity_id}"
        )
        self.iteration = iteration
        self.entity_id = entity_id


@dataclass
class TrainConfig:
    dim: int = 3
    epochs: int = 80
    learning_rate: float = 0.1
    burn_in_epochs: int = 10
    burn_in_rate_divisor: float = 10.0
    negatives: int = 10
    init_std: float = 0.001
    seed: int = 0
    snapshot_at: tuple[int, ...] = (30, 40, 60, 80)
    eps_ball: float = 1e-5
    normalize_weights: bool = True

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        bad = [i for i in self.snapshot_at if not 1 <= i <= self.epochs]
        if bad:
            raise ValueError(f"snapshot iterations outside [1, epochs]: {bad}")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "burn_in_epochs": self.burn_in_epochs,
            "burn_in_rate_divisor": self.burn_in_rate_divisor,
            "negatives": self.negatives,
            "init_std": self.init_std,
            "seed": self.seed,
            "snapshot_at": list(self.snapshot_at),
            "eps_ball": self.eps_ball,
            "normalize_weights": self.normalize_weights,
        }


@dataclass
class EmbeddingSnapshot:
    iteration: int
    coords: np.ndarray
    loss: float


@dataclass
class TrainResult:
    node_ids: list[str]
    coords: np.ndarray
    initial_coords: np.ndarray
    snapshots: list[EmbeddingSnapshot]
    loss_curve: list[float]
    max_norm_curve: list[float]
    skipped_pairs: int


def node_universe(
    edges: Sequence[RelationEdge], extra_nodes: Iterable[str] | None = None
) -> list[str]:
    """Node ids in first-occurrence order, optionally extended."""
    ids: dict[str, None] = {}
    for e in edges:
        ids.setdefault(e.id1)
        ids.setdefault(e.id2)
    for node in extra_nodes or ():
        ids.setdefault(node)
    return list(ids)


def build_adjacency(
    edges: Sequence[RelationEdge], index: dict[str, int]
) -> list[set[int]]:
    adjacency: list[set[int]] = [set() for _ in index]
    for e in edges:
        u, v = index[e.id1], index[e.id2]
        adjacency[u].add(v)
        adjacency[v].add(u)
    return adjacency


def sample_negatives(
    anchor: int, k: int, adjacency: list[set[int]], rng: np.random.Generator
) -> np.ndarray:
    """k uniform draws (with replacement) from the anchor's non-neighbors.

    The anchor itself is excluded. Rejection is bounded; exhausting the bound
    (or having no non-neighbor at all) raises GraphTooSmallError.
    """
    n = len(adjacency)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    excluded = adjacency[anchor]
    if n - 1 - len(excluded - {anchor}) < 1:
        raise GraphTooSmallError(
            f"node {anchor} has no non-neighbors among {n} nodes"
        )
    out = rng.integers(0, n, size=k).astype(np.int64)
    for j in range(k):
        c = int(out[j])
        attempts = 0
        while c == anchor or c in excluded:
            if attempts >= 200:
                raise GraphTooSmallError(
                    f"rejection bound hit sampling non-neighbors of node {anchor}"
                )
            c = int(rng.integers(0, n))
            attempts += 1
        out[j] = c
    return out


def edge_loss(u, v, negatives, weight: float):
    """Loss and Euclidean gradients for one positive pair plus negatives.

    Returns (loss, grad_u, grad_v, grad_negatives). Gradients are of the
    weighted loss with respect to each point. Coincident negatives are
    skipped (zero gradient); a coincident positive raises
    DegeneratePairError from the geometry layer. weight 0 short-circuits to
    zeros.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    negatives = [np.asarray(x, dtype=np.float64) for x in negatives]
    if weight == 0.0:
        return 0.0, np.zeros_like(u), np.zeros_like(v), [np.zeros_like(x) for x in negatives]
    d_pos, gu_pos, gv_pos = kernels.pair_distance_grad(u, v)
    dists = [d_pos]
    grads = [(gu_pos, gv_pos)]
    valid = [True]
    for x in negatives:
        try:
            d, gu, gx = kernels.pair_distance_grad(u, x)
        except DegeneratePairError:
            dists.append(math.inf)
            grads.append((np.zeros_like(u), np.zeros_like(u)))
            valid.append(False)
            continue
        dists.append(d)
        grads.append((gu, gx))
        valid.append(True)
    finite = [d for d, ok in zip(dists, valid) if ok]
    dmin = min(finite)
    z = sum(math.exp(dmin - d) for d, ok in zip(dists, valid) if ok)
    loss = weight * (d_pos + (math.log(z) - dmin))
    probs = [
        (math.exp(dmin - d) / z if ok else 0.0) for d, ok in zip(dists, valid)
    ]
    grad_u = np.zeros_like(u)
    out_grads = []
    for s, (p, (gu, gx)) in enumerate(zip(probs, grads)):
        coef = weight * (1.0 - p) if s == 0 else -(weight * p)
        if valid[s]:
            grad_u += coef * gu
            out_grads.append(coef * gx)
        else:
            out_grads.append(np.zeros_like(u))
    return loss, grad_u, out_grads[0], out_grads[1:]


def train(
    edges: Sequence[RelationEdge],
    config: TrainConfig,
    node_ids: Sequence[str] | None = None,
) -> TrainResult:
    """Run the full loop; see the module docstring for the step definition.

    node_ids may extend the universe beyond edge endpoints (isolated nodes
    are then eligible as negatives). Raises TrainingDiverged with the
    offending iteration and entity when an update goes non-finite.
    """
    config.validate()
    if not edges:
        raise ValueError("edge list is empty")
    ids = node_universe(edges, node_ids)
    index = {node: i for i, node in enumerate(ids)}
    adjacency = build_adjacency(edges, index)
    n = len(ids)

    weights = np.array([float(e.weight) for e in edges])
    if config.normalize_weights:
        mean = weights.mean()
        if mean > 0:
            weights = weights / mean
    pairs = [(index[e.id1], index[e.id2]) for e in edges]

    seq = np.random.SeedSequence(config.seed)
    init_seq, sample_seq = seq.spawn(2)
    emb = random_init(n, config.dim, config.init_std, init_seq, config.eps_ball)
    emb = np.ascontiguousarray(emb)
    initial = emb.copy()
    rng = np.random.Generator(np.random.PCG64(sample_seq))

    snapshots: list[EmbeddingSnapshot] = []
    wanted = set(config.snapshot_at)
    loss_curve: list[float] = []
    max_norm_curve: list[float] = []
    skipped = 0
    maxn = 1.0 - config.eps_ball
    for epoch in range(1, config.epochs + 1):
        lr = config.learning_rate
        if epoch <= config.burn_in_epochs:
            lr = lr / config.burn_in_rate_divisor
        order = rng.permutation(len(pairs))
        total = 0.0
        count = 0
        for ei in order:
            u, v = pairs[ei]
            negs = sample_negatives(u, config.negatives, adjacency, rng)
            try:
                loss = kernels.edge_step(
                    emb, u, v, negs, float(weights[ei]), lr, config.eps_ball
                )
            except DivergenceError as err:
                raise TrainingDiverged(epoch, ids[err.node]) from err
            if math.isnan(loss):
                skipped += 1
                continue
            total += loss
            count += 1
        mean_loss = total / count if count else 0.0
        loss_curve.append(mean_loss)
        max_norm = math.sqrt(kernels.max_sq_norm(emb))
        max_norm_curve.append(max_norm)
        if max_norm > maxn:
            raise TrainingDiverged(epoch, ids[int(np.argmax(
                np.einsum("ij,ij->i", emb, emb)))])
        if epoch in wanted:
            snapshots.append(
                EmbeddingSnapshot(iteration=epoch, coords=emb.copy(), loss=mean_loss)
            )
    return TrainResult(
        node_ids=ids,
        coords=emb,
        initial_coords=initial,
        snapshots=snapshots,
        loss_curve=loss_curve,
        max_norm_curve=max_norm_curve,
        skipped_pairs=skipped,
    )


def link_reconstruction_rank(
    coords: np.ndarray,
    pairs: Sequence[tuple[int, int]],
    adjacency: list[set[int]],
) -> tuple[float, float]:
    """Mean rank and mean average precision of true links.

    For each directed pair (u, v): the rank of v by distance from u among
    u's non-neighbors plus v itself (1 = closest). MAP averages per-anchor
    average precision over the same candidate sets.
    """
    from .geometry import distances_from

    by_anchor: dict[int, list[int]] = {}
    for u, v in pairs:
        by_anchor.setdefault(u, []).append(v)
    ranks: list[int] = []
    aps: list[float] = []
    n = coords.shape[0]
    for u, targets in by_anchor.items():
        dist = distances_from(coords, u)
        neighbor_mask = np.zeros(n, dtype=bool)
        for j in adjacency[u]:
            neighbor_mask[j] = True
        neighbor_mask[u] = True
        non_neighbor_dists = dist[~neighbor_mask]
        target_ranks = []
        for v in targets:
            rank = 1 + int(np.count_nonzero(non_neighbor_dists < dist[v]))
            ranks.append(rank)
            target_ranks.append(rank)
        target_ranks.sort()
        # i-th best hit sits i-1 places later once all hits share one list
        ap = sum(
            (i + 1) / (r + i) for i, r in enumerate(target_ranks)
        ) / len(target_ranks)
        aps.append(ap)
    mean_rank = float(np.mean(ranks))
    mean_ap = float(np.mean(aps))
    return mean_rank, mean_ap


def evaluate_reconstruction(
    ids: Sequence[str], coords: np.ndarray, edges: Sequence[RelationEdge]
) -> tuple[float, float]:
    index = {node: i for i, node in enumerate(ids)}
    adjacency = build_adjacency(edges, index)
    pairs = [(index[e.id1], index[e.id2]) for e in edges]
    return link_reconstruction_rank(coords, pairs, adjacency)


# -- snapshot serialization -------------------------------------------------------


def write_snapshot_jsonl(
    path: str | Path,
    snapshot: EmbeddingSnapshot,
    node_ids: Sequence[str],
    degrees: dict[str, int],
    flags: dict[str, bool],
) -> None:
    """One record per entity: {id, vec, degree, fincrime}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, node in enumerate(node_ids):
            record = {
                "id": node,
                "vec": [float(x) for x in snapshot.coords[i]],
                "degree": int(degrees.get(node, 0)),
                "fincrime": bool(flags.get(node, False)),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_snapshot_jsonl(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
