"""Post-training analysis: degree coloring, suspect links, groupings, plots.

Consumes a trained snapshot plus the edge list and produces plot-ready
artifacts: a 2D projection CSV, an SVG scatter (degree-colored points, unit
circle outline, magenta suspect-link overlays, red high-degree overlays),
per-suspect link views, and k-medoids groupings under the ball metric.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .entitygraph import RelationEdge, read_edges
from .geometry import pairwise_distances
from .synthbank import load_manifest
from .training import read_snapshot_jsonl


def degree_map(edges: Sequence[RelationEdge]) -> dict[str, int]:
    """Undirected degree per node; parallel edges each count."""
    out: dict[str, int] = {}
    for e in edges:
        out[e.id1] = out.get(e.id1, 0) + 1
        out[e.id2] = out.get(e.id2, 0) + 1
    return out


def adjacency_lists(edges: Sequence[RelationEdge]) -> dict[str, list[str]]:
    """Neighbor lists with multiplicity (so counts match degree_map)."""
    out: dict[str, list[str]] = {}
    for e in edges:
        out.setdefault(e.id1, []).append(e.id2)
        out.setdefault(e.id2, []).append(e.id1)
    return out


@dataclass
class SuspectView:
    entity_id: str
    point: list[float]
    links: list[tuple[str, list[float]]]
    link_count: int


def suspect_views(
    points: dict[str, list[float]],
    flags: dict[str, bool],
    adjacency: dict[str, list[str]],
) -> list[SuspectView]:
    """One view per flagged entity, most-connected first.

    Every link endpoint must resolve to a snapshot point; entities the
    snapshot does not know are skipped (they cannot be drawn).
    """
    views = []
    for entity, flagged in flags.items():
        if not flagged or entity not in points:
            continue
        neighbors = [nb for nb in adjacency.get(entity, []) if nb in points]
        views.append(
            SuspectView(
                entity_id=entity,
                point=points[entity],
                links=[(nb, points[nb]) for nb in neighbors],
                link_count=len(neighbors),
            )
        )
    views.sort(key=lambda v: (-v.link_count, v.entity_id))
    return views


def top_connected(
    degrees: dict[str, int], min_links: int
) -> list[tuple[str, int]]:
    """Entities with degree >= min_links, descending (ties by id)."""
    picked = [(e, d) for e, d in degrees.items() if d >= min_links]
    picked.sort(key=lambda t: (-t[1], t[0]))
    return picked


# -- k-medoids under the ball metric ---------------------------------------------


def k_medoids(D: np.ndarray, k: int) -> tuple[list[int], np.ndarray, list[float]]:
    """Deterministic PAM: greedy build, exhaustive best-improvement swaps.

    Returns (medoid indices, assignment array, objective history). The
    objective (sum of distances to nearest medoid) never increases.
    """
    n = D.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds point count {n}")
    medoids = [int(np.argmin(D.sum(axis=1)))]
    while len(medoids) < k:
        cur = np.min(D[:, medoids], axis=1)
        gains = np.maximum(cur[:, None] - D, 0.0).sum(axis=0)
        gains[np.asarray(medoids)] = -1.0
        medoids.append(int(np.argmax(gains)))
    history: list[float] = []
    while True:
        cols = D[:, medoids]
        nearest = np.argmin(cols, axis=1)
        d1 = cols[np.arange(n), nearest]
        cost = float(d1.sum())
        history.append(cost)
        if k == 1:
            break
        masked = cols.copy()
        masked[np.arange(n), nearest] = np.inf
        d2 = masked.min(axis=1)
        # new cost after swapping medoid i for candidate c:
        #   points owned by i re-home to min(d2, D[:, c]); others may defect
        #   to c via min(d1, D[:, c])
        keep = np.minimum(D, d1[:, None])  # (j, c)
        rehome = np.minimum(D, d2[:, None])
        deltas = np.empty((k, n))
        for i in range(k):
            owned = nearest == i
            deltas[i] = keep[~owned].sum(axis=0) + rehome[owned].sum(axis=0) - cost
        deltas[:, np.asarray(medoids)] = np.inf
        flat = int(np.argmin(deltas))
        if deltas.flat[flat] >= -1e-12:
            break
        medoids[flat // n] = flat % n
    cols = D[:, medoids]
    assignment = np.argmin(cols, axis=1)
    return medoids, assignment, history


@dataclass
class GroupingSummary:
    node_ids: list[str]
    assignment: list[int]
    groups: list[dict]
    inter_group_distances: list[list[float]]
    objective_history: list[float]

    def to_dict(self) -> dict:
        return {
            "groups": self.groups,
            "inter_group_distances": self.inter_group_distances,
            "objective_history": self.objective_history,
        }


def cluster_groupings(
    ids: Sequence[str],
    coords: np.ndarray,
    k: int = 3,
    seed: int = 0,
    degrees: dict[str, int] | None = None,
    flags: dict[str, bool] | None = None,
) -> GroupingSummary:
    """k-medoids groupings with per-group statistics.

    Input order does not matter: nodes are sorted by id before clustering.
    The PAM routine is fully deterministic, so the seed only matters if a
    subsampling step is ever added; it is accepted for API stability.
    """
    del seed
    order = np.argsort(np.asarray(ids))
    ids_sorted = [ids[i] for i in order]
    pts = np.asarray(coords, dtype=np.float64)[order]
    D = pairwise_distances(pts)
    medoids, assignment, history = k_medoids(D, k)
    degrees = degrees or {}
    flags = flags or {}
    groups = []
    for g, m in enumerate(medoids):
        members = [ids_sorted[j] for j in np.flatnonzero(assignment == g)]
        mean_degree = (
            float(np.mean([degrees.get(e, 0) for e in members])) if members else 0.0
        )
        fin_frac = (
            float(np.mean([bool(flags.get(e, False)) for e in members]))
            if members
            else 0.0
        )
        groups.append(
            {
                "members": len(members),
                "mean_degree": mean_degree,
                "fincrime_fraction": fin_frac,
                "medoid_id": ids_sorted[m],
                "medoid_point": [float(x) for x in pts[m]],
            }
        )
    inter = [
        [float(D[mi, mj]) for mj in medoids]
        for mi in medoids
    ]
    return GroupingSummary(
        node_ids=ids_sorted,
        assignment=[int(a) for a in assignment],
        groups=groups,
        inter_group_distances=inter,
        objective_history=history,
    )


# -- projection and plotting ------------------------------------------------------


def project_plane(
    coords: np.ndarray, axes: tuple[int, int] = (0, 1)
) -> tuple[np.ndarray, dict]:
    """Orthogonal projection onto a coordinate plane.

    Returns the 2D points plus outline metadata for plotting (the unit
    circle is the boundary of the host ball).
    """
    pts = np.asarray(coords, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise ValueError("need an (n, dim>=2) coordinate array")
    a, b = axes
    xy = pts[:, [a, b]]
    meta = {"axes": [int(a), int(b)], "unit_circle_radius": 1.0}
    return xy, meta


def degree_color(degree: int) -> str:
    """Perceptually ordered scale: low degree yellow/green, high dark blue."""
    stops = [
        (0.0, (200, 224, 32)),
        (0.35, (60, 180, 110)),
        (0.7, (42, 110, 140)),
        (1.0, (36, 30, 90)),
    ]
    t = max(0.0, min(1.0, (degree - 2) / 8.0))
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = [round(a + (b - a) * f) for a, b in zip(c0, c1)]
            return "#%02x%02x%02x" % tuple(rgb)
    return "#%02x%02x%02x" % stops[-1][1]


def _to_px(xy: np.ndarray, size: int, margin: int) -> np.ndarray:
    half = (size - 2 * margin) / 2.0
    return np.stack(
        [margin + half * (xy[:, 0] + 1.0), margin + half * (1.0 - xy[:, 1])],
        axis=1,
    )


def render_svg(
    path: str | Path,
    ids: Sequence[str],
    xy: np.ndarray,
    degrees: dict[str, int],
    suspect_overlays: Sequence[SuspectView] = (),
    top_links: Sequence[tuple[str, int]] = (),
    adjacency: dict[str, list[str]] | None = None,
    size: int = 640,
) -> None:
    """Scatter of the projected embedding with link overlays.

    Points are degree-colored; suspect links are magenta, links of the
    top-connected entities red; the grey circle is the ball boundary.
    """
    margin = 20
    px = _to_px(xy, size, margin)
    pos = {node: px[i] for i, node in enumerate(ids)}
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<circle cx="{size / 2}" cy="{size / 2}" r="{(size - 2 * margin) / 2}" '
        f'fill="#f2f2f2" stroke="#999999" stroke-width="1"/>',
    ]
    for i, node in enumerate(ids):
        color = degree_color(degrees.get(node, 0))
        lines.append(
            f'<circle cx="{px[i, 0]:.2f}" cy="{px[i, 1]:.2f}" r="1.6" '
            f'fill="{color}" fill-opacity="0.8"/>'
        )
    adjacency = adjacency or {}
    for node, _count in top_links:
        if node not in pos:
            continue
        for nb in adjacency.get(node, []):
            if nb not in pos:
                continue
            a, b = pos[node], pos[nb]
            lines.append(
                f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" '
                f'y2="{b[1]:.2f}" stroke="#cc2222" stroke-width="0.7" '
                f'stroke-opacity="0.8"/>'
            )
    for view in suspect_overlays:
        if view.entity_id not in pos:
            continue
        a = pos[view.entity_id]
        for nb, _pt in view.links:
            if nb not in pos:
                continue
            b = pos[nb]
            lines.append(
                f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" '
                f'y2="{b[1]:.2f}" stroke="#d633aa" stroke-width="0.9" '
                f'stroke-opacity="0.9"/>'
            )
        lines.append(
            f'<circle cx="{a[0]:.2f}" cy="{a[1]:.2f}" r="3.2" fill="none" '
            f'stroke="#d633aa" stroke-width="1.2"/>'
        )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_plot_csv(
    path: str | Path,
    ids: Sequence[str],
    xy: np.ndarray,
    degrees: dict[str, int],
    flags: dict[str, bool],
    assignment: dict[str, int],
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("id,x,y,degree,fincrime,group\n")
        for i, node in enumerate(ids):
            fh.write(
                f"{node},{float(xy[i, 0])!r},{float(xy[i, 1])!r},"
                f"{degrees.get(node, 0)},"
                f"{'true' if flags.get(node, False) else 'false'},"
                f"{assignment.get(node, -1)}\n"
            )


# -- run-directory orchestration ---------------------------------------------------


def analyze_run(
    run_dir: str | Path,
    iteration: int | None = None,
    axes: tuple[int, int] = (0, 1),
    k: int = 3,
    seed: int = 0,
    min_links: int = 20,
    max_suspect_overlays: int = 4,
) -> dict:
    """Produce projection.csv, scatter.svg, suspects.json, groupings.json.

    Uses the latest snapshot unless an iteration is named. Returns a summary
    with the mean degree of flagged vs all entities (the planted corpora make
    flagged entities the better-connected ones by construction).
    """
    run = Path(run_dir)
    manifest = load_manifest(run)
    snapshots = manifest.get("stages", {}).get("train", {}).get("snapshots", {})
    if not snapshots:
        raise FileNotFoundError("run has no training snapshots")
    if iteration is None:
        iteration = max(int(i) for i in snapshots)
    rel = snapshots.get(str(iteration))
    if rel is None:
        raise FileNotFoundError(f"no snapshot at iteration {iteration}")
    records = read_snapshot_jsonl(run / rel)
    ids = [r["id"] for r in records]
    coords = np.array([r["vec"] for r in records])
    degrees = {r["id"]: r["degree"] for r in records}
    flags = {r["id"]: r["fincrime"] for r in records}
    edges = read_edges(run / "edges.tsv")
    adjacency = adjacency_lists(edges)

    xy, _meta = project_plane(coords, axes)
    points = {node: [float(x) for x in coords[i]] for i, node in enumerate(ids)}
    views = suspect_views(points, flags, adjacency)
    top = top_connected(degree_map(edges), min_links)
    summary = cluster_groupings(ids, coords, k=k, seed=seed, degrees=degrees,
                                flags=flags)
    assignment = dict(zip(summary.node_ids, summary.assignment))

    out = run / "analysis"
    out.mkdir(exist_ok=True)
    write_plot_csv(out / "projection.csv", ids, xy, degrees, flags, assignment)
    render_svg(
        out / "scatter.svg",
        ids,
        xy,
        degrees,
        suspect_overlays=views[:max_suspect_overlays],
        top_links=top,
        adjacency=adjacency,
    )
    (out / "suspects.json").write_text(
        json.dumps(
            [
                {
                    "entity_id": v.entity_id,
                    "link_count": v.link_count,
                    "links": [nb for nb, _ in v.links],
                }
                for v in views
            ],
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    (out / "groupings.json").write_text(
        json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    flagged_degrees = [degrees[e] for e in ids if flags.get(e)]
    mean_flagged = float(np.mean(flagged_degrees)) if flagged_degrees else 0.0
    mean_all = float(np.mean([degrees[e] for e in ids])) if ids else 0.0
    return {
        "iteration": iteration,
        "suspects": len(views),
        "groups": len(summary.groups),
        "top_connected": len(top),
        "mean_degree_flagged": mean_flagged,
        "mean_degree_all": mean_all,
        "files": {
            "projection": "analysis/projection.csv",
            "svg": "analysis/scatter.svg",
            "suspects": "analysis/suspects.json",
            "groupings": "analysis/groupings.json",
        },
    }
