"""Stage orchestration over a run directory.

Layout (the contract between all stages, the service, and the UI):

    run/
      manifest.json        seed, config, file map, stage summaries
      tables/              per-bank CSVs
      ground_truth.json    planted labels
      edges.tsv            id1 TAB id2 TAB weight
      graph_stats.json     node/edge counts, degree histogram
      nodes.json           per-node degree and fincrime flag
      snapshots/           iter_XXXXX.jsonl, one record per entity
      reports/             detector outputs
      analysis/            projection CSV, SVG, groupings
      tags.jsonl           analyst verdicts (append-only)

Stages validate their inputs up front; a missing prerequisite raises
MissingInputError (a usage error, not a runtime failure). No artifact ever
contains wallclock time, so reruns with equal seeds are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import analysis as analysis_mod
from . import kernels
from .detectors import (
    detect_collecting,
    detect_layered,
    score,
    weekly_bins,
    write_report,
)
from .entitygraph import build_graph_from_run, read_edges
from .synthbank import (
    CorpusConfig,
    generate_corpus,
    load_corpus,
    load_manifest,
    write_corpus,
)
from .training import TrainConfig, train, write_snapshot_jsonl


class MissingInputError(FileNotFoundError):
    """A stage prerequisite artifact is absent (usage error)."""


def update_manifest(run_dir: str | Path, stage: str, payload: dict) -> None:
    run = Path(run_dir)
    path = run / "manifest.json"
    manifest = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    manifest.setdefault("stages", {})[stage] = payload
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _require(run: Path, rel: str, hint: str) -> Path:
    path = run / rel
    if not path.exists():
        raise MissingInputError(f"{path} is missing; run `{hint}` first")
    return path


def stage_synth(out_dir: str | Path, config: CorpusConfig) -> dict:
    corpus, truth = generate_corpus(config)
    write_corpus(corpus, truth, config, out_dir)
    summary = {
        "customers": len(corpus.customers),
        "accounts": len(corpus.accounts),
        "links": len(corpus.links),
        "parties": len(corpus.parties),
        "transactions": len(corpus.transactions),
        "planted_collecting": len(truth.collecting_accounts),
        "planted_layered": len(truth.layered_accounts),
        "banned_entities": len(truth.banned_entities),
    }
    update_manifest(out_dir, "synth", summary)
    return summary


def stage_build(run_dir: str | Path, normalize: bool = False) -> dict:
    run = Path(run_dir)
    _require(run, "manifest.json", "amlwb synth")
    summary = build_graph_from_run(run, normalize=normalize)
    summary = {**summary, "files": {
        "edges": "edges.tsv", "stats": "graph_stats.json", "nodes": "nodes.json",
    }}
    update_manifest(run, "build", summary)
    return summary


def stage_train(
    run_dir: str | Path,
    config: TrainConfig,
    edges_path: str | Path | None = None,
) -> dict:
    run = Path(run_dir)
    run.mkdir(parents=True, exist_ok=True)
    if edges_path is None:
        edges_path = _require(run, "edges.tsv", "amlwb build")
    elif not Path(edges_path).exists():
        raise MissingInputError(f"edge list {edges_path} does not exist")
    edges = read_edges(edges_path)
    nodes_meta = {}
    nodes_file = run / "nodes.json"
    if nodes_file.exists():
        nodes_meta = json.loads(nodes_file.read_text(encoding="utf-8"))
    degrees = {k: v.get("degree", 0) for k, v in nodes_meta.items()}
    flags = {k: v.get("fincrime", False) for k, v in nodes_meta.items()}
    if not degrees:
        degrees = analysis_mod.degree_map(edges)

    result = train(edges, config)
    snap_dir = run / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    snapshot_files = {}
    for snap in result.snapshots:
        rel = f"snapshots/iter_{snap.iteration:05d}.jsonl"
        write_snapshot_jsonl(run / rel, snap, result.node_ids, degrees, flags)
        snapshot_files[str(snap.iteration)] = rel
    summary = {
        "config": config.to_dict(),
        "backend": kernels.BACKEND,
        "nodes": len(result.node_ids),
        "edges": len(edges),
        "loss_curve": result.loss_curve,
        "max_norm_curve": result.max_norm_curve,
        "skipped_pairs": result.skipped_pairs,
        "snapshots": snapshot_files,
    }
    update_manifest(run, "train", summary)
    return summary


def stage_detect(
    run_dir: str | Path,
    window_months: int = 8,
    ratio: float = 0.2,
    min_senders: int = 3,
) -> dict:
    run = Path(run_dir)
    _require(run, "manifest.json", "amlwb synth")
    corpus, truth, manifest = load_corpus(run)
    reports_dir = run / "reports"
    reports_dir.mkdir(exist_ok=True)

    collecting = detect_collecting(
        corpus.accounts, corpus.risk, corpus.transactions,
        window_months=window_months, min_criminal_senders=min_senders,
    )
    has_truth = bool(
        truth.collecting_accounts or truth.layered_accounts or truth.banned_entities
    )
    if has_truth:
        score(collecting, truth.collecting_accounts)
    write_report(collecting, reports_dir / "collecting.json")

    weekly = weekly_bins(corpus.transactions, corpus.accounts, corpus.corpus_start)
    layered = detect_layered(
        weekly, set(collecting.flagged), corpus.transactions, ratio=ratio
    )
    if has_truth:
        score(layered, truth.layered_accounts)
    write_report(layered, reports_dir / "layered.json")

    summary = {
        "reports": {
            "collecting": "reports/collecting.json",
            "layered": "reports/layered.json",
        },
        "collecting_flagged": len(collecting.flagged),
        "layered_flagged": len(layered.flagged),
        "metrics": {
            "collecting": {"precision": collecting.precision,
                           "recall": collecting.recall},
            "layered": {"precision": layered.precision, "recall": layered.recall},
        },
    }
    update_manifest(run, "detect", summary)
    return summary


def stage_analyze(
    run_dir: str | Path,
    iteration: int | None = None,
    axes: tuple[int, int] = (0, 1),
    k: int = 3,
    seed: int = 0,
    min_links: int = 20,
) -> dict:
    run = Path(run_dir)
    _require(run, "edges.tsv", "amlwb build")
    manifest = load_manifest(run)
    if not manifest.get("stages", {}).get("train", {}).get("snapshots"):
        raise MissingInputError(f"{run} has no training snapshots; run `amlwb train` first")
    summary = analysis_mod.analyze_run(
        run, iteration=iteration, axes=axes, k=k, seed=seed, min_links=min_links
    )
    update_manifest(run, "analyze", summary)
    return summary


def stage_pipeline(
    out_dir: str | Path,
    corpus_config: CorpusConfig,
    train_config: TrainConfig,
    normalize: bool = False,
    window_months: int = 8,
    ratio: float = 0.2,
    min_senders: int = 3,
    analyze_k: int = 3,
    analyze_min_links: int = 20,
) -> dict:
    """synth -> build -> train -> detect -> analyze in one call."""
    out = Path(out_dir)
    summary = {
        "synth": stage_synth(out, corpus_config),
        "build": stage_build(out, normalize=normalize),
        "train": None,
        "detect": None,
        "analyze": None,
    }
    train_summary = stage_train(out, train_config)
    summary["train"] = {
        k: v for k, v in train_summary.items() if k not in ("loss_curve",)
    }
    summary["detect"] = stage_detect(
        out, window_months=window_months, ratio=ratio, min_senders=min_senders
    )
    summary["analyze"] = stage_analyze(
        out, k=analyze_k, min_links=analyze_min_links
    )
    return summary


def run_is_complete(run_dir: str | Path) -> bool:
    run = Path(run_dir)
    try:
        manifest = load_manifest(run)
    except FileNotFoundError:
        return False
    stages = manifest.get("stages", {})
    return all(s in stages for s in ("synth", "build", "train", "detect"))
