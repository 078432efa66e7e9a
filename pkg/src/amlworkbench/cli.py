"""Command-line entry point: synth -> build -> train -> detect -> analyze -> serve.

Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags or
missing prerequisite artifacts).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .pipeline import (
    MissingInputError,
    stage_analyze,
    stage_build,
    stage_detect,
    stage_pipeline,
    stage_synth,
    stage_train,
)
from .synthbank import ConfigError, CorpusConfig
from .training import TrainConfig


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {err}")


def _corpus_config(args) -> CorpusConfig:
    return CorpusConfig.from_scale(
        args.scale,
        seed=args.seed,
        months=args.months,
        planted_collecting=args.collecting,
        planted_layered=args.layered,
        collecting_window_months=args.window_months,
        inject_noise=args.noise,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.lr,
        burn_in_epochs=args.burn_in,
        burn_in_rate_divisor=args.burn_in_divisor,
        negatives=args.negatives,
        init_std=args.init_std,
        seed=args.seed,
        snapshot_at=args.snapshot_at,
        eps_ball=args.eps_ball,
        normalize_weights=not args.raw_weights,
    )


def _add_synth_flags(p, with_out=True):
    if with_out:
        p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--scale", type=float, default=0.01,
                   help="fraction of the full six-bank volumetrics")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--months", type=int, default=24)
    p.add_argument("--collecting", type=int, default=20,
                   help="planted collecting networks")
    p.add_argument("--layered", type=int, default=30,
                   help="planted layered accounts")
    p.add_argument("--window-months", type=int, default=8)
    p.add_argument("--noise", action="store_true",
                   help="inject identifier noise to exercise the resolver")


def _add_train_flags(p):
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--epochs", type=int, default=80)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--burn-in", type=int, default=10)
    p.add_argument("--burn-in-divisor", type=float, default=10.0)
    p.add_argument("--negatives", type=int, default=10)
    p.add_argument("--init-std", type=float, default=0.001)
    p.add_argument("--snapshot-at", type=_parse_int_list,
                   default=(30, 40, 60, 80))
    p.add_argument("--eps-ball", type=float, default=1e-5)
    p.add_argument("--raw-weights", action="store_true",
                   help="skip mean-normalization of edge weights")


def _print(summary: dict) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))


def cmd_synth(args) -> int:
    _print(stage_synth(args.out, _corpus_config(args)))
    return 0


def cmd_build(args) -> int:
    _print(stage_build(args.run, normalize=args.normalize))
    return 0


def cmd_train(args) -> int:
    if args.run is None and args.edges is None:
        raise MissingInputError("pass --run or --edges")
    run = args.run or args.out or str(Path(args.edges).parent)
    summary = stage_train(run, _train_config(args), edges_path=args.edges)
    _print({k: v for k, v in summary.items()
            if k not in ("loss_curve", "max_norm_curve")})
    return 0


def cmd_detect(args) -> int:
    _print(stage_detect(args.run, window_months=args.window_months,
                        ratio=args.ratio, min_senders=args.min_senders))
    return 0


def cmd_analyze(args) -> int:
    _print(stage_analyze(args.run, iteration=args.iteration,
                         axes=tuple(args.axes), k=args.k,
                         min_links=args.min_links))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.runs_root, host=args.host, port=args.port, ui_dir=args.ui)
    return 0


def cmd_pipeline(args) -> int:
    if not args.all:
        raise MissingInputError("pipeline currently supports --all only")
    summary = stage_pipeline(
        args.out,
        _corpus_config(args),
        _train_config(args),
        window_months=args.window_months,
    )
    _print(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amlwb",
        description=(
            "generate labeled multi-bank data, build the customer relation "
            "graph, train ball embeddings, run laundering detectors, and "
            "serve the explorer"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    _add_synth_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build", help="entity resolution and edge list")
    p.add_argument("--run", required=True)
    p.add_argument("--normalize", action="store_true",
                   help="trim/case-fold identifiers before matching")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="train ball embeddings")
    p.add_argument("--run", help="run directory holding edges.tsv")
    p.add_argument("--edges", help="explicit edge TSV (standalone mode)")
    p.add_argument("--out", help="output directory for standalone mode")
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run the two rule-based detectors")
    p.add_argument("--run", required=True)
    p.add_argument("--window-months", type=int, default=8)
    p.add_argument("--ratio", type=float, default=0.2)
    p.add_argument("--min-senders", type=int, default=3)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("analyze", help="projection CSV, SVG, groupings")
    p.add_argument("--run", required=True)
    p.add_argument("--iteration", type=int, default=None)
    p.add_argument("--axes", type=_parse_int_list, default=(0, 1))
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--min-links", type=int, default=20)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="HTTP API over run artifacts")
    p.add_argument("--runs-root", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", default=None, help="built UI directory to mount at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pipeline", help="all stages end to end")
    p.add_argument("--all", action="store_true", help="run every stage")
    _add_synth_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MissingInputError, ConfigError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as err:  # runtime failure, distinct exit code
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
