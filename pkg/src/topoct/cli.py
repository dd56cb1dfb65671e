"""Command-line interface.

Subcommands: ingest, features, train, evaluate, ablate, mask. Exit codes:
0 success, 2 config error, 3 data error, 4 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import ConfigError, ConvergenceError, DataError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NONCONVERGED = 4


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="flat key = value config file")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="master seed (overrides the config)")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="parallel feature workers")
    parser.add_argument("--cache-dir", default=".topoct-cache", metavar="DIR",
                        help="diagram cache directory")
    parser.add_argument("--paper-fidelity", action="store_true",
                        help="grid step 0.5, 2400 geodesic components, "
                             "4800 PCA dimensions")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="topoct",
        description="Topological persistence features for grayscale image "
                    "classification")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="index a dataset directory")
    p.add_argument("--root", required=True)
    p.add_argument("--out", help="write the JSON index here")
    _common(p)

    p = sub.add_parser("features", help="compute per-image feature vectors")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True, help="feature output directory")
    p.add_argument("--pga-from", metavar="MODELDIR",
                   help="project with this model's PGA instead of refitting")
    _common(p)

    p = sub.add_parser("train", help="k-fold evaluation plus a final model")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="model output directory")
    _common(p)

    p = sub.add_parser("evaluate", help="apply a saved model to features")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, metavar="MODELDIR")
    _common(p)

    p = sub.add_parser("ablate", help="single-feature models, shared folds")
    p.add_argument("--features", required=True)
    p.add_argument("--out", help="report output directory")
    _common(p)

    p = sub.add_parser("mask", help="compare predictions before/after "
                                    "masking a rectangle")
    p.add_argument("--model", required=True, metavar="MODELDIR")
    p.add_argument("--image", required=True)
    p.add_argument("--rect", required=True, metavar="R0,C0,R1,C1")
    p.add_argument("--fill", type=int, default=0)
    _common(p)
    return ap


def _load_cfg(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides,
                       paper_fidelity=args.paper_fidelity)


def _cmd_ingest(args) -> int:
    from .pipeline import ingest
    cfg = _load_cfg(args)
    index = ingest(args.root, cfg)
    pos, neg = index.counts
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(index.to_json())
    print(f"indexed {len(index.entries)} images "
          f"({pos} positive, {neg} negative, {len(index.skipped)} skipped)")
    return EXIT_OK


def _cmd_features(args) -> int:
    from .pipeline import (compute_features, ingest, load_model_bundle,
                           save_features)
    cfg = _load_cfg(args)
    index = ingest(args.root, cfg)
    pga_from = None
    block_k = None
    if args.pga_from:
        _, _, pga_from, meta = load_model_bundle(args.pga_from)
        block_k = meta["block_k"]
    fs = compute_features(index, cfg, args.cache_dir, jobs=args.jobs,
                          pga_from=pga_from, block_k=block_k)
    save_features(args.out, fs)
    print(f"features for {len(fs.labels)} images -> {args.out} "
          f"(cache hits {fs.cache_hits}, misses {fs.cache_misses}, "
          f"skipped {len(fs.skipped)})")
    return EXIT_OK


def _cmd_train(args) -> int:
    from .pipeline import load_features, train
    cfg = _load_cfg(args)
    fs = load_features(args.features)
    report, final = train(fs, cfg, args.out)
    sys.stdout.write(report.to_text())
    if not (report.converged and final.converged):
        print("warning: SMO did not reach its KKT tolerance", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from .classifier import METRIC_NAMES
    from .pipeline import evaluate, load_features
    fs = load_features(args.features)
    out = evaluate(fs, args.model)
    for name in METRIC_NAMES:
        print(f"{name} = {getattr(out['metrics'], name)!r}")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    from .pipeline import ablate, ablation_table, load_features
    cfg = _load_cfg(args)
    fs = load_features(args.features)
    reports = ablate(fs, cfg, args.out)
    sys.stdout.write(ablation_table(reports))
    if not all(r.converged for r in reports.values()):
        return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_mask(args) -> int:
    from .pipeline import mask_predict
    try:
        rect = tuple(int(x) for x in args.rect.split(","))
        if len(rect) != 4:
            raise ValueError
    except ValueError:
        raise ConfigError(f"--rect must be R0,C0,R1,C1, got {args.rect!r}")
    out = mask_predict(args.model, args.image, rect, args.fill)
    for key in ("prediction_original", "decision_original",
                "prediction_masked", "decision_masked"):
        print(f"{key} = {out[key]!r}")
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "features": _cmd_features,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
    "mask": _cmd_mask,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
