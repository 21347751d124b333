"""Command line driver: generate, fit, simplify, report, eval.

Exit codes: 0 success, 2 usage error, 3 data or model error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import document as docmod
from .dataset import load_dataset
from .errors import CatsGridError
from .exploit import build_hierarchies, simplify
from .optimizer import OptimizerConfig, vns_optimize
from .synthbench import PatternSpec, default_patterns, generate


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _parse_cluster_targets(text: str) -> dict:
    out = {}
    for chunk in text.split(","):
        if "=" not in chunk:
            raise argparse.ArgumentTypeError(
                f"bad cluster target {chunk!r}; expected DIM=COUNT"
            )
        dim, count = chunk.split("=", 1)
        dim = dim.strip().upper()
        if dim not in ("S", "T", "E"):
            raise argparse.ArgumentTypeError(f"unknown dimension {dim!r}")
        out[dim] = _positive_int(count)
    return out


def _load_patterns(source: str):
    if source == "default":
        return default_patterns()
    with open(source, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return tuple(
        PatternSpec(
            p["name"],
            tuple(float(u) for u in p["uppers"]),
            tuple(tuple(group) for group in p["events"]),
            t_min=float(p.get("t_min", 0.0)),
        )
        for p in raw
    )


def _format_time(t: float, time_type: str) -> str:
    if time_type == "integer":
        return str(int(t))
    return repr(float(t))


def cmd_generate(args) -> int:
    patterns = _load_patterns(args.patterns)
    d, truth = generate(patterns, args.cm, args.points, args.eta, args.seed,
                        time_type=args.time_type)
    with open(args.out, "w", encoding="utf-8") as fh:
        for p in d.decode():
            fh.write(f"{p.seq},{_format_time(p.t, args.time_type)},{p.e}\n")
    truth_doc = {
        "seq_pattern": truth.seq_pattern,
        "event_groups": [list(g) for g in truth.event_groups],
        "boundaries": list(truth.boundaries),
        "cm": args.cm,
        "eta": args.eta,
        "seed": args.seed,
        "points": args.points,
        "time_type": args.time_type,
    }
    with open(args.truth_out, "w", encoding="utf-8") as fh:
        json.dump(truth_doc, fh, indent=1)
        fh.write("\n")
    return 0


def _optimizer_config(args) -> OptimizerConfig:
    workers = args.threads
    if workers is None:
        env = os.environ.get("CATSGRID_THREADS")
        workers = int(env) if env else 1
    return OptimizerConfig(
        vns_rounds=args.rounds,
        seed=args.seed,
        max_initial_parts=args.max_parts,
        time_budget=args.budget,
        tolerance=1e-9,
        workers=workers,
    )


def cmd_fit(args) -> int:
    delimiter = {"tab": "\t", "comma": ",", "auto": None}[args.delimiter]
    d = load_dataset(args.input, delimiter=delimiter)
    cfg = _optimizer_config(args)

    progress = None
    if args.progress:
        def progress(step, cost_value, elapsed):
            print(f"step {step}  cost {cost_value:.3f}  {elapsed:.1f}s",
                  file=sys.stderr, flush=True)

    start = time.perf_counter()
    model, trace = vns_optimize(d, cfg, progress=progress)
    runtime = time.perf_counter() - start
    h = build_hierarchies(d, model)
    doc = docmod.build_document(
        d, model, h, top_k=args.top_k, include_matrices=args.matrices,
        generator_info={"command": "fit", "rounds": cfg.vns_rounds,
                        "seed": cfg.seed, "runtime_s": runtime},
    )
    docmod.save_document(doc, args.out)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            trace.to_csv(fh)
    if args.progress:
        print(f"fitted {model.k_s}x{model.k_t}x{model.k_e} grid, "
              f"cost {doc['cost']['total']:.3f}, {runtime:.1f}s", file=sys.stderr)
    return 0


def cmd_simplify(args) -> int:
    doc = docmod.load_document(args.input)
    d = load_dataset(args.data)
    if doc["dataset"]["source_digest"] and d.source_digest != doc["dataset"]["source_digest"]:
        print("warning: dataset digest differs from the document's source",
              file=sys.stderr)
    model = docmod.model_from_document(doc, d)
    h = docmod.hierarchy_from_document(doc)
    if args.ir is not None:
        coarse = simplify(d, model, h, min_ir=args.ir)
    else:
        coarse = simplify(d, model, h, cluster_counts=args.clusters)
    out = docmod.build_document(d, coarse, top_k=args.top_k,
                                include_matrices=args.matrices,
                                generator_info={"command": "simplify"})
    docmod.save_document(out, args.out)
    return 0


def cmd_report(args) -> int:
    doc = docmod.load_document(args.input)
    if args.level is not None:
        cut = docmod.replay_cut(doc, level=args.level)
    elif args.ir is not None:
        cut = docmod.replay_cut(doc, min_ir=args.ir)
    elif args.clusters is not None:
        cut = docmod.replay_cut(doc, cluster_counts=args.clusters)
    else:
        cut = docmod.replay_cut(doc, level=0.0)
    text = docmod.matrix_csv(cut, args.cluster, args.kind)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    from .synthbench import GroundTruth, adjusted_rand_index

    doc = docmod.load_document(args.input)
    with open(args.truth, "r", encoding="utf-8") as fh:
        traw = json.load(fh)
    truth = GroundTruth(
        seq_pattern=traw["seq_pattern"],
        event_groups=tuple(tuple(g) for g in traw["event_groups"]),
        boundaries=tuple(traw["boundaries"]),
    )
    seq_clusters = doc["model"]["seq_clusters"]
    event_clusters = doc["model"]["event_clusters"]
    k_s, k_e = len(seq_clusters), len(event_clusters)
    k_t = len(doc["model"]["time_intervals"])

    fitted_seq, true_seq = [], []
    for cl in seq_clusters:
        for label in cl["values"]:
            fitted_seq.append(cl["id"])
            true_seq.append(truth.seq_pattern[label])
    fitted_event, true_event = [], []
    lookup = {e: gi for gi, g in enumerate(truth.event_groups) for e in g}
    for cl in event_clusters:
        for label in cl["values"]:
            fitted_event.append(cl["id"])
            true_event.append(lookup[label])

    ari_seq = adjusted_rand_index(fitted_seq, true_seq) if k_s > 1 else None
    ari_event = adjusted_rand_index(fitted_event, true_event) if k_e > 1 else None
    uppers = [ivl["t_high"] for ivl in doc["model"]["time_intervals"][:-1]]
    if truth.boundaries and uppers:
        berr = max(min(abs(b - u) for u in uppers) for b in truth.boundaries)
    elif truth.boundaries:
        berr = None
    else:
        berr = 0.0

    row = {
        "k_S": k_s,
        "k_T": k_t,
        "k_E": k_e,
        "ari_seq": ari_seq,
        "ari_event": ari_event,
        "max_boundary_error": berr,
        "cost": doc["cost"]["total"],
    }
    header = ",".join(row)
    values = ",".join("" if row[k] is None else str(row[k]) for k in row)
    text = header + "\n" + values + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catsgrid",
        description="Coclustering of categorical time series on 3D data grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic two-regime dataset")
    p.add_argument("--patterns", default="default",
                   help="'default' or a JSON pattern file")
    p.add_argument("--cm", type=_positive_int, default=10,
                   help="sequences per pattern")
    p.add_argument("--points", type=_positive_int, required=True)
    p.add_argument("--eta", type=float, default=0.0, help="noise level in [0, 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-type", choices=("real", "integer"), default="real")
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a grid model and export the document")
    p.add_argument("--input", required=True)
    p.add_argument("--rounds", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=None,
                   help="time budget in seconds (anytime stop)")
    p.add_argument("--progress", action="store_true")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (fallback: CATSGRID_THREADS)")
    p.add_argument("--delimiter", choices=("auto", "tab", "comma"), default="auto")
    p.add_argument("--max-parts", type=_positive_int, default=None)
    p.add_argument("--top-k", type=_positive_int, default=15)
    p.add_argument("--matrices", action="store_true",
                   help="embed per-cluster matrices in the document")
    p.add_argument("--trace-out", default=None, help="write the step trace CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simplify", help="cut the hierarchies at a coarser grain")
    p.add_argument("--input", required=True, help="grid document")
    p.add_argument("--data", required=True, help="the dataset the document was fit on")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ir", type=float, default=None,
                       help="keep information ratio at least this")
    group.add_argument("--clusters", type=_parse_cluster_targets, default=None,
                       help="per-dimension part targets, e.g. S=20,E=21")
    p.add_argument("--top-k", type=_positive_int, default=15)
    p.add_argument("--matrices", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("report", help="matrix CSV for one cluster at a cut")
    p.add_argument("--input", required=True, help="grid document")
    p.add_argument("--cluster", type=int, required=True)
    p.add_argument("--kind", choices=("freq", "cmi", "contrast"), required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--level", type=float, default=None,
                       help="hierarchical level (1 - IR) across all dimensions")
    group.add_argument("--ir", type=float, default=None)
    group.add_argument("--clusters", type=_parse_cluster_targets, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("eval", help="score a document against a ground truth file")
    p.add_argument("--input", required=True, help="grid document")
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "eta", None) is not None and not (0.0 <= args.eta < 1.0):
        parser.error("--eta must be in [0, 1)")
    if getattr(args, "ir", None) is not None and not (0.0 <= args.ir <= 1.0):
        parser.error("--ir must be in [0, 1]")
    if getattr(args, "level", None) is not None and not (0.0 <= args.level <= 1.0):
        parser.error("--level must be in [0, 1]")
    try:
        return args.func(args)
    except CatsGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
