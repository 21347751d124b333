"""Grid documents: the self-contained JSON exchange format.

A document carries everything the explorer and the reporting commands need:
the dataset digest, the fitted partitions with value labels, interval
bounds in both rank and time units, sparse cell counts, the cost breakdown,
the three annotated hierarchies with their global merge sequence, and
per-cluster typicality rankings. Re-importing a document against its
dataset reproduces the identical model; replaying its merge sequence
reproduces every coarser cut without touching the dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .cost import cost
from .dataset import CatsDataset
from .errors import CatsGridError, ModelError
from .exploit import (
    HierarchyNode,
    HierarchySet,
    MergeRecord,
    build_hierarchies,
    typicality_ranking,
)
from .gridmodel import GridModel, build_cell_stats, interval_time_bounds

SCHEMA_VERSION = 1

DIMS = ("S", "T", "E")


def build_document(d: CatsDataset, model: GridModel, h: HierarchySet | None = None,
                   top_k: int = 15, include_matrices: bool = False,
                   generator_info: dict | None = None) -> dict:
    """Assemble the exchange document for a fitted model."""
    if h is None:
        h = build_hierarchies(d, model)
    stats = build_cell_stats(d, model)
    breakdown = cost(d, model, stats)
    bounds = interval_time_bounds(d, model)
    cuts = list(model.time_cuts) + [d.num_points]
    starts = [0] + list(model.time_cuts)

    doc = {
        "schema_version": SCHEMA_VERSION,
        "dataset": {
            "n": d.n,
            "a": d.a,
            "num_points": d.num_points,
            "source_digest": d.source_digest,
            "sum_log_fact_seq_counts": float(gammaln(d.per_seq_counts + 1.0).sum()),
            "sum_log_fact_event_counts": float(gammaln(d.per_event_counts + 1.0).sum()),
        },
        "model": {
            "seq_clusters": [
                {"id": i, "values": [d.seq_labels[c] for c in cl]}
                for i, cl in enumerate(model.seq_clusters())
            ],
            "event_clusters": [
                {"id": i, "values": [d.event_labels[c] for c in cl]}
                for i, cl in enumerate(model.event_clusters())
            ],
            "time_intervals": [
                {
                    "id": j,
                    "rank_start": int(starts[j]),
                    "rank_end": int(cuts[j]),
                    "t_low": bounds[j][0],
                    "t_high": bounds[j][1],
                }
                for j in range(model.k_t)
            ],
        },
        "cells": [
            [i, j, e, c] for (i, j, e), c in sorted(stats.cells.items())
        ],
        "cost": breakdown.as_dict(),
        "cost_star": h.cost_star,
        "cost_null": h.cost_null,
        "hierarchy": {
            dim: [
                {
                    "id": node.node_id,
                    "children": list(node.children),
                    "delta": node.delta,
                    "cost": node.cost,
                    "ir": node.ir,
                    "level": node.level,
                }
                for node in h.nodes[dim]
            ]
            for dim in DIMS
        },
        "merge_sequence": [
            {
                "dim": r.dim,
                "a": r.node_a,
                "b": r.node_b,
                "new": r.new_node,
                "delta": r.delta,
                "cost": r.cost,
                "ir": r.ir,
                "level": r.level,
            }
            for r in h.sequence
        ],
        "typicality": {
            "S": _typicality_block(d, model, "S", stats, top_k, d.seq_labels),
            "E": _typicality_block(d, model, "E", stats, top_k, d.event_labels),
        },
    }
    if generator_info:
        doc["generator"] = generator_info
    if include_matrices:
        from .exploit import cluster_view

        doc["matrices"] = {
            str(c): {
                "frequency": cluster_view(d, model, c).frequency.tolist(),
                "cmi": cluster_view(d, model, c).cmi.tolist(),
                "contrast": cluster_view(d, model, c).contrast.tolist(),
            }
            for c in range(model.k_s)
        }
    return doc


def _typicality_block(d, model, dim, stats, top_k, labels):
    k = model.k_s if dim == "S" else model.k_e
    if k < 2:
        return {}
    ranking = typicality_ranking(d, model, dim, stats)
    return {
        str(cluster): [[labels[v], tau] for v, tau in pairs[:top_k]]
        for cluster, pairs in sorted(ranking.per_cluster.items())
    }


def save_document(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_document(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CatsGridError(f"not a grid document: {exc}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CatsGridError(
            f"unsupported document schema {version!r}; expected {SCHEMA_VERSION}"
        )
    return doc


def model_from_document(doc: dict, d: CatsDataset) -> GridModel:
    """Rebuild the fitted model against its dataset (labels back to codes)."""
    seq_assign = [0] * d.n
    for cl in doc["model"]["seq_clusters"]:
        for label in cl["values"]:
            code = d.seq_to_code.get(label)
            if code is None:
                raise ModelError(f"sequence {label!r} not present in the dataset")
            seq_assign[code] = cl["id"]
    event_assign = [0] * d.a
    for cl in doc["model"]["event_clusters"]:
        for label in cl["values"]:
            code = d.event_to_code.get(label)
            if code is None:
                raise ModelError(f"event {label!r} not present in the dataset")
            event_assign[code] = cl["id"]
    cuts = tuple(
        ivl["rank_end"] for ivl in doc["model"]["time_intervals"][:-1]
    )
    return GridModel(tuple(seq_assign), tuple(event_assign), cuts)


def hierarchy_from_document(doc: dict) -> HierarchySet:
    nodes = {
        dim: [
            HierarchyNode(
                n["id"], dim, tuple(n["children"]), n["delta"], n["cost"], n["ir"]
            )
            for n in doc["hierarchy"][dim]
        ]
        for dim in DIMS
    }
    sequence = tuple(
        MergeRecord(r["dim"], r["a"], r["b"], r["new"], r["delta"], r["cost"], r["ir"])
        for r in doc["merge_sequence"]
    )
    return HierarchySet(nodes, sequence, doc["cost_star"], doc["cost_null"])


@dataclass
class DocumentCut:
    """Partitions and merged cells of a document at one granularity."""

    seq_values: list  # per cluster: list of value labels
    event_values: list
    interval_bounds: list  # per interval: (t_low, t_high, first)
    cells: np.ndarray  # dense (k_s, k_t, k_e)


def replay_cut(doc: dict, level: float | None = None, min_ir: float | None = None,
               cluster_counts: dict | None = None) -> DocumentCut:
    """Merge the document's leaves down to a cut, dataset-free.

    ``level`` applies one hierarchical level (1 - IR) across all three
    dimensions; ``min_ir`` is its mirror; ``cluster_counts`` stops each
    listed dimension before it would drop below the given part count.
    """
    given = sum(x is not None for x in (level, min_ir, cluster_counts))
    if given != 1:
        raise ValueError("give exactly one of level, min_ir or cluster_counts")
    if min_ir is not None:
        level = 1.0 - min_ir
    if level is not None and not (0.0 <= level <= 1.0):
        raise ValueError("level must be in [0, 1]")

    seq_values = [list(cl["values"]) for cl in doc["model"]["seq_clusters"]]
    event_values = [list(cl["values"]) for cl in doc["model"]["event_clusters"]]
    intervals = [
        [ivl["t_low"], ivl["t_high"]] for ivl in doc["model"]["time_intervals"]
    ]
    k_s, k_t, k_e = len(seq_values), len(intervals), len(event_values)
    cells = np.zeros((k_s, k_t, k_e), dtype=np.int64)
    for i, j, e, c in doc["cells"]:
        cells[i, j, e] = c
    active = {
        "S": list(range(k_s)),
        "T": list(range(k_t)),
        "E": list(range(k_e)),
    }
    if cluster_counts is not None:
        for dim, want in cluster_counts.items():
            if dim not in DIMS:
                raise ValueError(f"unknown dimension {dim!r}")
            if want < 1 or len(active[dim]) < want:
                raise ModelError(
                    f"target {dim}={want} unachievable at this granularity"
                )

    for rec in doc["merge_sequence"]:
        if level is not None and rec["level"] > level:
            break
        if cluster_counts is not None:
            want = cluster_counts.get(rec["dim"])
            if want is not None and len(active[rec["dim"]]) - 1 < want:
                break
        parts = active[rec["dim"]]
        a = parts.index(rec["a"])
        b = parts.index(rec["b"])
        if a > b:
            a, b = b, a
        if rec["dim"] == "S":
            seq_values[a] = seq_values[a] + seq_values[b]
            del seq_values[b]
            cells[a] += cells[b]
            cells = np.delete(cells, b, axis=0)
        elif rec["dim"] == "E":
            event_values[a] = event_values[a] + event_values[b]
            del event_values[b]
            cells[:, :, a] += cells[:, :, b]
            cells = np.delete(cells, b, axis=2)
        else:
            intervals[a] = [intervals[a][0], intervals[b][1]]
            del intervals[b]
            cells[:, a, :] += cells[:, b, :]
            cells = np.delete(cells, b, axis=1)
        parts[a] = rec["new"]
        del parts[b]

    bounds = [
        (lo, hi, idx == 0) for idx, (lo, hi) in enumerate(intervals)
    ]
    return DocumentCut(seq_values, event_values, bounds, cells)


def cluster_label(values: list) -> str:
    return "{" + "|".join(values) + "}"


def interval_label(lo: float, hi: float, first: bool) -> str:
    open_br = "[" if first else "]"
    return f"{open_br}{format_number(lo)};{format_number(hi)}]"


def format_number(x) -> str:
    """Shortest round-trip decimal; integers printed bare (JS parity)."""
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def matrix_csv(cut: DocumentCut, seq_cluster: int, kind: str) -> str:
    """Render one cluster's matrix at a cut exactly as the explorer does."""
    if not (0 <= seq_cluster < len(cut.seq_values)):
        valid = ", ".join(str(i) for i in range(len(cut.seq_values)))
        raise ModelError(
            f"no sequence cluster {seq_cluster} at this cut; valid ids: {valid}"
        )
    counts = cut.cells[seq_cluster].astype(np.float64)
    if kind == "freq":
        matrix = cut.cells[seq_cluster]
    elif kind == "cmi":
        total = counts.sum()
        p = counts / total
        pt = p.sum(axis=1, keepdims=True)
        pe = p.sum(axis=0, keepdims=True)
        matrix = np.zeros_like(p)
        nz = p > 0
        matrix[nz] = p[nz] * np.log(p[nz] / (pt * pe)[nz])
    elif kind == "contrast":
        all_counts = cut.cells.astype(np.float64)
        total = all_counts.sum()
        p3 = counts / total
        p_te = all_counts.sum(axis=0) / total
        p_s = counts.sum() / total
        matrix = np.zeros_like(p3)
        nz = p3 > 0
        matrix[nz] = p3[nz] * np.log(p3[nz] / (p_te * p_s)[nz])
    else:
        raise ValueError(f"unknown matrix kind {kind!r}")

    header = [""] + [cluster_label(v) for v in cut.event_values]
    lines = [",".join(header)]
    for j, (lo, hi, first) in enumerate(cut.interval_bounds):
        row = [interval_label(lo, hi, first)]
        for e in range(len(cut.event_values)):
            row.append(format_number(matrix[j, e].item()))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
