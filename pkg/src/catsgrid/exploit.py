"""Post-hoc analysis of a fitted grid.

Three tool families:

* agglomerative hierarchies built by repeatedly applying the globally
  cheapest merge, annotated with the cost increase, the resulting cost and
  the information ratio, plus ``simplify`` to cut them at a chosen
  granularity;
* typicality, ranking the values of a cluster by the average cost
  degradation of reassigning them elsewhere;
* per-cluster frequency, mutual-information-contribution and contrast
  matrices over (time interval, event cluster) cells.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cost import delta_cost_merge, delta_cost_move
from .dataset import CatsDataset
from .errors import ModelError
from .gridmodel import (
    CellStats,
    GridModel,
    Merge,
    ValueMove,
    apply_merge,
    build_cell_stats,
    cell_tensor,
    null_model,
)
from .optimizer import _Engine


def dissimilarity(d: CatsDataset, m: GridModel, dim: str, part_a: int, part_b: int,
                  s: CellStats | None = None) -> float:
    """Cost increase caused by merging two parts (any sign)."""
    if s is None:
        s = build_cell_stats(d, m)
    return delta_cost_merge(d, m, s, Merge(dim, part_a, part_b))


def information_ratio(cost_m: float, cost_star: float, cost_null: float) -> float:
    """Position of a cost between the null model (0) and the best model (1)."""
    span = cost_star - cost_null
    if span == 0.0:
        warnings.warn("degenerate hierarchy: best model equals the null model")
        return 0.0
    slack = 1e-6 * max(1.0, abs(span))
    if cost_m < min(cost_star, cost_null) - slack or cost_m > max(cost_star, cost_null) + slack:
        raise ValueError(f"cost {cost_m} outside [{cost_star}, {cost_null}]")
    r = (cost_m - cost_null) / span
    return min(1.0, max(0.0, r))


def _clamped_ir(cost_m: float, cost_star: float, cost_null: float) -> float:
    span = cost_star - cost_null
    if span == 0.0:
        return 0.0
    return min(1.0, max(0.0, (cost_m - cost_null) / span))


@dataclass(frozen=True)
class MergeRecord:
    """One step of the agglomeration, in global order."""

    dim: str
    node_a: int
    node_b: int
    new_node: int
    delta: float
    cost: float
    ir: float

    @property
    def level(self) -> float:
        return 1.0 - self.ir


@dataclass(frozen=True)
class HierarchyNode:
    node_id: int
    dim: str
    children: tuple  # empty for leaves
    delta: float  # 0.0 for leaves
    cost: float
    ir: float

    @property
    def level(self) -> float:
        return 1.0 - self.ir

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class HierarchySet:
    """Dendrograms of all three dimensions plus the global merge order.

    ``nodes[dim]`` lists nodes by id: ids below the leaf count are the parts
    of the fitted model (position = part index), later ids are merge nodes.
    """

    nodes: dict
    sequence: tuple
    cost_star: float
    cost_null: float

    def roots(self, dim: str) -> list:
        referenced = {c for node in self.nodes[dim] for c in node.children}
        return [n for n in self.nodes[dim] if n.node_id not in referenced]


def build_hierarchies(d: CatsDataset, mstar: GridModel) -> HierarchySet:
    """Agglomerate from the fitted model to the single-cell model.

    Each step applies the globally least-cost merge over all three
    dimensions (sequence and event cluster pairs, adjacent interval pairs).
    """
    eng = _Engine(d, mstar, 1e-9)
    eng._build_caches()
    cost_star = eng.total
    cost_null = _Engine(d, null_model(d), 1e-9).total

    active = {
        "S": list(range(mstar.k_s)),
        "T": list(range(mstar.k_t)),
        "E": list(range(mstar.k_e)),
    }
    next_id = {dim: len(active[dim]) for dim in active}
    nodes = {
        dim: [
            HierarchyNode(i, dim, (), 0.0, cost_star, 1.0)
            for i in range(len(active[dim]))
        ]
        for dim in active
    }
    records = []
    while True:
        found = eng._scan_best_merge(require_improving=False)
        if found is None:
            break
        dim, a, b, delta = found
        node_a, node_b = active[dim][a], active[dim][b]
        eng.commit_merge(dim, a, b, delta)
        cost_after = eng.total_cost()
        eng.total = cost_after  # re-anchor to the exact value
        ir = _clamped_ir(cost_after, cost_star, cost_null)
        new_node = next_id[dim]
        next_id[dim] += 1
        # merged part keeps position a (its smallest code), b drops out
        active[dim][a] = new_node
        del active[dim][b]
        nodes[dim].append(
            HierarchyNode(new_node, dim, (node_a, node_b), delta, cost_after, ir)
        )
        records.append(
            MergeRecord(dim, node_a, node_b, new_node, delta, cost_after, ir)
        )
    return HierarchySet(nodes, tuple(records), cost_star, cost_null)


class _Replayer:
    """Re-applies a recorded merge sequence to the fitted model."""

    def __init__(self, d: CatsDataset, mstar: GridModel):
        self.model = mstar
        self.d = d
        self.active = {
            "S": list(range(mstar.k_s)),
            "T": list(range(mstar.k_t)),
            "E": list(range(mstar.k_e)),
        }

    def counts(self) -> dict:
        return {dim: len(parts) for dim, parts in self.active.items()}

    def apply(self, rec: MergeRecord) -> None:
        parts = self.active[rec.dim]
        a = parts.index(rec.node_a)
        b = parts.index(rec.node_b)
        if a > b:
            a, b = b, a
        self.model = apply_merge(self.d, self.model, Merge(rec.dim, a, b))
        parts[a] = rec.new_node
        del parts[b]


def simplify(d: CatsDataset, mstar: GridModel, h: HierarchySet, *,
             min_ir: float | None = None, cluster_counts: dict | None = None) -> GridModel:
    """Coarsen the fitted model by replaying recorded merges until a target binds.

    Exactly one of ``min_ir`` (keep models with IR >= min_ir) or
    ``cluster_counts`` (per-dimension lower bounds on the part counts, e.g.
    ``{"E": 4}``) must be given.
    """
    if (min_ir is None) == (cluster_counts is None):
        raise ValueError("give exactly one of min_ir or cluster_counts")
    if min_ir is not None and not (0.0 <= min_ir <= 1.0):
        raise ValueError("min_ir must be in [0, 1]")
    replayer = _Replayer(d, mstar)
    if cluster_counts is not None:
        for dim, want in cluster_counts.items():
            if dim not in ("S", "T", "E"):
                raise ValueError(f"unknown dimension {dim!r}")
            if want < 1:
                raise ValueError("cluster counts must be >= 1")
            if replayer.counts()[dim] < want:
                raise ModelError(
                    f"target {dim}={want} unachievable: fitted model has "
                    f"{replayer.counts()[dim]} parts"
                )
    for rec in h.sequence:
        if min_ir is not None and rec.ir < min_ir:
            break
        if cluster_counts is not None:
            want = cluster_counts.get(rec.dim)
            if want is not None and replayer.counts()[rec.dim] - 1 < want:
                break
        replayer.apply(rec)
    return replayer.model


def model_at_level(d: CatsDataset, mstar: GridModel, h: HierarchySet,
                   level: float) -> GridModel:
    """Cut all three hierarchies at one hierarchical level (1 - IR)."""
    if not (0.0 <= level <= 1.0):
        raise ValueError("level must be in [0, 1]")
    replayer = _Replayer(d, mstar)
    for rec in h.sequence:
        if rec.level > level:
            break
        replayer.apply(rec)
    return replayer.model


@dataclass(frozen=True)
class TypicalityRanking:
    dim: str
    per_cluster: dict  # cluster index -> tuple of (value code, tau), tau descending


def typicality(d: CatsDataset, m: GridModel, dim: str, value: int,
               s: CellStats | None = None) -> float:
    """Average cost damage of reassigning a value, weighted by target mass.

    Positive values mark representatives: moving them anywhere else hurts.
    """
    if dim not in ("S", "E"):
        raise ValueError("typicality is defined for dimensions S and E")
    if s is None:
        s = build_cell_stats(d, m)
    assign = m.seq_assign if dim == "S" else m.event_assign
    k = m.k_s if dim == "S" else m.k_e
    if k < 2:
        raise ModelError("typicality undefined for a single-cluster partition")
    if not (0 <= value < len(assign)):
        raise ModelError(f"no value code {value} in dimension {dim}")
    marg = s.seq_marginal if dim == "S" else s.event_marginal
    sizes = s.seq_part_sizes if dim == "S" else s.event_part_sizes
    c = assign[value]
    if sizes[c] == 1:
        warnings.warn(
            f"value {value} is the sole member of its cluster; reassigning it "
            "deletes the cluster"
        )
    p_c = marg[c] / s.num_points
    acc = 0.0
    for cj in range(k):
        if cj == c:
            continue
        p_j = marg[cj] / s.num_points
        acc += p_j * delta_cost_move(d, m, s, ValueMove(dim, value, cj))
    return acc / (1.0 - p_c)


def typicality_ranking(d: CatsDataset, m: GridModel, dim: str,
                       s: CellStats | None = None) -> TypicalityRanking:
    """Typicality of every value, grouped by cluster, sorted descending."""
    if s is None:
        s = build_cell_stats(d, m)
    assign = m.seq_assign if dim == "S" else m.event_assign
    per_cluster: dict = {}
    for value, cluster in enumerate(assign):
        tau = typicality(d, m, dim, value, s)
        per_cluster.setdefault(cluster, []).append((value, tau))
    for cluster, pairs in per_cluster.items():
        pairs.sort(key=lambda vt: (-vt[1], vt[0]))
        per_cluster[cluster] = tuple(pairs)
    return TypicalityRanking(dim, per_cluster)


def _check_cluster(m: GridModel, seq_cluster: int) -> None:
    if not (0 <= seq_cluster < m.k_s):
        raise ModelError(
            f"no sequence cluster {seq_cluster}; valid ids are 0..{m.k_s - 1}"
        )


def frequency_matrix(d: CatsDataset, m: GridModel, seq_cluster: int) -> np.ndarray:
    """Cell counts of one sequence cluster, time intervals by event clusters."""
    _check_cluster(m, seq_cluster)
    return cell_tensor(d, m)[seq_cluster]


def cmi_matrix(d: CatsDataset, m: GridModel, seq_cluster: int) -> np.ndarray:
    """Per-cell contribution to MI(time; events) inside one sequence cluster.

    Probabilities are relative frequencies among the cluster's own points;
    empty cells contribute zero.
    """
    counts = frequency_matrix(d, m, seq_cluster).astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise ModelError(f"sequence cluster {seq_cluster} has no points")
    p = counts / total
    pt = p.sum(axis=1, keepdims=True)
    pe = p.sum(axis=0, keepdims=True)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz] / (pt * pe)[nz])
    return out


def contrast_matrix(d: CatsDataset, m: GridModel, seq_cluster: int) -> np.ndarray:
    """Per-cell contribution to MI((time, events); sequence clusters), one slice.

    Probabilities are relative frequencies over all points; positive entries
    mark where the cluster exceeds the global (time, event) distribution.
    """
    _check_cluster(m, seq_cluster)
    tensor = cell_tensor(d, m).astype(np.float64)
    total = tensor.sum()
    p3 = tensor / total
    p_te = p3.sum(axis=0)
    p_s = p3[seq_cluster].sum()
    slice_p = p3[seq_cluster]
    out = np.zeros_like(slice_p)
    nz = slice_p > 0
    denom = p_te * p_s
    out[nz] = slice_p[nz] * np.log(slice_p[nz] / denom[nz])
    return out


@dataclass(frozen=True)
class ClusterView:
    """The three matrices of one sequence cluster."""

    seq_cluster: int
    frequency: np.ndarray
    cmi: np.ndarray
    contrast: np.ndarray


def cluster_view(d: CatsDataset, m: GridModel, seq_cluster: int) -> ClusterView:
    return ClusterView(
        seq_cluster,
        frequency_matrix(d, m, seq_cluster),
        cmi_matrix(d, m, seq_cluster),
        contrast_matrix(d, m, seq_cluster),
    )
