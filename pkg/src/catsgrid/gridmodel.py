"""Grid models: three univariate partitions plus their sparse cell counts.

A model partitions sequence codes into clusters, event codes into clusters,
and the time axis into intervals. Intervals are parameterized by interior
boundaries in rank space (positions in the time-sorted point order); a
boundary may only sit between two distinct time values, never inside a tie
group. Cluster indices are canonical: clusters are numbered by their
smallest contained value code, so equal partitions always compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

from .dataset import CatsDataset
from .errors import ModelError

Dimension = Literal["S", "T", "E"]


def _canonical_assignment(assign) -> tuple:
    """Relabel clusters by ascending smallest member code; no gaps allowed."""
    assign = list(assign)
    first_seen: dict = {}
    for code, c in enumerate(assign):
        first_seen.setdefault(c, code)
    order = sorted(first_seen, key=first_seen.get)
    remap = {c: i for i, c in enumerate(order)}
    return tuple(remap[c] for c in assign)


@dataclass(frozen=True)
class GridModel:
    """Immutable coclustering model: two value partitions and a rank discretization.

    ``seq_assign[code]`` / ``event_assign[code]`` give the cluster index of a
    value code; ``time_cuts`` are the interior interval boundaries as
    cumulative point ranks (strictly increasing, in ``(0, N)``).
    """

    seq_assign: tuple
    event_assign: tuple
    time_cuts: tuple

    def __post_init__(self):
        object.__setattr__(self, "seq_assign", _canonical_assignment(self.seq_assign))
        object.__setattr__(self, "event_assign", _canonical_assignment(self.event_assign))
        cuts = tuple(int(c) for c in self.time_cuts)
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ModelError("time cuts must be strictly increasing")
        object.__setattr__(self, "time_cuts", cuts)

    @property
    def k_s(self) -> int:
        return max(self.seq_assign) + 1 if self.seq_assign else 1

    @property
    def k_e(self) -> int:
        return max(self.event_assign) + 1 if self.event_assign else 1

    @property
    def k_t(self) -> int:
        return len(self.time_cuts) + 1

    @property
    def num_cells(self) -> int:
        return self.k_s * self.k_e * self.k_t

    def seq_clusters(self) -> list:
        """Member codes per sequence cluster, each ascending."""
        out = [[] for _ in range(self.k_s)]
        for code, c in enumerate(self.seq_assign):
            out[c].append(code)
        return out

    def event_clusters(self) -> list:
        out = [[] for _ in range(self.k_e)]
        for code, c in enumerate(self.event_assign):
            out[c].append(code)
        return out


def null_model(d: CatsDataset) -> GridModel:
    """The single-cell model: one part per dimension."""
    return GridModel((0,) * d.n, (0,) * d.a, ())


def finest_model(d: CatsDataset) -> GridModel:
    """One part per value and per distinct time."""
    cuts = tuple(int(r) for r in d.group_offsets[1:-1])
    return GridModel(tuple(range(d.n)), tuple(range(d.a)), cuts)


@dataclass(frozen=True)
class Merge:
    """Merge two parts of one dimension; time intervals must be adjacent."""

    dim: Dimension
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise ModelError("merge parts must be distinct")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)


@dataclass(frozen=True)
class ValueMove:
    """Reassign one value code of S or E to another existing cluster."""

    dim: Dimension
    value: int
    target: int


@dataclass(frozen=True)
class BoundaryShift:
    """Shift interior time boundary ``index`` by a signed rank offset.

    The resulting position must itself be a tie-group boundary.
    """

    index: int
    offset: int


Move = Union[ValueMove, BoundaryShift]


def _check_consistent(d: CatsDataset, m: GridModel):
    if len(m.seq_assign) != d.n or len(m.event_assign) != d.a:
        raise ModelError(
            f"model shaped for ({len(m.seq_assign)}, {len(m.event_assign)}) values, "
            f"dataset has ({d.n}, {d.a})"
        )
    if m.time_cuts:
        cuts = np.asarray(m.time_cuts)
        if cuts[0] <= 0 or cuts[-1] >= d.num_points:
            raise ModelError("time cuts out of range")
        aligned = np.isin(cuts, d.group_offsets[1:-1])
        if not np.all(aligned):
            bad = cuts[~aligned][0]
            raise ModelError(f"time cut at rank {bad} splits a tie group")


@dataclass(frozen=True)
class CellStats:
    """Sparse sufficient statistics of (dataset, model).

    ``cells`` maps (seq cluster, time interval, event cluster) to its point
    count; zero cells are absent. Marginals and part sizes are tuples indexed
    by part.
    """

    cells: dict
    seq_marginal: tuple
    time_marginal: tuple
    event_marginal: tuple
    seq_part_sizes: tuple
    event_part_sizes: tuple
    num_points: int


def interval_of_group(d: CatsDataset, m: GridModel) -> np.ndarray:
    """Interval index of each tie group under the model's cuts."""
    cuts = np.asarray(m.time_cuts, dtype=np.int64)
    return np.searchsorted(cuts, d.group_offsets[:-1], side="right")


def cell_tensor(d: CatsDataset, m: GridModel) -> np.ndarray:
    """Dense (k_S, k_T, k_E) count tensor; one pass over the points."""
    _check_consistent(d, m)
    seq_part = np.asarray(m.seq_assign, dtype=np.int64)[d.seq_codes]
    event_part = np.asarray(m.event_assign, dtype=np.int64)[d.event_codes]
    ivl = interval_of_group(d, m)[d.group_of_point]
    k_s, k_t, k_e = m.k_s, m.k_t, m.k_e
    flat = (seq_part * k_t + ivl) * k_e + event_part
    counts = np.bincount(flat, minlength=k_s * k_t * k_e)
    return counts.reshape(k_s, k_t, k_e)


def build_cell_stats(d: CatsDataset, m: GridModel) -> CellStats:
    """Exact sparse cell counts plus marginals for (dataset, model)."""
    tensor = cell_tensor(d, m)
    nz = np.nonzero(tensor)
    cells = {
        (int(i), int(j), int(e)): int(tensor[i, j, e])
        for i, j, e in zip(*nz)
    }
    seq_sizes = np.bincount(np.asarray(m.seq_assign), minlength=m.k_s)
    event_sizes = np.bincount(np.asarray(m.event_assign), minlength=m.k_e)
    if np.any(seq_sizes == 0) or np.any(event_sizes == 0):
        raise ModelError("empty cluster in partition")
    return CellStats(
        cells=cells,
        seq_marginal=tuple(int(x) for x in tensor.sum(axis=(1, 2))),
        time_marginal=tuple(int(x) for x in tensor.sum(axis=(0, 2))),
        event_marginal=tuple(int(x) for x in tensor.sum(axis=(0, 1))),
        seq_part_sizes=tuple(int(x) for x in seq_sizes),
        event_part_sizes=tuple(int(x) for x in event_sizes),
        num_points=d.num_points,
    )


def apply_merge(d: CatsDataset, m: GridModel, g: Merge) -> GridModel:
    """Return the model with the two parts of ``g`` merged."""
    _check_consistent(d, m)
    if g.dim == "S":
        if not (0 <= g.a < g.b < m.k_s):
            raise ModelError(f"invalid sequence cluster pair ({g.a}, {g.b})")
        assign = tuple(g.a if c == g.b else c for c in m.seq_assign)
        return GridModel(assign, m.event_assign, m.time_cuts)
    if g.dim == "E":
        if not (0 <= g.a < g.b < m.k_e):
            raise ModelError(f"invalid event cluster pair ({g.a}, {g.b})")
        assign = tuple(g.a if c == g.b else c for c in m.event_assign)
        return GridModel(m.seq_assign, assign, m.time_cuts)
    if g.dim == "T":
        if g.b != g.a + 1:
            raise ModelError(f"time intervals {g.a} and {g.b} are not adjacent")
        if not (0 <= g.a < m.k_t - 1):
            raise ModelError(f"invalid time interval pair ({g.a}, {g.b})")
        cuts = m.time_cuts[:g.a] + m.time_cuts[g.a + 1:]
        return GridModel(m.seq_assign, m.event_assign, cuts)
    raise ModelError(f"unknown dimension {g.dim!r}")


def apply_move(d: CatsDataset, m: GridModel, v: Move) -> GridModel:
    """Return the model after one value move or boundary shift.

    Moving the sole member out of a cluster deletes the cluster.
    """
    _check_consistent(d, m)
    if isinstance(v, BoundaryShift):
        if not (0 <= v.index < len(m.time_cuts)):
            raise ModelError(f"no time boundary with index {v.index}")
        if v.offset == 0:
            raise ModelError("boundary shift must be nonzero")
        pos = m.time_cuts[v.index] + v.offset
        lo = m.time_cuts[v.index - 1] if v.index > 0 else 0
        hi = m.time_cuts[v.index + 1] if v.index + 1 < len(m.time_cuts) else d.num_points
        if not (lo < pos < hi):
            raise ModelError(f"shifted boundary {pos} would empty an interval")
        if pos not in d.group_offsets[1:-1]:
            raise ModelError(f"shifted boundary {pos} splits a tie group")
        cuts = list(m.time_cuts)
        cuts[v.index] = pos
        return GridModel(m.seq_assign, m.event_assign, tuple(cuts))

    assign = list(m.seq_assign if v.dim == "S" else m.event_assign)
    k = m.k_s if v.dim == "S" else m.k_e
    if not (0 <= v.value < len(assign)):
        raise ModelError(f"no value code {v.value} in dimension {v.dim}")
    if not (0 <= v.target < k):
        raise ModelError(f"no cluster {v.target} in dimension {v.dim}")
    if assign[v.value] == v.target:
        raise ModelError("move target equals current cluster")
    assign[v.value] = v.target
    if v.dim == "S":
        return GridModel(tuple(assign), m.event_assign, m.time_cuts)
    return GridModel(m.seq_assign, tuple(assign), m.time_cuts)


def interval_time_bounds(d: CatsDataset, m: GridModel) -> list:
    """Time bounds per interval: dataset extremes outside, midpoints between.

    Interior boundaries are reported as the midpoint between the last time
    value of one interval and the first of the next.
    """
    gt = d.group_times()
    cuts = np.asarray(m.time_cuts, dtype=np.int64)
    idx = np.searchsorted(d.group_offsets, cuts)  # first group of next interval
    mids = [(float(gt[i - 1]) + float(gt[i])) / 2.0 for i in idx]
    lows = [float(gt[0])] + mids
    highs = mids + [float(gt[-1])]
    return list(zip(lows, highs))
