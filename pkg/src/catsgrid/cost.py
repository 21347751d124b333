"""Exact evaluation of the grid cost criterion and incremental deltas.

All quantities are natural-log code lengths (nats). The total splits into
nine additive terms: a header for the dimension sizes, partition-coding
terms, a cell-distribution term, per-cluster distribution terms, and four
likelihood terms (cells, within sequence clusters, within event clusters,
ranks within time intervals). Every term is nonnegative.

Incremental deltas only touch the terms whose parts change, which is what
makes the greedy search tractable.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import gammaln, logsumexp

from .dataset import CatsDataset
from .errors import ModelError
from .gridmodel import (
    BoundaryShift,
    CellStats,
    GridModel,
    Merge,
    Move,
    build_cell_stats,
    interval_of_group,
)


def log_factorial(m):
    """ln(m!) via log-gamma; accepts scalars or arrays."""
    arr = np.asarray(m)
    if np.any(arr < 0):
        raise ValueError("factorial argument must be nonnegative")
    out = gammaln(arr + 1.0)
    return float(out) if np.isscalar(m) or arr.ndim == 0 else out


def log_binomial(m: int, j: int) -> float:
    """ln C(m, j) for 0 <= j <= m."""
    if j < 0 or j > m:
        raise ValueError(f"binomial out of range: C({m}, {j})")
    return float(gammaln(m + 1.0) - gammaln(j + 1.0) - gammaln(m - j + 1.0))


# Partition counts B(m, j) = number of partitions of m elements into at most
# j nonempty subsets, i.e. the partial sums of Stirling numbers of the
# second kind. Computed by a log-domain DP over rows of the Stirling
# recurrence; rows are memoized per m. Beyond _STIRLING_CAP elements the DP
# is replaced by the explicit inclusion-exclusion sum, which is stable in
# the m >> j regime where it is ever needed.
_STIRLING_CAP = 20000
_partition_lock = threading.Lock()
_partition_rows: dict = {}


def _stirling_log_row(m: int, jmax: int) -> np.ndarray:
    """log S(m, i) for i = 1..jmax (index i-1)."""
    row = np.full(jmax, -np.inf)
    row[0] = 0.0
    log_i = np.log(np.arange(1, jmax + 1, dtype=np.float64))
    for _ in range(2, m + 1):
        shifted = np.concatenate(([-np.inf], row[:-1]))
        row = np.logaddexp(log_i + row, shifted)
    return row


def _stirling_log_incl_excl(m: int, i: int) -> float:
    """log S(m, i) from the alternating explicit sum (use when m >> i)."""
    if i == 1:
        return 0.0
    r = np.arange(i, dtype=np.float64)
    terms = gammaln(i + 1.0) - gammaln(r + 1.0) - gammaln(i - r + 1.0) + m * np.log(i - r)
    pos = logsumexp(terms[::2])
    neg = logsumexp(terms[1::2])
    lf_i = float(gammaln(i + 1.0))
    if neg >= pos:  # total cancellation: dominant-term fallback
        return float(pos - lf_i)
    return float(pos + math.log1p(-math.exp(neg - pos)) - lf_i)


def log_partition_count(m: int, j: int) -> float:
    """ln B(m, j): partitions of m elements into at most j nonempty subsets."""
    if not (1 <= j <= m):
        raise ValueError(f"need 1 <= j <= m, got ({m}, {j})")
    if j == 1:
        return 0.0
    if m > _STIRLING_CAP:
        return float(logsumexp([_stirling_log_incl_excl(m, i) for i in range(1, j + 1)]))
    with _partition_lock:
        cached = _partition_rows.get(m)
        if cached is None or cached.shape[0] < j:
            jmax = min(m, max(j, 2 * (cached.shape[0] if cached is not None else 1)))
            stirling = _stirling_log_row(m, jmax)
            cached = np.logaddexp.accumulate(stirling)
            _partition_rows[m] = cached
        return float(cached[j - 1])


@dataclass(frozen=True)
class CostBreakdown:
    """The nine additive cost terms plus their total, in nats."""

    prior_header: float
    prior_partitions: float
    prior_cells: float
    prior_seq_clusters: float
    prior_event_clusters: float
    lik_cells: float
    lik_seq: float
    lik_event: float
    lik_time: float
    total: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _lf(x: float) -> float:
    return math.lgamma(x + 1.0)


def _cluster_prior(points: int, size: int) -> float:
    """ln C(points + size - 1, size - 1): distribution of a cluster's points on its values."""
    return log_binomial(points + size - 1, size - 1)


def cost(d: CatsDataset, m: GridModel, s: CellStats | None = None) -> CostBreakdown:
    """Evaluate the full criterion for (dataset, model)."""
    if s is None:
        s = build_cell_stats(d, m)
    n, a, big_n = d.n, d.a, d.num_points
    k = m.num_cells

    prior_header = math.log(n) + math.log(a) + math.log(big_n)
    prior_partitions = log_partition_count(n, m.k_s) + log_partition_count(a, m.k_e)
    prior_cells = log_binomial(big_n + k - 1, k - 1)
    prior_seq = sum(
        _cluster_prior(pts, size)
        for pts, size in zip(s.seq_marginal, s.seq_part_sizes)
    )
    prior_event = sum(
        _cluster_prior(pts, size)
        for pts, size in zip(s.event_marginal, s.event_part_sizes)
    )
    lik_cells = _lf(big_n) - sum(_lf(c) for c in s.cells.values())
    lik_seq = sum(_lf(x) for x in s.seq_marginal) - float(
        np.sum(gammaln(d.per_seq_counts + 1.0))
    )
    lik_event = sum(_lf(x) for x in s.event_marginal) - float(
        np.sum(gammaln(d.per_event_counts + 1.0))
    )
    lik_time = sum(_lf(x) for x in s.time_marginal)

    terms = (
        prior_header,
        prior_partitions,
        prior_cells,
        prior_seq,
        prior_event,
        lik_cells,
        lik_seq,
        lik_event,
        lik_time,
    )
    return CostBreakdown(*terms, total=float(sum(terms)))


def _pair_h(ca: float, cb: float) -> float:
    """ln C(ca+cb, ca): the cell-likelihood interaction of two merged counts."""
    return _lf(ca + cb) - _lf(ca) - _lf(cb)


def _cells_row(s: CellStats, axis: int, part: int) -> dict:
    """The sparse slice of one part: remaining-key -> count."""
    out = {}
    for key, c in s.cells.items():
        if key[axis] == part:
            out[key[:axis] + key[axis + 1:]] = c
    return out


def _row_interaction(s: CellStats, axis: int, pa: int, pb: int) -> float:
    """Sum of _pair_h over intersecting cells of two parts along one axis."""
    row_a = _cells_row(s, axis, pa)
    total = 0.0
    for key, cb in _cells_row(s, axis, pb).items():
        ca = row_a.get(key)
        if ca is not None:
            total += _pair_h(ca, cb)
    return total


def _k_change(big_n: int, k_before: int, k_after: int) -> float:
    return log_binomial(big_n + k_after - 1, k_after - 1) - log_binomial(
        big_n + k_before - 1, k_before - 1
    )


def delta_cost_merge(d: CatsDataset, m: GridModel, s: CellStats, g: Merge) -> float:
    """cost(after merge) - cost(before), touching only the changed terms."""
    big_n = d.num_points
    k = m.num_cells
    if g.dim == "S":
        if not (0 <= g.a < g.b < m.k_s):
            raise ModelError(f"invalid sequence cluster pair ({g.a}, {g.b})")
        na, nb = s.seq_part_sizes[g.a], s.seq_part_sizes[g.b]
        pa, pb = s.seq_marginal[g.a], s.seq_marginal[g.b]
        delta = log_partition_count(d.n, m.k_s - 1) - log_partition_count(d.n, m.k_s)
        delta += _k_change(big_n, k, k // m.k_s * (m.k_s - 1))
        delta += _cluster_prior(pa + pb, na + nb) - _cluster_prior(pa, na) - _cluster_prior(pb, nb)
        delta += _pair_h(pa, pb)
        delta -= _row_interaction(s, 0, g.a, g.b)
        return delta
    if g.dim == "E":
        if not (0 <= g.a < g.b < m.k_e):
            raise ModelError(f"invalid event cluster pair ({g.a}, {g.b})")
        na, nb = s.event_part_sizes[g.a], s.event_part_sizes[g.b]
        pa, pb = s.event_marginal[g.a], s.event_marginal[g.b]
        delta = log_partition_count(d.a, m.k_e - 1) - log_partition_count(d.a, m.k_e)
        delta += _k_change(big_n, k, k // m.k_e * (m.k_e - 1))
        delta += _cluster_prior(pa + pb, na + nb) - _cluster_prior(pa, na) - _cluster_prior(pb, nb)
        delta += _pair_h(pa, pb)
        delta -= _row_interaction(s, 2, g.a, g.b)
        return delta
    if g.dim == "T":
        if g.b != g.a + 1 or not (0 <= g.a < m.k_t - 1):
            raise ModelError(f"time intervals {g.a} and {g.b} are not adjacent")
        pa, pb = s.time_marginal[g.a], s.time_marginal[g.b]
        delta = _k_change(big_n, k, k // m.k_t * (m.k_t - 1))
        delta += _pair_h(pa, pb)
        delta -= _row_interaction(s, 1, g.a, g.b)
        return delta
    raise ModelError(f"unknown dimension {g.dim!r}")


def _value_slice(d: CatsDataset, m: GridModel, dim: str, value: int) -> dict:
    """Sparse (other-axis key) -> count contributed by one value."""
    ivl = interval_of_group(d, m)
    out: dict = {}
    if dim == "S":
        pts = d.points_of_seq(value)
        keys = zip(ivl[d.group_of_point[pts]], (m.event_assign[c] for c in d.event_codes[pts]))
    else:
        pts = d.points_of_event(value)
        keys = zip((m.seq_assign[c] for c in d.seq_codes[pts]), ivl[d.group_of_point[pts]])
    for key in keys:
        key = (int(key[0]), int(key[1]))
        out[key] = out.get(key, 0) + 1
    return out


def delta_cost_move(d: CatsDataset, m: GridModel, s: CellStats, v: Move) -> float:
    """cost(after move) - cost(before), computed incrementally."""
    big_n = d.num_points
    if isinstance(v, BoundaryShift):
        if not (0 <= v.index < len(m.time_cuts)):
            raise ModelError(f"no time boundary with index {v.index}")
        if v.offset == 0:
            raise ModelError("boundary shift must be nonzero")
        pos = m.time_cuts[v.index]
        new = pos + v.offset
        lo = m.time_cuts[v.index - 1] if v.index > 0 else 0
        hi = m.time_cuts[v.index + 1] if v.index + 1 < len(m.time_cuts) else big_n
        if not (lo < new < hi):
            raise ModelError(f"shifted boundary {new} would empty an interval")
        if new not in d.group_offsets[1:-1]:
            raise ModelError(f"shifted boundary {new} splits a tie group")
        j1, j2 = v.index, v.index + 1
        span = slice(pos, new) if v.offset > 0 else slice(new, pos)
        seqs = d.sorted_seq_codes()[span]
        events = d.sorted_event_codes()[span]
        masses: dict = {}
        for sc, ec in zip(seqs, events):
            key = (m.seq_assign[sc], m.event_assign[ec])
            masses[key] = masses.get(key, 0) + 1
        moved = abs(v.offset)
        # offset > 0 grows interval j1 at j2's expense, and conversely
        src, dst = (j2, j1) if v.offset > 0 else (j1, j2)
        delta = (
            _lf(s.time_marginal[dst] + moved)
            + _lf(s.time_marginal[src] - moved)
            - _lf(s.time_marginal[j1])
            - _lf(s.time_marginal[j2])
        )
        cell_shift = 0.0
        for (sc, ec), mass in masses.items():
            c_src = s.cells.get((sc, src, ec), 0)
            c_dst = s.cells.get((sc, dst, ec), 0)
            cell_shift += _lf(c_src - mass) - _lf(c_src) + _lf(c_dst + mass) - _lf(c_dst)
        return delta - cell_shift

    assign = m.seq_assign if v.dim == "S" else m.event_assign
    k_dim = m.k_s if v.dim == "S" else m.k_e
    if not (0 <= v.value < len(assign)):
        raise ModelError(f"no value code {v.value} in dimension {v.dim}")
    if not (0 <= v.target < k_dim):
        raise ModelError(f"no cluster {v.target} in dimension {v.dim}")
    src = assign[v.value]
    if src == v.target:
        raise ModelError("move target equals current cluster")
    sizes = s.seq_part_sizes if v.dim == "S" else s.event_part_sizes
    if sizes[src] == 1:
        # moving a sole member is a cluster merge
        return delta_cost_merge(d, m, s, Merge(v.dim, src, v.target))

    marg = s.seq_marginal if v.dim == "S" else s.event_marginal
    counts = d.per_seq_counts if v.dim == "S" else d.per_event_counts
    w = int(counts[v.value])
    axis = 0 if v.dim == "S" else 2
    na, nb = sizes[src], sizes[v.target]
    pa, pb = marg[src], marg[v.target]
    delta = (
        _cluster_prior(pa - w, na - 1)
        + _cluster_prior(pb + w, nb + 1)
        - _cluster_prior(pa, na)
        - _cluster_prior(pb, nb)
    )
    delta += _lf(pa - w) + _lf(pb + w) - _lf(pa) - _lf(pb)
    cell_shift = 0.0
    for key, mass in _value_slice(d, m, v.dim, v.value).items():
        full_src = key[:axis] + (src,) + key[axis:]
        full_dst = key[:axis] + (v.target,) + key[axis:]
        c_src = s.cells.get(full_src, 0)
        c_dst = s.cells.get(full_dst, 0)
        cell_shift += _lf(c_src - mass) - _lf(c_src) + _lf(c_dst + mass) - _lf(c_dst)
    return delta - cell_shift
