"""Search for a low-cost grid model.

The strategy follows the scalable recipe for data grids: random
initialization capped at about sqrt(N) parts per dimension, greedy
bottom-up merging driven by incremental cost deltas, a move-based
post-optimization (value reassignments and boundary shifts), and a
multi-start outer loop (VNS) keeping the best model across rounds.

The engine keeps a dense cell tensor plus pairwise interaction caches so
that every candidate merge of a step is scored with table lookups instead
of recomputing the criterion. Only cells where both candidate parts are
nonzero contribute to an interaction, which keeps sparse data cheap.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .cost import log_binomial, log_partition_count
from .dataset import CatsDataset
from .gridmodel import GridModel, cell_tensor


@dataclass
class OptimizerConfig:
    """Knobs of the search; defaults match the evaluation protocol."""

    vns_rounds: int = 10
    seed: int = 0
    max_initial_parts: int | None = None  # None: ceil(sqrt(N))
    time_budget: float | None = None  # seconds; checked between chains
    tolerance: float = 1e-9
    workers: int = 1

    def __post_init__(self):
        if self.vns_rounds < 1:
            raise ValueError("vns_rounds must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.max_initial_parts is not None and self.max_initial_parts < 1:
            raise ValueError("max_initial_parts must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class TraceStep:
    round_index: int
    step: int
    action: str
    delta: float
    cost: float
    elapsed: float


@dataclass
class OptimizationTrace:
    """Per-step commit records plus the best cost of each round."""

    steps: list = field(default_factory=list)
    round_best: list = field(default_factory=list)

    def to_csv(self, fh) -> None:
        fh.write("round,step,action,delta,cost,elapsed_s\n")
        for s in self.steps:
            fh.write(
                f"{s.round_index},{s.step},{s.action},{s.delta:.9g},"
                f"{s.cost:.9g},{s.elapsed:.4f}\n"
            )


def _lf_table(d: CatsDataset) -> np.ndarray:
    """ln(x!) lookup covering every count or marginal the engine can form.

    Sized for pairwise sums (2N plus part sizes), so no gather can go out
    of range.
    """
    size = 2 * (d.num_points + max(d.n, d.a) + 2)
    cached = d._cache.get("lf")
    if cached is None or cached.shape[0] < size:
        cached = gammaln(np.arange(size, dtype=np.float64) + 1.0)
        d._cache["lf"] = cached
    return cached


def _pairwise(lf: np.ndarray, x: np.ndarray) -> np.ndarray:
    """All-pairs interaction of rows of x: sum_m ln C(x_i + x_j, x_i)."""
    rowsum = lf[x].sum(axis=1)
    out = lf[x[:, None, :] + x[None, :, :]].sum(axis=2)
    out -= rowsum[:, None]
    out -= rowsum[None, :]
    return out


class _Engine:
    """Mutable search state for one dataset and one working model."""

    def __init__(self, d: CatsDataset, model: GridModel, tolerance: float,
                 trace: OptimizationTrace | None = None, round_index: int = 0,
                 progress=None, t0: float | None = None):
        self.d = d
        self.tol = tolerance
        self.lf = _lf_table(d)
        self.trace = trace
        self.round_index = round_index
        self.progress = progress
        self.t0 = time.perf_counter() if t0 is None else t0

        self.N = d.num_points
        self.n = d.n
        self.a = d.a
        self.sorted_seq = d.sorted_seq_codes()
        self.sorted_event = d.sorted_event_codes()
        self.sum_lf_seq_values = float(self.lf[d.per_seq_counts].sum())
        self.sum_lf_event_values = float(self.lf[d.per_event_counts].sum())
        self.header = math.log(self.n) + math.log(self.a) + math.log(self.N)

        self.C = cell_tensor(d, model).astype(np.int64)
        self.seq_of_value = np.asarray(model.seq_assign, dtype=np.int64).copy()
        self.event_of_value = np.asarray(model.event_assign, dtype=np.int64).copy()
        self.cuts = np.asarray(model.time_cuts, dtype=np.int64).copy()
        self.NS = self.C.sum(axis=(1, 2))
        self.NT = self.C.sum(axis=(0, 2))
        self.NE = self.C.sum(axis=(0, 1))
        self.nS = np.bincount(self.seq_of_value, minlength=self.C.shape[0])
        self.nE = np.bincount(self.event_of_value, minlength=self.C.shape[2])
        self.minS = self._first_codes(self.seq_of_value, self.C.shape[0])
        self.minE = self._first_codes(self.event_of_value, self.C.shape[2])
        self.PS = None
        self.PE = None
        self.LT = None
        self.total = self.total_cost()

    @staticmethod
    def _first_codes(assign: np.ndarray, k: int) -> np.ndarray:
        out = np.full(k, assign.shape[0], dtype=np.int64)
        np.minimum.at(out, assign, np.arange(assign.shape[0]))
        return out

    # -- full criterion from the current arrays ------------------------------

    def total_cost(self) -> float:
        lf = self.lf
        k_s, k_t, k_e = self.C.shape
        k = k_s * k_t * k_e
        total = self.header
        total += log_partition_count(self.n, k_s) + log_partition_count(self.a, k_e)
        total += log_binomial(self.N + k - 1, k - 1)
        total += float((lf[self.NS + self.nS - 1] - lf[self.NS] - lf[self.nS - 1]).sum())
        total += float((lf[self.NE + self.nE - 1] - lf[self.NE] - lf[self.nE - 1]).sum())
        total += float(lf[self.N] - lf[self.C].sum())
        total += float(lf[self.NS].sum()) - self.sum_lf_seq_values
        total += float(lf[self.NE].sum()) - self.sum_lf_event_values
        total += float(lf[self.NT].sum())
        return total

    def snapshot(self) -> GridModel:
        return GridModel(
            tuple(int(c) for c in self.seq_of_value),
            tuple(int(c) for c in self.event_of_value),
            tuple(int(c) for c in self.cuts),
        )

    def _record(self, action: str, delta: float) -> None:
        elapsed = time.perf_counter() - self.t0
        if self.trace is not None:
            self.trace.steps.append(
                TraceStep(self.round_index, len(self.trace.steps), action,
                          delta, self.total, elapsed)
            )
        if self.progress is not None:
            step = len(self.trace.steps) if self.trace is not None else 0
            self.progress(step, self.total, elapsed)

    # -- pair caches ----------------------------------------------------------

    def _build_caches(self) -> None:
        lf = self.lf
        k_s, k_t, k_e = self.C.shape
        si, ti, ei = np.nonzero(self.C)
        cnt = self.C[si, ti, ei]
        self.PS = self._grouped_pairs(si, ti * k_e + ei, cnt, k_s)
        self.PE = self._grouped_pairs(ei, si * k_t + ti, cnt, k_e)
        x = np.swapaxes(self.C, 0, 1).reshape(k_t, -1)
        self.LT = (lf[x[:-1] + x[1:]] - lf[x[:-1]] - lf[x[1:]]).sum(axis=1)

    def _grouped_pairs(self, rows, cols, cnt, k) -> np.ndarray:
        """Pair interactions accumulated column by column (sparse aware)."""
        lf = self.lf
        out = np.zeros((k, k))
        order = np.argsort(cols, kind="stable")
        cs = cols[order]
        bounds = np.flatnonzero(np.concatenate(([True], cs[1:] != cs[:-1], [True])))
        for s, e in zip(bounds[:-1], bounds[1:]):
            if e - s < 2:
                continue
            idx = order[s:e]
            r = rows[idx]
            c = cnt[idx]
            v = lf[c[:, None] + c[None, :]] - lf[c][:, None] - lf[c][None, :]
            np.fill_diagonal(v, 0.0)
            out[np.ix_(r, r)] += v
        return out

    # -- merge scan -----------------------------------------------------------

    def _cluster_merge_deltas(self, marg, sizes, pair_cache, m_total, k_dim):
        lf = self.lf
        k_s, k_t, k_e = self.C.shape
        k = k_s * k_t * k_e
        k2 = k // k_dim * (k_dim - 1)
        own = lf[marg + sizes - 1] - lf[marg] - lf[sizes - 1] + lf[marg]
        m2 = marg[:, None] + marg[None, :]
        s2 = sizes[:, None] + sizes[None, :]
        out = lf[m2 + s2 - 1] - lf[m2] - lf[s2 - 1] + lf[m2]
        out -= own[:, None]
        out -= own[None, :]
        out -= pair_cache
        g = log_partition_count(m_total, k_dim - 1) - log_partition_count(m_total, k_dim)
        g += log_binomial(self.N + k2 - 1, k2 - 1) - log_binomial(self.N + k - 1, k - 1)
        return out + g

    def _interval_merge_deltas(self):
        lf = self.lf
        k_s, k_t, k_e = self.C.shape
        k = k_s * k_t * k_e
        k2 = k_s * k_e * (k_t - 1)
        out = lf[self.NT[:-1] + self.NT[1:]] - lf[self.NT[:-1]] - lf[self.NT[1:]] - self.LT
        g = log_binomial(self.N + k2 - 1, k2 - 1) - log_binomial(self.N + k - 1, k - 1)
        return out + g

    def _scan_best_merge(self, require_improving: bool = True):
        k_s, k_t, k_e = self.C.shape
        deltas = {}
        if k_s >= 2:
            deltas["S"] = self._cluster_merge_deltas(self.NS, self.nS, self.PS, self.n, k_s)
        if k_t >= 2:
            deltas["T"] = self._interval_merge_deltas()
        if k_e >= 2:
            deltas["E"] = self._cluster_merge_deltas(self.NE, self.nE, self.PE, self.a, k_e)
        gmin = math.inf
        for dim, dd in deltas.items():
            if dim == "T":
                gmin = min(gmin, float(dd.min()))
            else:
                iu = np.triu_indices(dd.shape[0], k=1)
                gmin = min(gmin, float(dd[iu].min()))
        if not deltas or (require_improving and gmin >= -self.tol):
            return None
        # canonical winner: dimension order S, T, E, then lowest part indices
        for dim in ("S", "T", "E"):
            dd = deltas.get(dim)
            if dd is None:
                continue
            if dim == "T":
                hits = np.flatnonzero(dd <= gmin + self.tol)
                if hits.size:
                    j = int(hits[0])
                    return dim, j, j + 1, float(dd[j])
            else:
                mask = np.triu(dd <= gmin + self.tol, k=1)
                hits = np.argwhere(mask)
                if hits.size:
                    a, b = (int(x) for x in hits[0])
                    return dim, a, b, float(dd[a, b])
        return None

    # -- merge commits ----------------------------------------------------------

    def _canonicalize(self, axis: int) -> None:
        mins = self.minS if axis == 0 else self.minE
        perm = np.argsort(mins)
        if np.array_equal(perm, np.arange(perm.shape[0])):
            return
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.shape[0])
        self.C = np.ascontiguousarray(np.take(self.C, perm, axis=axis))
        if axis == 0:
            self.NS = self.NS[perm]
            self.nS = self.nS[perm]
            self.minS = mins[perm]
            self.seq_of_value = inv[self.seq_of_value]
            if self.PS is not None:
                self.PS = self.PS[np.ix_(perm, perm)]
        else:
            self.NE = self.NE[perm]
            self.nE = self.nE[perm]
            self.minE = mins[perm]
            self.event_of_value = inv[self.event_of_value]
            if self.PE is not None:
                self.PE = self.PE[np.ix_(perm, perm)]

    def _refresh_pair_row(self, cache: np.ndarray, axis: int, part: int) -> None:
        lf = self.lf
        r = np.moveaxis(self.C, axis, 0).reshape(self.C.shape[axis], -1)
        row = (lf[r + r[part][None, :]] - lf[r] - lf[r[part]][None, :]).sum(axis=1)
        cache[part, :] = row
        cache[:, part] = row
        cache[part, part] = 0.0

    def _adjacent_lt(self, j: int) -> float:
        lf = self.lf
        x, y = self.C[:, j, :], self.C[:, j + 1, :]
        return float((lf[x + y] - lf[x] - lf[y]).sum())

    def commit_merge(self, dim: str, a: int, b: int, delta: float) -> None:
        lf = self.lf
        if dim == "T":
            sa = self.C[:, a, :].copy()
            sb = self.C[:, b, :].copy()
            sab = sa + sb
            if self.PS is not None:
                self.PS += _pairwise(lf, sab) - _pairwise(lf, sa) - _pairwise(lf, sb)
                self.PE += _pairwise(lf, sab.T) - _pairwise(lf, sa.T) - _pairwise(lf, sb.T)
            self.C[:, a, :] += self.C[:, b, :]
            self.C = np.ascontiguousarray(np.delete(self.C, b, axis=1))
            self.NT[a] += self.NT[b]
            self.NT = np.delete(self.NT, b)
            self.cuts = np.delete(self.cuts, a)
            if self.LT is not None:
                self.LT = np.delete(self.LT, a)
                for j in (a - 1, a):
                    if 0 <= j < self.LT.shape[0]:
                        self.LT[j] = self._adjacent_lt(j)
        elif dim == "S":
            sa = self.C[a].copy()  # (k_t, k_e)
            sb = self.C[b].copy()
            sab = sa + sb
            if self.PE is not None:
                self.PE += _pairwise(lf, sab.T) - _pairwise(lf, sa.T) - _pairwise(lf, sb.T)
            if self.LT is not None:
                for x, sign in ((sab, 1.0), (sa, -1.0), (sb, -1.0)):
                    h = lf[x[:-1] + x[1:]] - lf[x[:-1]] - lf[x[1:]]
                    self.LT += sign * h.sum(axis=1)
            self.C[a] += self.C[b]
            self.C = np.ascontiguousarray(np.delete(self.C, b, axis=0))
            self.NS[a] += self.NS[b]
            self.NS = np.delete(self.NS, b)
            self.nS[a] += self.nS[b]
            self.nS = np.delete(self.nS, b)
            self.minS[a] = min(self.minS[a], self.minS[b])
            self.minS = np.delete(self.minS, b)
            self.seq_of_value[self.seq_of_value == b] = a
            self.seq_of_value[self.seq_of_value > b] -= 1
            if self.PS is not None:
                self.PS = np.delete(np.delete(self.PS, b, 0), b, 1)
                self._refresh_pair_row(self.PS, 0, a)
            self._canonicalize(0)
        else:
            sa = self.C[:, :, a].copy()  # (k_s, k_t)
            sb = self.C[:, :, b].copy()
            sab = sa + sb
            if self.PS is not None:
                self.PS += _pairwise(lf, sab) - _pairwise(lf, sa) - _pairwise(lf, sb)
            if self.LT is not None:
                for x, sign in ((sab, 1.0), (sa, -1.0), (sb, -1.0)):
                    h = lf[x[:, :-1] + x[:, 1:]] - lf[x[:, :-1]] - lf[x[:, 1:]]
                    self.LT += sign * h.sum(axis=0)
            self.C[:, :, a] += self.C[:, :, b]
            self.C = np.ascontiguousarray(np.delete(self.C, b, axis=2))
            self.NE[a] += self.NE[b]
            self.NE = np.delete(self.NE, b)
            self.nE[a] += self.nE[b]
            self.nE = np.delete(self.nE, b)
            self.minE[a] = min(self.minE[a], self.minE[b])
            self.minE = np.delete(self.minE, b)
            self.event_of_value[self.event_of_value == b] = a
            self.event_of_value[self.event_of_value > b] -= 1
            if self.PE is not None:
                self.PE = np.delete(np.delete(self.PE, b, 0), b, 1)
                self._refresh_pair_row(self.PE, 2, a)
            self._canonicalize(2)
        self.total += delta

    def greedy(self) -> None:
        """Best-merge-first descent until no merge improves the cost."""
        self._build_caches()
        while True:
            found = self._scan_best_merge()
            if found is None:
                break
            dim, a, b, delta = found
            self.commit_merge(dim, a, b, delta)
            self._record(f"merge:{dim}:{a}+{b}", delta)

    # -- move-based post-optimization ---------------------------------------

    def _value_move_pass(self, dim: str) -> bool:
        lf = self.lf
        d = self.d
        changed = False
        ivl_of_group = np.searchsorted(self.cuts, d.group_offsets[:-1], side="right")
        num_values = self.n if dim == "S" else self.a
        for v in range(num_values):
            k_s, k_t, k_e = self.C.shape
            k_dim = k_s if dim == "S" else k_e
            if k_dim < 2:
                return changed
            if dim == "S":
                assign, marg, sizes = self.seq_of_value, self.NS, self.nS
                m_total, counts = self.n, d.per_seq_counts
                pts = d.points_of_seq(v)
                flat = (
                    ivl_of_group[d.group_of_point[pts]] * k_e
                    + self.event_of_value[d.event_codes[pts]]
                )
                r = self.C.reshape(k_s, -1)
            else:
                assign, marg, sizes = self.event_of_value, self.NE, self.nE
                m_total, counts = self.a, d.per_event_counts
                pts = d.points_of_event(v)
                flat = (
                    self.seq_of_value[d.seq_codes[pts]] * k_t
                    + ivl_of_group[d.group_of_point[pts]]
                )
                r = self.C.reshape(-1, k_e).T
            src = int(assign[v])
            cols, w = np.unique(flat, return_counts=True)
            g = r[:, cols]
            add_cells = (lf[g + w[None, :]] - lf[g]).sum(axis=1)
            wv = int(counts[v])
            own = lf[marg + sizes - 1] - lf[marg] - lf[sizes - 1] + lf[marg]
            if sizes[src] == 1:
                # moving a sole member is a cluster merge
                k = k_s * k_t * k_e
                k2 = k // k_dim * (k_dim - 1)
                g_dim = log_partition_count(m_total, k_dim - 1) - log_partition_count(
                    m_total, k_dim
                )
                g_dim += log_binomial(self.N + k2 - 1, k2 - 1) - log_binomial(
                    self.N + k - 1, k - 1
                )
                m2 = marg + marg[src]
                s2 = sizes + sizes[src]
                dvec = lf[m2 + s2 - 1] - lf[m2] - lf[s2 - 1] + lf[m2]
                dvec -= own
                dvec -= own[src]
                dvec -= add_cells - float(lf[w].sum())
                dvec += g_dim
            else:
                rm_cells = float((lf[g[src] - w] - lf[g[src]]).sum())
                rm = (
                    float(lf[marg[src] - wv + sizes[src] - 2]
                          - lf[marg[src] - wv] - lf[sizes[src] - 2]
                          + lf[marg[src] - wv])
                    - float(own[src])
                    - rm_cells
                )
                dvec = (
                    lf[marg + wv + sizes] - lf[marg + wv] - lf[sizes] + lf[marg + wv]
                )
                dvec -= own
                dvec -= add_cells
                dvec += rm
            dvec[src] = math.inf
            best = float(dvec.min())
            if best >= -self.tol:
                continue
            tgt = int(np.flatnonzero(dvec <= best + self.tol)[0])
            self._apply_value_move(dim, v, src, tgt, cols, w, wv, float(dvec[tgt]))
            changed = True
        return changed

    def _apply_value_move(self, dim, v, src, tgt, cols, w, wv, delta) -> None:
        k_s, k_t, k_e = self.C.shape
        if dim == "S":
            r = self.C.reshape(k_s, -1)
            r[src, cols] -= w
            r[tgt, cols] += w
            self.NS[src] -= wv
            self.NS[tgt] += wv
            self.nS[src] -= 1
            self.nS[tgt] += 1
            self.seq_of_value[v] = tgt
            if self.minS[tgt] > v:
                self.minS[tgt] = v
            if self.nS[src] == 0:
                self.C = np.ascontiguousarray(np.delete(self.C, src, axis=0))
                self.NS = np.delete(self.NS, src)
                self.nS = np.delete(self.nS, src)
                self.minS = np.delete(self.minS, src)
                self.seq_of_value[self.seq_of_value > src] -= 1
            elif self.minS[src] == v:
                self.minS[src] = int(np.flatnonzero(self.seq_of_value == src).min())
            self._canonicalize(0)
        else:
            r = self.C.reshape(-1, k_e)
            r[cols, src] -= w
            r[cols, tgt] += w
            self.NE[src] -= wv
            self.NE[tgt] += wv
            self.nE[src] -= 1
            self.nE[tgt] += 1
            self.event_of_value[v] = tgt
            if self.minE[tgt] > v:
                self.minE[tgt] = v
            if self.nE[src] == 0:
                self.C = np.ascontiguousarray(np.delete(self.C, src, axis=2))
                self.NE = np.delete(self.NE, src)
                self.nE = np.delete(self.nE, src)
                self.minE = np.delete(self.minE, src)
                self.event_of_value[self.event_of_value > src] -= 1
            elif self.minE[src] == v:
                self.minE[src] = int(np.flatnonzero(self.event_of_value == src).min())
            self._canonicalize(2)
        self.total += delta
        self._record(f"move:{dim}:{v}", delta)

    def _boundary_shift_pass(self) -> bool:
        lf = self.lf
        d = self.d
        changed = False
        k_s, k_t, k_e = self.C.shape
        if k_t < 2:
            return False
        sp = self.seq_of_value[self.sorted_seq]
        ep = self.event_of_value[self.sorted_event]
        window = math.ceil(math.sqrt(self.N / k_t))
        all_bounds = d.group_offsets
        for i in range(self.cuts.shape[0]):
            pos = int(self.cuts[i])
            lo = int(self.cuts[i - 1]) if i > 0 else 0
            hi = int(self.cuts[i + 1]) if i + 1 < self.cuts.shape[0] else self.N
            lo_rank = max(lo + 1, pos - window)
            hi_rank = min(hi - 1, pos + window)
            cands = all_bounds[
                (all_bounds >= lo_rank) & (all_bounds <= hi_rank) & (all_bounds != pos)
            ]
            if cands.size == 0:
                continue
            best_delta = math.inf
            best = None
            for cand in cands:
                cand = int(cand)
                if cand > pos:
                    span = slice(pos, cand)
                    dst, srcj = i, i + 1
                else:
                    span = slice(cand, pos)
                    dst, srcj = i + 1, i
                flat = sp[span] * k_e + ep[span]
                uf, cnt = np.unique(flat, return_counts=True)
                s_idx, e_idx = uf // k_e, uf % k_e
                moved = span.stop - span.start
                c_src = self.C[s_idx, srcj, e_idx]
                c_dst = self.C[s_idx, dst, e_idx]
                delta = float(
                    lf[self.NT[dst] + moved] + lf[self.NT[srcj] - moved]
                    - lf[self.NT[i]] - lf[self.NT[i + 1]]
                )
                delta -= float(
                    (lf[c_src - cnt] - lf[c_src]).sum()
                    + (lf[c_dst + cnt] - lf[c_dst]).sum()
                )
                if delta < best_delta - self.tol:
                    best_delta = delta
                    best = (cand, s_idx, e_idx, cnt, srcj, dst, moved)
            if best is None or best_delta >= -self.tol:
                continue
            cand, s_idx, e_idx, cnt, srcj, dst, moved = best
            self.C[s_idx, srcj, e_idx] -= cnt
            self.C[s_idx, dst, e_idx] += cnt
            self.NT[srcj] -= moved
            self.NT[dst] += moved
            self.cuts[i] = cand
            self.total += best_delta
            self._record(f"shift:{i}->{cand}", best_delta)
            changed = True
        return changed

    def post_optimize(self) -> None:
        """Cycle value moves and boundary shifts until a full cycle is quiet."""
        while True:
            changed = self._value_move_pass("S")
            changed |= self._boundary_shift_pass()
            changed |= self._value_move_pass("E")
            if not changed:
                break


# -- public operations --------------------------------------------------------


def build_initial_model(d: CatsDataset, cfg: OptimizerConfig, rng: np.random.Generator,
                        cap: int | None = None) -> GridModel:
    """Random model with at most ``cap`` (default about sqrt(N)) parts per dimension.

    Sequences and events are dealt so that no cluster is empty; time is cut
    into equal-frequency rank intervals on tie-group boundaries.
    """
    if cap is None:
        cap = cfg.max_initial_parts or math.ceil(math.sqrt(d.num_points))
    cap = max(1, cap)

    def random_assign(count):
        k = min(count, cap)
        assign = np.empty(count, dtype=np.int64)
        perm = rng.permutation(count)
        assign[perm[:k]] = np.arange(k)
        if count > k:
            assign[perm[k:]] = rng.integers(0, k, size=count - k)
        return tuple(int(x) for x in assign)

    seq_assign = random_assign(d.n)
    event_assign = random_assign(d.a)

    bounds = d.group_offsets[1:-1]
    k_t = min(d.num_groups, cap)
    cuts: list = []
    if k_t > 1 and bounds.size:
        targets = (np.arange(1, k_t) * d.num_points) // k_t
        idx = np.clip(np.searchsorted(bounds, targets), 0, bounds.size - 1)
        cuts = sorted(set(int(bounds[i]) for i in idx))
    return GridModel(seq_assign, event_assign, tuple(cuts))


def greedy_merge_optimize(d: CatsDataset, m0: GridModel, cfg: OptimizerConfig,
                          progress=None):
    """Run the greedy merge descent from ``m0``; returns (model, trace)."""
    trace = OptimizationTrace()
    eng = _Engine(d, m0, cfg.tolerance, trace=trace, progress=progress)
    eng.greedy()
    trace.round_best.append((0, eng.total))
    return eng.snapshot(), trace


def post_optimize(d: CatsDataset, m: GridModel, cfg: OptimizerConfig) -> GridModel:
    """Value-move / boundary-shift descent; never increases the cost."""
    eng = _Engine(d, m, cfg.tolerance)
    eng.post_optimize()
    return eng.snapshot()


def _round_cap(base: int, round_index: int) -> int:
    """Initial part cap for one round: the base scale, a doubled scale, then
    geometrically coarser starts. Coarse random starts let value moves sort
    heavily noisy data that defeats pairwise merges from fine starts."""
    ladder = 2 + max(1, int(math.log2(base)) if base >= 2 else 1)
    m = round_index % ladder
    if m == 0:
        return base
    if m == 1:
        return 2 * base
    return max(2, base >> (m - 1))


def _run_chain(d: CatsDataset, cfg: OptimizerConfig, round_index: int,
               lock: threading.Lock, progress, t0: float):
    base = cfg.max_initial_parts or math.ceil(math.sqrt(d.num_points))
    cap = _round_cap(base, round_index)
    rng = np.random.default_rng([cfg.seed, round_index])
    m0 = build_initial_model(d, cfg, rng, cap=cap)
    local = OptimizationTrace()

    def hooked(step, cost_val, elapsed):
        with lock:
            progress(step, cost_val, elapsed)

    eng = _Engine(d, m0, cfg.tolerance, trace=local, round_index=round_index,
                  progress=hooked if progress else None, t0=t0)
    eng.greedy()
    eng.post_optimize()
    return round_index, eng.snapshot(), eng.total_cost(), local


def vns_optimize(d: CatsDataset, cfg: OptimizerConfig, progress=None):
    """Multi-start search: independent seeded chains, best model wins.

    Rounds draw initial part caps from a ladder spanning sqrt(N), 2*sqrt(N)
    and geometrically coarser scales, diversifying the starting
    neighborhoods. A time budget is honored by finishing the chains already
    running and skipping the rest. The result is deterministic for a fixed
    (dataset, config, seed), independent of the worker count, and never
    costs more than the single-cell model.
    """
    t0 = time.perf_counter()
    trace = OptimizationTrace()
    lock = threading.Lock()
    results = {}

    rounds = list(range(cfg.vns_rounds))
    if cfg.workers == 1:
        for r in rounds:
            results[r] = _run_chain(d, cfg, r, lock, progress, t0)
            if cfg.time_budget is not None and time.perf_counter() - t0 > cfg.time_budget:
                break
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            pending = rounds
            while pending:
                wave, pending = pending[: cfg.workers], pending[cfg.workers:]
                for res in pool.map(
                    lambda rr: _run_chain(d, cfg, rr, lock, progress, t0), wave
                ):
                    results[res[0]] = res
                if cfg.time_budget is not None and time.perf_counter() - t0 > cfg.time_budget:
                    break

    best = None
    for r in sorted(results):
        _, model, cost_val, local = results[r]
        trace.steps.extend(local.steps)
        trace.round_best.append((r, cost_val))
        if best is None or cost_val < best[1] - cfg.tolerance:
            best = (model, cost_val, r)
    # the single-cell model is always a candidate, so the winner never
    # costs more than it
    null = GridModel((0,) * d.n, (0,) * d.a, ())
    null_cost = _Engine(d, null, cfg.tolerance).total
    if null_cost < best[1] - cfg.tolerance:
        best = (null, null_cost, -1)
    return best[0], trace
