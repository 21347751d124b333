"""Synthetic two-regime benchmark: generators, ARI scoring, experiment driver.

Each pattern maps time intervals on [0, 1000] to an allowed event subset of
the 12-letter alphabet. A generated point picks a sequence id uniformly,
a time uniformly, and an event from the pattern's allowed set with
probability 1 - eta (otherwise uniformly from the complement).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .dataset import CatsDataset, Point, from_points
from .gridmodel import GridModel, interval_time_bounds
from .optimizer import OptimizerConfig, vns_optimize

EVENT_ALPHABET = tuple("abcdefghijkl")


@dataclass(frozen=True)
class PatternSpec:
    """Piecewise event regime: interval upper bounds paired with event subsets.

    ``uppers[i]`` is the inclusive upper end of interval i; the first
    interval starts at the domain lower bound (closed), later intervals are
    left-open. ``events[i]`` is the allowed subset on that interval.
    """

    name: str
    uppers: tuple
    events: tuple
    t_min: float = 0.0

    def __post_init__(self):
        if len(self.uppers) != len(self.events):
            raise ValueError("one event subset per interval required")
        if any(b <= a for a, b in zip(self.uppers, self.uppers[1:])):
            raise ValueError("interval bounds must be increasing")

    def interval_index(self, t) -> int:
        return int(np.searchsorted(np.asarray(self.uppers), t, side="left"))

    def allowed(self, t) -> tuple:
        return self.events[self.interval_index(t)]


def default_patterns() -> tuple:
    """The two standard regimes over [0, 1000] and events a..l."""
    m1 = PatternSpec(
        "M1",
        (250.0, 500.0, 750.0, 1000.0),
        (("a", "b", "c"), ("d", "e", "f"), ("g", "h", "i"), ("j", "k", "l")),
    )
    m2 = PatternSpec(
        "M2",
        (100.0, 400.0, 600.0, 1000.0),
        (("j", "k", "l"), ("g", "h", "i"), ("d", "e", "f"), ("a", "b", "c")),
    )
    return m1, m2


@dataclass(frozen=True)
class GroundTruth:
    """Generator-side truth: pattern of each sequence id, event groups, boundaries."""

    seq_pattern: dict  # sequence label -> pattern name
    event_groups: tuple  # tuple of tuples of event labels
    boundaries: tuple  # interior time boundaries (union over patterns)

    def seq_partition(self, labels) -> list:
        return [self.seq_pattern[s] for s in labels]

    def event_partition(self, labels) -> list:
        lookup = {}
        for gi, group in enumerate(self.event_groups):
            for e in group:
                lookup[e] = gi
        return [lookup[e] for e in labels]


def _true_event_groups(patterns) -> tuple:
    """Events are grouped by identical (pattern, interval) membership profiles."""
    alphabet = sorted({e for p in patterns for group in p.events for e in group})
    edges = sorted({u for p in patterns for u in p.uppers})
    profiles: dict = {}
    for e in alphabet:
        profile = tuple(
            e in p.allowed(u) for p in patterns for u in edges
        )
        profiles.setdefault(profile, []).append(e)
    groups = sorted((tuple(v) for v in profiles.values()), key=lambda g: g[0])
    return tuple(groups)


def _true_boundaries(patterns) -> tuple:
    interior = sorted({u for p in patterns for u in p.uppers[:-1]})
    return tuple(float(b) for b in interior)


def generate(patterns, cm: int, n_points: int, eta: float, seed: int,
             time_type: str = "real"):
    """Draw a synthetic dataset; returns (CatsDataset, GroundTruth)."""
    if not (0.0 <= eta < 1.0):
        raise ValueError("eta must be in [0, 1)")
    if cm < 1 or n_points < 1:
        raise ValueError("cm and n_points must be positive")
    if time_type not in ("real", "integer"):
        raise ValueError("time_type must be 'real' or 'integer'")
    patterns = tuple(patterns)
    rng = np.random.default_rng(seed)
    num_ids = cm * len(patterns)
    t_max = max(p.uppers[-1] for p in patterns)
    t_min = min(p.t_min for p in patterns)

    ids = rng.integers(0, num_ids, size=n_points)
    if time_type == "integer":
        times = rng.integers(int(t_min), int(t_max) + 1, size=n_points).astype(np.float64)
    else:
        times = rng.uniform(t_min, t_max, size=n_points)
    noisy = rng.random(n_points) < eta
    picks = rng.random(n_points)

    alphabet = sorted({e for p in patterns for group in p.events for e in group})
    points = []

    for i in range(n_points):
        pat = patterns[int(ids[i]) % len(patterns)]
        allowed = pat.allowed(times[i])
        if noisy[i]:
            pool = [e for e in alphabet if e not in allowed]
        else:
            pool = list(allowed)
        e = pool[int(picks[i] * len(pool))]
        points.append(Point(f"s{int(ids[i])}", float(times[i]), e))

    truth = GroundTruth(
        seq_pattern={f"s{i}": patterns[i % len(patterns)].name for i in range(num_ids)},
        event_groups=_true_event_groups(patterns),
        boundaries=_true_boundaries(patterns),
    )
    return from_points(points), truth


def adjusted_rand_index(p1, p2) -> float:
    """Chance-corrected agreement of two partitions of the same elements."""
    p1 = list(p1)
    p2 = list(p2)
    if len(p1) != len(p2):
        raise ValueError("partitions must cover the same elements")
    n = len(p1)
    if n < 2:
        raise ValueError("need at least 2 elements")
    labels1 = {v: i for i, v in enumerate(dict.fromkeys(p1))}
    labels2 = {v: i for i, v in enumerate(dict.fromkeys(p2))}
    table = np.zeros((len(labels1), len(labels2)), dtype=np.int64)
    for x, y in zip(p1, p2):
        table[labels1[x], labels2[y]] += 1

    index = (table * (table - 1) / 2.0).sum()
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    sum_rows = (rows * (rows - 1) / 2.0).sum()
    sum_cols = (cols * (cols - 1) / 2.0).sum()
    expected = sum_rows * sum_cols / (n * (n - 1) / 2.0)
    maximum = (sum_rows + sum_cols) / 2.0
    if maximum == expected:
        return 1.0 if index == expected else 0.0
    return float((index - expected) / (maximum - expected))


def score_fit(d: CatsDataset, model: GridModel, truth: GroundTruth) -> dict:
    """ARI of both categorical partitions plus boundary recovery error."""
    true_seq = truth.seq_partition(d.seq_labels)
    fitted_seq = [model.seq_assign[i] for i in range(d.n)]
    true_event = truth.event_partition(d.event_labels)
    fitted_event = [model.event_assign[i] for i in range(d.a)]
    ari_seq = adjusted_rand_index(fitted_seq, true_seq) if d.n >= 2 else None
    ari_event = adjusted_rand_index(fitted_event, true_event) if d.a >= 2 else None
    recovered = [hi for _, hi in interval_time_bounds(d, model)[:-1]]
    if truth.boundaries:
        if recovered:
            err = max(
                min(abs(b - r) for r in recovered) for b in truth.boundaries
            )
        else:
            err = max(
                max(abs(b - d.times.min()), abs(b - d.times.max()))
                for b in truth.boundaries
            )
    else:
        err = 0.0
    return {
        "k_S": model.k_s,
        "k_E": model.k_e,
        "k_T": model.k_t,
        "ari_seq": ari_seq,
        "ari_event": ari_event,
        "max_boundary_error": err,
    }


ARI_CURVE_COLUMNS = (
    "cm", "eta", "n_points", "seed", "k_S", "k_E", "k_T",
    "ari_seq", "ari_event", "max_boundary_error", "cost", "runtime_s",
)


def ari_curve(patterns, cm: int, eta_list, n_list, seeds, optimizer_cfg=None,
              time_type: str = "real", out=None) -> list:
    """Fit every (eta, N, seed) cell and tabulate recovery quality.

    Returns the rows as dicts; writes CSV to ``out`` when given. ARI columns
    are empty when the fitted dimension has a single part.
    """
    rows = []
    for eta in eta_list:
        for n_points in n_list:
            for seed in seeds:
                d, truth = generate(patterns, cm, n_points, eta, seed,
                                    time_type=time_type)
                cfg = optimizer_cfg or OptimizerConfig()
                start = time.perf_counter()
                model, _ = vns_optimize(d, cfg)
                runtime = time.perf_counter() - start
                from .cost import cost as cost_fn

                scored = score_fit(d, model, truth)
                row = {
                    "cm": cm,
                    "eta": eta,
                    "n_points": n_points,
                    "seed": seed,
                    **scored,
                    "cost": cost_fn(d, model).total,
                    "runtime_s": runtime,
                }
                if row["k_S"] <= 1:
                    row["ari_seq"] = None
                if row["k_E"] <= 1:
                    row["ari_event"] = None
                rows.append(row)
    if out is not None:
        writer = csv.DictWriter(out, fieldnames=ARI_CURVE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in ARI_CURVE_COLUMNS})
    return rows
