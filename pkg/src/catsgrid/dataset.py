"""Ingestion and encoding of (sequence, time, event) point data.

A dataset is an immutable multiset of triples. Sequence and event labels
are interned to integer codes in first-seen order; that order is the
deterministic tie-break key used everywhere downstream. Time values are
kept as 64-bit reals and points sharing one time value form a tie group,
atomic with respect to interval boundaries.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import DataFormatError


class Point(NamedTuple):
    """One raw observation: sequence id, time value, event label."""

    seq: str
    t: float
    e: str


@dataclass(frozen=True)
class CatsDataset:
    """Encoded, immutable point set with the index structures the search needs.

    Attributes
    ----------
    seq_codes, times, event_codes:
        Per-point arrays in input order (length N).
    seq_labels, event_labels:
        Code -> label tables (first-seen order).
    time_rank:
        Stable permutation sorting points by time.
    group_offsets:
        Tie-group boundaries in rank space: group g covers sorted positions
        ``[group_offsets[g], group_offsets[g+1])``. ``group_offsets[-1] == N``.
    group_of_point:
        Tie-group id per point (input order).
    per_seq_counts, per_event_counts:
        Points per sequence code / event code.
    """

    seq_codes: np.ndarray
    times: np.ndarray
    event_codes: np.ndarray
    seq_labels: tuple
    event_labels: tuple
    time_rank: np.ndarray
    group_offsets: np.ndarray
    group_of_point: np.ndarray
    per_seq_counts: np.ndarray
    per_event_counts: np.ndarray
    source_digest: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.seq_labels)

    @property
    def a(self) -> int:
        return len(self.event_labels)

    @property
    def num_points(self) -> int:
        return int(self.seq_codes.shape[0])

    @property
    def num_groups(self) -> int:
        """Number of distinct time values."""
        return int(self.group_offsets.shape[0] - 1)

    @property
    def seq_to_code(self) -> dict:
        return {s: i for i, s in enumerate(self.seq_labels)}

    @property
    def event_to_code(self) -> dict:
        return {e: i for i, e in enumerate(self.event_labels)}

    def group_sizes(self) -> np.ndarray:
        return np.diff(self.group_offsets)

    def group_times(self) -> np.ndarray:
        """Time value of each tie group, ascending."""
        return self.times[self.time_rank[self.group_offsets[:-1]]]

    def sorted_seq_codes(self) -> np.ndarray:
        return self.seq_codes[self.time_rank]

    def sorted_event_codes(self) -> np.ndarray:
        return self.event_codes[self.time_rank]

    def points_of_seq(self, code: int) -> np.ndarray:
        """Indices (input order) of the points of one sequence."""
        return self._seq_index()[1][self._seq_index()[0][code]:self._seq_index()[0][code + 1]]

    def points_of_event(self, code: int) -> np.ndarray:
        return self._event_index()[1][self._event_index()[0][code]:self._event_index()[0][code + 1]]

    def _seq_index(self):
        cached = self._cache.get("seq")
        if cached is None:
            order = np.argsort(self.seq_codes, kind="stable")
            offsets = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.seq_codes, minlength=self.n), out=offsets[1:])
            cached = (offsets, order)
            self._cache["seq"] = cached
        return cached

    def _event_index(self):
        cached = self._cache.get("event")
        if cached is None:
            order = np.argsort(self.event_codes, kind="stable")
            offsets = np.zeros(self.a + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.event_codes, minlength=self.a), out=offsets[1:])
            cached = (offsets, order)
            self._cache["event"] = cached
        return cached

    def decode(self) -> Iterator[Point]:
        """Yield the input rows back as Points, in input order."""
        for s, t, e in zip(self.seq_codes, self.times, self.event_codes):
            yield Point(self.seq_labels[s], float(t), self.event_labels[e])


def from_points(points: Iterable[Point], source_digest: str = "") -> CatsDataset:
    """Encode an iterable of Points into a CatsDataset."""
    seq_index: dict = {}
    event_index: dict = {}
    seq_codes = []
    event_codes = []
    times = []
    for p in points:
        if not p.seq or not p.e:
            raise DataFormatError("empty sequence or event label")
        t = float(p.t)
        if not math.isfinite(t):
            raise DataFormatError(f"non-finite time value {p.t!r}")
        seq_codes.append(seq_index.setdefault(p.seq, len(seq_index)))
        event_codes.append(event_index.setdefault(p.e, len(event_index)))
        times.append(t)
    if not seq_codes:
        raise DataFormatError("empty input: no data rows")

    seq_arr = np.asarray(seq_codes, dtype=np.int64)
    event_arr = np.asarray(event_codes, dtype=np.int64)
    time_arr = np.asarray(times, dtype=np.float64)
    rank = np.argsort(time_arr, kind="stable")
    sorted_t = time_arr[rank]
    # tie groups: runs of equal time in sorted order
    starts = np.flatnonzero(np.concatenate(([True], sorted_t[1:] != sorted_t[:-1])))
    offsets = np.concatenate((starts, [len(time_arr)])).astype(np.int64)
    group_id_sorted = np.cumsum(np.concatenate(([0], (sorted_t[1:] != sorted_t[:-1]).astype(np.int64))))
    group_of_point = np.empty(len(time_arr), dtype=np.int64)
    group_of_point[rank] = group_id_sorted

    return CatsDataset(
        seq_codes=seq_arr,
        times=time_arr,
        event_codes=event_arr,
        seq_labels=tuple(seq_index),
        event_labels=tuple(event_index),
        time_rank=rank,
        group_offsets=offsets,
        group_of_point=group_of_point,
        per_seq_counts=np.bincount(seq_arr, minlength=len(seq_index)),
        per_event_counts=np.bincount(event_arr, minlength=len(event_index)),
        source_digest=source_digest,
    )


def _detect_delimiter(line: str) -> str:
    return "\t" if "\t" in line else ","


def _is_header(fields) -> bool:
    try:
        float(fields[1])
        return False
    except ValueError:
        return True


def load_dataset(source, *, delimiter: str | None = None) -> CatsDataset:
    """Load a 3-column delimited text file into a CatsDataset.

    ``source`` may be a path, bytes, or a binary file object. Columns are
    ``<sequence><sep><time><sep><event>`` with ``<sep>`` tab or comma
    (auto-detected from the first line unless ``delimiter`` is given). A
    header line is skipped when its time field does not parse as a number.
    Rows are kept with multiplicity.
    """
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
    digest = hashlib.sha256(raw).hexdigest()

    text = io.StringIO(raw.decode("utf-8"))
    points = []
    sep = delimiter
    skipped_header = None
    for lineno, line in enumerate(text, start=1):
        line = line.rstrip("\r\n")
        if not line:
            continue
        if sep is None:
            sep = _detect_delimiter(line)
        fields = line.split(sep)
        if len(fields) != 3:
            raise DataFormatError(
                f"expected 3 fields separated by {sep!r}, got {len(fields)}", line=lineno
            )
        if lineno == 1 and _is_header(fields):
            skipped_header = fields
            continue
        try:
            t = float(fields[1])
        except ValueError:
            raise DataFormatError(f"time field {fields[1]!r} is not a number", line=lineno)
        if not math.isfinite(t):
            raise DataFormatError(f"time field {fields[1]!r} is not finite", line=lineno)
        if not fields[0] or not fields[2]:
            raise DataFormatError("empty sequence or event label", line=lineno)
        points.append(Point(fields[0], t, fields[2]))
    if not points:
        if skipped_header is not None:
            # the lone header-looking line was really a malformed data row
            raise DataFormatError(
                f"time field {skipped_header[1]!r} is not a number", line=1
            )
        raise DataFormatError("empty input: no data rows")
    return from_points(points, source_digest=digest)


@dataclass(frozen=True)
class MarginalStats:
    """Marginal summaries: activity ECDFs and the time histogram.

    ``seq_ecdf_x``/``seq_ecdf_y`` give the empirical cumulative fraction of
    sequences having at most x points (same for events). The time histogram
    uses integer buckets when all times are integral, else equal-width bins.
    """

    seq_ecdf_x: np.ndarray
    seq_ecdf_y: np.ndarray
    event_ecdf_x: np.ndarray
    event_ecdf_y: np.ndarray
    time_bucket_edges: np.ndarray
    time_bucket_counts: np.ndarray

    def seq_cdf(self, x: float) -> float:
        """Fraction of sequences with at most x points."""
        return float(self.seq_ecdf_y[np.searchsorted(self.seq_ecdf_x, x, side="right") - 1]) \
            if np.searchsorted(self.seq_ecdf_x, x, side="right") > 0 else 0.0

    def event_cdf(self, x: float) -> float:
        return float(self.event_ecdf_y[np.searchsorted(self.event_ecdf_x, x, side="right") - 1]) \
            if np.searchsorted(self.event_ecdf_x, x, side="right") > 0 else 0.0


def _ecdf(counts: np.ndarray):
    xs, freq = np.unique(counts, return_counts=True)
    return xs.astype(np.float64), np.cumsum(freq) / counts.shape[0]


def marginal_stats(d: CatsDataset) -> MarginalStats:
    """Compute the three marginal summaries of a dataset."""
    sx, sy = _ecdf(d.per_seq_counts)
    ex, ey = _ecdf(d.per_event_counts)
    t = d.times
    if np.all(t == np.floor(t)):
        lo, hi = int(t.min()), int(t.max())
        edges = np.arange(lo, hi + 2, dtype=np.float64)
        counts = np.bincount((t - lo).astype(np.int64), minlength=hi - lo + 1)
    else:
        nbins = min(50, max(1, d.num_groups))
        counts, edges = np.histogram(t, bins=nbins)
    return MarginalStats(sx, sy, ex, ey, edges, counts)
