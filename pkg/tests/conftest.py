import numpy as np
import pytest

import catsgrid as cg


@pytest.fixture
def four_point_dataset():
    """n=2, a=2, N=4; each sequence and each event holds 2 points."""
    return cg.load_dataset(b"s1,1,A\ns1,2,B\ns2,3,A\ns2,4,B\n")


@pytest.fixture
def tiny3():
    return cg.load_dataset(b"s1,10.0,A\ns1,20.0,B\ns2,10.0,A\n")


def make_toy_rows(seed=7, per_seq=50, coarse_times=False):
    """Toy scenario: 4 sequences, 4 events, regime flip at t=50.

    S1/S2 emit A,B up to 50 then C,D; S3/S4 do the opposite.
    ``coarse_times`` restricts t to multiples of 10 (small enumeration grids).
    """
    rng = np.random.default_rng(seed)
    rows = []
    for sid in ("S1", "S2", "S3", "S4"):
        for _ in range(per_seq):
            if coarse_times:
                t = int(rng.integers(1, 11)) * 10
            else:
                t = int(rng.integers(1, 101))
            early = t <= 50
            ab = sid in ("S1", "S2")
            if ab == early:
                ev = ("A", "B")[rng.integers(0, 2)]
            else:
                ev = ("C", "D")[rng.integers(0, 2)]
            rows.append(f"{sid},{t},{ev}")
    return "\n".join(rows) + "\n"


def make_toy_dataset(seed=7, per_seq=50, coarse_times=False):
    return cg.load_dataset(make_toy_rows(seed, per_seq, coarse_times).encode())


def make_random_dataset(rng, n=6, a=5, num_points=200, max_time=20):
    pts = [
        cg.Point(
            f"s{rng.integers(0, n)}",
            float(rng.integers(0, max_time)),
            f"e{rng.integers(0, a)}",
        )
        for _ in range(num_points)
    ]
    return cg.from_points(pts)


def make_random_model(rng, d, max_parts=4):
    seq_assign = tuple(int(x) for x in rng.integers(0, min(d.n, max_parts), size=d.n))
    event_assign = tuple(int(x) for x in rng.integers(0, min(d.a, max_parts), size=d.a))
    bounds = d.group_offsets[1:-1]
    k_t = int(rng.integers(1, min(d.num_groups, max_parts) + 1))
    cuts = ()
    if k_t > 1 and bounds.size:
        take = rng.choice(bounds.size, size=min(k_t - 1, bounds.size), replace=False)
        cuts = tuple(int(bounds[i]) for i in sorted(take))
    return cg.GridModel(seq_assign, event_assign, cuts)
