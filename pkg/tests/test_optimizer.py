import io
import itertools

import numpy as np
import pytest

import catsgrid as cg
from catsgrid.optimizer import _round_cap

from conftest import make_toy_dataset, make_random_dataset


def scan_all_merges(d, m, s):
    """Exhaustive candidate list via the public incremental delta."""
    out = []
    for a, b in itertools.combinations(range(m.k_s), 2):
        out.append(("S", a, b, cg.delta_cost_merge(d, m, s, cg.Merge("S", a, b))))
    for j in range(m.k_t - 1):
        out.append(("T", j, j + 1, cg.delta_cost_merge(d, m, s, cg.Merge("T", j, j + 1))))
    for a, b in itertools.combinations(range(m.k_e), 2):
        out.append(("E", a, b, cg.delta_cost_merge(d, m, s, cg.Merge("E", a, b))))
    return out


def test_initial_model_respects_caps():
    d = cg.load_dataset(b"s1,1,A\ns2,2,B\ns3,3,C\ns4,4,D\n")
    cfg = cg.OptimizerConfig(max_initial_parts=2)
    m = cg.build_initial_model(d, cfg, np.random.default_rng(0))
    assert m.k_s <= 2 and m.k_e <= 2 and m.k_t <= 2
    assert m.k_s >= 1 and m.k_t >= 1


def test_initial_model_deterministic():
    rng = np.random.default_rng(100)
    d = make_random_dataset(rng, n=12, a=8, num_points=300)
    cfg = cg.OptimizerConfig(seed=3)
    m1 = cg.build_initial_model(d, cfg, np.random.default_rng(77))
    m2 = cg.build_initial_model(d, cfg, np.random.default_rng(77))
    assert m1 == m2


def test_initial_model_single_sequence():
    d = cg.load_dataset(b"only,1,A\nonly,2,B\nonly,3,A\n")
    cfg = cg.OptimizerConfig(max_initial_parts=5)
    m = cg.build_initial_model(d, cfg, np.random.default_rng(1))
    assert m.k_s == 1


def test_initial_model_no_empty_parts():
    rng = np.random.default_rng(8)
    d = make_random_dataset(rng, n=9, a=7, num_points=120)
    cfg = cg.OptimizerConfig()
    for seed in range(5):
        m = cg.build_initial_model(d, cfg, np.random.default_rng(seed))
        assert min(np.bincount(m.seq_assign)) >= 1
        assert min(np.bincount(m.event_assign)) >= 1
        assert min(np.diff((0,) + m.time_cuts + (d.num_points,))) >= 1


def test_greedy_on_null_model_is_identity(four_point_dataset):
    d = four_point_dataset
    m0 = cg.null_model(d)
    m1, trace = cg.greedy_merge_optimize(d, m0, cg.OptimizerConfig())
    assert m1 == m0
    assert trace.steps == []


def test_greedy_toy_from_finest_is_enumeration_argmin():
    d = make_toy_dataset(seed=3, per_seq=50, coarse_times=True)
    cfg = cg.OptimizerConfig()
    fitted, _ = cg.greedy_merge_optimize(d, cg.finest_model(d), cfg)
    fitted = cg.post_optimize(d, fitted, cfg)
    assert (fitted.k_s, fitted.k_t, fitted.k_e) == (2, 2, 2)
    # the figure's groupings
    groups = [sorted(d.seq_labels[c] for c in cl) for cl in fitted.seq_clusters()]
    assert sorted(groups) == [["S1", "S2"], ["S3", "S4"]]
    egroups = [sorted(d.event_labels[c] for c in cl) for cl in fitted.event_clusters()]
    assert sorted(egroups) == [["A", "B"], ["C", "D"]]

    # argmin among every model with <= 3 intervals and any S/E partitions
    fitted_cost = cg.cost(d, fitted).total

    def partitions4():
        seen = set()
        for assign in itertools.product(range(4), repeat=4):
            key = cg.GridModel(assign, (0,) * 4, ()).seq_assign
            if key not in seen:
                seen.add(key)
                yield key

    bounds = [int(b) for b in d.group_offsets[1:-1]]
    cut_sets = [()]
    cut_sets += [(b,) for b in bounds]
    cut_sets += [pair for pair in itertools.combinations(bounds, 2)]
    best = None
    for sa in partitions4():
        for ea in partitions4():
            for cuts in cut_sets:
                total = cg.cost(d, cg.GridModel(sa, ea, cuts)).total
                if best is None or total < best:
                    best = total
    assert fitted_cost == pytest.approx(best, abs=1e-9)


def test_greedy_steps_match_public_argmin():
    rng = np.random.default_rng(17)
    d = make_random_dataset(rng, n=5, a=4, num_points=150, max_time=12)
    m = cg.finest_model(d)
    cfg = cg.OptimizerConfig()
    fitted, trace = cg.greedy_merge_optimize(d, m, cfg)
    # replay: each committed action must be the public-scan argmin
    current = m
    for step in trace.steps:
        s = cg.build_cell_stats(d, current)
        candidates = scan_all_merges(d, current, s)
        best = min(c[3] for c in candidates)
        dim, a, b = step.action.split(":")[1], *[
            int(x) for x in step.action.split(":")[2].split("+")
        ]
        assert step.delta == pytest.approx(best, abs=1e-6)
        assert step.delta < 0
        current = cg.apply_merge(d, current, cg.Merge(dim, a, b))
    assert current == fitted


def test_greedy_monotone_and_locally_optimal():
    rng = np.random.default_rng(23)
    for trial in range(3):
        d = make_random_dataset(rng, n=8, a=6, num_points=250, max_time=25)
        cfg = cg.OptimizerConfig(seed=trial)
        m0 = cg.build_initial_model(d, cfg, np.random.default_rng(trial))
        fitted, trace = cg.greedy_merge_optimize(d, m0, cfg)
        costs = [s.cost for s in trace.steps]
        assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))
        assert all(s.delta < -cfg.tolerance for s in trace.steps)
        # termination: exhaustive re-scan finds no improving merge
        s = cg.build_cell_stats(d, fitted)
        residual = min((c[3] for c in scan_all_merges(d, fitted, s)), default=0.0)
        assert residual >= -1e-6


def test_post_optimize_never_worse():
    rng = np.random.default_rng(31)
    for trial in range(3):
        d = make_random_dataset(rng, n=7, a=5, num_points=200)
        cfg = cg.OptimizerConfig(seed=trial)
        m0 = cg.build_initial_model(d, cfg, np.random.default_rng(trial + 50))
        before = cg.cost(d, m0).total
        after = cg.cost(d, cg.post_optimize(d, m0, cfg)).total
        assert after <= before + 1e-9


def test_post_optimize_fixed_point(four_point_dataset):
    d = four_point_dataset
    m = cg.null_model(d)
    assert cg.post_optimize(d, m, cg.OptimizerConfig()) == m


def test_post_optimize_repairs_planted_misassignment():
    from catsgrid import synthbench as sb

    d, truth = sb.generate(sb.default_patterns(), cm=3, n_points=1500, eta=0.0, seed=5)
    # true model, then sabotage one sequence assignment
    seq_assign = [0 if truth.seq_pattern[lab] == "M1" else 1 for lab in d.seq_labels]
    lookup = {e: gi for gi, g in enumerate(truth.event_groups) for e in g}
    event_assign = [lookup[lab] for lab in d.event_labels]
    gt = d.group_times()
    cuts = sorted(
        {int(d.group_offsets[np.searchsorted(gt, b, side="right")]) for b in truth.boundaries}
    )
    good = cg.GridModel(tuple(seq_assign), tuple(event_assign), tuple(cuts))
    seq_assign[0] ^= 1
    bad = cg.GridModel(tuple(seq_assign), tuple(event_assign), tuple(cuts))
    repaired = cg.post_optimize(d, bad, cg.OptimizerConfig())
    assert repaired.seq_assign == good.seq_assign


def test_vns_single_round_equals_chain():
    rng = np.random.default_rng(40)
    d = make_random_dataset(rng, n=10, a=6, num_points=400, max_time=40)
    cfg = cg.OptimizerConfig(vns_rounds=1, seed=9)
    via_vns, _ = cg.vns_optimize(d, cfg)
    m0 = cg.build_initial_model(d, cfg, np.random.default_rng([9, 0]))
    m1, _ = cg.greedy_merge_optimize(d, m0, cfg)
    m2 = cg.post_optimize(d, m1, cfg)
    if cg.cost(d, m2).total <= cg.cost(d, cg.null_model(d)).total:
        assert via_vns == m2


def test_vns_more_rounds_never_worse():
    from catsgrid import synthbench as sb

    d, _ = sb.generate(sb.default_patterns(), cm=5, n_points=600, eta=0.2, seed=2)
    c1 = cg.cost(d, cg.vns_optimize(d, cg.OptimizerConfig(vns_rounds=1, seed=4))[0]).total
    c10 = cg.cost(d, cg.vns_optimize(d, cg.OptimizerConfig(vns_rounds=10, seed=4))[0]).total
    assert c10 <= c1 + 1e-9


def test_vns_deterministic_across_workers():
    from catsgrid import synthbench as sb

    d, _ = sb.generate(sb.default_patterns(), cm=4, n_points=500, eta=0.3, seed=6)
    fits = [
        cg.vns_optimize(d, cg.OptimizerConfig(vns_rounds=5, seed=2, workers=w))[0]
        for w in (1, 2, 8)
    ]
    assert fits[0] == fits[1] == fits[2]


def test_vns_never_worse_than_null():
    rng = np.random.default_rng(55)
    d = make_random_dataset(rng, n=15, a=3, num_points=60, max_time=6)
    model, _ = cg.vns_optimize(d, cg.OptimizerConfig(vns_rounds=3, seed=1))
    assert cg.cost(d, model).total <= cg.cost(d, cg.null_model(d)).total + 1e-9


def test_time_budget_completes_first_chain():
    from catsgrid import synthbench as sb

    d, _ = sb.generate(sb.default_patterns(), cm=4, n_points=800, eta=0.1, seed=3)
    model, trace = cg.vns_optimize(
        d, cg.OptimizerConfig(vns_rounds=10, seed=0, time_budget=1e-6)
    )
    assert len(trace.round_best) >= 1
    assert model.k_s >= 1


def test_trace_csv_export():
    rng = np.random.default_rng(77)
    d = make_random_dataset(rng, n=6, a=4, num_points=120)
    cfg = cg.OptimizerConfig(vns_rounds=2, seed=0)
    _, trace = cg.vns_optimize(d, cfg)
    buf = io.StringIO()
    trace.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "round,step,action,delta,cost,elapsed_s"
    assert len(lines) == len(trace.steps) + 1


def test_round_cap_ladder_covers_scales():
    caps = {_round_cap(128, r) for r in range(12)}
    assert 128 in caps and 256 in caps and 2 in caps
    assert all(c >= 1 for c in caps)


def test_config_validation():
    with pytest.raises(ValueError):
        cg.OptimizerConfig(vns_rounds=0)
    with pytest.raises(ValueError):
        cg.OptimizerConfig(seed=-1)
    with pytest.raises(ValueError):
        cg.OptimizerConfig(workers=0)
    with pytest.raises(ValueError):
        cg.OptimizerConfig(max_initial_parts=0)
