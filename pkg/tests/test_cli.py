import json

import numpy as np
import pytest

import catsgrid as cg
from catsgrid import document as docmod
from catsgrid.cli import main

from conftest import make_toy_rows


def run(argv):
    return main(argv)


@pytest.fixture
def toy_doc(tmp_path):
    data = tmp_path / "toy.csv"
    data.write_text(make_toy_rows(seed=7, per_seq=50))
    out = tmp_path / "toygrid.json"
    assert run(["fit", "--input", str(data), "--out", str(out),
                "--rounds", "5", "--seed", "0"]) == 0
    return data, out


def test_generate_same_seed_byte_identical(tmp_path):
    paths = []
    for tag in ("a", "b"):
        data = tmp_path / f"{tag}.csv"
        truth = tmp_path / f"{tag}.json"
        assert run([
            "generate", "--points", "400", "--eta", "0.2", "--seed", "11",
            "--out", str(data), "--truth-out", str(truth),
        ]) == 0
        paths.append((data.read_bytes(), truth.read_bytes()))
    assert paths[0] == paths[1]


def test_generate_different_seed_differs(tmp_path):
    outs = []
    for seed in ("1", "2"):
        data = tmp_path / f"s{seed}.csv"
        truth = tmp_path / f"t{seed}.json"
        run(["generate", "--points", "200", "--seed", seed,
             "--out", str(data), "--truth-out", str(truth)])
        outs.append(data.read_bytes())
    assert outs[0] != outs[1]


def test_generate_eta_out_of_range_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["generate", "--points", "10", "--eta", "1.1",
             "--out", str(tmp_path / "x.csv"), "--truth-out", str(tmp_path / "x.json")])
    assert exc.value.code == 2


def test_fit_toy_document(toy_doc):
    _, out = toy_doc
    doc = json.load(open(out))
    assert len(doc["model"]["seq_clusters"]) == 2
    assert len(doc["model"]["time_intervals"]) == 2
    assert len(doc["model"]["event_clusters"]) == 2
    values = sorted(sorted(c["values"]) for c in doc["model"]["seq_clusters"])
    assert values == [["S1", "S2"], ["S3", "S4"]]


def test_fit_rounds_best_of_monotone(tmp_path):
    data = tmp_path / "synth.csv"
    truth = tmp_path / "truth.json"
    run(["generate", "--points", "600", "--eta", "0.3", "--seed", "4",
         "--out", str(data), "--truth-out", str(truth)])
    costs = {}
    for rounds in ("1", "6"):
        out = tmp_path / f"g{rounds}.json"
        assert run(["fit", "--input", str(data), "--out", str(out),
                    "--rounds", rounds, "--seed", "3"]) == 0
        costs[rounds] = json.load(open(out))["cost"]["total"]
    assert costs["6"] <= costs["1"] + 1e-9


def test_fit_single_event_yields_null_event_dimension(tmp_path):
    rng = np.random.default_rng(0)
    rows = [f"s{rng.integers(0, 5)},{rng.integers(0, 50)},only" for _ in range(300)]
    data = tmp_path / "one.csv"
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "one.json"
    assert run(["fit", "--input", str(data), "--out", str(out), "--rounds", "3"]) == 0
    doc = json.load(open(out))
    assert len(doc["model"]["event_clusters"]) == 1
    # pure noise: no sequence structure either
    assert len(doc["model"]["seq_clusters"]) == 1


def test_fit_trace_and_progress(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text(make_toy_rows(seed=3, per_seq=30))
    out = tmp_path / "g.json"
    trace = tmp_path / "trace.csv"
    assert run(["fit", "--input", str(data), "--out", str(out),
                "--rounds", "2", "--progress", "--trace-out", str(trace)]) == 0
    lines = trace.read_text().splitlines()
    assert lines[0].startswith("round,step,action")
    assert len(lines) > 1
    assert "cost" in capsys.readouterr().err


def test_fit_missing_input_is_data_error(tmp_path):
    assert run(["fit", "--input", str(tmp_path / "nope.csv"),
                "--out", str(tmp_path / "g.json")]) == 3


def test_fit_threads_env_fallback(tmp_path, monkeypatch):
    data = tmp_path / "d.csv"
    data.write_text(make_toy_rows(seed=5, per_seq=40))
    out1, out2 = tmp_path / "g1.json", tmp_path / "g2.json"
    assert run(["fit", "--input", str(data), "--out", str(out1), "--rounds", "3"]) == 0
    monkeypatch.setenv("CATSGRID_THREADS", "4")
    assert run(["fit", "--input", str(data), "--out", str(out2), "--rounds", "3"]) == 0
    d1, d2 = json.load(open(out1)), json.load(open(out2))
    assert d1["model"] == d2["model"]
    assert d1["cost"] == d2["cost"]


def test_document_roundtrip_cost(toy_doc):
    data, out = toy_doc
    doc = docmod.load_document(out)
    d = cg.load_dataset(str(data))
    assert d.source_digest == doc["dataset"]["source_digest"]
    model = docmod.model_from_document(doc, d)
    recomputed = cg.cost(d, model).total
    assert recomputed == pytest.approx(doc["cost"]["total"], abs=1e-9)


def test_simplify_ir_one_is_identity(toy_doc, tmp_path):
    data, out = toy_doc
    simp = tmp_path / "simp.json"
    assert run(["simplify", "--input", str(out), "--data", str(data),
                "--ir", "1.0", "--out", str(simp)]) == 0
    a, b = json.load(open(out)), json.load(open(simp))
    assert a["model"] == b["model"]


def test_simplify_cluster_targets(toy_doc, tmp_path):
    data, out = toy_doc
    simp = tmp_path / "simp.json"
    assert run(["simplify", "--input", str(out), "--data", str(data),
                "--clusters", "S=1,E=1,T=1", "--out", str(simp)]) == 0
    doc = json.load(open(simp))
    assert len(doc["model"]["seq_clusters"]) == 1
    assert len(doc["model"]["event_clusters"]) == 1
    assert len(doc["model"]["time_intervals"]) == 1


def test_report_sums_match_marginals(toy_doc, tmp_path):
    _, out = toy_doc
    doc = json.load(open(out))
    csv_path = tmp_path / "freq.csv"
    assert run(["report", "--input", str(out), "--cluster", "0",
                "--kind", "freq", "--out", str(csv_path)]) == 0
    lines = csv_path.read_text().splitlines()
    header = lines[0].split(",")
    k_e = len(doc["model"]["event_clusters"])
    assert len(header) == k_e + 1
    totals = np.zeros(k_e, dtype=int)
    row_sums = []
    for line in lines[1:]:
        cells = line.split(",")
        vals = np.array([int(x) for x in cells[1:]])
        totals += vals
        row_sums.append(vals.sum())
    # row/column sums equal the document's marginals for cluster 0
    cells0 = [(j, e, c) for i, j, e, c in doc["cells"] if i == 0]
    for e in range(k_e):
        assert totals[e] == sum(c for _, ee, c in cells0 if ee == e)
    for j, rs in enumerate(row_sums):
        assert rs == sum(c for jj, _, c in cells0 if jj == j)


def test_report_unknown_cluster_lists_valid_ids(toy_doc, capsys):
    _, out = toy_doc
    assert run(["report", "--input", str(out), "--cluster", "7", "--kind", "freq"]) == 3
    err = capsys.readouterr().err
    assert "valid ids" in err and "0" in err


def test_report_level_extremes(toy_doc, capsys):
    _, out = toy_doc
    assert run(["report", "--input", str(out), "--cluster", "0",
                "--kind", "freq", "--level", "1"]) == 0
    top = capsys.readouterr().out.splitlines()
    assert len(top) == 2  # header plus the single merged interval row
    assert run(["report", "--input", str(out), "--cluster", "0",
                "--kind", "freq", "--level", "0"]) == 0
    fine = capsys.readouterr().out.splitlines()
    assert len(fine) == 3


def test_eval_matches_library_scoring(tmp_path):
    from catsgrid import synthbench as sb

    data = tmp_path / "synth.csv"
    truth_path = tmp_path / "truth.json"
    run(["generate", "--points", "800", "--eta", "0.1", "--seed", "6",
         "--out", str(data), "--truth-out", str(truth_path)])
    out = tmp_path / "grid.json"
    assert run(["fit", "--input", str(data), "--out", str(out),
                "--rounds", "5", "--seed", "1"]) == 0
    csv_out = tmp_path / "eval.csv"
    assert run(["eval", "--input", str(out), "--truth", str(truth_path),
                "--out", str(csv_out)]) == 0
    header, values = csv_out.read_text().splitlines()
    row = dict(zip(header.split(","), values.split(",")))

    d = cg.load_dataset(str(data))
    traw = json.load(open(truth_path))
    truth = sb.GroundTruth(
        seq_pattern=traw["seq_pattern"],
        event_groups=tuple(tuple(g) for g in traw["event_groups"]),
        boundaries=tuple(traw["boundaries"]),
    )
    model = docmod.model_from_document(docmod.load_document(out), d)
    scored = sb.score_fit(d, model, truth)
    assert int(row["k_S"]) == scored["k_S"]
    assert float(row["ari_seq"]) == pytest.approx(scored["ari_seq"])
    assert float(row["ari_event"]) == pytest.approx(scored["ari_event"])
    assert float(row["max_boundary_error"]) == pytest.approx(
        scored["max_boundary_error"]
    )


def test_bad_document_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["report", "--input", str(bad), "--cluster", "0", "--kind", "freq"]) == 3
    bad.write_text(json.dumps({"schema_version": 99}))
    assert run(["report", "--input", str(bad), "--cluster", "0", "--kind", "freq"]) == 3
