import json

import numpy as np
import pytest

import catsgrid as cg
from catsgrid import document as docmod
from catsgrid import exploit
from catsgrid import synthbench as sb
from catsgrid.errors import CatsGridError, ModelError

from conftest import make_toy_dataset


@pytest.fixture(scope="module")
def fitted():
    d, truth = sb.generate(sb.default_patterns(), cm=4, n_points=1500, eta=0.2, seed=8)
    model, _ = cg.vns_optimize(d, cg.OptimizerConfig(vns_rounds=5, seed=1))
    h = exploit.build_hierarchies(d, model)
    doc = docmod.build_document(d, model, h)
    return d, model, h, doc


def test_document_shape(fitted):
    d, model, h, doc = fitted
    assert doc["schema_version"] == docmod.SCHEMA_VERSION
    assert doc["dataset"]["num_points"] == d.num_points
    assert len(doc["model"]["seq_clusters"]) == model.k_s
    assert len(doc["merge_sequence"]) == len(h.sequence)
    assert sum(c for _, _, _, c in doc["cells"]) == d.num_points
    # typicality blocks hold at most top-15 labelled values per cluster
    for block in doc["typicality"].values():
        for pairs in block.values():
            assert len(pairs) <= 15
            assert all(isinstance(lbl, str) for lbl, _ in pairs)


def test_document_json_serializable(fitted, tmp_path):
    _, _, _, doc = fitted
    path = tmp_path / "grid.json"
    docmod.save_document(doc, path)
    again = docmod.load_document(path)
    assert again == json.loads(json.dumps(doc))


def test_model_roundtrip(fitted):
    d, model, _, doc = fitted
    rebuilt = docmod.model_from_document(doc, d)
    assert rebuilt == model


def test_schema_version_check(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": 999}))
    with pytest.raises(CatsGridError):
        docmod.load_document(path)


def test_replay_level_zero_equals_fit(fitted):
    d, model, _, doc = fitted
    cut = docmod.replay_cut(doc, level=0.0)
    assert len(cut.seq_values) == model.k_s
    assert len(cut.event_values) == model.k_e
    assert len(cut.interval_bounds) == model.k_t
    tensor = cg.gridmodel.cell_tensor(d, model)
    assert np.array_equal(cut.cells, tensor)


def test_replay_level_one_collapses_everything(fitted):
    d, _, _, doc = fitted
    cut = docmod.replay_cut(doc, level=1.0)
    assert len(cut.seq_values) == 1
    assert len(cut.event_values) == 1
    assert len(cut.interval_bounds) == 1
    assert cut.cells.sum() == d.num_points


def test_replay_matches_exploit_simplify(fitted):
    d, model, h, doc = fitted
    for targets in ({"E": 2}, {"S": 1}, {"E": 1, "S": 2}):
        try:
            coarse = exploit.simplify(d, model, h, cluster_counts=targets)
        except ModelError:
            continue
        cut = docmod.replay_cut(doc, cluster_counts=targets)
        assert np.array_equal(cut.cells, cg.gridmodel.cell_tensor(d, coarse))
        got = sorted(sorted(v) for v in cut.seq_values)
        want = sorted(
            sorted(d.seq_labels[c] for c in cl) for cl in coarse.seq_clusters()
        )
        assert got == want


def test_replay_matches_model_at_level(fitted):
    d, model, h, doc = fitted
    for level in (0.25, 0.5, 0.75):
        cut = docmod.replay_cut(doc, level=level)
        coarse = exploit.model_at_level(d, model, h, level)
        assert np.array_equal(cut.cells, cg.gridmodel.cell_tensor(d, coarse))


def test_replay_validation(fitted):
    _, _, _, doc = fitted
    with pytest.raises(ValueError):
        docmod.replay_cut(doc)
    with pytest.raises(ValueError):
        docmod.replay_cut(doc, level=0.5, min_ir=0.5)
    with pytest.raises(ValueError):
        docmod.replay_cut(doc, level=1.5)
    with pytest.raises(ModelError):
        docmod.replay_cut(doc, cluster_counts={"S": 999})


def test_matrix_csv_formats(fitted):
    _, _, _, doc = fitted
    cut = docmod.replay_cut(doc, level=0.0)
    text = docmod.matrix_csv(cut, 0, "freq")
    lines = text.splitlines()
    assert lines[0].startswith(",{")
    body = lines[1].split(",")
    assert body[0][0] == "["  # first interval is closed on the left
    for cell in body[1:]:
        assert cell.isdigit()
    if len(lines) > 2:
        assert lines[2].split(",")[0][0] == "]"
    with pytest.raises(ModelError):
        docmod.matrix_csv(cut, 99, "freq")
    with pytest.raises(ValueError):
        docmod.matrix_csv(cut, 0, "nope")


def test_matrix_csv_cmi_matches_exploit(fitted):
    d, model, _, doc = fitted
    cut = docmod.replay_cut(doc, level=0.0)
    text = docmod.matrix_csv(cut, 0, "cmi")
    rows = [line.split(",")[1:] for line in text.splitlines()[1:]]
    got = np.array([[float(x) for x in row] for row in rows])
    want = exploit.cmi_matrix(d, model, 0)
    assert np.allclose(got, want, atol=1e-12)


def test_matrix_csv_contrast_matches_exploit(fitted):
    d, model, _, doc = fitted
    cut = docmod.replay_cut(doc, level=0.0)
    for c in range(model.k_s):
        text = docmod.matrix_csv(cut, c, "contrast")
        rows = [line.split(",")[1:] for line in text.splitlines()[1:]]
        got = np.array([[float(x) for x in row] for row in rows])
        assert np.allclose(got, exploit.contrast_matrix(d, model, c), atol=1e-12)


def test_number_format_stability():
    assert docmod.format_number(12) == "12"
    assert docmod.format_number(12.0) == "12"
    assert docmod.format_number(50.5) == "50.5"
    assert docmod.format_number(0.30000000000000004) == "0.30000000000000004"


def test_toy_document_intervals():
    d = make_toy_dataset(seed=7, per_seq=50)
    model, _ = cg.vns_optimize(d, cg.OptimizerConfig(vns_rounds=5, seed=0))
    doc = docmod.build_document(d, model)
    ivls = doc["model"]["time_intervals"]
    assert ivls[0]["rank_start"] == 0
    assert ivls[-1]["rank_end"] == d.num_points
    for a, b in zip(ivls, ivls[1:]):
        assert a["rank_end"] == b["rank_start"]
        assert a["t_high"] == b["t_low"]
