import csv
import io
import json
import math

import pytest

from qgraph_resonances.cli import main
from qgraph_resonances.secularpoly import normalize, poly_from_string

G23 = {
    "vertices": ["v", "w"],
    "edges": [{"id": "e1", "from": "v", "to": "w", "length": 1}],
    "leads": [{"vertex": "v", "count": 2}, {"vertex": "w", "count": 3}],
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def g23_file(tmp_path):
    p = tmp_path / "g23.json"
    p.write_text(json.dumps(G23))
    return str(p)


def test_classify_star(capsys):
    code, out, _ = run(capsys, "classify", "--catalog", "star", "--params", "1,3")
    assert code == 0
    data = json.loads(out)
    assert data["type"] == "I" and data["g"] == "inf"
    assert list(data) == ["type", "g", "total_length", "v0_size", "d_lower", "d_upper", "d_conjecture"]


def test_secular_poly_c11(capsys):
    code, out, _ = run(capsys, "secular-poly", "--catalog", "circular", "--params", "1,1")
    assert code == 0
    ref = normalize(poly_from_string("(z*w - w - z - 3)*(z*w + z + w - 3)", ("z", "w")))[2]
    assert out.splitlines() == ref.format()


def test_resonances_csv(capsys, g23_file):
    code, out, _ = run(capsys, "resonances", g23_file, "--sigma-max", "10", "--tau-min", "-1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["sigma", "tau", "residual", "multiplicity", "t_norm"]
    assert len(rows) == 3
    for j, row in enumerate(rows, start=1):
        assert abs(float(row["tau"]) + 0.5 * math.log(6)) < 1e-8
        assert abs(float(row["sigma"]) - math.pi * j) < 1e-8
        assert math.isclose(float(row["t_norm"]), 1.0)


def test_output_is_deterministic(capsys, tmp_path, g23_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["resonances", g23_file, "--sigma-max", "20", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--catalog", "circular", "--params", "1",
                       "--lengths", str(2 * math.pi), "--sigma-max", "2.5")
    assert code == 0
    assert out.splitlines() == ["k,multiplicity", "1,2", "2,2"]


def test_weyl(capsys):
    code, out, _ = run(capsys, "weyl", "--catalog", "star", "--params", "1,3", "--sigma-max", "100")
    data = json.loads(out)
    assert code == 0 and abs(data["slope"] * math.pi - 1) < 0.02
    assert data["closest"] == "|L|/pi"


def test_neps_reports_insufficient_counts(capsys):
    code, out, err = run(capsys, "neps", "--catalog", "star", "--params", "1,3", "--sigma-max", "50",
                         "--eps-min", "0.001", "--eps-max", "0.3", "--eps-steps", "3")
    assert code == 0
    data = json.loads(out)
    assert data["d_hat"] is None and "widen" in err
    assert [row[1] for row in data["curve"]] == [0, 0, 0]


def test_estimate_h_seeded(capsys):
    argv = ["estimate-h", "--catalog", "interval_Gnn", "--params", "1,2,3", "--samples", "3", "--seed", "7"]
    code, out1, _ = run(capsys, *argv)
    _, out2, _ = run(capsys, *argv)
    assert code == 0 and out1 == out2
    assert abs(json.loads(out1)["h_hat"] - 0.5 * math.log(6)) < 1e-9


def test_estimate_h_type_two_is_validation_error(capsys):
    code, _, err = run(capsys, "estimate-h", "--catalog", "Y", "--params", "1,2")
    assert code == 1 and "type" in err


def test_branch_trace(capsys):
    code, out, _ = run(capsys, "branch-trace", "--catalog", "Y", "--params", "1,1", "--base", "1j,1j")
    data = json.loads(out)
    assert code == 0
    tr = data["traces"][0]
    assert abs(tr["dtau_du0"]) < 1e-6
    assert abs(tr["c"] - 0.5) < 0.01


def test_bad_document_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({**G23, "edges": [{"id": "e1", "from": "v", "to": "w", "length": -1}]}))
    code, _, err = run(capsys, "classify", str(p))
    assert code == 1 and "length" in err


def test_missing_graph_exit_code(capsys):
    code, _, err = run(capsys, "classify")
    assert code == 1 and "graph" in err


def test_unknown_catalog_exit_code(capsys):
    code, _, _ = run(capsys, "classify", "--catalog", "nope")
    assert code == 1


def test_numeric_failure_exit_code(capsys, monkeypatch):
    from qgraph_resonances import cli
    from qgraph_resonances.resonancefinder import WindingError

    def boom(*a, **k):
        raise WindingError("winding did not settle")

    monkeypatch.setattr(cli, "search", boom)
    code, _, err = run(capsys, "resonances", "--catalog", "star", "--params", "1,3")
    assert code == 2 and "numeric" in err


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "4,6")
    assert code == 0
    assert out.count("[PASS]") == 2
