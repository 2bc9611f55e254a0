import csv
import io
import json

import numpy as np
import pytest

from hqmm.channels import PureEffect
from hqmm.cli import SweepSpec, compare_row, main, reproduce_rows, sweep_rows
from hqmm.decoder import DecoderConfig, classical_viterbi
from hqmm.errors import ValidationError
from hqmm.io import save_model
from hqmm.linalg import fubini_study_distance
from hqmm.model import Convention, canonical_qubit_model, embed_classical

from conftest import random_classical_hmm

FAST = DecoderConfig(restarts=2, net_resolution=64)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_reproduce_rows_unnormalized():
    rows = reproduce_rows(Convention.UNNORMALIZED, 4, FAST)
    first = rows[0]
    assert (first["classical_score"], first["quantum_score"], first["gap"]) == pytest.approx((0.375, 0.5, 0.125), abs=1e-12)
    assert first["coherence"] == pytest.approx(0.8660254037844386, abs=1e-9)
    assert rows[2]["gap"] == pytest.approx(0.0703125, abs=1e-12)
    assert max(r["abs_error"] for r in rows) <= 1e-8


def test_reproduce_rows_normalized():
    rows = reproduce_rows(Convention.NORMALIZED, 2, FAST)
    assert rows[2]["gap"] == pytest.approx(0.017578125, abs=1e-12)


def test_reproduce_exit_status_and_csv(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["reproduce", "--n-max", "3", "--restarts", "2", "--csv", str(out)]) == 0
    rows = read_csv(out)
    assert [int(r["n"]) for r in rows] == [0, 1, 2, 3]
    assert float(rows[0]["quantum_score"]) == pytest.approx(0.5, abs=1e-12)
    assert "quantum_score" in capsys.readouterr().out
    assert main(["reproduce", "--n-max", "13"]) == 2


def test_reproduce_exit_nonzero_on_mismatch(monkeypatch):
    import hqmm.cli as cli

    monkeypatch.setitem(cli._STEP_WEIGHT, Convention.UNNORMALIZED, 0.7)
    assert main(["reproduce", "--n-max", "2", "--restarts", "1"]) == 1


def test_csv_round_trips_doubles(tmp_path):
    out = tmp_path / "t.csv"
    main(["reproduce", "--n-max", "5", "--restarts", "2", "--csv", str(out)])
    rows = reproduce_rows(Convention.UNNORMALIZED, 5, DecoderConfig(restarts=2))
    for written, row in zip(read_csv(out), rows):
        for key in ("classical_score", "quantum_score", "gap", "coherence", "abs_error"):
            assert float(written[key]) == row[key]


def test_compare_canonical(tmp_path, capsys):
    path = tmp_path / "m.json"
    save_model(canonical_qubit_model(), path)
    row = compare_row(canonical_qubit_model(), ["+"], FAST)
    assert row["quantum_score"] == pytest.approx(0.5, abs=1e-12)
    assert row["classical_score"] == pytest.approx(0.375, abs=1e-15)
    assert row["gap"] == row["quantum_score"] - row["classical_score"]
    out = tmp_path / "c.csv"
    assert main(["compare", "--model", str(path), "--obs", "+", "--csv", str(out)]) == 0
    written = read_csv(out)[0]
    assert float(written["gap"]) == float(written["quantum_score"]) - float(written["classical_score"])


def test_sweep_eta():
    rows = sweep_rows(SweepSpec("eta", 0.05, 0.95, 19), FAST)
    assert len(rows) == 19
    for r in rows:
        eta = r["value"]
        # quantum optimum stays at 1/2; the diagonal one is (1 + eta)/4
        assert r["quantum_score"] == pytest.approx(0.5, abs=1e-9)
        assert r["classical_score"] == pytest.approx((1 + eta) / 4, abs=1e-12)
    gaps = [r["gap"] for r in rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_sweep_validation():
    with pytest.raises(ValidationError):
        SweepSpec("eta", 0.0, 0.5, 3)
    with pytest.raises(ValidationError):
        SweepSpec("eta", 0.1, 0.5, 1)
    with pytest.raises(ValidationError):
        SweepSpec("kappa", 0.1, 0.5, 3)


def test_sweep_command(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--axis", "n", "--start", "0", "--stop", "3", "--steps", "4",
                 "--convention", "unnormalized", "--restarts", "2", "--csv", str(out)]) == 0
    gaps = [float(r["gap"]) for r in read_csv(out)]
    assert gaps == pytest.approx([0.125 * 0.75 ** n for n in range(4)], abs=1e-12)


def test_decode_embedded_classical(tmp_path, capsys):
    rng = np.random.default_rng(7)
    c = random_classical_hmm(rng, 3, 2)
    path = tmp_path / "c.json"
    save_model(embed_classical(c), path)
    obs = tmp_path / "obs.txt"
    obs.write_text("0\n1\n1\n0\n")
    out = tmp_path / "d.csv"
    assert main(["decode", "--model", str(path), "--obs-file", str(obs), "--csv", str(out)]) == 0
    doc = json.loads(capsys.readouterr().out)
    expected = classical_viterbi(c, [0, 1, 1, 0])
    assert doc["score"] == pytest.approx(expected.score, abs=1e-10)
    for pairs, i in zip(doc["trajectory"], expected.path):
        ket = np.array([complex(re, im) for re, im in pairs])
        assert fubini_study_distance(PureEffect(ket), PureEffect.basis(i, 3)) <= 1e-6
    rows = read_csv(out)
    assert [float(r["coherence"]) for r in rows] == pytest.approx([0.0] * 4, abs=1e-6)


@pytest.mark.parametrize("method", ["ascent", "grid", "diagonal"])
def test_decode_methods(tmp_path, capsys, method):
    path = tmp_path / "m.json"
    assert main(["build-qubit", "--out", str(path)]) == 0
    capsys.readouterr()
    assert main(["decode", "--model", str(path), "--obs", "+", "--method", method, "--net", "2000"]) == 0
    doc = json.loads(capsys.readouterr().out)
    expected = 0.375 if method == "diagonal" else 0.5
    assert doc["score"] == pytest.approx(expected, abs=1e-3)


def test_errors_reported_with_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["decode", "--model", str(bad), "--obs", "+"]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["decode", "--model", str(tmp_path / "missing.json"), "--obs", "+"]) == 2
    good = tmp_path / "m.json"
    save_model(canonical_qubit_model(), good)
    assert main(["decode", "--model", str(good), "--obs", "+,x"]) == 2


def test_csv_to_stdout(capsys):
    assert main(["reproduce", "--n-max", "0", "--restarts", "1", "--csv", "-"]) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(text[text.index("n,classical_score"):])))
    assert float(rows[0]["gap"]) == pytest.approx(0.125, abs=1e-12)
