import csv
import json
import math

import pytest

from dskg.cli import SWEEP_COLUMNS, main
from dskg.config import ConfigError, parse_config
from dskg.estimate_harness import admissible

SWEEP = """
[experiment]
kind = strichartz-homog
seed = 3

[model]
N = 8
lam = 3.25

[estimate]
alpha = 1.5
p = {p}
q = {q}
t0_list = 1, 2
T = 1
ensemble_size = 2
per_unit = 10
"""


def _write(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _strip_time(path):
    doc = json.loads(path.read_text())
    doc.pop("timestamp")
    return doc


def test_lam_zero_is_config_error(tmp_path, capsys):
    cfg = _write(tmp_path, "[experiment]\nkind = energy\nseed = 0\n\n[model]\nlam = 0\n")
    assert main(["run", cfg, "-o", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "line 6" in err and "'lam'" in err and "excluded" in err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("text, field", [
    ("[experiment]\nkind = energy\n", "seed"),
    ("[experiment]\nkind = nope\nseed = 1\n", "kind"),
    ("[experiment]\nkind = energy\nseed = 1\n[model]\nn = 3\nfoo = 1\n", "foo"),
    ("[experiment]\nkind = energy\nseed = 1\n[model]\nN = 7\n", "N"),
    ("[experiment]\nkind = energy\nseed = 1\n[estimate]\nT = abc\n", "T"),
    ("[experiment]\nkind = energy\nseed = 1\n[estimate]\nalpha = 1.5\nT = 2\n", "ensemble_size"),
    ("[experiment]\nkind = energy\nseed = 1\n[estimate]\nalpha = 1.0\nT = 2\nensemble_size = 2\n", "alpha"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field_name == field


def test_malformed_file_exit_2(tmp_path):
    assert main(["run", _write(tmp_path, "kind = energy\n")]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 2


def test_config_lists_and_inf():
    cfg = parse_config(SWEEP.format(p="4, 2", q="4, inf"))
    assert [(e.p, e.q) for e in cfg.exponents] == [(4.0, 4.0)]
    reasons = {(r["p"], r["q"]): r["reason"] for r in cfg.rejected}
    assert reasons[(2.0, math.inf)] == "q = inf"
    assert cfg.t0_list == [1.0, 2.0]


def test_sweep_outputs_and_roundtrip(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", _write(tmp_path, SWEEP.format(p="4, 2", q="4, inf")), "-o", str(out)])
    assert code in (0, 1)
    for name in ("report.json", "series.csv", "run.log", "sweep.csv"):
        assert (out / name).exists()
    assert not list(out.glob(".*.tmp"))
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    assert tuple(rows[0].keys()) == SWEEP_COLUMNS
    doc = json.loads((out / "report.json").read_text())
    assert code == (0 if doc["pass"] else 1)
    # each CSV row parses back to the typed report
    for row, rep, js in zip(rows, doc["reports"], doc["sweep"]):
        assert float(row["constant"]) == rep["measured_constant"] == js["constant"]
        assert (row["pass"] == "True") == rep["pass"]
        assert float(row["spread"]) == rep["metadata"]["spread"]
        assert float(row["s"]) == 0.5
    assert doc["rejected"][2] == {"p": 2.0, "q": "inf", "reason": "q = inf"}
    assert "q = inf" in (out / "run.log").read_text()


def test_sweep_row_count_matches_admissible(tmp_path):
    ps, qs = [2.0, 4.0, math.inf], [2.0, 4.0, 6.0, math.inf]
    text = SWEEP.format(p="2, 4, inf", q="2, 4, 6, inf").replace("ensemble_size = 2", "ensemble_size = 1")
    text = text.replace("t0_list = 1, 2", "t0_list = 1")
    out = tmp_path / "grid"
    main(["sweep", _write(tmp_path, text), "-o", str(out)])
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    assert len(rows) == sum(admissible(p, q, 3) for p in ps for q in qs)


def test_empty_admissible_set(tmp_path):
    out = tmp_path / "empty"
    assert main(["sweep", _write(tmp_path, SWEEP.format(p="2", q="inf")), "-o", str(out)]) == 0
    assert (out / "sweep.csv").read_text().strip() == ",".join(SWEEP_COLUMNS)
    assert "WARNING" in (out / "run.log").read_text()


def test_determinism(tmp_path, monkeypatch):
    cfg = _write(tmp_path, SWEEP.format(p="4", q="4"))
    main(["run", cfg, "-o", str(tmp_path / "a")])
    monkeypatch.setenv("DSKG_THREADS", "3")
    main(["run", cfg, "-o", str(tmp_path / "b")])
    assert _strip_time(tmp_path / "a" / "report.json") == _strip_time(tmp_path / "b" / "report.json")
    assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()


def test_oracle_suite_passes(tmp_path):
    out = tmp_path / "oracle"
    assert main(["oracle-suite", "-o", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    names = {r["name"] for r in doc["reports"]}
    assert {"oracle_bessel", "oracle_abel", "oracle_commutator", "oracle_residual",
            "oracle_constant_semilinear"} <= names


def test_failed_verdict_exit_1(tmp_path):
    text = ("[experiment]\nkind = energy\nseed = 0\n[model]\nN = 8\nlam = 1\n"
            "[estimate]\nalpha = 0.9\nT = 4\nensemble_size = 1\n")
    out = tmp_path / "e"
    assert main(["run", _write(tmp_path, text), "-o", str(out)]) == 1
    doc = json.loads((out / "report.json").read_text())
    assert doc["pass"] is False and doc["reports"][0]["name"] == "energy_growth"
