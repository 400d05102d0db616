import csv
import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sccqed.cli import (EXIT_NO_RESULT, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, SWEEP_COLUMNS,
                        VERIFY_COLUMNS, main)
from sccqed.config import ConfigError, dump_config, parse_config

MINIMAL = """\
# documented minimum
model.omega = 1.0
model.g1 = 0.2
model.delta = 0.005
model.m = 2
truncation.dim = 48
"""

FEASIBLE = """\
[model]
omega = 1.0
g1 = 0.1
g2 = 2.4e-4
delta = 0.01
drive_freqs = 0.37, 0.002
[truncation]
dim = 16
buffer = 4
[resonance]
alphas = -1
gamma_max = 50
select = highest
"""


def _schema(name):
    return json.loads(resources.files("sccqed").joinpath("schemas", f"{name}.json").read_text())


def _run(capsys, cmd, text, *extra, tmp_path=None):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    code = main([cmd, str(path), *extra])
    out, err = capsys.readouterr()
    return code, out, err


def _rows(out):
    return list(csv.DictReader(io.StringIO(out)))


# -- configuration -------------------------------------------------------------

def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.model.m == 2 and cfg.truncation.dim == 48 and cfg.truncation.buffer == 12
    assert cfg.model.g2 == 0.0 and cfg.output.format == "csv"


def _errors(text, overrides=()):
    with pytest.raises(ConfigError) as info:
        parse_config(text, overrides)
    return info.value.records()


def test_config_rejections():
    rec = _errors(MINIMAL.replace("dim = 48", "dim = 1"))
    assert rec[0]["key"] == "truncation.dim" and rec[0]["line"] == 6
    rec = _errors(MINIMAL + "model.drive_freqs = -0.7, 0.1\n")
    assert rec[0]["key"] == "model.drive_freqs[0]" and rec[0]["line"] == 7
    rec = _errors(MINIMAL + "model.colour = 3\n")
    assert rec[0]["key"] == "model.colour" and "unknown" in rec[0]["message"]
    rec = _errors(MINIMAL.replace("model.g1 = 0.2\n", ""))
    assert rec[0]["key"] == "model.g1" and "missing" in rec[0]["message"]
    rec = _errors(MINIMAL + "model.omega = oops\n")
    assert any(r["key"] == "model.omega" for r in rec)
    assert _errors(MINIMAL + "simulate.t_end = 0\n")
    assert _errors(MINIMAL + "sweep.steps = 1\n")


def test_config_collects_every_error():
    rec = _errors("model.omega = -1\nmodel.g1 = 0.1\nbogus.key = 2\n")
    keys = {r["key"] for r in rec}
    assert {"model.omega", "model.delta", "bogus.key"} <= keys


def test_overrides_win():
    cfg = parse_config(MINIMAL, ["model.g1=0.3", "truncation.dim=64"])
    assert cfg.model.g1 == 0.3 and cfg.truncation.dim == 64
    assert _errors(MINIMAL, ["model.nothing=1"])
    assert _errors(MINIMAL, ["no_equals_sign"])


def test_round_trip_examples():
    for text in (MINIMAL, FEASIBLE):
        cfg = parse_config(text)
        assert parse_config(dump_config(cfg)) == cfg
        assert dump_config(parse_config(dump_config(cfg))) == dump_config(cfg)


@settings(max_examples=30)
@given(st.floats(0.1, 10), st.floats(0, 1), st.floats(-1, 1), st.floats(0, 1),
       st.lists(st.floats(0.01, 5), min_size=1, max_size=3), st.integers(8, 80),
       st.sampled_from(["csv", "json"]))
def test_round_trip_property(omega, g1, delta, g2, freqs, dim, fmt):
    text = (f"model.omega = {omega!r}\nmodel.g1 = {g1!r}\nmodel.delta = {delta!r}\n"
            f"model.g2 = {g2!r}\nmodel.m = {len(freqs)}\n"
            f"model.drive_freqs = {', '.join(repr(w) for w in freqs)}\n"
            f"truncation.dim = {dim}\noutput.format = {fmt}\n")
    cfg = parse_config(text)
    assert parse_config(dump_config(cfg)) == cfg


# -- commands ------------------------------------------------------------------

def test_verify_default_passes(capsys, tmp_path):
    code, out, err = _run(capsys, "verify", MINIMAL + "model.g2 = 0.05\n", tmp_path=tmp_path)
    rows = _rows(out)
    assert code == EXIT_OK and err == ""
    assert tuple(rows[0]) == VERIFY_COLUMNS
    assert all(r["passed"] == "true" for r in rows)


def test_verify_tiny_truncation_fails(capsys, tmp_path):
    text = MINIMAL.replace("0.2", "0.5").replace("dim = 48", "dim = 4")
    code, out, err = _run(capsys, "verify", text, tmp_path=tmp_path)
    assert code == EXIT_NUMERICAL
    rows = {r["check"]: r for r in _rows(out)}
    assert rows["truncation_soundness"]["passed"] == "false"
    rec = json.loads(err)
    jsonschema.validate(rec, _schema("error"))
    assert rec["kind"] == "checks_failed"


def test_verify_without_splitting(capsys, tmp_path):
    code, out, _ = _run(capsys, "verify", MINIMAL.replace("0.005", "0.0"), tmp_path=tmp_path)
    assert code == EXIT_OK


def test_resonance_without_splitting(capsys, tmp_path):
    code, out, err = _run(capsys, "resonance", MINIMAL.replace("0.005", "0.0") + "model.g2 = 0.05\n",
                          tmp_path=tmp_path)
    assert code == EXIT_NO_RESULT
    assert len(_rows(out)) == 0 and out.startswith("n,alpha,omega2")
    rec = json.loads(err)
    jsonschema.validate(rec, _schema("error"))
    assert rec["exit_code"] == EXIT_NO_RESULT


def test_resonance_rows(capsys, tmp_path):
    code, out, _ = _run(capsys, "resonance", FEASIBLE, tmp_path=tmp_path)
    rows = _rows(out)
    assert code == EXIT_OK and rows
    assert all(abs(float(r["residual"])) < 1e-10 for r in rows)


def test_gate_at_zero_is_identity(capsys, tmp_path):
    code, out, _ = _run(capsys, "gate", FEASIBLE, tmp_path=tmp_path)
    assert code == EXIT_OK
    U = [r for r in _rows(out) if r["quantity"] == "U"]
    assert len(U) == 16
    for r in U:
        assert float(r["value_re"]) == (1.0 if r["row"] == r["col"] else 0.0)
        assert float(r["value_im"]) == 0.0


def test_gate_refuses_weak_coupling(capsys, tmp_path):
    code, _, err = _run(capsys, "gate", FEASIBLE.replace("delta = 0.01", "delta = 0.05"),
                        tmp_path=tmp_path)
    assert code == EXIT_VALIDATION and json.loads(err)["kind"] == "regime"


def test_gate_budget_exhaustion(capsys, tmp_path):
    text = FEASIBLE + "[gate]\ncompare = true\nn_keep = 4\nmax_wall_time = 0.2\n"
    code, _, err = _run(capsys, "gate", text, tmp_path=tmp_path)
    assert code == EXIT_NUMERICAL and json.loads(err)["kind"] == "budget"


def test_simulate(capsys, tmp_path):
    text = MINIMAL.replace("dim = 48", "dim = 24") + "model.g2 = 0.05\nsimulate.t_end = 5\nsimulate.samples = 11\n"
    code, out, _ = _run(capsys, "simulate", text, tmp_path=tmp_path)
    rows = _rows(out)
    assert code == EXIT_OK and len(rows) == 11
    assert float(rows[0]["pop_Phi1"]) == pytest.approx(1.0, abs=1e-12)
    assert all(abs(float(r["norm"]) - 1) < 1e-8 for r in rows)


def test_simulate_bad_initial(capsys, tmp_path):
    code, _, err = _run(capsys, "simulate", MINIMAL + "simulate.initial = cat:9\n", tmp_path=tmp_path)
    assert code == EXIT_VALIDATION
    jsonschema.validate(json.loads(err), _schema("error"))


SWEEP = FEASIBLE + "[sweep]\nparam = model.g2\nstart = 1e-4\nstop = 4e-4\nsteps = 10\n"


def test_sweep_rows_and_axis(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SCCQED_WORKERS", "1")
    code, out, _ = _run(capsys, "sweep", SWEEP, tmp_path=tmp_path)
    rows = _rows(out)
    assert code == EXIT_OK and len(rows) == 10
    assert tuple(rows[0]) == SWEEP_COLUMNS
    axis = [float(r["value"]) for r in rows]
    assert all(b > a for a, b in zip(axis, axis[1:]))
    assert [int(r["index"]) for r in rows] == list(range(10))


def test_sweep_parallel_matches_serial(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SCCQED_WORKERS", "1")
    _, serial, _ = _run(capsys, "sweep", SWEEP, tmp_path=tmp_path)
    monkeypatch.setenv("SCCQED_WORKERS", "3")
    _, parallel, _ = _run(capsys, "sweep", SWEEP, tmp_path=tmp_path)
    assert serial == parallel
    monkeypatch.setenv("SCCQED_WORKERS", "zero")
    code, _, _ = _run(capsys, "sweep", SWEEP, tmp_path=tmp_path)
    assert code == EXIT_VALIDATION


def test_sweep_needs_range(capsys, tmp_path):
    code, _, _ = _run(capsys, "sweep", FEASIBLE, tmp_path=tmp_path)
    assert code == EXIT_VALIDATION


# -- output contract -----------------------------------------------------------

@pytest.mark.parametrize("cmd,text", [
    ("verify", MINIMAL),
    ("resonance", FEASIBLE),
    ("gate", FEASIBLE + "gate.times = 0, 100, 1000\n"),
    ("simulate", MINIMAL.replace("dim = 48", "dim = 24") + "simulate.t_end = 2\nsimulate.samples = 5\n"),
    ("sweep", SWEEP.replace("steps = 10", "steps = 3")),
])
def test_json_validates(capsys, tmp_path, cmd, text):
    code, out, _ = _run(capsys, cmd, text, "--format", "json", tmp_path=tmp_path)
    assert code == EXIT_OK
    doc = json.loads(out)
    jsonschema.validate(doc, _schema(cmd))
    assert parse_config(doc["config"]) == parse_config(text, ["output.format=json"])


def test_csv_deterministic(capsys, tmp_path):
    text = FEASIBLE + "gate.times = 0, 1e3, 1e4\n"
    _, a, _ = _run(capsys, "gate", text, tmp_path=tmp_path)
    _, b, _ = _run(capsys, "gate", text, tmp_path=tmp_path)
    assert a == b and a


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.csv"
    code, out, _ = _run(capsys, "resonance", FEASIBLE, "--output", str(target), tmp_path=tmp_path)
    assert code == EXIT_OK and out == ""
    assert target.read_text().startswith("n,alpha,omega2")


def test_missing_config_file(capsys, tmp_path):
    assert main(["verify", str(tmp_path / "absent.cfg")]) == EXIT_VALIDATION
    rec = json.loads(capsys.readouterr().err)
    jsonschema.validate(rec, _schema("error"))


def test_invalid_config_record(capsys, tmp_path):
    code, _, err = _run(capsys, "verify", MINIMAL + "model.drive_freqs = -1, 1\n", tmp_path=tmp_path)
    rec = json.loads(err)
    assert code == EXIT_VALIDATION
    jsonschema.validate(rec, _schema("error"))
    assert rec["details"][0]["key"] == "model.drive_freqs[0]"


def test_console_entry_point_from_stdin():
    proc = subprocess.run([sys.executable, "-m", "sccqed.cli", "resonance", "-"], input=FEASIBLE,
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == EXIT_OK and proc.stdout.startswith("n,alpha,omega2")
