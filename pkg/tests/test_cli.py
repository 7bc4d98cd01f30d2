import csv
import io
import json

import pytest

from lcbc.cli import run


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_capacity_row(capsys):
    code, out, _ = call(capsys, "capacity", "--K", "3", "--d", "3", "--m", "1", "--mp", "1")
    assert code == 0
    row = _csv(out)[0]
    assert row["delta_g"] == "3/2" and row["C_g"] == "2/3" and row["regime"] == "nontrivial"


def test_capacity_theorem_flags(capsys):
    code, out, _ = call(capsys, "capacity", "--K", "4", "--d", "4", "--m", "2", "--mp", "1", "--large-k")
    assert code == 0 and _csv(out)[0]["delta_g"] == "8/3"
    code, out, _ = call(capsys, "capacity", "--K", "3", "--d", "5", "--m", "1", "--mp", "1", "--one-dim")
    assert code == 0 and _csv(out)[0]["delta_g"] == "2"
    code, _, err = call(capsys, "capacity", "--K", "5", "--d", "4", "--m", "1", "--mp", "1", "--small-k")
    assert code == 1 and err.startswith("error: BadK")
    code, _, _ = call(capsys, "capacity", "--K", "3", "--d", "5", "--m", "1", "--mp", "1", "--one-dim", "--large-k")
    assert code == 2


def test_bounds_json(capsys):
    code, out, _ = call(capsys, "bounds", "--K", "4", "--d", "4", "--m", "1", "--mp", "1", "--format", "json")
    rec = json.loads(out)[0]
    assert code == 0 and rec["lower"] == rec["upper"] == rec["delta_g"] == "2"


def test_usage_errors(capsys):
    assert call(capsys, "nonsense")[0] == 2
    assert call(capsys, "capacity", "--K", "1")[0] == 2
    assert call(capsys, "capacity", "--K", "1", "--d", "1", "--m", "1", "--mp", "1", "--bogus")[0] == 2
    assert call(capsys, "gen-instance", "--toy", "--K", "3")[0] == 2
    assert call(capsys, "estimate", "--event", "full_rank", "--params", "d")[0] == 2


def test_gen_instance(tmp_cwd, capsys):
    argv = ["gen-instance", "--p", "2", "--n", "12", "--K", "4", "--d", "4", "--m", "1", "--mp", "1", "--seed", "7"]
    assert call(capsys, *argv, "--out", "a.json")[0] == 0
    assert call(capsys, *argv, "--out", "b.json")[0] == 0
    assert (tmp_cwd / "a.json").read_bytes() == (tmp_cwd / "b.json").read_bytes()
    code, _, err = call(capsys, "gen-instance", "--p", "4", "--n", "1", "--K", "1", "--d", "1", "--m", "1", "--mp", "1")
    assert code == 1 and "NonPrime" in err


def test_toy_pipeline(tmp_cwd, capsys):
    assert call(capsys, "gen-instance", "--toy", "--p", "7", "--n", "1", "--out", "toy.json")[0] == 0
    assert (tmp_cwd / "toy.scheme.json").exists()
    code, out, _ = call(capsys, "simulate", "--instance", "toy.json", "--scheme", "toy.scheme.json", "--exhaustive")
    row = _csv(out)[0]
    assert code == 0 and row["trials"] == row["successes"] == "2401"


@pytest.mark.parametrize(
    "kind,gen,extra",
    [
        ("separate", ["--p", "3", "--n", "2", "--K", "3", "--d", "4", "--m", "1", "--mp", "2"], []),
        ("random-coding", ["--p", "2", "--n", "8", "--K", "3", "--d", "3", "--m", "2", "--mp", "1"], []),
        ("odd-d", ["--p", "2", "--n", "12", "--K", "3", "--d", "5", "--m", "1", "--mp", "1"], []),
        ("ia", ["--p", "2", "--n", "16", "--K", "2", "--d", "4", "--m", "1", "--mp", "1"], ["--N", "1"]),
    ],
)
def test_build_and_simulate(tmp_cwd, capsys, kind, gen, extra):
    assert call(capsys, "gen-instance", *gen, "--out", "inst.json")[0] == 0
    assert call(capsys, "build-scheme", "--type", kind, "--instance", "inst.json", *extra, "--out", "s.json")[0] == 0
    code, out, _ = call(capsys, "simulate", "--instance", "inst.json", "--scheme", "s.json", "--trials", "200")
    row = _csv(out)[0]
    assert code == 0 and row["successes"] == "200"
    assert row["broadcast_len_p"] == row["declared_len_p"]


def test_ia_without_override_fails_cleanly(tmp_cwd, capsys):
    call(capsys, "gen-instance", "--p", "2", "--n", "3", "--K", "2", "--d", "4", "--m", "1", "--mp", "1", "--out", "i.json")
    code, _, err = call(capsys, "build-scheme", "--type", "ia", "--instance", "i.json")
    assert code == 1 and "NTooSmall" in err


def test_certificates(tmp_cwd, capsys):
    call(capsys, "gen-instance", "--p", "2", "--n", "16", "--K", "5", "--d", "10", "--m", "3", "--mp", "3", "--out", "f.json")
    code, out, _ = call(capsys, "converse-cert", "--instance", "f.json")
    assert code == 0
    summary, table = out.split("\ni,")
    assert _csv(summary)[0]["implied_bound"] == "5"
    code, out, _ = call(capsys, "converse-cert", "--instance", "f.json", "--format", "json")
    assert json.loads(out)["upsilon_ranks"][:2] == [2, 4]
    code, _, err = call(capsys, "check-conditions", "--instance", "f.json")
    assert code == 1 and "BadK" in err
    call(capsys, "gen-instance", "--p", "2", "--n", "14", "--K", "3", "--d", "3", "--m", "1", "--mp", "1", "--out", "c.json")
    code, out, _ = call(capsys, "check-conditions", "--instance", "c.json")
    assert code == 0 and {r["condition"] for r in _csv(out)} == {f"C{i}" for i in range(1, 7)}
    code, out, _ = call(capsys, "check-en", "--instance", "f.json", "--N", "1")
    row = _csv(out)[0]
    assert code == 0 and row["eta"] == "1" and row["en_holds"] == "true"


def test_estimate_and_sweep(tmp_cwd, capsys):
    code, out, _ = call(capsys, "estimate", "--event", "full_rank", "--params", "d=4", "widths=4", "--trials", "500")
    row = _csv(out)[0]
    assert code == 0 and row["trials"] == "500" and float(row["ci_low"]) <= float(row["frequency"])
    (tmp_cwd / "g.toml").write_text('[grid]\nK = [1, 2]\nd = {start = 0, stop = 6}\nm = 1\nmp = 1\n')
    assert call(capsys, "sweep", "--config", "g.toml", "--out", "g.csv")[0] == 0
    rows = _csv((tmp_cwd / "g.csv").read_text())
    assert len(rows) == 14 and rows[-1]["delta_g"] == "2"
    (tmp_cwd / "e.toml").write_text('[grid]\nK = []\n')
    assert call(capsys, "sweep", "--config", "e.toml")[1].count("\n") == 1
    (tmp_cwd / "bad.toml").write_text("[grid\n")
    assert call(capsys, "sweep", "--config", "bad.toml")[0] == 1
    assert call(capsys, "sweep", "--config", "missing.toml")[0] == 1


def test_quiet_suppresses_stdout(capsys):
    code, out, _ = call(capsys, "capacity", "--K", "1", "--d", "1", "--m", "1", "--mp", "1", "--quiet")
    assert code == 0 and out == ""
