import json
import math

import numpy as np
import pytest

from susylevy import cli
from susylevy.errors import ConvergenceError, DomainError
from susylevy.levy_core import LevyProcessSpec, spec_from_dict, spec_to_json
from susylevy.solvable import gamma_infinity_hermite
from susylevy.tables import CSV_HEADER, DosTable


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- DosTable ---------------------------------------------------------------

def test_table_validation():
    with pytest.raises(DomainError):
        DosTable([1.0, 1.0], [0, 0], [0, 0], [0, 0], "cf")
    with pytest.raises(DomainError):
        DosTable([1.0, 2.0], [0], [0, 0], [0, 0], "cf")


def test_table_csv_round_trip(tmp_path):
    E = np.array([1e-7, 0.1, 1.0, 12345.678])
    t = DosTable(E, [1e-300, 0.25, 1 / 3, 35.0], [0.1, 0.2, 0.3, 0.4], [0.0, 1e-9, 0.0, 2.0], "closed",
                 {"seed": 5, "spec": "{}"})
    p, side = t.write(tmp_path / "t.csv")
    back = DosTable.read(p)
    assert np.array_equal(back.E, t.E) and np.array_equal(back.N, t.N)
    assert back.method == t.method and back.metadata == t.metadata
    text = p.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    # dot decimal, one comma per field separator
    for line in text.splitlines()[1:]:
        fields = line.split(",")
        assert len(fields) == 5
        for f in fields[:4]:
            float(f)
            assert " " not in f


def test_monotone_check():
    t = DosTable([1.0, 2.0, 3.0], [0.1, 0.09, 0.2], [0, 0, 0], [0.0, 0.0, 0.0], "cf")
    assert not t.is_monotone()
    t = DosTable([1.0, 2.0, 3.0], [0.1, 0.09, 0.2], [0, 0, 0], [0.01, 0.01, 0.0], "mc")
    assert t.is_monotone()


# -- CLI --------------------------------------------------------------------

def test_cli_drift_table(capsys):
    code, out, _ = run(capsys, "table", "--spec", "drift a=1", "--method", "cf",
                       "--emin", "1.5", "--emax", "9", "--points", "8")
    assert code == 0
    t = DosTable.from_csv_text(out)
    assert np.allclose(t.N, np.sqrt(t.E - 1) / math.pi, atol=1e-8)


def test_cli_spec_round_trip(tmp_path, capsys):
    spec = LevyProcessSpec.hermite(1.0, 0.5)
    f = tmp_path / "spec.json"
    f.write_text(spec_to_json(spec))
    out = tmp_path / "h.csv"
    code, _, _ = run(capsys, "table", "--spec", str(f), "--method", "closed", "--grid", "0.5,1,2",
                     "--out", str(out))
    assert code == 0
    meta = json.loads((tmp_path / "h.csv.json").read_text())
    assert spec_from_dict(json.loads(meta["spec"])) == spec
    assert meta["grid"] == [0.5, 1.0, 2.0] and "version" in meta and "seed" in meta


def test_cli_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"spec": "drift a=0", "emin": 1.0, "emax": 4.0, "points": 2, "method": "closed"}))
    code, out, _ = run(capsys, "table", "--config", str(cfg), "--points", "4")
    assert code == 0
    t = DosTable.from_csv_text(out)
    assert len(t) == 4 and t.method == ["closed"] * 4


def test_cli_exit_codes(capsys, monkeypatch):
    code, _, err = run(capsys, "table", "--spec", "hermite p=-1 q=1")
    assert code == 2 and "error" in err
    code, _, _ = run(capsys, "table", "--spec", "brownian mu=0 g=1", "--method", "cf")
    assert code == 2
    code, _, _ = run(capsys, "table", "--spec", "nonsense x=1")
    assert code == 2

    def boom(*a, **k):
        raise ConvergenceError("forced", {})
    monkeypatch.setattr(cli, "compute_point", boom)
    code, _, err = run(capsys, "table", "--spec", "drift a=1", "--grid", "2")
    assert code == 3 and "converge" in err


def test_cli_negative_grid(capsys):
    code, out, _ = run(capsys, "table", "--spec", "hermite p=1 q=1", "--method", "closed",
                       "--grid=-2,-1")
    assert code == 0
    t = DosTable.from_csv_text(out)
    assert np.all(t.N == 0) and np.all(t.gamma > 0)


def test_cli_mc_reproducible(capsys):
    args = ("table", "--spec", "expoisson rho=1 q=1", "--method", "mc", "--grid", "1",
            "--seed", "7", "--length", "2000", "--trajectories", "2")
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0 and out1 == out2
    t = DosTable.from_csv_text(out1)
    assert 0 < t.N[0] < 1


def test_cli_seed_drawn_and_printed(capsys):
    code, _, err = run(capsys, "paths", "--spec", "drift a=1", "--length", "0.01", "--dt", "0.005")
    assert code == 0 and err.startswith("seed: ")


def test_cli_compare(capsys):
    code, out, _ = run(capsys, "compare", "--spec", "hermite p=1 q=1", "--no-mc",
                       "--emin", "-5", "--emax", "-0.1", "--points", "6")
    assert code == 0 and "# overall: PASS" in out
    diffs = [float(l.split(",")[5]) for l in out.splitlines() if l and not l.startswith(("#", "E,"))]
    assert max(diffs) < 1e-6


def test_cli_compare_brownian_skips_cf(capsys):
    code, out, _ = run(capsys, "compare", "--spec", "brownian mu=0 g=1", "--grid", "1",
                       "--seed", "3", "--length", "500", "--trajectories", "2", "--dt", "0.004")
    assert "cf: skipped" in out
    assert code in (0, 1)
    assert all(",cf," not in l for l in out.splitlines())


def test_cli_compare_drift_three_routes(capsys):
    code, out, _ = run(capsys, "compare", "--spec", "drift a=0", "--grid", "4", "--seed", "1",
                       "--length", "2000", "--trajectories", "2")
    assert code == 0
    assert out.count("PASS") >= 3


def test_cli_asymptotics(capsys):
    code, out, _ = run(capsys, "asymptotics", "--spec", "gamma b=1", "--catalog-only")
    assert code == 0
    rep = json.loads(out)
    assert rep["leading"] == "ln N ~ -ln(1/E)/sqrt(E)"
    code, out, _ = run(capsys, "asymptotics", "--spec", "hermite p=1 q=1", "--method", "closed",
                       "--emin", "1e-3", "--emax", "1e-2", "--points", "10", "--log")
    assert code == 0
    fit = json.loads(out)["fit"]
    assert fit["algebraic_power"] == pytest.approx(-0.5, abs=0.05)


def test_cli_paths_staircase(capsys):
    code, out, _ = run(capsys, "paths", "--spec", "expoisson rho=1 q=1", "--seed", "2",
                       "--length", "20", "--dt", "0.01")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# seed=2"
    w = np.array([float(l.split(",")[1]) for l in lines[lines.index("x,W") + 1:]])
    assert np.all(np.diff(w) >= 0) and w[-1] > 0


def test_cli_paths_histogram(capsys):
    code, out, _ = run(capsys, "paths", "--spec", "expoisson rho=1 q=1", "--seed", "2",
                       "--length", "500", "--histogram-E", "-0.25")
    assert code == 0
    rows = [l for l in out.splitlines() if l and l[0] not in "#z"]
    assert sum(float(r.split(",")[2]) for r in rows) == pytest.approx(1.0)


def test_cli_specfun(capsys):
    code, out, _ = run(capsys, "specfun", "gamma", "--x", "0.5")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(math.sqrt(math.pi))
    code, out, _ = run(capsys, "specfun", "pcfd", "--nu", "-1", "--z", "1j")
    assert code == 0 and len(json.loads(out)["value"]) == 2


@pytest.mark.parametrize("q", [0.2, 0.5, 1.0, 2.0, 5.0])
def test_hermite_family_tables(q, capsys):
    code, out, _ = run(capsys, "table", "--spec", f"hermite p=1 q={q}", "--method", "closed",
                       "--emin", "0.05", "--emax", "10", "--points", "50", "--log")
    assert code == 0
    t = DosTable.from_csv_text(out)
    assert t.is_monotone()
    assert t.N[-1] == pytest.approx(math.sqrt(10) / math.pi, rel=0.1)
    code, out, _ = run(capsys, "table", "--spec", f"hermite p=1 q={q}", "--method", "closed", "--grid", "1e4")
    g = DosTable.from_csv_text(out).gamma[0]
    assert g == pytest.approx(gamma_infinity_hermite(1.0, q), abs=1e-3)
