import json

import pytest

from tmsl.cli import main


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_ba(capsys):
    code, out, _ = run(capsys, "simulate", "--input", "BA", "--t", "2")
    assert code == 0
    assert "BA,accept,accept,OK" in out
    assert out.startswith("# {") and '"schema": "tmsl-report/1"' in out


def test_simulate_zero_steps(capsys):
    code, out, _ = run(capsys, "simulate", "--input", "BA", "--t", "0")
    assert code == 0 and "BA,reject,reject,OK" in out


def test_malformed_machine(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text('{"alphabet": ["_", "A"],\n "states": ')
    code, _, err = run(capsys, "simulate", "--machine", str(bad))
    assert code == 2 and "line 2" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "geometry", "--machine", "/nonexistent.json")
    assert code == 2


def test_geometry_report(tmp_path, capsys):
    out = tmp_path / "g"
    code, _, _ = run(capsys, "geometry", "--out", str(out), "--coords", "13")
    assert code == 0
    doc = json.loads((out / "geometry.json").read_text())
    rep = doc["report"]
    assert doc["schema"] == "tmsl-report/1"
    assert rep["rank"] == 4
    assert rep["relevant_coordinates"] == [3, 13, 18, 23, 24, 25]
    assert rep["hessian_block"]["scale"] == {"num": "1", "den": "3"}
    assert rep["hessian_block"]["rational_roots"] == ["3"]
    assert rep["restricted_hessian"]["values"] == [["1/3"]]
    assert rep["newton"]["certified_bound"] == {"num": "15", "den": "1"}
    assert rep["error_correction_order"] == 0
    assert "w24 (B,reject) direction R->S" in (out / "geometry.txt").read_text()


def test_geometry_is_deterministic(tmp_path, capsys):
    out = tmp_path / "g"
    run(capsys, "geometry", "--out", str(out), "--kmax", "1", "--seed", "3")
    first = (out / "geometry.json").read_bytes(), (out / "geometry.txt").read_bytes()
    run(capsys, "geometry", "--out", str(out), "--kmax", "1", "--seed", "3")
    assert ((out / "geometry.json").read_bytes(), (out / "geometry.txt").read_bytes()) == first


def test_kmax_one_hessian_is_exact(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "geometry", "--out", str(a), "--kmax", "1")
    run(capsys, "geometry", "--out", str(b), "--kmax", "2")
    ra = json.loads((a / "geometry.json").read_text())["report"]
    rb = json.loads((b / "geometry.json").read_text())["report"]
    assert ra["hessian_block"]["primitive"] == rb["hessian_block"]["primitive"]


def test_budget_guard_exit(capsys):
    code, _, err = run(capsys, "geometry", "--kmax", "0")
    assert code == 3 and "resource guard" in err


def test_tables_k24(capsys):
    code, out, _ = run(capsys, "tables", "--coords", "24")
    assert code == 0
    rows = [l for l in out.splitlines() if l.startswith("24,")]
    errors = {(r.split(",")[3], r.split(",")[-1]) for r in rows if r.split(",")[-2] != "0"}
    assert errors == {("BA", "e3;e5")}


def test_tables_all_coordinates(tmp_path, capsys):
    code, _, _ = run(capsys, "tables", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "tables.csv").read_text().splitlines()[2:]
    nonzero = sorted({int(l.split(",")[0]) for l in lines if l.split(",")[-2] != "0"})
    assert nonzero == [3, 13, 18, 23, 24, 25]


def test_tables_bad_coordinate(capsys):
    code, _, err = run(capsys, "tables", "--coords", "31")
    assert code == 2 and "outside 1..30" in err


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("TMSL_THREADS", "2")
    code, out, _ = run(capsys, "simulate", "--input", "A")
    assert code == 0 and '"threads": 2' in out
    monkeypatch.setenv("TMSL_THREADS", "many")
    code, _, _ = run(capsys, "simulate", "--input", "A")
    assert code == 2


def test_simulate_mismatch_exit(monkeypatch, capsys):
    import tmsl.cli as cli
    monkeypatch.setattr(cli, "utm_run_cycles", lambda x, spec, t: 1 - cli.tm_run(x, spec, t))
    code, out, _ = run(capsys, "simulate", "--input", "A")
    assert code == 1 and "MISMATCH" in out


def test_free_energy_csv(tmp_path, capsys):
    code, _, _ = run(capsys, "free-energy", "--coords", "18", "--mu", "0.5", "--samples", "4000",
                     "--replicates", "3", "--n-grid", "100,1000", "--out", str(tmp_path))
    assert code == 0
    text = (tmp_path / "free_energy.csv").read_text()
    assert "n,F_n_minus_nL_n_star,stderr" in text and "# slope" in text


def test_free_energy_needs_coords(capsys):
    code, _, _ = run(capsys, "free-energy")
    assert code == 2


def test_builtin_problem(capsys):
    code, out, _ = run(capsys, "simulate", "--machine", "two_branch", "--problem", "two_branch_problem")
    assert code == 0 and "A,accept,accept,OK" in out


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
