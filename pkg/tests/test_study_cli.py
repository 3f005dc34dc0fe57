import json

import numpy as np
import pytest

from hofv import cli
from hofv.analysis import ROUNDOFF_FLOOR
from hofv.errors import ConfigError, SingularSystem
from hofv.study import (CSV_COLUMNS, SolverFailure, StudyConfig, format_csv, parse_int_list,
                        run_study, solve_level)
from hofv.problems import get_problem


def test_parse_int_list():
    assert parse_int_list("1..4") == [1, 2, 3, 4]
    assert parse_int_list("3,4") == [3, 4]
    assert parse_int_list("1..2,5") == [1, 2, 5]
    with pytest.raises(ConfigError):
        parse_int_list("a,b")


@pytest.mark.parametrize("kwargs", [
    {"k": [0]}, {"k": [13]}, {"levels": [3, 2]}, {"levels": [2, 2]}, {"problem": "nope"},
    {"solver": "cg"}, {"tol": 1e-16}, {"load_quad": 2, "k": [3]}, {"format": ["pdf"]},
    {"grad_norm": "l2"},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        StudyConfig(**kwargs)


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"k": [2], "levels": "1..3", "problem": "separable", "load-quad": 6}))
    cfg = StudyConfig.from_file(path, k=[3], problem=None)
    assert cfg.k == [3] and cfg.levels == [1, 2, 3] and cfg.problem == "separable"
    assert cfg.load_quad == 6
    path.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(ConfigError):
        StudyConfig.from_file(path)
    with pytest.raises(ConfigError):
        StudyConfig.from_file(tmp_path / "missing.json")


def test_zero_problem_single_level(tmp_path):
    cfg = StudyConfig(problem="zero", k=[1], levels=[1], out=str(tmp_path))
    rep = run_study(cfg)[1]
    assert all(v == 0.0 for v in rep.levels[0].errors.values())
    lines = (tmp_path / "zero_k1.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    cells = lines[1].split(",")
    assert cells[7:10] == ["", "", ""]


def test_polynomial_problem_exact(tmp_path):
    cfg = StudyConfig(problem="polynomial", k=[2, 3], levels=[1, 2, 3], out=str(tmp_path))
    for rep in run_study(cfg).values():
        assert all(lev.errors["e_N"] <= 1e-10 for lev in rep.levels)
        # rates at the floor are absent
        assert all(r is None for r in rep.rates["e_N"])


def test_outputs_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_study(StudyConfig(problem="paper", k=[2], levels=[1, 2, 3], out=str(out)))
    for name in ("paper_k2.csv", "paper_k2.md", "paper_k2_plot.dat"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ca, cb = (json.loads((d / "paper_config.json").read_text()) for d in (a, b))
    assert ca.pop("out") != cb.pop("out") and ca == cb
    rows = [line.split(",") for line in (a / "paper_k2.csv").read_text().splitlines()[1:]]
    assert [r[0] for r in rows] == ["2", "4", "8"]
    for r in rows:
        for cell in r[1:]:
            if cell:
                mant = cell.split("e")[0].lstrip("-")
                assert len(mant.replace(".", "")) == 6
    plot = (a / "paper_k2_plot.dat").read_text()
    assert plot.count("# series") == 5
    block = plot.split("\n\n\n")[0].splitlines()
    assert np.allclose(float(block[2].split()[0]), np.log10(0.5))


def test_rate_cells_obey_floor():
    cfg = StudyConfig(problem="paper", k=[4], levels=[3, 4, 5], out="unused")
    rep = run_study(cfg, write=False)[4]
    for kind, rates in rep.rates.items():
        for a, b, r in zip(rep.levels, rep.levels[1:], rates):
            floored = a.errors[kind] <= ROUNDOFF_FLOOR or b.errors[kind] <= ROUNDOFF_FLOOR
            assert (r is None) == floored
    csv = format_csv(rep).splitlines()
    assert csv[-1].split(",")[9] == ""  # e_N at N=32 is below the floor


def test_iterative_solver_path():
    run = solve_level(get_problem("paper"), 2, 8, solver="iterative", tol=1e-12)
    ref = solve_level(get_problem("paper"), 2, 8)
    assert run.result.errors["e_L"] == pytest.approx(ref.result.errors["e_L"], rel=1e-6)


def test_solver_failure_carries_context(monkeypatch):
    import hofv.study as study

    def boom(A, b, **kw):
        raise SingularSystem("forced")
    monkeypatch.setattr(study, "solve_direct", boom)
    with pytest.raises(SolverFailure) as info:
        solve_level(get_problem("paper"), 3, 4)
    assert (info.value.k, info.value.N) == (3, 4)


def test_cli_study(tmp_path, capsys):
    code = cli.main(["study", "--k", "2", "--levels", "1..2", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "paper_k2.csv").exists()
    assert "| N |" in capsys.readouterr().out


def test_cli_config_and_flag(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"k": [3], "levels": [1], "format": ["csv"], "out": str(tmp_path / "o")}))
    assert cli.main(["study", "--config", str(path), "--problem", "separable"]) == 0
    assert (tmp_path / "o" / "separable_k3.csv").exists()
    assert not (tmp_path / "o" / "separable_k3.md").exists()


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.main(["study", "--k", "0", "--out", str(tmp_path)]) == 2
    assert cli.main(["study", "--config", str(tmp_path / "missing.json")]) == 2
    import hofv.study as study

    def boom(A, b, **kw):
        raise SingularSystem("forced")
    monkeypatch.setattr(study, "solve_direct", boom)
    assert cli.main(["study", "--k", "2", "--levels", "1", "--out", str(tmp_path)]) == 3
    assert "k=2, N=2" in capsys.readouterr().err


def test_cli_verify(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 7


def test_cli_verify_failure(monkeypatch):
    import hofv.verify as verify
    monkeypatch.setitem(verify.CHECKS, "broken", lambda: (False, "forced"))
    assert cli.main(["verify"]) == 1
