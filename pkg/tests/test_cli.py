import csv
import io
import math

import numpy as np
import pytest

from fracspde.cli import EXIT_CONTRACT, EXIT_INVALID, EXIT_OK, config_hash, parse_config_text, resolve, run


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def _table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# fracspde ")
    rows = list(csv.reader(lines[1:]))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def test_validate_exit_codes():
    code, out, _ = _run("validate", "--beta", "0.8", "--gamma", "0.6")
    assert code == EXIT_OK and "accepted" in out
    code, out, err = _run("validate", "--beta", "0.4", "--gamma", "0.95")
    assert code == EXIT_INVALID and out == "" and "gamma < beta + 1/2" in err
    code, _, _ = _run("validate", "--beta", "0.8", "--gamma", "0.6", "--sigma-nonzero", "true")
    assert code == EXIT_INVALID


def test_ml_eval_matches_the_exponential():
    code, out, _ = _run("ml-eval", "--beta", "1", "--gamma-ml", "1", "--z", "-5..2", "--points", "15")
    assert code == EXIT_OK
    header, rows = _table(out)
    assert header == ["z", "value"] and len(rows) == 15
    z, v = np.array(rows).T
    np.testing.assert_allclose(v, np.exp(z), rtol=1e-10)


def test_gronwall_check_rows_and_bound(tmp_path):
    path = tmp_path / "g.csv"
    code, _, _ = _run("gronwall-check", "--N", "2048", "--output", str(path))
    assert code == EXIT_OK
    header, rows = _table(path.read_text())
    assert header == ["t", "iterate", "bound"] and len(rows) == 2049
    _, it, bd = np.array(rows).T
    assert np.all(it <= bd * (1 + 1e-4))


def test_gronwall_check_reports_an_unresolved_grid():
    code, _, err = _run("gronwall-check", "--N", "8")
    assert code == EXIT_CONTRACT and "exceeds the bound" in err


def test_kernel_table_and_simulate_row_counts():
    code, out, _ = _run("kernel-table", "--N", "10", "--lam", "0,1,4")
    header, rows = _table(out)
    assert code == EXIT_OK and header == ["t", "lam", "p", "q", "P"] and len(rows) == 30
    code, out, _ = _run("simulate", "--N", "12", "--n", "8", "--noise", "mode", "--g-amp", "0.5", "--seed", "3")
    header, rows = _table(out)
    assert code == EXIT_OK and len(rows) == 13 and header[0] == "t"
    assert all(math.isfinite(x) for r in rows for x in r)


def test_output_is_byte_identical_for_equal_config_and_seed(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("# a run\nN = 16\nn = 8\nnoise = white\nseed = 42\n")
    a = _run("simulate", str(cfg))[1]
    b = _run("simulate", str(cfg))[1]
    c = _run("simulate", str(cfg), "--seed", "43")[1]
    assert a == b and a != c
    assert "seed=42" in a.splitlines()[0]
    base = ("mc-verify", "--M", "40", "--N", "8", "--n", "4")
    assert _run(*base, "--workers", "1")[1] == _run(*base, "--workers", "4")[1]


def test_flags_override_the_file(tmp_path):
    cfg = tmp_path / "ml.cfg"
    cfg.write_text("beta = 0.5\npoints = 4\n")
    _, rows = _table(_run("ml-eval", str(cfg), "--points", "6")[1])
    assert len(rows) == 6


@pytest.mark.parametrize("text,key", [("beta = abc\n", "ml-eval.beta"), ("points = x\n", "ml-eval.points"),
                                      ("colour = red\n", "ml-eval.colour"), ("beta\n", "bad.cfg:1")])
def test_config_errors_name_the_key(tmp_path, text, key):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, out, err = _run("ml-eval", str(cfg))
    assert code == EXIT_INVALID and out == ""
    assert key in err


def test_list_element_errors_are_indexed():
    code, _, err = _run("kernel-table", "--lam", "0,1,oops")
    assert code == EXIT_INVALID and "kernel-table.lam[2]" in err


def test_missing_config_and_unknown_flag():
    assert _run("ml-eval", "/nonexistent/x.cfg")[0] == EXIT_INVALID
    assert _run("ml-eval", "--colour", "red")[0] == EXIT_INVALID
    assert _run("--version")[0] == EXIT_OK


def test_config_parsing_rules():
    assert parse_config_text("a = 1  # note\n\n b=x\n") == {"a": "1", "b": "x"}
    with pytest.raises(Exception):
        parse_config_text("a = 1\na = 2\n")
    p = resolve("ml-eval", {}, {})
    assert config_hash("ml-eval", p) == config_hash("ml-eval", dict(p, output="elsewhere.csv"))
    assert config_hash("ml-eval", p) != config_hash("ml-eval", dict(p, beta=0.55))


def test_mc_verify_small_ensemble():
    code, out, _ = _run("mc-verify", "--M", "200", "--N", "16", "--n", "4", "--seed", "1")
    header, rows = _table(out)
    assert code == EXIT_OK and len(rows) == 1
    row = dict(zip(header, rows[0]))
    assert abs(row["z"]) <= 3 and row["passed"] == 1


def test_probe_in_exact_mode(tmp_path):
    code, out, err = _run("regularity-probe", "--method", "exact", "--sigma-list", "0.5,2.0")
    header, rows = _table(out)
    assert code == EXIT_OK and header == ["sigma", "n", "estimate", "stderr", "ratio"] and len(rows) == 6
    assert "expected growing, observed" in err


def test_workers_environment_variable(monkeypatch):
    from fracspde.norm_estimator import default_workers
    monkeypatch.setenv("FRACSPDE_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("FRACSPDE_WORKERS", "zero")
    with pytest.raises(Exception):
        default_workers()


def test_plot_report(tmp_path):
    pytest.importorskip("matplotlib")
    from fracspde.plotting import main
    csv_path, png = tmp_path / "p.csv", tmp_path / "p.png"
    _run("regularity-probe", "--method", "exact", "--sigma-list", "0.5,2.0", "--output", str(csv_path))
    assert main([str(csv_path), str(png)]) == 0
    assert png.stat().st_size > 0
