import csv
import json
import math

import numpy as np
import pytest

from steinerflow import shapes
from steinerflow.cli import EXIT_INPUT, EXIT_OK, EXIT_PROPERTY, EXIT_SOLVER, FK_DISK, SV_DISK, load_domain, main
from steinerflow.domain import read_domain, write_domain

from oracles import rectangle_torsion


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(out):
    rows = (line.split() for line in out.strip().splitlines())
    return {k: float(v) for k, v in rows}


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.txt"
    write_domain(shapes.rectangle(1.0, 1.0, h=1 / 64), path)
    return path


# ---- functionals ----

def test_functionals_unit_square(capsys, square_file):
    code, out, _ = run(capsys, "functionals", square_file)
    assert code == EXIT_OK
    r = report(out)
    assert r["measure"] == pytest.approx(1.0)
    assert r["lambda"] == pytest.approx(2 * math.pi**2, rel=2e-3)
    assert r["torsion"] == pytest.approx(rectangle_torsion(1.0, 1.0), rel=2e-3)
    assert r["lambda"] == pytest.approx(19.74, abs=0.05)
    assert r["torsion"] == pytest.approx(0.0351, abs=2e-4)
    assert r["perimeter"] == pytest.approx(4.0)


def test_functionals_disk_quotients(capsys, tmp_path):
    code, out, _ = run(capsys, "functionals", "shape:disk:radius=1,h=1/64", "--out", tmp_path)
    assert code == EXIT_OK
    r = report(out)
    assert r["faber_krahn"] == pytest.approx(FK_DISK, rel=0.02)
    assert r["saint_venant"] == pytest.approx(SV_DISK, rel=0.02)
    saved = json.loads((tmp_path / "functionals.json").read_text())
    assert saved["lambda"] == pytest.approx(r["lambda"], rel=1e-9)


def test_functionals_malformed_header(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("P1 three 2 0.5\n110\n011\n")
    code, _, err = run(capsys, "functionals", path)
    assert code == EXIT_INPUT
    assert "line 1" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["functionals", "nope.txt"],
        ["functionals", "shape:hexagon"],
        ["functionals", "shape:disk:radius"],
        ["functionals", "shape:disk:colour=1"],
        ["functionals", "shape:disk:radius=one"],
        ["bogus"],
        [],
    ],
)
def test_input_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_INPUT


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == EXIT_OK


def test_solver_failure_exit_code(capsys, square_file):
    code, _, err = run(capsys, "functionals", square_file, "--cg-max-iter", 3)
    assert code == EXIT_SOLVER
    assert "residual" in err


# ---- css ----

def test_css_ellipse(capsys, tmp_path):
    code, _, _ = run(capsys, "css", "shape:ellipse:a=1,b=0.5,h=1/16", "--samples", 17, "--out", tmp_path, "--svg")
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "css.csv")
    assert len(rows) == 17
    assert list(rows[0])[:2] == ["tau", "measure"]
    data = json.loads((tmp_path / "css.json").read_text())
    assert data["jumps"] == []
    assert len(list(tmp_path.glob("css_*.svg"))) == 17


def test_css_notched_has_jump(capsys, tmp_path):
    code, _, _ = run(capsys, "css", "shape:notched:h=1/16", "--theta", math.pi / 2, "--out", tmp_path)
    assert code == EXIT_OK
    assert json.loads((tmp_path / "css.json").read_text())["jumps"]


def test_css_one_sample_is_usage_error(capsys):
    assert run(capsys, "css", "shape:ellipse:h=1/8", "--samples", 1)[0] == EXIT_INPUT


def test_css_stdout(capsys):
    code, out, _ = run(capsys, "css", "shape:ellipse:h=1/8", "--samples", 5)
    assert code == EXIT_OK
    assert len(out.strip().splitlines()) == 6


def test_css_is_reproducible(capsys, tmp_path):
    for name in ("a", "b"):
        assert run(capsys, "css", "shape:lshape:h=1/16", "--theta", 0.4, "--out", tmp_path / name)[0] == EXIT_OK
    assert (tmp_path / "a" / "css.csv").read_bytes() == (tmp_path / "b" / "css.csv").read_bytes()


# ---- symmetrize ----

def test_symmetrize_writes_domain(capsys, tmp_path):
    out = tmp_path / "sym.txt"
    code, _, _ = run(capsys, "symmetrize", "shape:lshape:h=1/16", "--theta", 0, 1.5707963267948966, "-o", out,
                     "--svg", tmp_path / "sym.svg")
    assert code == EXIT_OK
    d = read_domain(out)
    assert d.cell_count == load_domain("shape:lshape:h=1/16").cell_count
    assert np.array_equal(d.mask, d.mask[::-1]) and np.array_equal(d.mask, d.mask[:, ::-1])
    assert (tmp_path / "sym.svg").read_text().startswith("<svg")


# ---- roundtrip ----

def test_roundtrip_rectangle(capsys, tmp_path):
    code, _, _ = run(capsys, "roundtrip", "shape:rectangle:width=2,height=1,h=1/16,margin=6", "--out", tmp_path)
    assert code == EXIT_OK
    data = json.loads((tmp_path / "roundtrip.json").read_text())
    assert data["report"]["converged"]
    assert data["report"]["sym_diff"][-1] < 0.05


def test_roundtrip_nonconverged_exit_codes(capsys, tmp_path):
    argv = ["roundtrip", "shape:rectangle:width=2,height=1,h=1/16,margin=6", "--max-cycles", 1, "--stop-tol", 1e-3]
    assert run(capsys, *argv, "--out", tmp_path / "a")[0] == EXIT_PROPERTY
    assert run(capsys, *argv, "--out", tmp_path / "b", "--warn-only")[0] == EXIT_OK


def test_roundtrip_box_too_small(capsys):
    assert run(capsys, "roundtrip", "shape:rectangle:width=2,height=1,h=1/16,margin=1")[0] == EXIT_INPUT


# ---- repair ----

def test_repair_order_doubling(capsys, tmp_path):
    minus = tmp_path / "notched.txt"
    d = shapes.rectangle(1.0, 1.0, h=1 / 16)
    cut_y = np.zeros((d.ny - 1, d.nx), bool)
    cut_y[d.ny // 2 - 1, 2:-2] = True
    write_domain(d.with_obstructions(cut_y=cut_y), minus)
    code, out, _ = run(capsys, "repair", minus, "--order", 1, 2, 3, "--method", "direct", "--out", tmp_path)
    assert code == EXIT_OK
    incs = [float(line.split("increment ")[1].split(",")[0]) for line in out.strip().splitlines()]
    assert len(incs) == 3
    assert all(b <= a for a, b in zip(incs, incs[1:]))
    for k in (1, 2, 3):
        assert (tmp_path / f"repair_k{k}.csv").exists()


# ---- minmov ----

def test_minmov_lambda_monotone(capsys, tmp_path):
    code, _, _ = run(capsys, "minmov", "shape:rectangle:width=2,height=1,h=1/8,margin=3", "--steps", 6,
                     "--swap-budget", 16, "--out", tmp_path, "--dump-masks", "--svg")
    assert code == EXIT_OK
    lam = [float(r["lambda"]) for r in read_csv(tmp_path / "minmov.csv")]
    assert len(lam) == 7
    assert all(b <= a for a, b in zip(lam, lam[1:]))
    cells = {read_domain(p).cell_count for p in tmp_path.glob("minmov_*.txt")}
    assert cells == {128}


def test_minmov_combination_needs_weights(capsys):
    argv = ["minmov", "shape:disk:radius=0.5,h=1/8", "--functional", "combination", "--steps", 1]
    assert run(capsys, *argv)[0] == EXIT_INPUT
    assert run(capsys, *argv, "--weights", "lambda=0.5,perimeter=0.6")[0] == EXIT_INPUT
    assert run(capsys, *argv, "--weights", "lambda=0.5,perimeter=0.5")[0] == EXIT_OK


# ---- gamma-dist and make-shape ----

def test_gamma_dist(capsys):
    code, out, _ = run(capsys, "gamma-dist", "shape:disk:radius=1,h=1/16", "shape:disk:radius=1,h=1/16")
    assert code == EXIT_OK and float(out) == 0.0
    code, out, _ = run(capsys, "gamma-dist", "shape:disk:radius=1,h=1/16", "shape:disk:radius=0.9,h=1/16")
    assert code == EXIT_OK and 0.05 < float(out) < 0.12
    assert run(capsys, "gamma-dist", "shape:disk:h=1/16", "shape:disk:h=1/8")[0] == EXIT_INPUT


def test_make_shape(capsys, tmp_path):
    out = tmp_path / "rect2x1.txt"
    code, text, _ = run(capsys, "make-shape", "rect2x1:h=1/8", out, "--svg", tmp_path / "rect2x1.svg")
    assert code == EXIT_OK and "masked" in text
    assert read_domain(out) == load_domain("shape:rect2x1:h=1/8")


# ---- configuration ----

def test_config_file_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 5, "theta": 0.3}))
    code, out, _ = run(capsys, "css", "shape:ellipse:h=1/8", "--config", cfg)
    assert code == EXIT_OK and len(out.strip().splitlines()) == 6
    code, out, _ = run(capsys, "css", "shape:ellipse:h=1/8", "--config", cfg, "--samples", 3)
    assert code == EXIT_OK and len(out.strip().splitlines()) == 4


@pytest.mark.parametrize("content", ['{"sample_count": 5}', "[1, 2]", "{not json"])
def test_config_errors(capsys, tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run(capsys, "css", "shape:ellipse:h=1/8", "--config", cfg)[0] == EXIT_INPUT


def test_missing_config(capsys, tmp_path):
    assert run(capsys, "css", "shape:ellipse:h=1/8", "--config", tmp_path / "none.json")[0] == EXIT_INPUT
