import csv
import io

import numpy as np
import pytest

from errbound.analyzer import analyze
from errbound.cli import EXIT_CODES, main
from errbound.exceptions import ParseError, ProblemValidationError
from errbound.io import (
    PLOT_COLUMNS,
    RADII_COLUMNS,
    emit_plot_data,
    machine_sections,
    parse_excess_file,
    parse_problem,
    problem_from_text,
    problem_to_text,
)
from instances import random_surjective_instance

CUBIC = """\
[f]
pieces = [[1, -1]]

[g]
kind = "polynomial"
coefficients = [[1]]
exponents = [[3]]

[point]
x = [1]
"""

FLAT_CUBIC = CUBIC.replace("[[1, -1]]", "[[1, 0]]").replace("x = [1]", "x = [0]")

INTERIOR = """\
[f]
pieces = [[1, -1]]

[g]
kind = "affine"
matrix = [[1]]

[point]
x = [0]
"""

EXCESS = """\
[C]
normals = [[1, 0], [0, 1]]
offsets = [1, 1]

[D]
normals = [[1, 0], [0, 1]]
offsets = [0, 0]
"""


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write


# -- parsing -------------------------------------------------------------------


def test_parse_cubic_file(write):
    p = parse_problem(write("cubic.toml", CUBIC))
    assert p.phi(np.array([1.0])) == 0.0
    assert p.radii == (1e-1, 1e-2, 1e-3)


def test_empty_f_rejected():
    with pytest.raises(ProblemValidationError, match="at least one piece"):
        problem_from_text(CUBIC.replace("[[1, -1]]", "[]"))


def test_infeasible_point_rejected():
    with pytest.raises(ProblemValidationError, match="not in solution set"):
        problem_from_text(CUBIC.replace("[[1, -1]]", "[[1, -0.5]]"))


def test_syntax_error_has_location():
    with pytest.raises(ParseError) as info:
        problem_from_text(CUBIC.replace("exponents = [[3]]", "exponents = [[3]"))
    assert info.value.line is not None and info.value.column is not None
    assert str(info.value).startswith(f"line {info.value.line}")


def test_unknown_map_kind_and_tolerance():
    with pytest.raises(ProblemValidationError, match="unknown kind"):
        problem_from_text(CUBIC.replace('"polynomial"', '"spline"'))
    with pytest.raises(ProblemValidationError, match="unknown tolerance"):
        problem_from_text(CUBIC + "\n[options.tolerances]\nfoo = 1\n")


def test_options_are_applied():
    p = problem_from_text(CUBIC + "\n[options]\nradii = [0.5, 5e-2]\nsamples = 20\nseed = 7\n")
    assert p.radii == (0.5, 0.05) and p.samples_per_radius == 20 and p.seed == 7


def test_round_trip_is_lossless():
    rng = np.random.default_rng(0)
    p = random_surjective_instance(rng, 2, 2, radii=(0.1, 0.01), samples_per_radius=30, seed=5)
    q = problem_from_text(problem_to_text(p))
    np.testing.assert_array_equal(q.f.slopes, p.f.slopes)
    np.testing.assert_array_equal(q.g.matrices, p.g.matrices)
    np.testing.assert_array_equal(q.x_bar, p.x_bar)
    assert q.radii == p.radii and q.tolerances == p.tolerances
    assert machine_sections(analyze(p), 2) == machine_sections(analyze(q), 2)


def test_composite_map_round_trip():
    text = """\
[f]
pieces = [[1, 0, -1]]

[g]
kind = "composite"

[g.outer]
kind = "polynomial"
coefficients = [[1], [1]]
exponents = [[3], [1]]

[g.inner]
kind = "affine"
matrix = [[1, 1], [0, 1]]

[point]
x = [0, 0]
"""
    p = problem_from_text(text)
    q = problem_from_text(problem_to_text(p))
    x = np.array([0.3, -0.2])
    assert q.phi(x) == p.phi(x) == pytest.approx((0.1) ** 3 - 1)


def test_parse_excess_file(write):
    C, D = parse_excess_file(write("e.toml", EXCESS))
    assert C.dim == D.dim == 2
    with pytest.raises(ProblemValidationError, match="cone"):
        parse_excess_file(write("bad.toml", EXCESS.replace("offsets = [0, 0]", "offsets = [0, 1]")))


# -- plot data -----------------------------------------------------------------


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_plot_data_cubic_clusters_below_one_third(tmp_path):
    rep = analyze(problem_from_text(CUBIC))
    emit_plot_data(rep, tmp_path / "plot.csv")
    rows = _rows(tmp_path / "plot.csv")
    assert tuple(rows[0]) == PLOT_COLUMNS
    ratios = np.array([float(r[1]) for r in rows[1:]])
    assert len(ratios) > 100 and np.all(ratios <= 1 / 3) and np.max(ratios) > 0.33


def test_plot_data_interior_is_header_only(tmp_path):
    rep = analyze(problem_from_text(INTERIOR))
    emit_plot_data(rep, tmp_path / "plot.csv")
    assert _rows(tmp_path / "plot.csv") == [list(PLOT_COLUMNS)]


def test_plot_data_flat_cubic_grows_like_inverse_square(tmp_path):
    rep = analyze(problem_from_text(FLAT_CUBIC))
    emit_plot_data(rep, tmp_path / "plot.csv")
    data = np.array([[float(v) for v in r] for r in _rows(tmp_path / "plot.csv")[1:]])
    np.testing.assert_allclose(data[:, 1] * data[:, 0] ** 2, 1.0, rtol=1e-9)


# -- command line -----------------------------------------------------------------


def test_cli_analyze_cubic(write, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["analyze", write("c.toml", CUBIC), "--out", str(out)]) == 0
    text = (out / "report.txt").read_text()
    assert "tau_theoretical = 0.3333" in text
    assert capsys.readouterr().out == text
    rows = _rows(out / "radii.csv")
    assert tuple(rows[0]) == RADII_COLUMNS and len(rows) == 4


def test_cli_analyze_flat_cubic(write, capsys):
    assert main(["analyze", write("f.toml", FLAT_CUBIC)]) == 3
    out = capsys.readouterr().out
    assert "jacobian_surjective = false" in out and "not surjective" in out


def test_cli_missing_file(capsys):
    assert main(["analyze", "/nonexistent/problem.toml"]) == 1
    assert "errbound:" in capsys.readouterr().err


def test_cli_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_cli_overrides_and_env_seed(write, tmp_path, monkeypatch):
    path = write("c.toml", CUBIC)
    monkeypatch.setenv("ERRBOUND_SEED", "11")
    main(["analyze", path, "--radii", "0.1,0.01", "--samples", "40", "--out", str(tmp_path / "a")])
    text = (tmp_path / "a" / "report.txt").read_text()
    assert "seed = 11" in text and "radii = 0.10000000000000001, 0.01\n" in text
    main(["analyze", path, "--seed", "4", "--out", str(tmp_path / "b")])
    assert "seed = 4" in (tmp_path / "b" / "report.txt").read_text()


def test_cli_bad_env_seed(write, monkeypatch):
    monkeypatch.setenv("ERRBOUND_SEED", "abc")
    assert main(["analyze", write("c.toml", CUBIC)]) == 1


def test_cli_checks(write, capsys):
    assert main(["check-regularity", write("c.toml", CUBIC)]) == 0
    assert main(["check-regularity", write("f.toml", FLAT_CUBIC)]) == 2
    assert main(["check-shapiro", write("c.toml", CUBIC)]) == 0


def test_cli_excess(write, capsys):
    path = write("e.toml", EXCESS)
    assert main(["excess", path]) == 0
    assert "excess = 1.4142135623730951" in capsys.readouterr().out
    assert main(["excess", path, "--tau", "1.5"]) == 0
    assert main(["excess", path, "--tau", "1.2"]) == 2


def test_cli_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip()


def test_exit_code_mapping_is_total():
    from errbound.analyzer import DIAGNOSES

    assert set(EXIT_CODES) == set(DIAGNOSES)
    assert len(set(EXIT_CODES.values())) == len(DIAGNOSES)


def test_machine_sections_are_byte_identical(write, tmp_path):
    path = write("c.toml", CUBIC)
    for d in ("a", "b"):
        main(["analyze", path, "--seed", "9", "--out", str(tmp_path / d)])
    for name in ("radii.csv", "witnesses.csv", "plot.csv", "report.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_is_parseable():
    rep = analyze(problem_from_text(CUBIC))
    text = machine_sections(rep, 1)
    assert list(csv.reader(io.StringIO(text)))[0] == list(RADII_COLUMNS)
