"""Problem files (TOML), report text and CSV emission.

Problem file layout::

    [f]
    pieces = [[1.0, -1.0]]        # one row per piece: slope..., intercept

    [g]
    kind = "polynomial"           # affine | polynomial | quadratic | composite
    coefficients = [[1.0]]        # polynomial: per component
    exponents = [[3]]
    # affine:    matrix = [[...]], offset = [...]
    # quadratic: matrices = [[[...]]], linear = [[...]], constant = [...]
    # composite: sub-tables [g.outer] and [g.inner], each a map as above

    [point]
    x = [1.0]

    [options]                     # all optional
    radii = [0.1, 0.01, 0.001]
    samples = 200
    seed = 0
    [options.tolerances]          # any field of Tolerances
    boundary = 1e-8

An excess file holds two polyhedra ``{x : normals @ x <= offsets}`` in
tables ``[C]`` and ``[D]``; ``D`` must be a cone (zero offsets).
"""
import csv
import io as _io
import os
import sys
from dataclasses import asdict, fields

import numpy as np
import tomli_w

from .analyzer import ProblemInstance, Tolerances
from .exceptions import DimensionMismatchError, JacobianMismatchError, ParseError, ProblemValidationError
from .functions import AffineMap, CompositeMap, MaxAffineFunction, PolynomialMap, QuadraticMap
from .geometry import PolyCone, Polyhedron

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

RADII_COLUMNS = ("radius", "tau_theoretical_sup", "tau_empirical_sup", "sample_count")
PLOT_COLUMNS = ("distance_to_xbar", "ratio")


def fmt(x):
    """17 significant digits: enough to round-trip any double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _loads(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc).split(" (at ")[0]
        raise ParseError(msg, getattr(exc, "lineno", None), getattr(exc, "colno", None)) from None


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _table(doc, key, where=""):
    val = doc.get(key)
    if not isinstance(val, dict):
        raise ProblemValidationError(f"missing table [{where}{key}]")
    return val


def _require(table, key, where):
    if key not in table:
        raise ProblemValidationError(f"[{where}] needs '{key}'")
    return table[key]


def _map_from_table(t, where="g", check=True):
    kind = _require(t, "kind", where)
    if kind == "affine":
        return AffineMap(_require(t, "matrix", where), t.get("offset"), check=check)
    if kind == "polynomial":
        return PolynomialMap(_require(t, "coefficients", where), _require(t, "exponents", where), check=check)
    if kind == "quadratic":
        return QuadraticMap(
            _require(t, "matrices", where), _require(t, "linear", where), _require(t, "constant", where), check=check
        )
    if kind == "composite":
        outer = _map_from_table(_table(t, "outer", where + "."), where + ".outer", check=False)
        inner = _map_from_table(_table(t, "inner", where + "."), where + ".inner", check=False)
        return CompositeMap(outer, inner, check=check)
    raise ProblemValidationError(f"[{where}] unknown kind '{kind}'")


def _map_to_table(g):
    if isinstance(g, AffineMap):
        return {"kind": "affine", "matrix": g.matrix.tolist(), "offset": g.offset.tolist()}
    if isinstance(g, PolynomialMap):
        return {
            "kind": "polynomial",
            "coefficients": [c.tolist() for c in g.coefficients],
            "exponents": [[int(e) for e in es] for es in g.exponents],
        }
    if isinstance(g, QuadraticMap):
        return {
            "kind": "quadratic",
            "matrices": g.matrices.tolist(),
            "linear": g.linear.tolist(),
            "constant": g.constant.tolist(),
        }
    if isinstance(g, CompositeMap):
        return {"kind": "composite", "outer": _map_to_table(g.outer), "inner": _map_to_table(g.inner)}
    raise ValueError(f"maps of kind '{getattr(g, 'kind', type(g).__name__)}' cannot be serialized")


def _tolerances(table):
    known = {f.name for f in fields(Tolerances)}
    unknown = set(table) - known
    if unknown:
        raise ProblemValidationError(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
    return Tolerances(**{k: float(v) for k, v in table.items()})


def problem_from_text(text):
    doc = _loads(text)
    try:
        ftab = _table(doc, "f")
        pieces = ftab.get("pieces", [])
        if len(pieces) == 0:
            raise ProblemValidationError("[f] needs at least one piece")
        rows = np.asarray(pieces, dtype=float)
        if rows.ndim != 2 or rows.shape[1] < 2:
            raise ProblemValidationError("[f] pieces must be rows 'slope..., intercept'")
        f = MaxAffineFunction(rows[:, :-1], rows[:, -1])
        g = _map_from_table(_table(doc, "g"))
        x_bar = _require(_table(doc, "point"), "x", "point")
        opts = doc.get("options", {})
        kw = {}
        if "radii" in opts:
            kw["radii"] = tuple(opts["radii"])
        if "samples" in opts:
            kw["samples_per_radius"] = int(opts["samples"])
        if "seed" in opts:
            kw["seed"] = int(opts["seed"])
        if "shell" in opts:
            kw["shell"] = float(opts["shell"])
        if "tolerances" in opts:
            kw["tolerances"] = _tolerances(opts["tolerances"])
        return ProblemInstance(f, g, np.asarray(x_bar, dtype=float), **kw)
    except ProblemValidationError:
        raise
    except (ValueError, TypeError, DimensionMismatchError, JacobianMismatchError) as exc:
        raise ProblemValidationError(str(exc)) from exc


def parse_problem(path):
    """Read and validate a problem file (Jacobian check and feasibility of ``x_bar`` included)."""
    return problem_from_text(_read(path))


def problem_to_text(p):
    doc = {
        "f": {"pieces": np.column_stack([p.f.slopes, p.f.intercepts]).tolist()},
        "g": _map_to_table(p.g),
        "point": {"x": p.x_bar.tolist()},
        "options": {
            "radii": list(p.radii),
            "samples": int(p.samples_per_radius),
            "seed": int(p.seed),
            "shell": float(p.shell),
            "tolerances": asdict(p.tolerances),
        },
    }
    return tomli_w.dumps(doc)


def write_problem(p, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(problem_to_text(p))


def _polyhedron(t, where):
    normals = np.asarray(_require(t, "normals", where), dtype=float)
    offsets = np.asarray(_require(t, "offsets", where), dtype=float)
    dim = t.get("dim")
    if normals.size == 0:
        if dim is None:
            raise ProblemValidationError(f"[{where}] with no rows needs 'dim'")
        return Polyhedron.whole_space(int(dim))
    return Polyhedron(normals, offsets, dim=dim)


def parse_excess_file(path):
    doc = _loads(_read(path))
    try:
        C = _polyhedron(_table(doc, "C"), "C")
        D = _polyhedron(_table(doc, "D"), "D")
        if np.any(D.offsets != 0):
            raise ProblemValidationError("[D] must be a cone: all offsets zero")
        D = PolyCone(D.normals, dim=D.dim)
    except ProblemValidationError:
        raise
    except ValueError as exc:
        raise ProblemValidationError(str(exc)) from exc
    if C.dim != D.dim:
        raise ProblemValidationError(f"C lives in R^{C.dim}, D in R^{D.dim}")
    return C, D


# ----------------------------------------------------------------------------
# reports


def _csv(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def radii_csv(report):
    theo = {t.radius: t.sup for t in report.theoretical.trace} if report.theoretical else {}
    rows = []
    for t in report.empirical.trace if report.empirical else []:
        rows.append((t.radius, theo.get(t.radius, float("nan")), t.sup, t.sample_count))
    return _csv(RADII_COLUMNS, rows)


def witnesses_csv(report, n):
    header = ("radius",) + tuple(f"x{i + 1}" for i in range(n)) + ("distance", "phi_plus", "ratio")
    ws = report.empirical.witnesses if report.empirical else []
    return _csv(header, [(w.radius, *w.point, w.distance, w.phi_plus, w.ratio) for w in ws])


def plot_csv(report):
    pts = [] if report.interior or report.empirical is None else report.empirical.plot_points
    return _csv(PLOT_COLUMNS, pts)


def report_text(report, n, version):
    h = report.hypotheses
    reg = h.metric_regularity
    lines = [
        f"errbound {version}",
        f"seed = {report.seed}",
        f"radii = {', '.join(fmt(r) for r in report.radii)}",
        f"diagnosis = {report.diagnosis}",
        f"tau_theoretical = {fmt(report.tau_theoretical)}",
        f"tau_empirical = {fmt(report.tau_empirical)}",
        f"relative_gap = {fmt(report.agreement)}",
        f"theoretical_applicable = {fmt(report.theoretical_applicable)}",
        f"interior = {fmt(report.interior)}",
    ]
    if report.theoretical:
        lines.append(f"theoretical_trend = {report.theoretical.trend}")
    if report.empirical:
        lines.append(f"empirical_trend = {report.empirical.trend}")
        lines.append(f"divergence = {fmt(report.empirical.diverged)}")
    lines += ["", "[hypotheses]", f"boundary_condition = {h.boundary_condition}"]
    lines.append(f"boundary_residual = {fmt(h.boundary_residual)}")
    if reg is not None:
        lines.append(f"jacobian_surjective = {fmt(reg.surjective)}")
        if not reg.surjective:
            lines.append("note = Jacobian of g at x_bar is not surjective")
        lines.append(f"sigma_min = {fmt(reg.sigma_min)}")
        lines.append(f"kappa_linear = {fmt(reg.kappa_linear)}")
        lines.append(f"kappa_empirical = {fmt(reg.kappa_empirical)}")
    if h.shapiro is not None:
        lines.append(f"shapiro_verdict = {h.shapiro.verdict}")
        lines.append(f"shapiro_contact_ratio = {fmt(h.shapiro.contact_ratio_sup)}")
    if report.errors:
        lines += ["", "[errors]"] + report.errors
    lines += ["", "[radii.csv]", radii_csv(report).rstrip("\n")]
    lines += ["", "[witnesses.csv]", witnesses_csv(report, n).rstrip("\n")]
    return "\n".join(lines) + "\n"


def machine_sections(report, n):
    """The byte-reproducible part of a report."""
    return radii_csv(report) + witnesses_csv(report, n) + plot_csv(report)


def emit_plot_data(report, path):
    """CSV of sampled ``(|x - x_bar|, d(x, S) / f(g(x)))`` pairs; header only
    when ``x_bar`` is interior."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(plot_csv(report))


def write_report(report, n, out_dir, version):
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "report.txt": report_text(report, n, version),
        "radii.csv": radii_csv(report),
        "witnesses.csv": witnesses_csv(report, n),
    }
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    emit_plot_data(report, os.path.join(out_dir, "plot.csv"))
    return sorted(files) + ["plot.csv"]
