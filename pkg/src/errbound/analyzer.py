"""Local error-bound modulus of ``f(g(x)) <= 0``: the primal excess formula,
its brute-force counterpart and the checks of their hypotheses."""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from ._validation import as_points, as_vector
from .exceptions import DimensionMismatchError, ErrboundError, SolutionSetSearchError
from .functions import AffineMap, HadamardSchedule, MaxAffineFunction, SmoothMap, composite, sublevel_polyhedron
from .geometry import (
    Polyhedron,
    distance_to_polyhedron,
    distances_to_polyhedron,
    excess_with_witness,
    project_points,
    tangent_cone,
    vertices_and_rays,
)
from .regularity import (
    RegularityReport,
    ShapiroReport,
    empirical_metric_regularity,
    linear_regularity,
    shapiro_epigraph_test,
    tangent_chain_rule,
)

DIAGNOSES = ("error-bound-holds", "no-error-bound", "hypotheses-violated", "inconclusive")

# seed-stream tags
_EMPIRICAL, _BOUNDARY, _SEARCH, _DIRECTIONS, _HYPOTHESES = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class Tolerances:
    active: float = 1e-9
    boundary: float = 1e-8
    feasibility: float = 1e-9
    ray: float = 1e-7
    division_guard: float = 1e-12
    agreement_gap: float = 0.05
    divergence_growth: float = 10.0
    divergence_floor: float = 1e6
    pointwise: float = 1e-6


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One composite inequality ``f(g(x)) <= 0`` around a solution ``x_bar``.

    ``shell`` is the inner fraction of each radius excluded from the
    empirical sampler, so the samples at successive radii are scaled copies
    of one another.
    """

    f: MaxAffineFunction
    g: SmoothMap
    x_bar: np.ndarray
    radii: Tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    samples_per_radius: int = 200
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    shell: float = 0.1

    def __post_init__(self):
        if self.f.dim != self.g.m:
            raise DimensionMismatchError(f"f acts on R^{self.f.dim}, g maps into R^{self.g.m}")
        object.__setattr__(self, "x_bar", as_vector(self.x_bar, self.g.n, "x_bar"))
        radii = tuple(float(r) for r in self.radii)
        if not radii or any(r <= 0 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be positive and strictly decreasing")
        object.__setattr__(self, "radii", radii)
        if self.samples_per_radius < 1:
            raise ValueError("samples_per_radius must be positive")
        if not 0 <= self.shell < 1:
            raise ValueError("shell must lie in [0, 1)")
        value = self.phi(self.x_bar)
        if value > self.tolerances.feasibility:
            raise ValueError(f"x_bar not in solution set: f(g(x_bar)) = {value:.6g}")

    @property
    def n(self):
        return self.g.n

    def phi(self, x):
        return composite(self.f, self.g)(x)

    def rng(self, *tags):
        return np.random.default_rng([int(self.seed), *tags])


class SetDistance(NamedTuple):
    distance: float
    point: np.ndarray


class BoundarySample(NamedTuple):
    point: np.ndarray
    residual: float
    source: str  # "projection" | "bisection" | "center"


@dataclass(frozen=True)
class RadiusTrace:
    radius: float
    sup: float
    sample_count: int
    failures: int = 0
    witness: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Witness:
    radius: float
    point: np.ndarray
    distance: float
    phi_plus: float
    ratio: float


@dataclass(frozen=True)
class ModulusResult:
    value: float
    trace: List[RadiusTrace]
    trend: str
    interior: bool = False
    diverged: bool = False
    witnesses: List[Witness] = field(default_factory=list)
    plot_points: List[Tuple[float, float]] = field(default_factory=list)


@dataclass(frozen=True)
class Hypotheses:
    boundary_condition: str
    boundary_residual: float
    interior_domain: bool
    metric_regularity: Optional[RegularityReport]
    shapiro: Optional[ShapiroReport]

    @property
    def satisfied(self):
        reg = self.metric_regularity
        return (
            self.boundary_condition == "pass"
            and self.interior_domain
            and reg is not None
            and reg.surjective
            and (self.shapiro is None or self.shapiro.verdict != "fail")
        )


@dataclass(frozen=True)
class AnalysisReport:
    hypotheses: Hypotheses
    tau_theoretical: float
    tau_empirical: float
    theoretical: Optional[ModulusResult]
    empirical: Optional[ModulusResult]
    agreement: float
    diagnosis: str
    seed: int
    radii: Tuple[float, ...]
    theoretical_applicable: bool
    interior: bool = False
    errors: List[str] = field(default_factory=list)


# ----------------------------------------------------------------------------
# distance to the solution set


def _solution_polyhedron(p):
    """For affine ``g`` the solution set is the polyhedron ``{x : S (A x + b) + c <= 0}``."""
    g, f = p.g, p.f
    return Polyhedron(f.slopes @ g.matrix, -(f.slopes @ g.offset + f.intercepts), dim=g.n)


def _bisect(phi, lo, hi, iters=100):
    """Shrink segments ``[lo, hi]`` with ``phi(lo) <= 0 < phi(hi)`` onto the zero level."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = np.atleast_1d(phi(mid)) <= 0
        lo[inside] = mid[inside]
        hi[~inside] = mid[~inside]
        if np.max(np.abs(hi - lo)) <= 1e-16 * (1.0 + np.max(np.abs(lo))):
            break
    return lo


def _distances_1d(p, X, grid=2001):
    """Batched grid-plus-bisection search for ``n = 1``; rows of ``X`` are infeasible."""
    x = X[:, 0]
    R = np.abs(x - p.x_bar[0])
    s = np.linspace(-1.0, 1.0, grid)
    pts = np.column_stack([x[:, None] + R[:, None] * s, np.full(len(x), p.x_bar[0])])
    feasible = np.reshape(p.phi(pts.reshape(-1, 1)), pts.shape) <= 0
    gap = np.where(feasible, np.abs(pts - x[:, None]), np.inf)
    q = pts[np.arange(len(x)), np.argmin(gap, axis=1)]
    step = 2 * R / (grid - 1)
    nb = q + np.sign(x - q) * np.minimum(step, np.abs(x - q))
    Z = _bisect(p.phi, q[:, None], nb[:, None])
    return np.abs(x - Z[:, 0]), Z


def _distance_general(p, x, keep=3):
    R = float(np.linalg.norm(x - p.x_bar))
    n = p.n
    rng = p.rng(_SEARCH)
    if n <= 3:
        axes = [np.linspace(x[i] - R, x[i] + R, 21) for i in range(n)]
        cloud = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    else:
        U = rng.normal(size=(4000, n))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        cloud = x + R * (rng.random(4000) ** (1.0 / n))[:, None] * U
    cloud = np.vstack([cloud, p.x_bar])
    feas = cloud[p.phi(cloud) <= 0]
    order = np.argsort(np.linalg.norm(feas - x, axis=1))[:keep]
    seeds = list(feas[order])

    S, c = p.f.slopes, p.f.intercepts
    g = p.g
    best, best_d = None, np.inf
    for z0 in seeds:
        if np.linalg.norm(z0 - x) < best_d:
            best, best_d = z0, float(np.linalg.norm(z0 - x))
        res = minimize(
            lambda z: 0.5 * np.sum((z - x) ** 2),
            z0,
            jac=lambda z: z - x,
            constraints=[
                {
                    "type": "ineq",
                    "fun": lambda z: -(S @ g.value(z) + c),
                    "jac": lambda z: -(S @ g.jacobian(z)),
                }
            ],
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 500},
        )
        if p.phi(res.x) <= p.tolerances.boundary:
            d = float(np.linalg.norm(res.x - x))
            if d < best_d:
                best, best_d = res.x, d
    if best is None:
        raise SolutionSetSearchError("no feasible point found in the search box")
    return SetDistance(best_d, np.asarray(best, dtype=float))


def solution_set_distance(p, x):
    """Distance from ``x`` to ``{z : f(g(z)) <= 0}`` and a nearest point.

    Affine ``g`` is handled exactly (polyhedral projection); one-dimensional
    problems by grid search plus bisection; otherwise by SLSQP from the
    nearest feasible points of a grid (n <= 3) or random cloud (n > 3)
    around ``x``.
    """
    x = as_vector(x, p.n)
    if p.phi(x) <= 0:
        return SetDistance(0.0, x.copy())
    if isinstance(p.g, AffineMap):
        proj = distance_to_polyhedron(x, _solution_polyhedron(p))
        if proj.point is None:
            raise SolutionSetSearchError("solution set is empty")
        return SetDistance(proj.distance, proj.point)
    if p.n == 1:
        d, Z = _distances_1d(p, x[None, :])
        return SetDistance(float(d[0]), Z[0])
    return _distance_general(p, x)


def solution_set_distances(p, X):
    """Batched :func:`solution_set_distance`; returns distances only."""
    X = as_points(X, p.n)
    out = np.zeros(len(X))
    outside = np.atleast_1d(p.phi(X)) > 0
    if not np.any(outside):
        return out
    if isinstance(p.g, AffineMap):
        out[outside] = distances_to_polyhedron(X[outside], _solution_polyhedron(p))
    elif p.n == 1:
        out[outside] = _distances_1d(p, X[outside])[0]
    else:
        out[outside] = [solution_set_distance(p, x).distance for x in X[outside]]
    return out


# ----------------------------------------------------------------------------
# sampling


def _unit_directions(n, count, rng):
    U = rng.normal(size=(count, n))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def _stratified_fractions(count, n, inner=0.0):
    """Deterministic radial fractions that are volume-uniform on the shell
    ``inner <= rho <= 1``."""
    lo = inner**n
    return (lo + (1.0 - lo) * (np.arange(count) + 0.5) / count) ** (1.0 / n)


def boundary_samples(p, radius, count=None):
    """Points of ``bd(S)`` within ``radius`` of ``x_bar``.

    Generated by bisection of ``f∘g`` along segments from feasible to
    infeasible points of the ball, and by projecting every fourth infeasible
    point onto the solution set; ``x_bar`` itself is included when it lies on
    the boundary. Every sample satisfies ``|f(g(x))| <= tolerances.boundary``.
    An empty list means no boundary point was found near ``x_bar``.
    """
    count = count or p.samples_per_radius
    tol = p.tolerances.boundary
    out = []
    phi_bar = float(p.phi(p.x_bar))
    if abs(phi_bar) <= tol:
        out.append(BoundarySample(p.x_bar.copy(), abs(phi_bar), "center"))

    rng = p.rng(_BOUNDARY)
    U = _unit_directions(p.n, count, rng)
    pts = p.x_bar + radius * _stratified_fractions(count, p.n)[:, None] * U
    vals = np.atleast_1d(p.phi(pts))
    feas = np.flatnonzero(vals <= 0)
    infeas = np.flatnonzero(vals > 0)
    if infeas.size == 0:
        return out

    project_idx = infeas[::4]
    bisect_idx = np.setdiff1d(infeas, project_idx)
    if bisect_idx.size:
        if feas.size:
            partners = pts[feas[np.arange(bisect_idx.size) % feas.size]]
        else:
            partners = np.tile(p.x_bar, (bisect_idx.size, 1))
        Z = _bisect(p.phi, partners, pts[bisect_idx])
        res = np.abs(np.atleast_1d(p.phi(Z)))
        for z, r in zip(Z, res):
            if r <= tol and np.linalg.norm(z - p.x_bar) < radius:
                out.append(BoundarySample(z, float(r), "bisection"))
    for i in project_idx:
        try:
            z = solution_set_distance(p, pts[i]).point
        except ErrboundError:
            continue
        r = abs(float(p.phi(z)))
        if r <= tol and np.linalg.norm(z - p.x_bar) < radius:
            out.append(BoundarySample(z, r, "projection"))
    return out


def _trend(values):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return "single"
    d = np.diff(v)
    scale = 1e-9 * (1.0 + np.abs(v[:-1]))
    if np.all(np.abs(d) <= scale):
        return "constant"
    if np.all(d <= scale):
        return "nonincreasing"
    if np.all(d >= -scale):
        return "nondecreasing"
    return "mixed"


# ----------------------------------------------------------------------------
# the two moduli


def local_cones(p, x):
    """The sublevel set ``{h : d+f(g(x); ∇g(x) h) <= 1}`` and the preimage
    tangent cone ``∇g(x)^{-1} T(S_f, g(x))`` at a boundary point."""
    tol = p.tolerances
    C = sublevel_polyhedron(p.f, p.g, x, 1.0, tol.active)
    T = tangent_cone(p.f.solution_set(), p.g.value(x), tol.boundary)
    return C, tangent_chain_rule(p.g, x, T)


def sample_excess(p, x):
    C, D = local_cones(p, x)
    return excess_with_witness(C, D, ray_tol=p.tolerances.ray).value


def theoretical_modulus(p, samples=None):
    """Per-radius maxima of the excess of the derivative sublevel set beyond
    the preimage tangent cone over boundary samples; the value at the
    smallest radius stands in for the limsup."""
    trace = []
    for radius in p.radii:
        pts = samples[radius] if samples is not None else boundary_samples(p, radius)
        best, arg, failures = 0.0, None, 0
        for s in pts:
            try:
                val = sample_excess(p, s.point)
            except (ErrboundError, ValueError, np.linalg.LinAlgError):
                failures += 1
                continue
            if val > best or arg is None:
                best, arg = max(best, val), s.point
        trace.append(RadiusTrace(radius, best, len(pts) - failures, failures, arg))
    last = trace[-1]
    interior = last.sample_count == 0 and last.failures == 0
    return ModulusResult(
        value=0.0 if interior else last.sup,
        trace=trace,
        trend=_trend([t.sup for t in trace]),
        interior=interior,
        diverged=bool(np.isinf(last.sup)),
    )


def _climb(p, x, ratio, radius, rng, iters, proposals=8):
    """Random-search ascent of ``d(x, S) / f(g(x))`` inside the sampling shell."""
    tol = p.tolerances
    step = 0.25 * radius
    lo, hi = p.shell * radius, radius
    for _ in range(iters):
        cand = x + step * _unit_directions(p.n, proposals, rng)
        r = np.linalg.norm(cand - p.x_bar, axis=1)
        cand = cand[(r >= lo) & (r < hi)]
        if len(cand):
            vals = np.atleast_1d(p.phi(cand))
            cand, vals = cand[vals > tol.division_guard], vals[vals > tol.division_guard]
        if len(cand):
            try:
                ratios = solution_set_distances(p, cand) / vals
            except ErrboundError:
                ratios = np.zeros(0)
            if ratios.size and np.max(ratios) > ratio:
                j = int(np.argmax(ratios))
                x, ratio = cand[j], float(ratios[j])
                continue
        step *= 0.5
    return x, ratio


def empirical_modulus(p, top=5, refine=3, refine_iters=15):
    """Brute-force modulus: per radius, the largest ``d(x, S) / [f(g(x))]_+``
    over infeasible samples of the shell ``shell*r <= |x - x_bar| < r``.

    The same directions and radial fractions are used at every radius. The
    modulus is declared infinite when the per-radius maxima grow by at least
    ``divergence_growth`` between every pair of consecutive radii and end at
    or above ``divergence_floor``. The ``refine`` best samples per radius are
    then pushed uphill by a short random search, which can only raise the
    per-radius maxima.
    """
    tol = p.tolerances
    U = _unit_directions(p.n, p.samples_per_radius, p.rng(_EMPIRICAL))
    rho = _stratified_fractions(p.samples_per_radius, p.n, p.shell)
    trace, witnesses, plot = [], [], []
    for radius in p.radii:
        pts = p.x_bar + radius * rho[:, None] * U
        vals = np.atleast_1d(p.phi(pts))
        idx = np.flatnonzero(vals > tol.division_guard)
        rows = []
        try:
            dists = solution_set_distances(p, pts[idx])
        except ErrboundError:
            dists = []
            for i in idx:
                try:
                    dists.append(solution_set_distance(p, pts[i]).distance)
                except ErrboundError:
                    dists.append(np.nan)
        for i, d in zip(idx, dists):
            if not np.isfinite(d):
                continue
            ratio = d / vals[i]
            rows.append(Witness(radius, pts[i], d, float(vals[i]), ratio))
            plot.append((float(np.linalg.norm(pts[i] - p.x_bar)), ratio))
        rows.sort(key=lambda w: -w.ratio)
        evaluated = len(rows)
        rng = p.rng(_EMPIRICAL, len(trace))
        for k in range(min(refine, len(rows)) if p.n > 1 else 0):
            w = rows[k]
            x, ratio = _climb(p, w.point, w.ratio, radius, rng, refine_iters)
            if ratio > w.ratio:
                d = ratio * float(p.phi(x))
                rows.append(Witness(radius, x, d, float(p.phi(x)), ratio))
                plot.append((float(np.linalg.norm(x - p.x_bar)), ratio))
        rows.sort(key=lambda w: -w.ratio)
        witnesses.extend(rows[:top])
        sup = rows[0].ratio if rows else 0.0
        trace.append(RadiusTrace(radius, sup, evaluated, len(idx) - evaluated, rows[0].point if rows else None))

    sups = [t.sup for t in trace]
    interior = trace[-1].sample_count == 0
    growth = all(b >= tol.divergence_growth * a for a, b in zip(sups, sups[1:]) if a > 0)
    diverged = len(sups) > 1 and growth and sups[-1] >= tol.divergence_floor and all(s > 0 for s in sups)
    value = np.inf if diverged else (0.0 if interior else sups[-1])
    return ModulusResult(
        value=value,
        trace=trace,
        trend=_trend(sups),
        interior=interior,
        diverged=diverged,
        witnesses=witnesses,
        plot_points=plot,
    )


# ----------------------------------------------------------------------------
# pointwise characterizations at a boundary point


def direction_set(n, count, rng):
    """Unit directions: both signs in 1-D, an even angular grid (containing
    the diagonals) in 2-D, axes plus random directions otherwise."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        k = max(8, 8 * int(round(count / 8)))
        th = 2 * np.pi * np.arange(k) / k
        return np.column_stack([np.cos(th), np.sin(th)])
    eye = np.eye(n)
    return np.vstack([eye, -eye, _unit_directions(n, max(count - 2 * n, 0), rng)])


def _point(x):
    return x.point if isinstance(x, BoundarySample) else x


def _linearized_slopes(p, x):
    """Rows ``s_i^T ∇g(x)`` of the active pieces; ``phi'(x; h) = max_i row_i @ h``."""
    idx = list(p.f.active_set(p.g.value(x), p.tolerances.active).indices)
    return p.f.slopes[idx] @ p.g.jacobian(x)


def excess_vs_pointwise_equivalence(p, x, tau, directions=2000, seed=None):
    """Check ``d(h, D(x)) <= tau * max(phi'(x; h), 0)`` over sampled unit
    directions, with ``D(x)`` the preimage tangent cone at ``x``."""
    x = as_vector(_point(x), p.n)
    rng = np.random.default_rng(seed if seed is not None else [p.seed, _DIRECTIONS])
    H = direction_set(p.n, directions, rng)
    _, D = local_cones(p, x)
    dist = distances_to_polyhedron(H, D)
    deriv = np.max(H @ _linearized_slopes(p, x).T, axis=1)
    if np.isinf(tau):
        return True
    return bool(np.all(dist <= tau * np.maximum(deriv, 0.0) + p.tolerances.pointwise))


def dirderiv_global_error_bound(p, x, directions=2000, seed=None):
    """Least ``tau`` over a direction grid with
    ``d(h, {phi'(x; .) <= 0}) <= tau * max(phi'(x; h), 0)``."""
    x = as_vector(_point(x), p.n)
    rng = np.random.default_rng(seed if seed is not None else [p.seed, _DIRECTIONS])
    H = direction_set(p.n, directions, rng)
    S_lin = sublevel_polyhedron(p.f, p.g, x, 0.0, p.tolerances.active)
    dist = distances_to_polyhedron(H, S_lin)
    deriv = np.max(H @ _linearized_slopes(p, x).T, axis=1)
    mask = deriv > 1e-12
    if not np.any(mask):
        return 0.0
    return float(np.max(dist[mask] / deriv[mask]))


# ----------------------------------------------------------------------------
# end-to-end analysis


def check_boundary_condition(f, samples=64, seed=0, tol=1e-8):
    """Sample ``bd(S_f)`` (projections of outside points, plus vertices when
    enumerable) and report the largest ``|f|`` found there."""
    Sf = f.solution_set()
    if Sf.n_rows == 0 or Sf.is_empty():
        return "pass", 0.0
    rng = np.random.default_rng(seed)
    try:
        base = vertices_and_rays(Sf).vertices
    except ErrboundError:
        base = np.zeros((0, Sf.dim))
    center = base.mean(axis=0) if len(base) else np.zeros(Sf.dim)
    Y = center + 2.0 * (1.0 + np.linalg.norm(center)) * rng.normal(size=(samples, Sf.dim))
    P = project_points(Y, Sf)
    on_bd = np.linalg.norm(P - Y, axis=1) > 1e-12
    pts = np.vstack([P[on_bd], base])
    if len(pts) == 0:
        return "pass", 0.0
    worst = float(np.max(np.abs(f(pts))))
    return ("pass" if worst <= tol * (1.0 + f.lipschitz) else "fail"), worst


def _hypotheses(p, errors, regularity_pairs, shapiro_pairs):
    tol = p.tolerances
    try:
        bc, bres = check_boundary_condition(p.f, seed=int(p.rng(_HYPOTHESES).integers(2**31)), tol=tol.boundary)
    except ErrboundError as exc:
        errors.append(f"boundary condition: {exc}")
        bc, bres = "fail", float("nan")
    reg = None
    try:
        reg = empirical_metric_regularity(p.g, p.x_bar, p.radii[0], pairs=regularity_pairs, seed=p.seed)
    except (ErrboundError, ValueError, np.linalg.LinAlgError) as exc:
        errors.append(f"metric regularity: {exc}")
        lin = linear_regularity(p.g.jacobian(p.x_bar))
        reg = RegularityReport(lin.surjective, lin.sigma_min, lin.kappa, float("nan"), 0, None)
    shap = None
    try:
        shap = shapiro_epigraph_test(
            p.phi,
            p.x_bar,
            seed=p.seed,
            pairs=shapiro_pairs,
            levels=8,
            delta0=p.radii[0],
            schedule=HadamardSchedule(),
        )
    except (ErrboundError, ValueError) as exc:
        errors.append(f"epigraphical Shapiro test: {exc}")
    return Hypotheses(bc, bres, True, reg, shap)


def analyze(p, regularity_pairs=100, shapiro_pairs=16):
    """Run the hypothesis checks and both moduli and classify the instance.

    Sub-operation failures are recorded in ``errors``; the diagnosis is then
    ``inconclusive`` unless an earlier rule already applies.
    """
    errors = []
    tol = p.tolerances
    hyp = _hypotheses(p, errors, regularity_pairs, shapiro_pairs)

    theo = emp = None
    try:
        theo = theoretical_modulus(p)
    except (ErrboundError, ValueError, np.linalg.LinAlgError) as exc:
        errors.append(f"theoretical modulus: {exc}")
    try:
        emp = empirical_modulus(p)
    except (ErrboundError, ValueError, np.linalg.LinAlgError) as exc:
        errors.append(f"empirical modulus: {exc}")

    tau_t = theo.value if theo else float("nan")
    tau_e = emp.value if emp else float("nan")
    if np.isfinite(tau_t) and np.isfinite(tau_e):
        agreement = abs(tau_t - tau_e) / (1.0 + tau_t)
    else:
        agreement = float("inf") if (np.isinf(tau_t) != np.isinf(tau_e)) else float("nan")

    interior = bool(p.phi(p.x_bar) < -tol.boundary)
    if not hyp.satisfied:
        diagnosis = "hypotheses-violated"
    elif interior and theo and emp and theo.interior and emp.interior:
        diagnosis = "error-bound-holds"
    elif emp is not None and emp.diverged:
        diagnosis = "no-error-bound"
    elif theo and emp and np.isfinite(agreement) and agreement <= tol.agreement_gap and not errors:
        diagnosis = "error-bound-holds"
    else:
        diagnosis = "inconclusive"

    return AnalysisReport(
        hypotheses=hyp,
        tau_theoretical=float(tau_t),
        tau_empirical=float(tau_e),
        theoretical=theo,
        empirical=emp,
        agreement=float(agreement),
        diagnosis=diagnosis,
        seed=int(p.seed),
        radii=p.radii,
        theoretical_applicable=hyp.satisfied,
        interior=interior,
        errors=errors,
    )
