"""Testers for metric regularity, the first-order Shapiro contact property and
the Robinson qualification, plus the preimage tangent-cone rule."""
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from ._validation import as_matrix, as_vector
from .exceptions import DimensionMismatchError, EstimatorUndefinedError, NotSurjectiveError
from .functions import HadamardSchedule, hadamard_lower_dirderiv
from .geometry import ACTIVE_TOL, PolyCone, distance_to_polyhedron, project_points, tangent_cone

RANK_RTOL = 1e-10
DEFAULT_EPSILONS = (0.5, 0.25, 0.1, 0.05)

# damped Gauss-Newton settings for preimage distances
LM_LAMBDA0 = 1e-3
LM_MAX_ITER = 50
LM_RESIDUAL_TOL = 1e-10
GRID_PER_AXIS = 400
GRID_MAX_POINTS = 10**6


class LinearRegularity(NamedTuple):
    surjective: bool
    sigma_min: float
    kappa: float


@dataclass(frozen=True)
class RegularityReport:
    surjective: bool
    sigma_min: float
    kappa_linear: float
    kappa_empirical: float
    sample_count: int
    worst_pair: Optional[Tuple[np.ndarray, np.ndarray, float]]
    excluded: int = 0
    radius: float = float("nan")


@dataclass(frozen=True)
class ShapiroReport:
    epsilon_grid: List[float]
    delta_found: List[Optional[float]]  # None where no probed radius worked
    contact_ratio_sup: float
    verdict: str  # "pass" | "fail" | "inconclusive"
    ratio_trace: List[Tuple[float, float]] = field(default_factory=list)  # (delta, max ratio)
    skipped: int = 0
    note: str = ""


def linear_regularity(J):
    """Surjectivity of a linear map and the least constant ``mu`` with
    ``d(u, J^{-1} v) <= mu |J u - v|`` (Euclidean norms), which is ``1/sigma_min``."""
    J = as_matrix(J, name="J")
    m, n = J.shape
    sv = np.linalg.svd(J, compute_uv=False)
    sigma = float(sv[m - 1]) if m <= n else 0.0
    norm = float(sv[0]) if sv.size else 0.0
    surjective = norm > 0 and sigma > RANK_RTOL * norm
    return LinearRegularity(surjective, sigma, 1.0 / sigma if surjective else np.inf)


def _sigma_min(g, x):
    return linear_regularity(g.jacobian(x)).sigma_min


def _unit_directions(n, count, rng):
    eye = np.eye(n)
    U = rng.normal(size=(count, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return np.vstack([eye, -eye, U])


def uniform_regularity_radius(g, x_bar, mu_target, probes=64, max_radius=1.0, seed=0, iters=40):
    """Largest probed radius ``delta`` with ``1/sigma_min(∇g(x)) <= mu_target``
    at every probe point of the ball ``B(x_bar, delta)``.

    Probe points are fixed directions at radii ``{1/4, 1/2, 3/4, 1} * delta``;
    ``delta`` is located by bisection on ``(0, max_radius]``.
    """
    x_bar = as_vector(x_bar, g.n, "x_bar")
    lin = linear_regularity(g.jacobian(x_bar))
    if not lin.surjective:
        raise NotSurjectiveError("Jacobian at the reference point is not surjective")
    if mu_target <= lin.kappa:
        raise ValueError(f"mu_target must exceed 1/sigma_min = {lin.kappa:.6g}")
    U = _unit_directions(g.n, probes, np.random.default_rng(seed))
    fractions = np.array([0.25, 0.5, 0.75, 1.0 - 1e-12])
    threshold = 1.0 / mu_target

    def accepted(delta):
        for s in fractions:
            for u in U:
                if _sigma_min(g, x_bar + s * delta * u) < threshold:
                    return False
        return True

    if accepted(max_radius):
        return float(max_radius)
    lo, hi = 0.0, float(max_radius)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if accepted(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ----------------------------------------------------------------------------
# empirical metric regularity


def _levenberg_marquardt(g, y, z0, lam=LM_LAMBDA0, max_iter=LM_MAX_ITER, tol=LM_RESIDUAL_TOL):
    z = np.array(z0, dtype=float)
    r = g.value(z) - y
    cost = float(r @ r)
    scale = tol * (1.0 + np.linalg.norm(y))
    for _ in range(max_iter):
        if np.sqrt(cost) <= scale:
            break
        J = g.jacobian(z)
        A = J.T @ J
        step = np.linalg.solve(A + lam * (np.eye(g.n) + np.diag(np.diag(A))), -J.T @ r)
        zn = z + step
        rn = g.value(zn) - y
        cn = float(rn @ rn)
        if cn < cost:
            z, r, cost = zn, rn, cn
            lam = max(lam / 10.0, 1e-15)
        else:
            lam *= 10.0
            if lam > 1e15:
                break
    return z, float(np.sqrt(cost))


def _grid_seeds(g, x, y, half_width, keep=4):
    n = g.n
    per_axis = min(GRID_PER_AXIS, int(GRID_MAX_POINTS ** (1.0 / n)))
    axes = [np.linspace(x[i] - half_width, x[i] + half_width, per_axis) for i in range(n)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    res = np.linalg.norm(g.value(G) - y, axis=1)
    order = np.argsort(res)[: keep * 4]
    seeds = []
    for i in order:
        if all(np.linalg.norm(G[i] - s) > 2 * half_width / per_axis for s in seeds):
            seeds.append(G[i])
        if len(seeds) == keep:
            break
    return seeds


def preimage_distance(g, x, y, rng, search_half_width=1.0, starts=4):
    """``d(x, g^{-1}(y))`` by multistart Levenberg-Marquardt.

    For n <= 3 a grid over ``x ± search_half_width`` seeds a second round when
    every start fails. Returns (distance, point), or (nan, None) when no start
    reaches the residual tolerance.
    """
    seeds = [x] + [x + 0.1 * search_half_width * rng.normal(size=g.n) for _ in range(starts - 1)]
    best, best_d = _refine_preimage(g, x, y, seeds)
    if best is None and g.n <= 3:
        best, best_d = _refine_preimage(g, x, y, _grid_seeds(g, x, y, search_half_width))
    if best is None:
        return np.nan, None
    return best_d, best


def _refine_preimage(g, x, y, seeds):
    tol = LM_RESIDUAL_TOL * (1.0 + np.linalg.norm(y))
    best, best_d = None, np.inf
    for z0 in seeds:
        z, res = _levenberg_marquardt(g, y, z0)
        if res > tol:
            continue
        if g.n > g.m:
            # nearest point on the preimage manifold
            pol = minimize(
                lambda w: 0.5 * np.sum((w - x) ** 2),
                z,
                jac=lambda w: w - x,
                constraints=[{"type": "eq", "fun": lambda w: g.value(w) - y, "jac": g.jacobian}],
                method="SLSQP",
                options={"ftol": 1e-15, "maxiter": 200},
            )
            if np.linalg.norm(g.value(pol.x) - y) <= tol:
                z = pol.x
        d = float(np.linalg.norm(z - x))
        if d < best_d:
            best, best_d = z, d
    return best, best_d


def _ball(center, radius, count, rng):
    n = center.size
    U = rng.normal(size=(count, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return center + radius * (rng.random(count) ** (1.0 / n))[:, None] * U


def empirical_metric_regularity(g, x_bar, radius, pairs=200, seed=0, search_half_width=None, tol=1e-10):
    """Estimate the metric-regularity constant of ``g`` near ``x_bar`` as the
    largest ratio ``d(x, g^{-1}(y)) / |g(x) - y|`` over sampled pairs
    ``(x, y) ∈ B(x_bar, radius) × B(g(x_bar), radius)``.

    Besides the random pairs, the extreme axis points of both balls are
    paired deterministically. Pairs whose preimage search fails are excluded
    and counted.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x_bar = as_vector(x_bar, g.n, "x_bar")
    rng = np.random.default_rng(seed)
    y_bar = g.value(x_bar)
    lin = linear_regularity(g.jacobian(x_bar))
    hw = search_half_width if search_half_width is not None else max(1.0, 10.0 * radius)

    ex = [x_bar + 0.999 * radius * s * e for e in np.eye(g.n) for s in (1.0, -1.0)]
    ey = [y_bar + 0.999 * radius * s * e for e in np.eye(g.m) for s in (1.0, -1.0)]
    X = np.vstack([_ball(x_bar, radius, pairs, rng)] + [np.array([a for a in ex for _ in ey])])
    Y = np.vstack([_ball(y_bar, radius, pairs, rng)] + [np.array([b for _ in ex for b in ey])])

    kappa, worst, used, excluded = 0.0, None, 0, 0
    for x, y in zip(X, Y):
        gap = float(np.linalg.norm(g.value(x) - y))
        if gap <= tol:
            continue
        d, _ = preimage_distance(g, x, y, rng, search_half_width=hw)
        if not np.isfinite(d):
            excluded += 1
            continue
        used += 1
        ratio = d / gap
        if ratio > kappa:
            kappa, worst = ratio, (x.copy(), y.copy(), ratio)
    return RegularityReport(
        surjective=lin.surjective,
        sigma_min=lin.sigma_min,
        kappa_linear=lin.kappa,
        kappa_empirical=kappa,
        sample_count=used,
        worst_pair=worst,
        excluded=excluded,
        radius=float(radius),
    )


# ----------------------------------------------------------------------------
# tangent cones of preimages and the Robinson qualification


def tangent_chain_rule(g, x, T):
    """Preimage cone ``∇g(x)^{-1}(T)``. It equals the tangent cone of the
    preimage set only when ``g`` is metrically regular near ``x``; checking
    that is the caller's job."""
    if T.dim != g.m:
        raise DimensionMismatchError(f"cone lives in R^{T.dim}, g maps into R^{g.m}")
    J = g.jacobian(x)
    return PolyCone(T.normals @ J, dim=g.n)


def robinson_check(g, x_bar, A, probe_radius=None):
    """Sufficient test of ``0 ∈ int(g(x_bar) + range ∇g(x_bar) - A)`` for a
    polyhedral cone ``A``: the set must contain ``±r e_i`` for every basis
    vector, each probe decided by an LP feasibility problem."""
    if A.dim != g.m:
        raise DimensionMismatchError(f"cone lives in R^{A.dim}, g maps into R^{g.m}")
    x_bar = as_vector(x_bar, g.n, "x_bar")
    y0 = g.value(x_bar)
    J = g.jacobian(x_bar)
    r = probe_radius if probe_radius is not None else 1e-3 * (1.0 + np.linalg.norm(y0))
    if A.n_rows == 0:
        return True
    N = A.normals
    for e in np.vstack([np.eye(g.m), -np.eye(g.m)]):
        p = r * e
        # need w with y0 + J w - p ∈ A, i.e. N J w <= N (p - y0)
        res = linprog(
            np.zeros(g.n),
            A_ub=N @ J,
            b_ub=N @ (p - y0) + 1e-12,
            bounds=[(None, None)] * g.n,
            method="highs",
        )
        if res.status != 0:
            return False
    return True


# ----------------------------------------------------------------------------
# Shapiro contact property


@dataclass(frozen=True)
class ContactSet:
    """A closed set accessed through a local sampler and tangent distances.

    ``sample(center, radius, count, rng)`` returns points of the set in the
    ball; ``tangent_distance(u, v)`` returns ``d(v, T(A, u))``.
    """

    dim: int
    sample: Callable
    tangent_distance: Callable

    @classmethod
    def from_polyhedron(cls, P, tol=ACTIVE_TOL):
        def sample(center, radius, count, rng):
            pts = _ball(center, radius, count, rng)
            inside = np.array([P.contains(p, tol) for p in pts])
            proj = project_points(pts[~inside], P)
            return np.vstack([pts[inside], proj])[:count]

        def tangent_distance(u, v):
            return distance_to_polyhedron(v, tangent_cone(P, u, tol=1e-7)).distance

        return cls(P.dim, sample, tangent_distance)


def _level_radii(levels, delta0, factor):
    return [delta0 * factor**k for k in range(levels)]


def _verdict(epsilons, trace, tol):
    """Scan radii from large to small; the first radius whose ratio meets
    epsilon is the delta found for that epsilon."""
    found = []
    for eps in epsilons:
        d_eps = None
        for delta, ratio in trace:
            if np.isfinite(ratio) and ratio <= eps + tol:
                d_eps = delta
                break
        found.append(d_eps)
    all_data = all(np.isfinite(r) for _, r in trace)
    if all(d is not None for d in found):
        verdict = "pass"
    elif all_data:
        verdict = "fail"
    else:
        verdict = "inconclusive"
    return found, verdict


def shapiro_set_test(A, a, epsilons=DEFAULT_EPSILONS, seed=0, pairs=64, levels=20, delta0=1.0, factor=0.5, tol=1e-9):
    """Falsification test of the first-order Shapiro contact property of ``A`` at ``a``:
    ``d(x - u, T(A, u)) <= eps |x - u|`` for pairs in ``A ∩ B(a, delta)``.

    For every radius of a geometric grid the worst sampled ratio is recorded;
    the verdict is ``pass`` when every epsilon is met at some radius, ``fail``
    when some epsilon is violated at every radius, ``inconclusive`` otherwise
    (some radius produced no usable pairs).
    """
    if A.tangent_distance is None:
        raise ValueError("a tangent-cone oracle is required")
    a = as_vector(a, A.dim, "a")
    rng = np.random.default_rng(seed)
    trace = []
    for delta in _level_radii(levels, delta0, factor):
        pts = np.asarray(A.sample(a, delta, 2 * pairs, rng), dtype=float).reshape(-1, A.dim)
        worst = np.nan
        for x, u in zip(pts[0::2], pts[1::2]):
            gap = np.linalg.norm(x - u)
            if gap <= 1e-14 * (1 + delta):
                continue
            ratio = A.tangent_distance(u, x - u) / gap
            worst = ratio if not np.isfinite(worst) else max(worst, ratio)
        trace.append((delta, float(worst)))
    found, verdict = _verdict(epsilons, trace, tol)
    finite = [r for _, r in trace if np.isfinite(r)]
    return ShapiroReport(
        epsilon_grid=list(epsilons),
        delta_found=found,
        contact_ratio_sup=finite[-1] if finite else float("nan"),
        verdict=verdict,
        ratio_trace=trace,
    )


def shapiro_epigraph_test(
    phi,
    x_bar,
    epsilons=DEFAULT_EPSILONS,
    seed=0,
    pairs=32,
    levels=10,
    delta0=0.5,
    factor=0.5,
    schedule=None,
    tol=1e-7,
):
    """Falsification test of the derivative form of the epigraphical Shapiro property:
    ``phi'_H(u; x-u) <= phi(x) - phi(u) + eps (|x-u| + |phi(x)-phi(u)|)``
    for ``x, u`` in ``{x ∈ B(x_bar, delta) : |phi(x) - phi(x_bar)| < delta}``.

    ``phi'_H`` is the sampled lower Hadamard estimate. A pass supports the
    inequality form only; it is not a statement about the epigraph's tangent
    cones for discontinuous ``phi``.
    """
    x_bar = np.atleast_1d(np.asarray(x_bar, dtype=float))
    rng = np.random.default_rng(seed)
    phi_bar = float(phi(x_bar))
    schedule = schedule or HadamardSchedule()
    trace, skipped = [], 0
    for delta in _level_radii(levels, delta0, factor):
        cand = _ball(x_bar, delta, 8 * pairs, rng)
        vals = np.array([float(phi(c)) for c in cand])
        keep = np.abs(vals - phi_bar) < delta
        pts, vals = cand[keep][: 2 * pairs], vals[keep][: 2 * pairs]
        worst = np.nan
        for j in range(0, len(pts) - 1, 2):
            x, u = pts[j], pts[j + 1]
            px, pu = vals[j], vals[j + 1]
            step = x - u
            size = np.linalg.norm(step)
            if size <= 0:
                continue
            try:
                # positive homogeneity keeps the estimator well scaled
                deriv = size * hadamard_lower_dirderiv(phi, u, step / size, schedule, rng)
            except EstimatorUndefinedError:
                skipped += 1
                continue
            ratio = max(deriv - (px - pu), 0.0) / (size + abs(px - pu))
            worst = ratio if not np.isfinite(worst) else max(worst, ratio)
        trace.append((delta, float(worst)))
    found, verdict = _verdict(epsilons, trace, tol)
    finite = [r for _, r in trace if np.isfinite(r)]
    return ShapiroReport(
        epsilon_grid=list(epsilons),
        delta_found=found,
        contact_ratio_sup=finite[-1] if finite else float("nan"),
        verdict=verdict,
        ratio_trace=trace,
        skipped=skipped,
        note="derivative inequality form checked; a pass does not establish the epigraph form",
    )
