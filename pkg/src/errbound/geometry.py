"""Polyhedral geometry: tangent cones, Euclidean projections, V-representations
and the excess of one set beyond another.

All distances are Euclidean. Polyhedra are stored in H-representation
``{x : A x <= b}`` with unit-norm rows; ``+inf`` stands for an infinite
distance or excess.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog, minimize

from ._validation import as_matrix, as_points, as_vector, frozen
from .exceptions import (
    DimensionMismatchError,
    EmptyPolyhedronError,
    InfeasiblePointError,
    ProjectionError,
    UnsupportedSizeError,
)

ACTIVE_TOL = 1e-9
RAY_TOL = 1e-7
ENUMERATION_MAX_DIM = 6
ENUMERATION_MAX_ROWS = 64
# Facet-subset enumeration for projections is used while the number of
# candidate active sets stays below this budget; Dykstra's method otherwise.
PROJECTION_SUBSET_BUDGET = 20000
DYKSTRA_TOL = 1e-10
_ZERO_ROW = 1e-13


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """The set ``{x : normals @ x <= offsets}``.

    Rows are rescaled to unit norm and exact duplicates are dropped. A zero
    row is vacuous when its offset is nonnegative and is discarded; a zero
    row with a negative offset is rejected.
    """

    normals: np.ndarray
    offsets: np.ndarray
    dim: int = field(default=None)

    def __post_init__(self):
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        normals = np.asarray(self.normals, dtype=float)
        dim = self.dim
        if normals.size == 0:
            if dim is None:
                raise DimensionMismatchError("dimension required for a polyhedron without rows")
            normals = np.zeros((0, dim))
            offsets = np.zeros(0)
        else:
            normals = as_matrix(normals, name="normals")
            if dim is None:
                dim = normals.shape[1]
            if normals.shape[1] != dim:
                raise DimensionMismatchError(f"normals have {normals.shape[1]} columns, expected {dim}")
            if offsets.shape != (normals.shape[0],):
                raise DimensionMismatchError("one offset per row is required")
            if not np.all(np.isfinite(offsets)):
                raise ValueError("offsets must be finite")
        if dim < 1:
            raise DimensionMismatchError("dim must be positive")

        norms = np.linalg.norm(normals, axis=1)
        zero = norms <= _ZERO_ROW
        if np.any(offsets[zero] < 0):
            raise ValueError("zero normal with negative offset (use a nonempty description)")
        normals, offsets, norms = normals[~zero], offsets[~zero], norms[~zero]
        normals = normals / norms[:, None]
        offsets = offsets / norms
        if len(offsets):
            key = np.round(np.column_stack([normals, offsets]), 12)
            _, first = np.unique(key, axis=0, return_index=True)
            keep = np.sort(first)
            normals, offsets = normals[keep], offsets[keep]

        object.__setattr__(self, "normals", frozen(normals.reshape(-1, dim)))
        object.__setattr__(self, "offsets", frozen(offsets))
        object.__setattr__(self, "dim", int(dim))

    @classmethod
    def whole_space(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @property
    def n_rows(self):
        return self.normals.shape[0]

    def residual(self, x):
        """Largest constraint violation at ``x`` (``<= 0`` inside)."""
        x = as_vector(x, self.dim)
        if self.n_rows == 0:
            return 0.0
        return float(np.max(self.normals @ x - self.offsets))

    def contains(self, x, tol=ACTIVE_TOL):
        x = as_vector(x, self.dim)
        if self.n_rows == 0:
            return True
        return bool(np.all(self.normals @ x - self.offsets <= tol * (1.0 + np.abs(self.offsets))))

    def is_empty(self):
        if self.n_rows == 0:
            return False
        res = linprog(
            np.zeros(self.dim),
            A_ub=self.normals,
            b_ub=self.offsets,
            bounds=[(None, None)] * self.dim,
            method="highs",
        )
        return res.status == 2

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, rows={self.n_rows})"


class PolyCone(Polyhedron):
    """A polyhedral cone ``{h : normals @ h <= 0}``."""

    def __init__(self, normals, dim=None):
        normals = np.asarray(normals, dtype=float)
        if normals.size == 0:
            if dim is None:
                raise DimensionMismatchError("dimension required for a cone without rows")
            normals = np.zeros((0, dim))
        normals = normals.reshape(-1, normals.shape[-1]) if normals.ndim == 1 else normals
        super().__init__(normals, np.zeros(normals.shape[0]), dim=dim)

    @classmethod
    def whole_space(cls, dim):
        return cls(np.zeros((0, dim)), dim=dim)


class Projection(NamedTuple):
    distance: float
    point: Optional[np.ndarray]


class VRepresentation(NamedTuple):
    vertices: np.ndarray  # (p, n)
    rays: np.ndarray  # (q, n), unit norm; lineality appears as +/- pairs


class ExcessResult(NamedTuple):
    value: float
    witness: Optional[np.ndarray]
    approximate: bool


# ----------------------------------------------------------------------------
# projections


def _subset_count(k, n):
    return sum(comb(k, s) for s in range(1, min(k, n) + 1))


def _project_enumerate(X, A, b):
    """Project each row of X onto {A x <= b} by searching for a KKT active set.

    Returns (projections, resolved mask). A point is resolved once some set of
    linearly independent rows yields a feasible candidate with nonnegative
    multipliers; for a convex QP that candidate is the unique projection.
    """
    k, n = A.shape
    Y = X.copy()
    feas_tol = 1e-9 * (1.0 + np.abs(b))
    done = np.all(X @ A.T - b <= feas_tol, axis=1)
    for size in range(1, min(k, n) + 1):
        if done.all():
            break
        for S in combinations(range(k), size):
            todo = np.flatnonzero(~done)
            if todo.size == 0:
                break
            AS = A[list(S)]
            G = AS @ AS.T
            if np.linalg.cond(G) > 1e12:
                continue
            rhs = X[todo] @ AS.T - b[list(S)]
            lam = np.linalg.solve(G, rhs.T).T
            cand = X[todo] - lam @ AS
            ok = np.all(lam >= -1e-12, axis=1) & np.all(cand @ A.T - b <= feas_tol, axis=1)
            if np.any(ok):
                idx = todo[ok]
                Y[idx] = cand[ok]
                done[idx] = True
    return Y, done


def _project_dykstra(X, A, b, tol=DYKSTRA_TOL, max_iter=20000):
    Y = X.copy()
    k = A.shape[0]
    incr = np.zeros((k,) + X.shape)
    for _ in range(max_iter):
        prev = Y.copy()
        for i in range(k):
            Z = Y + incr[i]
            viol = np.maximum(Z @ A[i] - b[i], 0.0)
            Ynew = Z - viol[:, None] * A[i]
            incr[i] = Z - Ynew
            Y = Ynew
        if np.max(np.abs(Y - prev)) <= tol:
            return Y
    raise ProjectionError("Dykstra projection did not converge", best=Y)


def project_points(X, P):
    """Euclidean projections of a batch of points onto ``P``.

    Returns an ``(N, n)`` array; raises EmptyPolyhedronError when ``P`` is empty.
    """
    X = as_points(X, P.dim)
    if P.n_rows == 0:
        return X.copy()
    A, b = P.normals, P.offsets
    if _subset_count(*A.shape) <= PROJECTION_SUBSET_BUDGET:
        Y, done = _project_enumerate(X, A, b)
    else:
        Y, done = X.copy(), np.all(X @ A.T - b <= 0, axis=1)
    if not done.all():
        if P.is_empty():
            raise EmptyPolyhedronError("projection onto an empty polyhedron")
        Y[~done] = _project_dykstra(X[~done], A, b)
    return Y


def distances_to_polyhedron(X, P):
    """Vectorized ``distance_to_polyhedron``; ``+inf`` for every point if ``P`` is empty."""
    X = as_points(X, P.dim)
    try:
        Y = project_points(X, P)
    except EmptyPolyhedronError:
        return np.full(len(X), np.inf)
    return np.linalg.norm(X - Y, axis=1)


def distance_to_polyhedron(x, P):
    """Euclidean distance from ``x`` to ``P`` and the nearest point of ``P``.

    Returns ``Projection(inf, None)`` when ``P`` is empty.
    """
    x = as_vector(x, P.dim)
    try:
        y = project_points(x[None, :], P)[0]
    except EmptyPolyhedronError:
        return Projection(np.inf, None)
    return Projection(float(np.linalg.norm(x - y)), y)


# ----------------------------------------------------------------------------
# tangent cones


def tangent_cone(P, z, tol=ACTIVE_TOL):
    """Bouligand tangent cone of ``P`` at ``z``: the cone cut out by the rows
    active at ``z``. The whole space is returned when no row is active."""
    z = as_vector(z, P.dim, "z")
    if P.n_rows == 0:
        return PolyCone.whole_space(P.dim)
    slack = P.normals @ z - P.offsets
    scale = tol * (1.0 + np.abs(P.offsets))
    worst = float(np.max(slack - scale))
    if worst > 0:
        raise InfeasiblePointError("point is not in the polyhedron", float(np.max(slack)))
    active = np.abs(slack) <= scale
    return PolyCone(P.normals[active], dim=P.dim)


# ----------------------------------------------------------------------------
# vertex / ray enumeration (double description)


def _extreme_rays(M, tol=1e-10):
    """Extreme rays of the pointed cone ``{z : M z <= 0}``.

    ``M`` must have full column rank and unit-norm rows. Classic double
    description: start from a simplicial cone on ``d`` independent rows and
    intersect with the remaining halfspaces one at a time, keeping only
    combinations of adjacent rays.
    """
    m, d = M.shape
    basis = []
    for i in range(m):
        trial = basis + [i]
        if np.linalg.matrix_rank(M[trial], tol=1e-10) == len(trial):
            basis = trial
            if len(basis) == d:
                break
    if len(basis) < d:
        raise ValueError("constraint matrix is not of full column rank")

    R = (-np.linalg.inv(M[basis])).T
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    processed = list(basis)
    for i in range(m):
        if i in basis:
            continue
        s = R @ M[i]
        pos = np.flatnonzero(s > tol)
        neg = np.flatnonzero(s < -tol)
        if pos.size == 0:
            processed.append(i)
            continue
        tight = np.abs(R @ M[processed].T) <= tol
        new = []
        for p in pos:
            for q in neg:
                common = tight[p] & tight[q]
                if common.sum() < d - 2:
                    continue
                covers = np.all(tight | ~common, axis=1)
                covers[[p, q]] = False
                if covers.any():
                    continue
                r = s[p] * R[q] - s[q] * R[p]
                new.append(r / np.linalg.norm(r))
        keep = np.setdiff1d(np.arange(len(R)), pos)
        R = np.vstack([R[keep]] + ([np.array(new)] if new else []))
        if len(R) == 0:
            break
        processed.append(i)
    return R


def _unique_rows(X, decimals=10):
    if len(X) == 0:
        return X
    _, idx = np.unique(np.round(X, decimals), axis=0, return_index=True)
    return X[np.sort(idx)]


def vertices_and_rays(P, max_dim=ENUMERATION_MAX_DIM, max_rows=ENUMERATION_MAX_ROWS):
    """Minkowski decomposition ``P = conv(vertices) + cone(rays)``.

    For a polyhedron with a nontrivial lineality space the "vertices" are the
    vertices of its section by the orthogonal complement of that space, and
    the lineality directions are listed as paired ``+/-`` rays.
    """
    n = P.dim
    if n > max_dim or P.n_rows > max_rows:
        raise UnsupportedSizeError(
            f"enumeration limited to dim <= {max_dim} and rows <= {max_rows} "
            f"(got dim={n}, rows={P.n_rows})"
        )
    A, b = P.normals, P.offsets
    if P.n_rows == 0:
        eye = np.eye(n)
        return VRepresentation(np.zeros((1, n)), np.vstack([eye, -eye]))

    _, sv, vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    Q = vt[:rank].T  # basis of the row space
    L = vt[rank:]  # basis of the lineality space

    AQ = A @ Q
    M = np.vstack([np.column_stack([AQ, -b]), np.r_[np.zeros(rank), -1.0]])
    M /= np.linalg.norm(M, axis=1, keepdims=True)
    R = _extreme_rays(M)

    t = R[:, -1]
    is_vertex = t > 1e-12
    if not np.any(is_vertex):
        raise EmptyPolyhedronError("polyhedron is empty")
    verts = (R[is_vertex, :-1] / t[is_vertex, None]) @ Q.T
    rays = R[~is_vertex, :-1] @ Q.T
    if len(rays):
        rays = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    rays = np.vstack([rays.reshape(-1, n), L, -L])
    return VRepresentation(_unique_rows(verts), _unique_rows(rays))


# ----------------------------------------------------------------------------
# excess


def _maximize_distance(P, D, starts, step=0.5, iters=200):
    """Projected gradient ascent of ``d(., D)`` over ``P`` from several starts."""
    best_val, best_x = -np.inf, None
    X = project_points(starts, P)
    for _ in range(iters):
        proj = project_points(X, D)
        diff = X - proj
        dist = np.linalg.norm(diff, axis=1)
        grad = np.where(dist[:, None] > 0, diff / np.maximum(dist, 1e-300)[:, None], 0.0)
        Xn = project_points(X + step * grad, P)
        if np.max(np.abs(Xn - X)) < 1e-12:
            X = Xn
            break
        X = Xn
    dist = distances_to_polyhedron(X, D)
    i = int(np.argmax(dist))
    if dist[i] > best_val:
        best_val, best_x = float(dist[i]), X[i]
    return best_val, best_x


def _excess_fallback(C, D, ray_tol, seed=0, box=1e3, starts=32):
    rng = np.random.default_rng(seed)
    n = C.dim
    box_rows = np.vstack([np.eye(n), -np.eye(n)])
    rec = Polyhedron(np.vstack([C.normals, box_rows]), np.r_[np.zeros(C.n_rows), np.ones(2 * n)])
    ray_val, _ = _maximize_distance(rec, D, rng.normal(size=(starts, n)))
    if ray_val > ray_tol:
        return ExcessResult(np.inf, None, True)
    bounded = Polyhedron(np.vstack([C.normals, box_rows]), np.r_[C.offsets, np.full(2 * n, box)])
    val, x = _maximize_distance(bounded, D, rng.uniform(-box, box, size=(starts, n)) * 1e-3)
    return ExcessResult(max(val, 0.0), x, True)


def excess_with_witness(C, D, ray_tol=RAY_TOL, max_dim=ENUMERATION_MAX_DIM, max_rows=ENUMERATION_MAX_ROWS):
    """Excess of ``C`` beyond the cone ``D`` with the maximizing vertex.

    ``approximate`` is set when enumeration limits forced the multistart
    projected-gradient fallback.
    """
    if C.dim != D.dim:
        raise DimensionMismatchError(f"C has dim {C.dim}, D has dim {D.dim}")
    try:
        vrep = vertices_and_rays(C, max_dim=max_dim, max_rows=max_rows)
    except EmptyPolyhedronError:
        return ExcessResult(0.0, None, False)
    except UnsupportedSizeError:
        return _excess_fallback(C, D, ray_tol)
    if len(vrep.rays):
        if np.max(distances_to_polyhedron(vrep.rays, D)) > ray_tol:
            return ExcessResult(np.inf, None, False)
    dist = distances_to_polyhedron(vrep.vertices, D)
    i = int(np.argmax(dist))
    return ExcessResult(float(dist[i]), vrep.vertices[i].copy(), False)


def excess(C, D, ray_tol=RAY_TOL):
    """``sup_{x in C} d(x, D)`` for a polyhedron ``C`` and a polyhedral cone ``D``.

    An empty ``C`` has excess 0 (``D`` is a cone, hence nonempty).
    """
    return excess_with_witness(C, D, ray_tol=ray_tol).value


def sample_polyhedron(C, count, rng, vrep=None, scale=None):
    """Points of ``C``: its vertices followed by random convex combinations of
    vertices plus random conic combinations of rays."""
    vrep = vrep if vrep is not None else vertices_and_rays(C)
    V, R = vrep.vertices, vrep.rays
    if scale is None:
        scale = 1.0 + (np.max(np.linalg.norm(V, axis=1)) if len(V) else 0.0)
    pts = [V]
    extra = max(count - len(V), 0)
    if extra:
        w = rng.dirichlet(np.ones(len(V)), size=extra)
        X = w @ V
        if len(R):
            mu = rng.exponential(scale, size=(extra, len(R)))
            mu *= rng.random((extra, len(R))) < 0.5
            X = X + mu @ R
        pts.append(X)
    return np.vstack(pts)


def excess_certificate(C, D, tau, samples=200, seed=None, tol=ACTIVE_TOL):
    """Check ``C ⊆ D + tau·B`` on sampled points of ``C``.

    Returns False as soon as a sampled point lies farther than ``tau + tol``
    from ``D``; ``tau = inf`` always passes.
    """
    if C.dim != D.dim:
        raise DimensionMismatchError(f"C has dim {C.dim}, D has dim {D.dim}")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if np.isinf(tau):
        return True
    try:
        vrep = vertices_and_rays(C)
    except EmptyPolyhedronError:
        return True
    X = sample_polyhedron(C, samples, np.random.default_rng(seed), vrep=vrep)
    return bool(np.all(distances_to_polyhedron(X, D) <= tau + tol))


# ----------------------------------------------------------------------------
# general closed sets and projection anchors


@dataclass(frozen=True)
class SetOracle:
    """A closed set known through a violation measure and a projector.

    ``residual(x) <= 0`` exactly on the set. ``tangent_cone(z)`` is optional.
    """

    dim: int
    residual: Callable[[np.ndarray], float]
    project: Callable[[np.ndarray], np.ndarray]
    tangent_cone: Optional[Callable[[np.ndarray], PolyCone]] = None

    @classmethod
    def from_polyhedron(cls, P, tol=ACTIVE_TOL):
        return cls(
            dim=P.dim,
            residual=P.residual,
            project=lambda x: distance_to_polyhedron(x, P).point,
            tangent_cone=lambda z: tangent_cone(P, z, tol=tol),
        )

    @classmethod
    def from_constraints(cls, fun, jac, dim, starts=8, seed=0, tol=1e-9):
        """The set ``{x : fun(x) <= 0}`` for a smooth vector constraint.

        Projections are computed by multistart SLSQP. The tangent cone is the
        linearized cone of the active constraints, which equals the Bouligand
        cone under the Mangasarian-Fromovitz qualification.
        """

        def c(x):
            return np.atleast_1d(np.asarray(fun(x), dtype=float))

        def J(x):
            return np.atleast_2d(np.asarray(jac(x), dtype=float))

        def residual(x):
            return float(np.max(c(np.asarray(x, dtype=float))))

        def project(x):
            x = np.asarray(x, dtype=float)
            if residual(x) <= 0:
                return x.copy()
            rng = np.random.default_rng(seed)
            scale = 1.0 + np.linalg.norm(x)
            inits = [x] + [x + 0.5 * scale * rng.normal(size=dim) for _ in range(starts - 1)]
            best, best_d, best_res = None, np.inf, np.inf
            for z0 in inits:
                res = minimize(
                    lambda z: 0.5 * np.sum((z - x) ** 2),
                    z0,
                    jac=lambda z: z - x,
                    constraints=[{"type": "ineq", "fun": lambda z: -c(z), "jac": lambda z: -J(z)}],
                    method="SLSQP",
                    options={"ftol": 1e-14, "maxiter": 300},
                )
                r = residual(res.x)
                d = np.linalg.norm(res.x - x)
                if r <= tol and d < best_d:
                    best, best_d = res.x, d
                best_res = min(best_res, r)
            if best is None:
                raise ProjectionError("projection solver found no feasible point", best=None, residual=best_res)
            return best

        def cone(z):
            vals = c(z)
            active = vals >= -tol
            return PolyCone(J(z)[active], dim=dim)

        return cls(dim=dim, residual=residual, project=project, tangent_cone=cone)


class Anchor(NamedTuple):
    point: np.ndarray
    distance: float
    tangent_check: Optional[bool]  # None when no tangent-cone oracle is available


def boundary_anchor(x, omega, gamma, tol=1e-8):
    """Projection anchor ``z`` of an outside point ``x`` on a closed set.

    With ``z`` the (numerical) projection, ``gamma * |x - z| < d(x, omega)``
    holds for any ``gamma < 1``; when a tangent-cone oracle is present the
    second inequality ``gamma * |x - z| <= d(x - z, T(omega, z))`` is checked
    and reported instead of assumed, since a local projection onto a
    nonconvex set need not satisfy it.
    """
    x = as_vector(x, omega.dim)
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if omega.residual(x) <= tol:
        raise ValueError("x must lie outside the set")
    z = omega.project(x)
    if z is None:
        raise ProjectionError("projection returned no point")
    z = np.asarray(z, dtype=float)
    res = omega.residual(z)
    if res > tol:
        raise ProjectionError("projection is not feasible", best=z, residual=res)
    dist = float(np.linalg.norm(x - z))
    check = None
    if omega.tangent_cone is not None:
        T = omega.tangent_cone(z)
        check = bool(gamma * dist <= distance_to_polyhedron(x - z, T).distance + tol)
    return Anchor(z, dist, check)
