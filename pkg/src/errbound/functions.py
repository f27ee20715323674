"""Convex outer functions, smooth inner maps and their directional derivatives."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_matrix, as_points, as_vector, frozen
from .exceptions import DimensionMismatchError, EstimatorUndefinedError, JacobianMismatchError
from .geometry import ACTIVE_TOL, Polyhedron

JACOBIAN_RTOL = 1e-5
JACOBIAN_CHECK_POINTS = 100


# ----------------------------------------------------------------------------
# outer function


class ActiveSet(NamedTuple):
    indices: tuple
    point: np.ndarray
    tol: float


@dataclass(frozen=True, eq=False)
class MaxAffineFunction:
    """``f(y) = max_i (slopes[i] @ y + intercepts[i])`` on all of R^m."""

    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float)
        if slopes.size == 0:
            raise ValueError("at least one piece is required")
        slopes = as_matrix(slopes, name="slopes")
        intercepts = np.atleast_1d(np.asarray(self.intercepts, dtype=float))
        if intercepts.shape != (slopes.shape[0],):
            raise DimensionMismatchError("one intercept per piece is required")
        if not np.all(np.isfinite(intercepts)):
            raise ValueError("intercepts must be finite")
        object.__setattr__(self, "slopes", frozen(slopes))
        object.__setattr__(self, "intercepts", frozen(intercepts))

    @classmethod
    def affine(cls, slope, intercept):
        return cls(np.atleast_2d(slope), [intercept])

    @property
    def dim(self):
        return self.slopes.shape[1]

    @property
    def n_pieces(self):
        return self.slopes.shape[0]

    @property
    def lipschitz(self):
        return float(np.max(np.linalg.norm(self.slopes, axis=1)))

    def pieces(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim:
            raise DimensionMismatchError(f"argument has dimension {y.shape[-1]}, expected {self.dim}")
        return y @ self.slopes.T + self.intercepts

    def __call__(self, y):
        vals = self.pieces(y)
        return np.max(vals, axis=-1) if vals.ndim > 1 else float(np.max(vals))

    def active_set(self, y, tol=ACTIVE_TOL):
        y = as_vector(y, self.dim, "y")
        vals = self.pieces(y)
        idx = np.flatnonzero(vals.max() - vals <= tol)
        return ActiveSet(tuple(int(i) for i in idx), y, tol)

    def dirderiv(self, y, d, tol=ACTIVE_TOL):
        d = as_vector(d, self.dim, "d")
        idx = list(self.active_set(y, tol).indices)
        return float(np.max(self.slopes[idx] @ d))

    def solution_set(self):
        """``S_f = {y : f(y) <= 0}`` as a polyhedron."""
        return Polyhedron(self.slopes, -self.intercepts)


def eval_f(f, y):
    return f(as_vector(y, f.dim, "y"))


def dirderiv_f(f, y, d, tol=ACTIVE_TOL):
    """One-sided directional derivative of a max-affine function: the largest
    slope-direction product over the pieces active at ``y``."""
    return f.dirderiv(y, d, tol)


# ----------------------------------------------------------------------------
# inner maps


class SmoothMap:
    """A C^1 map R^n -> R^m given by value and Jacobian oracles.

    ``value`` accepts a single point ``(n,)`` or a batch ``(N, n)``.
    """

    kind = "abstract"

    def __init__(self, n, m):
        self.n = int(n)
        self.m = int(m)
        if self.n < 1 or self.m < 1:
            raise DimensionMismatchError("map dimensions must be positive")

    def _value(self, X):  # (N, n) -> (N, m)
        raise NotImplementedError

    def _jacobian(self, x):  # (n,) -> (m, n)
        raise NotImplementedError

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self._value(as_vector(x, self.n)[None, :])[0]
        return self._value(as_points(x, self.n))

    def jacobian(self, x):
        return np.asarray(self._jacobian(as_vector(x, self.n)), dtype=float).reshape(self.m, self.n)

    __call__ = value

    def check_jacobian(self, points=JACOBIAN_CHECK_POINTS, seed=0, rtol=JACOBIAN_RTOL, box=2.0):
        """Compare the analytic Jacobian with central differences at random points."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for x in rng.uniform(-box, box, size=(points, self.n)):
            J = self.jacobian(x)
            fd = finite_difference_jacobian(self, x)
            err = np.max(np.abs(J - fd)) / (1.0 + np.max(np.abs(J)))
            worst = max(worst, err)
            if err > rtol:
                raise JacobianMismatchError(
                    f"{self.kind} map: Jacobian differs from central differences by {err:.2e} at {x}"
                )
        return worst


def finite_difference_jacobian(g, x):
    x = np.asarray(x, dtype=float)
    steps = 1e-6 * (1.0 + np.abs(x))
    E = np.diag(steps)
    plus = g.value(x + E)
    minus = g.value(x - E)
    return ((plus - minus) / (2 * steps)[:, None]).T


class AffineMap(SmoothMap):
    """``g(x) = matrix @ x + offset``."""

    kind = "affine"

    def __init__(self, matrix, offset=None, check=True):
        self.matrix = frozen(as_matrix(matrix, name="matrix"))
        m, n = self.matrix.shape
        self.offset = frozen(np.zeros(m) if offset is None else as_vector(offset, m, "offset"))
        super().__init__(n, m)
        if check:
            self.check_jacobian()

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    def _value(self, X):
        return X @ self.matrix.T + self.offset

    def _jacobian(self, x):
        return self.matrix


class PolynomialMap(SmoothMap):
    """Componentwise polynomial: ``g_i(x) = sum_j coefficients[i][j] * x_i ** exponents[i][j]``.

    Exponents are nonnegative integers; input and output dimensions agree.
    """

    kind = "polynomial"

    def __init__(self, coefficients, exponents, check=True):
        if len(coefficients) != len(exponents) or len(coefficients) == 0:
            raise DimensionMismatchError("one coefficient list and one exponent list per component")
        self.coefficients = []
        self.exponents = []
        for c, e in zip(coefficients, exponents):
            c = np.atleast_1d(np.asarray(c, dtype=float))
            e = np.atleast_1d(np.asarray(e, dtype=float))
            if c.shape != e.shape:
                raise DimensionMismatchError("coefficient and exponent lists differ in length")
            if np.any(e < 0) or np.any(e != np.round(e)):
                raise ValueError("exponents must be nonnegative integers")
            self.coefficients.append(frozen(c))
            self.exponents.append(frozen(e))
        k = len(self.coefficients)
        super().__init__(k, k)
        if check:
            self.check_jacobian()

    @classmethod
    def power(cls, exponent, coefficient=1.0):
        """The scalar monomial ``coefficient * x ** exponent``."""
        return cls([[coefficient]], [[exponent]])

    def _value(self, X):
        out = np.empty_like(X)
        for i, (c, e) in enumerate(zip(self.coefficients, self.exponents)):
            out[:, i] = np.sum(c * X[:, i : i + 1] ** e, axis=1)
        return out

    def _jacobian(self, x):
        d = np.empty(self.n)
        for i, (c, e) in enumerate(zip(self.coefficients, self.exponents)):
            d[i] = np.sum(c * e * x[i] ** np.maximum(e - 1, 0))
        return np.diag(d)


class QuadraticMap(SmoothMap):
    """``g_i(x) = x @ matrices[i] @ x + linear[i] @ x + constant[i]`` with symmetric matrices."""

    kind = "quadratic"

    def __init__(self, matrices, linear, constant, check=True):
        Q = np.asarray(matrices, dtype=float)
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2]:
            raise DimensionMismatchError("matrices must have shape (m, n, n)")
        if not np.allclose(Q, np.transpose(Q, (0, 2, 1)), atol=1e-12):
            raise ValueError("quadratic matrices must be symmetric")
        m, n, _ = Q.shape
        self.matrices = frozen(Q)
        self.linear = frozen(as_matrix(linear, (m, n), "linear"))
        self.constant = frozen(as_vector(constant, m, "constant"))
        super().__init__(n, m)
        if check:
            self.check_jacobian()

    def _value(self, X):
        quad = np.einsum("ni,kij,nj->nk", X, self.matrices, X)
        return quad + X @ self.linear.T + self.constant

    def _jacobian(self, x):
        return 2.0 * self.matrices @ x + self.linear


class CompositeMap(SmoothMap):
    """``outer(inner(x))``."""

    kind = "composite"

    def __init__(self, outer, inner, check=True):
        if outer.n != inner.m:
            raise DimensionMismatchError(f"outer expects {outer.n} inputs, inner gives {inner.m}")
        self.outer = outer
        self.inner = inner
        super().__init__(inner.n, outer.m)
        if check:
            self.check_jacobian()

    def _value(self, X):
        return self.outer._value(self.inner._value(X))

    def _jacobian(self, x):
        return self.outer.jacobian(self.inner.value(x)) @ self.inner.jacobian(x)


class OracleMap(SmoothMap):
    """A user-supplied map; its Jacobian is checked against central differences."""

    kind = "oracle"

    def __init__(self, fun, jac, n, m, check=True, box=2.0):
        self.fun = fun
        self.jac = jac
        super().__init__(n, m)
        if check:
            self.check_jacobian(box=box)

    def _value(self, X):
        return np.array([np.atleast_1d(self.fun(x)) for x in X], dtype=float).reshape(len(X), self.m)

    def _jacobian(self, x):
        return self.jac(x)


# ----------------------------------------------------------------------------
# composite derivatives


def composite_dirderiv(f, g, x, h, tol=ACTIVE_TOL):
    """Directional derivative of ``f∘g`` at ``x`` along ``h`` via the chain rule
    ``d+f(g(x); ∇g(x) h)``."""
    x = as_vector(x, g.n)
    h = as_vector(h, g.n, "h")
    if f.dim != g.m:
        raise DimensionMismatchError(f"f acts on R^{f.dim}, g maps into R^{g.m}")
    return f.dirderiv(g.value(x), g.jacobian(x) @ h, tol)


def composite(f, g):
    """The scalar function ``x -> f(g(x))`` (batch-aware)."""

    def phi(x):
        return f(g.value(x))

    return phi


@dataclass(frozen=True)
class HadamardSchedule:
    """Probe grid of the lower Hadamard estimator: ``t = 2**-k`` for
    ``k = k_min..k_max`` and ``perturbations`` perturbed directions per ``t``."""

    k_min: int = 6
    k_max: int = 24
    perturbations: int = 8
    tail: float = 0.5  # fraction of the smallest steps the estimate is read from

    def __post_init__(self):
        if not 0 <= self.k_min < self.k_max:
            raise ValueError("need 0 <= k_min < k_max")
        if self.perturbations < 0 or not 0 < self.tail <= 1:
            raise ValueError("invalid schedule")


def hadamard_lower_dirderiv(phi, x, h, schedule=None, rng=None):
    """Sampling estimate of the lower Hadamard directional derivative.

    The difference quotient ``(phi(x + t h') - phi(x)) / t`` is minimized over
    ``h' = h + t u`` (``u`` in the unit ball, shared across ``t``) for each
    step ``t``; consecutive minima are Richardson-extrapolated to remove the
    first-order bias and the smallest extrapolated value over the tail of the
    schedule is returned. This estimates the liminf; it is exact only for
    quotients that are affine in ``t``.
    """
    schedule = schedule or HadamardSchedule()
    rng = rng if rng is not None else np.random.default_rng(0)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n = x.size
    phi0 = float(phi(x))
    if not np.isfinite(phi0):
        raise EstimatorUndefinedError("function is not finite at the base point")

    u = rng.normal(size=(schedule.perturbations, n))
    u *= (rng.random(schedule.perturbations) ** (1.0 / n) / np.linalg.norm(u, axis=1))[:, None]
    U = np.vstack([np.zeros((1, n)), u])

    ks = np.arange(schedule.k_min, schedule.k_max + 1)
    mins = np.full(ks.size, np.nan)
    for j, k in enumerate(ks):
        t = 2.0 ** (-int(k))
        q = [(float(phi(x + t * (h + t * ui))) - phi0) / t for ui in U]
        q = [v for v in q if np.isfinite(v)]
        if q:
            mins[j] = min(q)
    if np.all(np.isnan(mins)):
        raise EstimatorUndefinedError("every probe evaluated to +inf")

    start = int(np.floor((1.0 - schedule.tail) * (ks.size - 1)))
    rich = 2.0 * mins[1:] - mins[:-1]
    tail_rich = rich[start:]
    tail_rich = tail_rich[np.isfinite(tail_rich)]
    if tail_rich.size:
        return float(np.min(tail_rich))
    tail = mins[start:]
    tail = tail[np.isfinite(tail)]
    if tail.size:
        return float(np.min(tail))
    return float(np.nanmin(mins))


def sublevel_polyhedron(f, g, x, level=1.0, tol=ACTIVE_TOL):
    """``{h : d+f(g(x); ∇g(x) h) <= level}`` as an exact H-representation.

    ``level = 0`` gives the cone of non-ascent directions.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    x = as_vector(x, g.n)
    J = g.jacobian(x)
    idx = list(f.active_set(g.value(x), tol).indices)
    rows = f.slopes[idx] @ J
    return Polyhedron(rows, np.full(len(idx), float(level)), dim=g.n)
