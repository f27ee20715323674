import numpy as np

from .exceptions import DimensionMismatchError


def as_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-D float array, optionally of length ``dim``."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.size == 0:
        raise DimensionMismatchError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and v.size != dim:
        raise DimensionMismatchError(f"{name} has dimension {v.size}, expected {dim}")
    return v


def as_matrix(a, shape=None, name="matrix"):
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionMismatchError(f"{name} must be two-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    if shape is not None:
        for got, want in zip(m.shape, shape):
            if want is not None and got != want:
                raise DimensionMismatchError(f"{name} has shape {m.shape}, expected {shape}")
    return m


def as_points(x, dim, name="X"):
    """Return a batch of points as an (N, dim) array; a single vector becomes N=1."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 1:
        p = p.reshape(-1, 1) if dim == 1 else p.reshape(1, -1)
    if p.ndim != 2 or p.shape[1] != dim:
        raise DimensionMismatchError(f"{name} must have {dim} columns, got shape {p.shape}")
    return p


def frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a
