"""Finite-dimensional linear maps with adjoints.

Vectors are one-dimensional ``float64`` numpy arrays. Every map checks the
dimension of its argument eagerly, so a mismatch surfaces as a
:class:`~pdsplit.exceptions.DimensionError` instead of a broadcast or NaN
deep inside an iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "as_vector",
    "LinearMap",
    "DenseMatrix",
    "IdentityMap",
    "ComposedMap",
    "compose",
    "apply",
    "adjoint_apply",
    "NormEstimate",
    "estimate_norm",
    "load_dense_matrix",
]


def as_vector(x, dim=None, name="x"):
    """Convert ``x`` to a finite 1-D float64 array, optionally checking ``dim``."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


class LinearMap:
    """Abstract linear map ``K : R^n -> R^m``.

    Subclasses implement ``_apply`` and ``_adjoint``; the public methods
    validate dimensions. ``norm_bound`` is an optional known upper bound on
    the operator norm. ``orthogonal`` flags maps with ``K*K = KK* = Id``,
    which lets inner solves use a closed form.
    """

    def __init__(self, domain_dim, codomain_dim, norm_bound=None, orthogonal=False):
        if domain_dim <= 0 or codomain_dim <= 0:
            raise ValueError("dimensions must be positive")
        if norm_bound is not None and norm_bound < 0:
            raise ValueError("norm_bound must be nonnegative")
        self.domain_dim = int(domain_dim)
        self.codomain_dim = int(codomain_dim)
        self.norm_bound = None if norm_bound is None else float(norm_bound)
        self.orthogonal = bool(orthogonal)

    @property
    def shape(self):
        return (self.codomain_dim, self.domain_dim)

    def apply(self, x):
        x = as_vector(x, self.domain_dim)
        return self._apply(x)

    def adjoint_apply(self, y):
        y = as_vector(y, self.codomain_dim, name="y")
        return self._adjoint(y)

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"


class DenseMatrix(LinearMap):
    """Linear map given by an explicit matrix; the adjoint is the transpose."""

    def __init__(self, data, norm_bound=None, orthogonal=None):
        a = np.array(data, dtype=np.float64, ndmin=2)
        if a.ndim != 2:
            raise ValueError("matrix data must be two-dimensional")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix contains non-finite entries")
        rows, cols = a.shape
        if orthogonal is None:
            orthogonal = rows == cols and np.allclose(a.T @ a, np.eye(cols), rtol=0, atol=1e-12)
        super().__init__(cols, rows, norm_bound=norm_bound, orthogonal=orthogonal)
        self.data = a
        self.data.setflags(write=False)

    @property
    def rows(self):
        return self.codomain_dim

    @property
    def cols(self):
        return self.domain_dim

    def _apply(self, x):
        return self.data @ x

    def _adjoint(self, y):
        return self.data.T @ y

    @classmethod
    def from_text(cls, text):
        """Parse ``"rows cols"`` followed by ``rows`` lines of decimals."""
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix description")
        header = lines[0].split()
        if len(header) != 2:
            raise ValueError("first line must be 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        body = lines[1:]
        if len(body) != rows:
            raise ValueError(f"expected {rows} data rows, found {len(body)}")
        data = []
        for i, ln in enumerate(body):
            vals = [float(t) for t in ln.split()]
            if len(vals) != cols:
                raise ValueError(f"row {i} has {len(vals)} entries, expected {cols}")
            data.append(vals)
        return cls(data)


def load_dense_matrix(path):
    """Read a :class:`DenseMatrix` from a plain-text file."""
    return DenseMatrix.from_text(Path(path).read_text())


class IdentityMap(LinearMap):
    def __init__(self, dim):
        super().__init__(dim, dim, norm_bound=1.0, orthogonal=True)

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class ComposedMap(LinearMap):
    """``outer o inner``; the adjoint is ``inner* o outer*``."""

    def __init__(self, outer, inner):
        if inner.codomain_dim != outer.domain_dim:
            raise DimensionError(
                f"cannot compose: inner maps to R^{inner.codomain_dim}, "
                f"outer expects R^{outer.domain_dim}"
            )
        bound = None
        if outer.norm_bound is not None and inner.norm_bound is not None:
            bound = outer.norm_bound * inner.norm_bound
        super().__init__(
            inner.domain_dim,
            outer.codomain_dim,
            norm_bound=bound,
            orthogonal=outer.orthogonal and inner.orthogonal,
        )
        self.outer = outer
        self.inner = inner

    def _apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def _adjoint(self, y):
        return self.inner.adjoint_apply(self.outer.adjoint_apply(y))


def compose(k2, k1):
    """Return the map ``x -> k2(k1(x))``."""
    return ComposedMap(k2, k1)


def apply(k, x):
    return k.apply(x)


def adjoint_apply(k, y):
    return k.adjoint_apply(y)


@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    converged: bool

    def __float__(self):
        return self.value


def estimate_norm(k, tol=1e-10, max_iter=1000, seed=0):
    """Estimate ``||K||`` by power iteration on ``K*K``.

    Starts from a seeded standard normal vector and stops once the relative
    change of the dominant-eigenvalue estimate drops below ``tol``. The
    returned value never exceeds the true norm (up to rounding), since
    ``||K*K x|| <= ||K||^2`` for unit ``x``.

    Returns
    -------
    NormEstimate
        ``converged`` is False when ``max_iter`` was exhausted first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(k.domain_dim)
    x /= np.linalg.norm(x)
    eig = 0.0
    for it in range(1, max_iter + 1):
        w = k.adjoint_apply(k.apply(x))
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return NormEstimate(0.0, it, True)
        x = w / new
        if abs(new - eig) <= tol * new:
            return NormEstimate(float(np.sqrt(new)), it, True)
        eig = new
    return NormEstimate(float(np.sqrt(eig)), max_iter, False)
