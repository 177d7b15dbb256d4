"""Proximal maps and resolvents.

A maximally monotone operator ``A`` is represented only through its
resolvent family ``gamma -> J_{gamma A}``. For ``A`` the subdifferential of a
convex function ``f`` this is the proximal map ``prox_{gamma f}``. All maps
carry their own parameters (thresholds, anchors, boxes) and take the step
size ``gamma`` per call, because the solvers vary it.

Each operation is available both as a plain function and as a
:class:`ProxMap` subclass usable by the solvers in :mod:`pdsplit.splitting`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linops import as_vector

__all__ = [
    "ProxMap",
    "FunctionProx",
    "BoxSet",
    "soft_threshold",
    "prox_quadratic_residual_conjugate",
    "project_box",
    "box_indicator_conjugate_prox",
    "fw_conjugate_prox",
    "prox_abs_shifted",
    "conjugate_prox_via_moreau",
    "SoftThreshold",
    "QuadraticResidualConjugate",
    "QuadraticResidual",
    "BoxProjection",
    "BoxIndicatorConjugate",
    "FermatWeberConjugate",
    "ShiftedNorm",
    "MoreauConjugate",
    "QuadraticProx",
    "NullResolvent",
    "ZeroMap",
    "catalogue",
]


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"step size must be positive, got {gamma}")
    return float(gamma)


@dataclass(frozen=True, eq=False)
class BoxSet:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, len(lo), name="upper")
        if np.any(lo > hi):
            raise ValueError("box is empty: lower > upper in some component")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, dim, lo=0.0, hi=1.0):
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self):
        return self.lower.shape[0]

    def contains(self, x, tol=0.0):
        x = as_vector(x, self.dim)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


# -- plain functions ---------------------------------------------------------


def soft_threshold(threshold, z):
    """Componentwise shrinkage ``max(|z_i| - threshold, 0) * sgn(z_i)``.

    This is the prox of ``lam * ||.||_1`` with step ``gamma`` when
    ``threshold = gamma * lam``. ``sgn(0) = 0``.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    z = as_vector(z, name="z")
    return np.sign(z) * np.maximum(np.abs(z) - threshold, 0.0)


def prox_quadratic_residual_conjugate(sigma, b, z):
    """Prox of ``sigma * g*`` for ``g(y) = ||y - b||^2``: ``2/(sigma+2) (z - sigma b)``."""
    sigma = _check_gamma(sigma)
    b = as_vector(b, name="b")
    z = as_vector(z, len(b), name="z")
    return (2.0 / (sigma + 2.0)) * (z - sigma * b)


def project_box(box, z):
    z = as_vector(z, box.dim, name="z")
    return np.clip(z, box.lower, box.upper)


def box_indicator_conjugate_prox(box, sigma, z):
    """Prox of ``sigma * (delta_S)*``, computed as ``z - sigma * P_S(z / sigma)``."""
    sigma = _check_gamma(sigma)
    z = as_vector(z, box.dim, name="z")
    return z - sigma * np.clip(z / sigma, box.lower, box.upper)


def fw_conjugate_prox(c, lam, sigma, z):
    """Prox of ``sigma * g*`` for ``g(x) = lam * ||x - c||``.

    With ``w = z - sigma c`` this is the projection of ``w`` onto the ball of
    radius ``lam``; ``w = 0`` maps to 0.
    """
    sigma = _check_gamma(sigma)
    if not lam > 0:
        raise ValueError("lam must be positive")
    c = as_vector(c, name="c")
    z = as_vector(z, len(c), name="z")
    w = z - sigma * c
    nw = np.linalg.norm(w)
    if nw <= lam:
        return w
    return (lam / nw) * w


def prox_abs_shifted(c, lam, gamma, z):
    """Prox of ``gamma * lam * ||. - c||`` (block soft threshold around ``c``)."""
    gamma = _check_gamma(gamma)
    if not lam > 0:
        raise ValueError("lam must be positive")
    c = as_vector(c, name="c")
    z = as_vector(z, len(c), name="z")
    w = z - c
    nw = np.linalg.norm(w)
    if nw <= gamma * lam:
        return c.copy()
    return c + (1.0 - gamma * lam / nw) * w


def conjugate_prox_via_moreau(prox, gamma, z):
    """Resolvent of the inverse operator via Moreau's decomposition.

    Returns ``z - gamma * prox(1/gamma, z/gamma)``. For ``prox = prox_f`` this
    is ``prox_{gamma f*}(z)``; for a general resolvent ``J_A`` it is
    ``J_{gamma A^{-1}}(z)``.
    """
    gamma = _check_gamma(gamma)
    z = as_vector(z, prox.dim, name="z")
    return z - gamma * prox(1.0 / gamma, z / gamma)


# -- ProxMap objects ---------------------------------------------------------


class ProxMap:
    """Resolvent family ``(gamma, z) -> J_{gamma A}(z)``.

    ``dim`` is None for maps that act componentwise on any dimension.
    Calling the object validates inputs and dispatches to ``_evaluate``.
    """

    dim = None

    def __call__(self, gamma, z):
        return self.evaluate(gamma, z)

    def evaluate(self, gamma, z):
        gamma = _check_gamma(gamma)
        z = as_vector(z, self.dim, name="z")
        return self._evaluate(gamma, z)

    def _evaluate(self, gamma, z):
        raise NotImplementedError


class FunctionProx(ProxMap):
    """Wrap a plain callable ``fn(gamma, z)`` as a :class:`ProxMap`."""

    def __init__(self, fn, dim=None):
        self.fn = fn
        self.dim = dim

    def _evaluate(self, gamma, z):
        return np.asarray(self.fn(gamma, z), dtype=np.float64)


class SoftThreshold(ProxMap):
    """``prox_{gamma f}`` for ``f = lam * ||.||_1``."""

    def __init__(self, lam):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.lam = float(lam)

    def _evaluate(self, gamma, z):
        return soft_threshold(gamma * self.lam, z)

    def __repr__(self):
        return f"SoftThreshold(lam={self.lam})"


class QuadraticResidualConjugate(ProxMap):
    """``prox_{gamma g*}`` for ``g(y) = ||y - b||^2``."""

    def __init__(self, b):
        self.b = as_vector(b, name="b")
        self.dim = len(self.b)

    def _evaluate(self, gamma, z):
        return (2.0 / (gamma + 2.0)) * (z - gamma * self.b)


class QuadraticResidual(ProxMap):
    """``prox_{gamma g}`` for ``g(y) = ||y - b||^2``: ``(z + 2 gamma b) / (1 + 2 gamma)``."""

    def __init__(self, b):
        self.b = as_vector(b, name="b")
        self.dim = len(self.b)

    def _evaluate(self, gamma, z):
        return (z + 2.0 * gamma * self.b) / (1.0 + 2.0 * gamma)


class BoxProjection(ProxMap):
    """Projection onto a box; independent of ``gamma``."""

    def __init__(self, box):
        self.box = box
        self.dim = box.dim

    def _evaluate(self, gamma, z):
        return np.clip(z, self.box.lower, self.box.upper)


class BoxIndicatorConjugate(ProxMap):
    """``prox_{gamma (delta_S)*}``, i.e. the prox of the box support function."""

    def __init__(self, box):
        self.box = box
        self.dim = box.dim

    def _evaluate(self, gamma, z):
        return box_indicator_conjugate_prox(self.box, gamma, z)


class FermatWeberConjugate(ProxMap):
    """``prox_{gamma g*}`` for ``g(x) = lam * ||x - c||``."""

    def __init__(self, c, lam):
        self.c = as_vector(c, name="c")
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)
        self.dim = len(self.c)

    def _evaluate(self, gamma, z):
        return fw_conjugate_prox(self.c, self.lam, gamma, z)


class ShiftedNorm(ProxMap):
    """``prox_{gamma g}`` for ``g(x) = lam * ||x - c||``."""

    def __init__(self, c, lam):
        self.c = as_vector(c, name="c")
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)
        self.dim = len(self.c)

    def _evaluate(self, gamma, z):
        return prox_abs_shifted(self.c, self.lam, gamma, z)


class MoreauConjugate(ProxMap):
    """Resolvent of the inverse of the operator behind ``base``."""

    def __init__(self, base):
        self.base = base
        self.dim = base.dim

    def _evaluate(self, gamma, z):
        return conjugate_prox_via_moreau(self.base, gamma, z)


class QuadraticProx(ProxMap):
    """``prox_{gamma f}`` for ``f(x) = 1/2 ||x - a||^2``: ``(z + gamma a) / (1 + gamma)``."""

    def __init__(self, a):
        self.a = as_vector(a, name="a")
        self.dim = len(self.a)

    def _evaluate(self, gamma, z):
        return (z + gamma * self.a) / (1.0 + gamma)


class NullResolvent(ProxMap):
    """Resolvent of the zero operator: the identity for every ``gamma``."""

    def __init__(self, dim=None):
        self.dim = dim

    def _evaluate(self, gamma, z):
        return z.copy()


class ZeroMap(ProxMap):
    """Resolvent of the inverse of the zero operator: always returns 0."""

    def __init__(self, dim=None):
        self.dim = dim

    def _evaluate(self, gamma, z):
        return np.zeros_like(z)


def catalogue(dim=2, seed=0):
    """Seeded sample of each catalogue map, keyed by name (used in tests and docs)."""
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-1.0, 0.0, dim)
    box = BoxSet(lo, lo + rng.uniform(0.5, 2.0, dim))
    c = rng.normal(size=dim)
    return {
        "soft_threshold": SoftThreshold(0.7),
        "quadratic_residual_conjugate": QuadraticResidualConjugate(rng.normal(size=dim)),
        "box_projection": BoxProjection(box),
        "box_indicator_conjugate": BoxIndicatorConjugate(box),
        "fw_conjugate": FermatWeberConjugate(c, 1.3),
        "shifted_norm": ShiftedNorm(c, 1.3),
    }
