"""Problem builders for the deblurring and Fermat-Weber experiments.

The builders turn a problem description into solver inputs:

* :func:`build_p2` -- ``min lam ||x||_1 + ||Ax - b||^2`` for :func:`~pdsplit.splitting.run_pd`
* :func:`build_p3` -- the same plus the indicator of a box, as a three-term
  :class:`~pdsplit.splitting.SumProblem`
* :func:`build_fw` -- ``min sum_i lam_i ||x - c_i||`` as a
  :class:`~pdsplit.splitting.SumProblem` with identity operators
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import DimensionError
from .linops import IdentityMap, LinearMap, as_vector
from .prox import (
    BoxIndicatorConjugate,
    BoxSet,
    FermatWeberConjugate,
    MoreauConjugate,
    QuadraticResidualConjugate,
    ShiftedNorm,
    SoftThreshold,
)
from .splitting import ConvergenceRecord, SumProblem

__all__ = [
    "FermatWeberInstance",
    "DeblurInstance",
    "four_anchor_instance",
    "far_anchor_instance",
    "BUILTIN_INSTANCES",
    "build_p2",
    "build_p3",
    "build_fw",
    "fw_primal_proxes",
    "fw_objective",
    "p2_objective",
    "p3_objective",
    "WeiszfeldResult",
    "run_weiszfeld",
    "isnr",
]

BREAKDOWN_DISTANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FermatWeberInstance:
    """Anchors ``c_i`` (rows of a ``(k, m)`` array) with positive weights ``lam_i``."""

    anchors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        c = np.array(self.anchors, dtype=np.float64, ndmin=2)
        lam = as_vector(self.weights, c.shape[0], "weights")
        if c.ndim != 2 or c.shape[0] == 0:
            raise ValueError("anchors must be a non-empty (k, m) array")
        if not np.all(np.isfinite(c)):
            raise ValueError("anchors must be finite")
        if np.any(lam <= 0):
            raise ValueError("weights must be positive")
        c.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "anchors", c)
        object.__setattr__(self, "weights", lam)

    @property
    def k(self):
        return self.anchors.shape[0]

    @property
    def dim(self):
        return self.anchors.shape[1]

    @classmethod
    def from_text(cls, text):
        """Parse ``"k dim"`` followed by ``k`` lines ``lam_i c_i1 ... c_idim``."""
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ValueError("empty instance description")
        k, dim = (int(t) for t in lines[0].split())
        if len(lines) - 1 != k:
            raise ValueError(f"expected {k} anchor lines, found {len(lines) - 1}")
        lam, anchors = [], []
        for ln in lines[1:]:
            vals = [float(t) for t in ln.split()]
            if len(vals) != dim + 1:
                raise ValueError(f"anchor line needs {dim + 1} numbers: {ln!r}")
            lam.append(vals[0])
            anchors.append(vals[1:])
        return cls(np.array(anchors), np.array(lam))

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())


def four_anchor_instance():
    """Four anchors in the plane; optimum at the origin."""
    return FermatWeberInstance(
        np.array([[59.0, 0.0], [20.0, 0.0], [-20.0, 48.0], [-20.0, -48.0]]),
        np.array([5.0, 5.0, 13.0, 13.0]),
    )


def far_anchor_instance():
    """Unit-square corners plus a heavy far anchor; optimum at (100, 100)."""
    return FermatWeberInstance(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [100.0, 100.0]]),
        np.array([1.0, 1.0, 1.0, 1.0, 4.0]),
    )


BUILTIN_INSTANCES = {"39": four_anchor_instance, "40": far_anchor_instance}


@dataclass(frozen=True, eq=False)
class DeblurInstance:
    """``lam ||x||_1 + ||blur x - observed||^2`` (+ indicator of ``box`` when given)."""

    blur: LinearMap
    observed: np.ndarray
    lam: float
    box: Optional[BoxSet] = None

    def __post_init__(self):
        if self.blur.domain_dim != self.blur.codomain_dim:
            raise DimensionError("blur operator must be square")
        b = as_vector(np.ravel(self.observed), self.blur.codomain_dim, "observed")
        object.__setattr__(self, "observed", b)
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.box is not None and self.box.dim != b.shape[0]:
            raise DimensionError("box dimension does not match the image")


def build_p2(inst):
    """Return ``(prox_{tau lam||.||_1}, prox_{sigma g*}, A)`` for :func:`run_pd`."""
    if inst.box is not None:
        raise ValueError("instance has a box constraint; use build_p3")
    return SoftThreshold(inst.lam), QuadraticResidualConjugate(inst.observed), inst.blur


def build_p3(inst):
    """Three-term sum with ``K = (Id, A, Id)`` and equal weights 1/3.

    The conjugate proxes are: the Moreau conjugate of soft thresholding
    (a clamp to ``[-lam, lam]``), the conjugate of the quadratic residual,
    and the conjugate of the box indicator.
    """
    if inst.box is None:
        raise ValueError("instance has no box constraint; use build_p2")
    n = inst.blur.domain_dim
    return SumProblem(
        operators=(IdentityMap(n), inst.blur, IdentityMap(n)),
        conjugate_proxes=(
            MoreauConjugate(SoftThreshold(inst.lam)),
            QuadraticResidualConjugate(inst.observed),
            BoxIndicatorConjugate(inst.box),
        ),
        weights=np.full(3, 1.0 / 3.0),
    )


def build_fw(inst):
    """Sum problem with ``K_i = Id``, ``w_i = 1/k`` and ``g_i = lam_i ||. - c_i||``.

    The solver minimizes ``(1/k) sum_i lam_i ||x - c_i||``, which has the same
    minimizers as the unscaled objective.
    """
    n = inst.dim
    return SumProblem(
        operators=tuple(IdentityMap(n) for _ in range(inst.k)),
        conjugate_proxes=tuple(
            FermatWeberConjugate(c, lam) for c, lam in zip(inst.anchors, inst.weights)
        ),
        weights=np.full(inst.k, 1.0 / inst.k),
    )


def fw_primal_proxes(inst):
    """``prox_{tau g_i}`` for each term, as used by :func:`run_sum_swapped`."""
    return [ShiftedNorm(c, lam) for c, lam in zip(inst.anchors, inst.weights)]


def fw_objective(inst, x):
    x = as_vector(x, inst.dim)
    return float(np.sum(inst.weights * np.linalg.norm(inst.anchors - x, axis=1)))


def p2_objective(inst, x):
    x = as_vector(np.ravel(x), inst.blur.domain_dim)
    r = inst.blur.apply(x) - inst.observed
    return float(inst.lam * np.sum(np.abs(x)) + r @ r)


def p3_objective(inst, x, feas_tol=0.0):
    """(P2) objective plus the box indicator; ``inf`` if ``x`` leaves the box by more than ``feas_tol``."""
    if inst.box is None:
        raise ValueError("instance has no box constraint")
    x = as_vector(np.ravel(x), inst.blur.domain_dim)
    if not inst.box.contains(x, feas_tol):
        return math.inf
    r = inst.blur.apply(x) - inst.observed
    return float(inst.lam * np.sum(np.abs(x)) + r @ r)


class WeiszfeldResult(NamedTuple):
    x: np.ndarray
    log: ConvergenceRecord
    breakdown: Optional[int]


def run_weiszfeld(inst, x0, max_iter=1000, tol=1e-10):
    """Classical Weiszfeld iteration ``x+ = sum(lam_i c_i / d_i) / sum(lam_i / d_i)``.

    The update is undefined when an iterate coincides with an anchor. If an
    iterate (or ``x0``) comes within 1e-12 of anchor ``i``, iteration stops
    and ``breakdown`` is ``i`` (0-based). Otherwise ``breakdown`` is None and
    iteration ends when the step drops below ``tol`` or after ``max_iter``
    steps. The log records ``dx`` and the objective.
    """
    x = as_vector(x0, inst.dim, "x0")
    record = ConvergenceRecord()

    def hit(point):
        d = np.linalg.norm(inst.anchors - point, axis=1)
        i = int(np.argmin(d))
        return (i if d[i] <= BREAKDOWN_DISTANCE else None), d

    idx, d = hit(x)
    if idx is not None:
        return WeiszfeldResult(x, record, idx)
    for n in range(1, max_iter + 1):
        coef = inst.weights / d
        x_new = coef @ inst.anchors / coef.sum()
        dx = float(np.linalg.norm(x_new - x))
        x = x_new
        idx, d = hit(x)
        record.append(n, dx=dx, objective=fw_objective(inst, x))
        if idx is not None:
            return WeiszfeldResult(x, record, idx)
        if dx < tol:
            record.converged = True
            break
    return WeiszfeldResult(x, record, None)


def isnr(original, observed, estimate):
    """Improvement in signal-to-noise ratio, ``10 log10(||x-b||^2 / ||x-x_n||^2)`` in dB."""
    x = np.asarray(original, dtype=np.float64)
    b = np.asarray(observed, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    if x.shape != b.shape or x.shape != e.shape:
        raise DimensionError("original, observed and estimate must have equal shapes")
    den = float(np.sum((x - e) ** 2))
    if den == 0.0:
        raise ValueError("ISNR is undefined when the estimate equals the original")
    num = float(np.sum((x - b) ** 2))
    if num == 0.0:
        return -math.inf
    return 10.0 * math.log10(num / den)
