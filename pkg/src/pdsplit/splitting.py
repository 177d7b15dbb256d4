"""Primal-dual splitting solvers.

Solvers for the primal-dual pair

    find x  with  0 in A x + K* B K x
    find y  with  0 in B^{-1} y - K A^{-1}(-K* y)

and for sums of compositions ``0 in sum_i w_i K_i* B_i K_i x``. Operators
enter only through resolvents (:class:`pdsplit.prox.ProxMap`):

========================  ==========================================
solver                    scheme
========================  ==========================================
:func:`run_pd`            forward primal-dual step with extrapolation
:func:`run_ahu`           same without extrapolation (Arrow-Hurwicz-Uzawa)
:func:`run_skew`          primal-dual on the skew reformulation ``S + M``
:func:`run_sum_compositions`  product-space reduction, general ``K_i``
:func:`run_sum`           product-space reduction, ``K_i = Id``
:func:`run_sum_swapped`   product-space reduction with roles swapped
========================  ==========================================

For convex problems ``min f(x) + g(Kx)`` pass ``prox_{tau f}`` as the
resolvent of ``A`` and ``prox_{sigma g*}`` as the resolvent of ``B^{-1}``.

Every solver checks its step-size condition before iterating and stops when
``max(dx, dy) <= stop_tol`` or after ``max_iter`` iterations. ``stop_tol = 0``
disables the early stop, so exactly ``max_iter`` iterations run.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import DimensionError, InnerSolveError, StepSizeError
from .linops import IdentityMap, LinearMap, as_vector, estimate_norm
from .prox import MoreauConjugate, ProxMap

__all__ = [
    "SolverConfig",
    "ConvergenceRecord",
    "StepSizeVerdict",
    "SumProblem",
    "PDResult",
    "SumResult",
    "SwappedResult",
    "validate_stepsizes",
    "fixed_point_residual",
    "solve_normal",
    "run_pd",
    "run_ahu",
    "run_skew",
    "run_sum_compositions",
    "run_sum",
    "run_sum_swapped",
]

# Safety factor applied to estimated (not declared) operator norms.
NORM_INFLATION = 1.01

_KINDS = ("pd", "ahu", "skew", "sum-compositions", "sum", "sum-swapped")
_NEEDS_NORM = {"pd", "ahu", "sum-compositions"}


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes and stopping parameters.

    ``norm_bound_used`` is the operator-norm bound ``L`` used in the
    step-size check (for sums of compositions ``L**2 = sum_i ||K_i||**2``).
    When None the solver takes the operator's declared bound, or an
    estimate inflated by 1%. ``stop_tol = 0`` means run all ``max_iter``
    iterations.
    """

    sigma: float
    tau: float
    max_iter: int = 1000
    stop_tol: float = 0.0
    norm_bound_used: Optional[float] = None

    def __post_init__(self):
        if not (self.sigma > 0 and self.tau > 0):
            raise ValueError("sigma and tau must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")
        if self.norm_bound_used is not None and self.norm_bound_used < 0:
            raise ValueError("norm_bound_used must be nonnegative")


@dataclass(frozen=True)
class StepSizeVerdict:
    ok: bool
    product: float
    message: str

    def __bool__(self):
        return self.ok


def validate_stepsizes(kind, sigma, tau, norm_sq=None):
    """Check the strict step-size condition of an algorithm.

    Parameters
    ----------
    kind : str
        ``"pd"``, ``"ahu"``, ``"skew"``, ``"sum-compositions"``, ``"sum"`` or
        ``"sum-swapped"``.
    norm_sq : float, optional
        ``||K||**2`` for ``pd``/``ahu``, ``sum_i ||K_i||**2`` for
        ``sum-compositions``; ignored by the others, whose condition is
        ``sigma * tau < 1``.
    """
    k = kind.lower()
    if k not in _KINDS:
        raise ValueError(f"unknown algorithm tag {kind!r}")
    if not (sigma > 0 and tau > 0):
        return StepSizeVerdict(False, math.nan, "sigma and tau must be positive")
    if k in _NEEDS_NORM:
        if norm_sq is None:
            raise ValueError(f"{k} requires the squared operator norm")
        product = sigma * tau * norm_sq
        label = "sigma*tau*||K||^2" if k != "sum-compositions" else "sigma*tau*sum||K_i||^2"
    else:
        product = sigma * tau
        label = "sigma*tau"
    if product < 1.0:
        return StepSizeVerdict(True, product, f"{label} = {product:.6g} < 1")
    return StepSizeVerdict(False, product, f"{label} = {product:.6g} must be < 1")


def _require_steps(kind, cfg, norm_sq=None):
    verdict = validate_stepsizes(kind, cfg.sigma, cfg.tau, norm_sq)
    if not verdict:
        raise StepSizeError(verdict.message)
    return verdict


STANDARD_COLUMNS = ("iter", "dx", "dy", "objective", "dist_ref", "energy")


class ConvergenceRecord:
    """Per-iteration diagnostics of a solver run.

    Rows hold ``iter, dx, dy`` plus optional ``objective``, ``dist_ref``,
    ``energy`` and any extra columns a solver or caller adds. Missing values
    are None and serialize as empty CSV cells.
    """

    def __init__(self, extra_columns=()):
        self.columns = list(STANDARD_COLUMNS)
        for c in extra_columns:
            if c not in self.columns:
                self.columns.append(c)
        self.rows = []
        self.converged = False
        self.fixed_point_residual = None
        self.norm_bound_used = None
        self.energy_bound = None

    def append(self, n, **values):
        if self.rows and n <= self.rows[-1]["iter"]:
            raise ValueError("iteration numbers must be strictly increasing")
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        row = dict.fromkeys(self.columns)
        row.update(values)
        row["iter"] = int(n)
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    @property
    def iterations(self):
        return self.rows[-1]["iter"] if self.rows else 0

    def column(self, name):
        """Column as a float array, NaN where absent."""
        return np.array(
            [np.nan if r[name] is None else r[name] for r in self.rows], dtype=np.float64
        )

    def last(self, name):
        return self.rows[-1][name] if self.rows else None

    def to_csv(self, dest=None):
        """Write CSV to a path or file object; return the text when ``dest`` is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt_cell(c, r[c]) for c in self.columns])
        text = buf.getvalue()
        if dest is None:
            return text
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return None


def _fmt_cell(col, v):
    if v is None:
        return ""
    if col == "iter":
        return str(int(v))
    return f"{float(v):.16e}"


class PDResult(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    log: ConvergenceRecord


class SumResult(NamedTuple):
    x: np.ndarray
    ys: list
    log: ConvergenceRecord


class SwappedResult(NamedTuple):
    xs: list
    ys: list
    log: ConvergenceRecord

    @property
    def x(self):
        """Unweighted mean of the blocks ``x_i`` (they agree at convergence)."""
        return np.mean(self.xs, axis=0)


class _Tracker:
    """Fills a ConvergenceRecord; handles objective cadence and callbacks."""

    def __init__(self, record, dim, objective, objective_every, monitors, x_ref, callback):
        self.record = record
        self.objective = objective
        if objective_every is None:
            objective_every = 1 if dim <= 10_000 else 10
        self.every = int(objective_every)
        self.monitors = dict(monitors or {})
        self.x_ref = x_ref
        self.callback = callback

    def step(self, n, x, dx, dy, **extra):
        vals = dict(dx=dx, dy=dy, **extra)
        if self.objective is not None and (n % self.every == 0 or n == 1):
            vals["objective"] = float(self.objective(x))
        if self.x_ref is not None:
            vals["dist_ref"] = float(np.linalg.norm(x - self.x_ref))
        for name, fn in self.monitors.items():
            vals[name] = float(fn(x))
        self.record.append(n, **vals)
        if self.callback is not None:
            self.callback(n, x)


def _resolve_norm(K, cfg, seed=0):
    if cfg.norm_bound_used is not None:
        return cfg.norm_bound_used
    if K.norm_bound is not None:
        return K.norm_bound
    return NORM_INFLATION * estimate_norm(K, seed=seed).value


def fixed_point_residual(resolvent_A, conj_resolvent_B, K, sigma, tau, x, y):
    """Largest violation of ``y = J_{sB^-1}(y + sKx)`` and ``x = J_{tA}(x - tK*y)``."""
    ry = np.linalg.norm(y - conj_resolvent_B(sigma, y + sigma * K.apply(x)))
    rx = np.linalg.norm(x - resolvent_A(tau, x - tau * K.adjoint_apply(y)))
    return float(max(rx, ry))


def _primal_dual(resolvent_A, conj_resolvent_B, K, cfg, x0, y0, extrapolate, kind,
                 x_ref, y_ref, objective, objective_every, monitors, callback):
    x = as_vector(np.zeros(K.domain_dim) if x0 is None else x0, K.domain_dim, "x0")
    y = as_vector(np.zeros(K.codomain_dim) if y0 is None else y0, K.codomain_dim, "y0")
    L = _resolve_norm(K, cfg)
    _require_steps(kind, cfg, L * L)
    sigma, tau = cfg.sigma, cfg.tau

    record = ConvergenceRecord(extra_columns=tuple(monitors or ()))
    record.norm_bound_used = L
    if x_ref is not None:
        x_ref = as_vector(x_ref, K.domain_dim, "x_ref")
    track_energy = x_ref is not None and y_ref is not None
    if track_energy:
        y_ref = as_vector(y_ref, K.codomain_dim, "y_ref")
        shrink = 1.0 - sigma * tau * L * L
        record.energy_bound = float(
            np.sum((x - x_ref) ** 2) / (2 * tau) + np.sum((y - y_ref) ** 2) / (2 * sigma)
        )
    tracker = _Tracker(record, K.domain_dim, objective, objective_every, monitors, x_ref, callback)

    x_bar = x.copy()
    for n in range(1, cfg.max_iter + 1):
        y_new = conj_resolvent_B(sigma, y + sigma * K.apply(x_bar if extrapolate else x))
        x_new = resolvent_A(tau, x - tau * K.adjoint_apply(y_new))
        x_bar = 2.0 * x_new - x
        dx = float(np.linalg.norm(x_new - x))
        dy = float(np.linalg.norm(y_new - y))
        x, y = x_new, y_new
        extra = {}
        if track_energy:
            extra["energy"] = float(
                np.sum((x - x_ref) ** 2) / (2 * tau)
                + shrink * np.sum((y - y_ref) ** 2) / (2 * sigma)
            )
        tracker.step(n, x, dx, dy, **extra)
        if cfg.stop_tol > 0 and max(dx, dy) <= cfg.stop_tol:
            record.converged = True
            break
    record.fixed_point_residual = fixed_point_residual(
        resolvent_A, conj_resolvent_B, K, sigma, tau, x, y
    )
    return PDResult(x, y, record)


def run_pd(resolvent_A, conj_resolvent_B, K, cfg, x0=None, y0=None, *, x_ref=None,
           y_ref=None, objective=None, objective_every=None, monitors=None, callback=None):
    """Primal-dual iteration with extrapolation.

    Iterates::

        y+    = conj_resolvent_B(sigma, y + sigma K x_bar)
        x+    = resolvent_A(tau, x - tau K* y+)
        x_bar = 2 x+ - x

    starting from ``x_bar = x0``. Requires ``sigma tau ||K||^2 < 1``.

    Parameters
    ----------
    resolvent_A : ProxMap
        ``J_{tau A}`` (``prox_{tau f}`` for convex problems).
    conj_resolvent_B : ProxMap
        ``J_{sigma B^-1}`` (``prox_{sigma g*}``).
    K : LinearMap
    cfg : SolverConfig
    x0, y0 : array_like, optional
        Starting points, zero by default.
    x_ref, y_ref : array_like, optional
        A known solution pair. With both given the ``energy`` column holds
        ``||x-x_ref||^2/(2 tau) + (1 - sigma tau L^2) ||y-y_ref||^2/(2 sigma)``
        and ``log.energy_bound`` its guaranteed upper bound.
    objective : callable, optional
        Logged every ``objective_every`` iterations (default 1, or 10 above
        10**4 unknowns).
    monitors : mapping of name -> callable(x), optional
        Extra logged columns.
    callback : callable(n, x), optional

    Returns
    -------
    PDResult
        ``(x, y, log)``.
    """
    return _primal_dual(resolvent_A, conj_resolvent_B, K, cfg, x0, y0, True, "pd",
                        x_ref, y_ref, objective, objective_every, monitors, callback)


def run_ahu(resolvent_A, conj_resolvent_B, K, cfg, x0=None, y0=None, *, x_ref=None,
            y_ref=None, objective=None, objective_every=None, monitors=None, callback=None):
    """Arrow-Hurwicz-Uzawa variant of :func:`run_pd`: the dual step uses ``K x``.

    No convergence guarantee exists for this variant; the step-size check of
    :func:`run_pd` is applied as a conservative default.
    """
    return _primal_dual(resolvent_A, conj_resolvent_B, K, cfg, x0, y0, False, "ahu",
                        x_ref, y_ref, objective, objective_every, monitors, callback)


def solve_normal(K, tau, rhs, side="domain", tol=1e-12, max_iter=None):
    """Solve ``(Id + tau^2 K*K) w = rhs`` (``side="domain"``) or
    ``(Id + tau^2 K K*) w = rhs`` (``side="codomain"``).

    Uses ``rhs / (1 + tau^2)`` when ``K`` is flagged orthogonal, conjugate
    gradients otherwise. The result satisfies
    ``||M w - rhs|| <= tol ||rhs||``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if side == "domain":
        n = K.domain_dim

        def op(w):
            return w + tau * tau * K.adjoint_apply(K.apply(w))
    elif side == "codomain":
        n = K.codomain_dim

        def op(w):
            return w + tau * tau * K.apply(K.adjoint_apply(w))
    else:
        raise ValueError("side must be 'domain' or 'codomain'")
    b = as_vector(rhs, n, "rhs")
    if K.orthogonal:
        return b / (1.0 + tau * tau)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    if max_iter is None:
        max_iter = max(100, 2 * n)
    w = np.zeros(n)
    r = b.copy()
    p = r.copy()
    rs = r @ r
    target = (tol * bnorm) ** 2
    for _ in range(max_iter):
        Ap = op(p)
        alpha = rs / (p @ Ap)
        w += alpha * p
        r -= alpha * Ap
        rs_new = r @ r
        if rs_new <= target:
            # recurrence residual can drift; confirm with the true one
            if np.linalg.norm(op(w) - b) <= tol * bnorm * 1.0000001:
                return w
            r = b - op(w)
            rs_new = r @ r
            p = r.copy()
            rs = rs_new
            continue
        p = r + (rs_new / rs) * p
        rs = rs_new
    res = np.linalg.norm(op(w) - b)
    if res <= tol * bnorm:
        return w
    raise InnerSolveError(
        f"conjugate gradient did not reach relative residual {tol:g} in {max_iter} "
        f"iterations (residual {res / bnorm:.3e})"
    )


def run_skew(conj_resolvent_A, resolvent_B, K, cfg, x0=None, y0=None, u0=None, v0=None, *,
             x_ref=None, objective=None, objective_every=None, monitors=None, callback=None,
             cg_tol=1e-12):
    """Primal-dual iteration on the skew reformulation ``0 in S(x,y) + M(x,y)``.

    ``S(x, y) = (K* y, -K x)`` and ``M(x, y) = (A x, B^-1 y)``. Iterates::

        u+ = conj_resolvent_A(sigma, u + sigma x_bar)
        v+ = resolvent_B(sigma, v + sigma y_bar)
        x+ = (Id + tau^2 K*K)^-1 [x - tau u+ - tau K*(y - tau v+)]
        y+ = (Id + tau^2 KK*)^-1 [y - tau v+ + tau K(x - tau u+)]
        x_bar, y_bar = 2 x+ - x, 2 y+ - y

    Only ``sigma tau < 1`` is required; ``K`` enters through inner solves
    (:func:`solve_normal`). ``conj_resolvent_A`` is ``J_{sigma A^-1}``
    (``prox_{sigma f*}``) and ``resolvent_B`` is ``J_{sigma B}``
    (``prox_{sigma g}``).

    Raises
    ------
    InnerSolveError
        If an inner conjugate-gradient solve fails.
    """
    nx, ny = K.domain_dim, K.codomain_dim
    x = as_vector(np.zeros(nx) if x0 is None else x0, nx, "x0")
    y = as_vector(np.zeros(ny) if y0 is None else y0, ny, "y0")
    u = as_vector(np.zeros(nx) if u0 is None else u0, nx, "u0")
    v = as_vector(np.zeros(ny) if v0 is None else v0, ny, "v0")
    _require_steps("skew", cfg)
    sigma, tau = cfg.sigma, cfg.tau

    record = ConvergenceRecord(extra_columns=tuple(monitors or ()))
    if x_ref is not None:
        x_ref = as_vector(x_ref, nx, "x_ref")
    tracker = _Tracker(record, nx, objective, objective_every, monitors, x_ref, callback)

    x_bar, y_bar = x.copy(), y.copy()
    for n in range(1, cfg.max_iter + 1):
        u = conj_resolvent_A(sigma, u + sigma * x_bar)
        v = resolvent_B(sigma, v + sigma * y_bar)
        px = x - tau * u
        py = y - tau * v
        x_new = solve_normal(K, tau, px - tau * K.adjoint_apply(py), "domain", cg_tol)
        y_new = solve_normal(K, tau, py + tau * K.apply(px), "codomain", cg_tol)
        x_bar = 2.0 * x_new - x
        y_bar = 2.0 * y_new - y
        dx = float(np.linalg.norm(x_new - x))
        dy = float(np.linalg.norm(y_new - y))
        x, y = x_new, y_new
        tracker.step(n, x, dx, dy)
        if cfg.stop_tol > 0 and max(dx, dy) <= cfg.stop_tol:
            record.converged = True
            break
    # J_{tau A} and J_{sigma B^-1} recovered from the given maps by Moreau
    record.fixed_point_residual = fixed_point_residual(
        MoreauConjugate(conj_resolvent_A), MoreauConjugate(resolvent_B), K, sigma, tau, x, y
    )
    return PDResult(x, y, record)


@dataclass(frozen=True, eq=False)
class SumProblem:
    """Data of ``0 in sum_i w_i K_i* B_i K_i x``.

    ``conjugate_proxes[i]`` is the resolvent family of ``B_i^{-1}``
    (``prox_{sigma g_i*}``). Weights default to ``1/k``.
    """

    operators: Sequence[LinearMap]
    conjugate_proxes: Sequence[ProxMap]
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        ops = tuple(self.operators)
        proxes = tuple(self.conjugate_proxes)
        k = len(ops)
        if k == 0 or len(proxes) != k:
            raise ValueError("need k >= 1 operators and as many conjugate proxes")
        w = np.full(k, 1.0 / k) if self.weights is None else as_vector(self.weights, k, "weights")
        if np.any(w <= 0) or np.any(w > 1):
            raise ValueError("weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        n = ops[0].domain_dim
        for i, (K, P) in enumerate(zip(ops, proxes)):
            if K.domain_dim != n:
                raise DimensionError(f"K_{i} has domain R^{K.domain_dim}, expected R^{n}")
            if P.dim is not None and P.dim != K.codomain_dim:
                raise DimensionError(f"prox {i} acts on R^{P.dim}, K_{i} maps to R^{K.codomain_dim}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "conjugate_proxes", proxes)
        object.__setattr__(self, "weights", w)

    @property
    def k(self):
        return len(self.operators)

    @property
    def dim(self):
        return self.operators[0].domain_dim

    @property
    def all_identity(self):
        return all(isinstance(K, IdentityMap) for K in self.operators)

    def norm_sq_sum(self, seed=0):
        """``sum_i ||K_i||^2`` from declared bounds, or inflated estimates."""
        total = 0.0
        for K in self.operators:
            if K.norm_bound is not None:
                total += K.norm_bound ** 2
            else:
                total += (NORM_INFLATION * estimate_norm(K, seed=seed).value) ** 2
        return total


def _initial_duals(problem, y0s):
    if y0s is None:
        return [np.zeros(K.codomain_dim) for K in problem.operators]
    if len(y0s) != problem.k:
        raise DimensionError(f"expected {problem.k} dual starting points, got {len(y0s)}")
    return [as_vector(y, K.codomain_dim, f"y0[{i}]")
            for i, (y, K) in enumerate(zip(y0s, problem.operators))]


def _stack_norm(a, b):
    return float(math.sqrt(sum(float(np.sum((u - v) ** 2)) for u, v in zip(a, b))))


def run_sum_compositions(problem, cfg, x0=None, y0s=None, *, x_ref=None, objective=None,
                         objective_every=None, monitors=None, callback=None):
    """Primal-dual iteration for ``0 in sum_i w_i K_i* B_i K_i x``.

    Iterates::

        y_i+  = conj_proxes[i](sigma, y_i + sigma K_i x_bar)
        x+    = x - tau sum_i w_i K_i* y_i+
        x_bar = 2 x+ - x

    Requires ``sigma tau sum_i ||K_i||^2 < 1``. The ``dual_res`` column logs
    ``||sum_i w_i K_i* y_i||``.
    """
    n_dim = problem.dim
    x = as_vector(np.zeros(n_dim) if x0 is None else x0, n_dim, "x0")
    ys = _initial_duals(problem, y0s)
    if cfg.norm_bound_used is not None:
        norm_sq = cfg.norm_bound_used ** 2
    else:
        norm_sq = problem.norm_sq_sum()
    _require_steps("sum-compositions", cfg, norm_sq)
    sigma, tau = cfg.sigma, cfg.tau
    w = problem.weights

    record = ConvergenceRecord(extra_columns=("dual_res",) + tuple(monitors or ()))
    record.norm_bound_used = math.sqrt(norm_sq)
    if x_ref is not None:
        x_ref = as_vector(x_ref, n_dim, "x_ref")
    tracker = _Tracker(record, n_dim, objective, objective_every, monitors, x_ref, callback)

    x_bar = x.copy()
    for n in range(1, cfg.max_iter + 1):
        ys_new = [P(sigma, y + sigma * K.apply(x_bar))
                  for P, K, y in zip(problem.conjugate_proxes, problem.operators, ys)]
        agg = sum(wi * K.adjoint_apply(y) for wi, K, y in zip(w, problem.operators, ys_new))
        x_new = x - tau * agg
        x_bar = 2.0 * x_new - x
        dx = float(np.linalg.norm(x_new - x))
        dy = _stack_norm(ys_new, ys)
        x, ys = x_new, ys_new
        tracker.step(n, x, dx, dy, dual_res=float(np.linalg.norm(agg)))
        if cfg.stop_tol > 0 and max(dx, dy) <= cfg.stop_tol:
            record.converged = True
            break
    agg = sum(wi * K.adjoint_apply(y) for wi, K, y in zip(w, problem.operators, ys))
    res = max(
        [float(np.linalg.norm(y - P(sigma, y + sigma * K.apply(x))))
         for P, K, y in zip(problem.conjugate_proxes, problem.operators, ys)]
        + [float(np.linalg.norm(agg))]
    )
    record.fixed_point_residual = res
    return SumResult(x, ys, record)


def run_sum(problem, cfg, x0=None, y0s=None, *, x_ref=None, objective=None,
            objective_every=None, monitors=None, callback=None):
    """:func:`run_sum_compositions` specialised to ``K_i = Id``.

    Iterates::

        y_i+  = conj_proxes[i](sigma, y_i + sigma x_bar)
        x+    = x - tau sum_i w_i y_i+
        x_bar = 2 x+ - x

    and requires only ``sigma tau < 1``. ``dual_res`` logs the dual
    feasibility residual ``||sum_i w_i y_i||``.
    """
    if not problem.all_identity:
        raise ValueError("run_sum needs every K_i to be an IdentityMap")
    n_dim = problem.dim
    x = as_vector(np.zeros(n_dim) if x0 is None else x0, n_dim, "x0")
    ys = _initial_duals(problem, y0s)
    _require_steps("sum", cfg)
    sigma, tau = cfg.sigma, cfg.tau
    w = problem.weights

    record = ConvergenceRecord(extra_columns=("dual_res",) + tuple(monitors or ()))
    if x_ref is not None:
        x_ref = as_vector(x_ref, n_dim, "x_ref")
    tracker = _Tracker(record, n_dim, objective, objective_every, monitors, x_ref, callback)

    x_bar = x.copy()
    for n in range(1, cfg.max_iter + 1):
        ys_new = [P(sigma, y + sigma * x_bar) for P, y in zip(problem.conjugate_proxes, ys)]
        agg = sum(wi * y for wi, y in zip(w, ys_new))
        x_new = x - tau * agg
        x_bar = 2.0 * x_new - x
        dx = float(np.linalg.norm(x_new - x))
        dy = _stack_norm(ys_new, ys)
        x, ys = x_new, ys_new
        tracker.step(n, x, dx, dy, dual_res=float(np.linalg.norm(agg)))
        if cfg.stop_tol > 0 and max(dx, dy) <= cfg.stop_tol:
            record.converged = True
            break
    agg = sum(wi * y for wi, y in zip(w, ys))
    record.fixed_point_residual = max(
        [float(np.linalg.norm(y - P(sigma, y + sigma * x)))
         for P, y in zip(problem.conjugate_proxes, ys)]
        + [float(np.linalg.norm(agg))]
    )
    return SumResult(x, ys, record)


def run_sum_swapped(proxes, weights=None, cfg=None, x0s=None, y0s=None, *, x_ref=None,
                    objective=None, objective_every=None, monitors=None, callback=None):
    """Product-space iteration with the roles of the two operators swapped.

    Each block keeps its own primal copy ``x_i``::

        y_i+   = y_i - sigma x_bar_i - sum_j w_j y_j + sigma sum_j w_j x_bar_j
        x_i+   = proxes[i](tau, x_i + tau y_i+)
        x_bar_i = 2 x_i+ - x_i

    The dual update is ``(Id - P_V)`` applied to ``y - sigma x_bar``, where
    ``P_V`` averages the blocks, so ``sum_j w_j y_j`` stays zero once it is
    zero. Requires ``sigma tau < 1``. At convergence all ``x_i`` agree.

    Parameters
    ----------
    proxes : sequence of ProxMap
        ``J_{tau B_i}`` (``prox_{tau g_i}``), all on the same space.
    weights : array_like, optional
        Defaults to ``1/k``.
    x0s : array_like or sequence of array_like, optional
        One starting point shared by all blocks, or one per block.

    The ``consensus`` column logs ``max_i ||x_i - xbar||`` with ``xbar``
    the weighted mean; objective, ``dist_ref`` and callbacks see ``xbar``.
    """
    if cfg is None:
        raise ValueError("cfg is required")
    proxes = list(proxes)
    k = len(proxes)
    if k == 0:
        raise ValueError("need at least one prox")
    w = np.full(k, 1.0 / k) if weights is None else as_vector(weights, k, "weights")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be positive and sum to 1")
    dims = {P.dim for P in proxes if P.dim is not None}
    if len(dims) > 1:
        raise DimensionError("all proxes must act on the same space")

    if x0s is None:
        if not dims:
            raise ValueError("x0s is required when the prox dimension is unknown")
        n0 = dims.pop()
        xs = [np.zeros(n0) for _ in range(k)]
    else:
        arr = np.asarray(x0s, dtype=np.float64)
        if arr.ndim == 1:
            xs = [as_vector(arr, name="x0") for _ in range(k)]
        else:
            if arr.shape[0] != k:
                raise DimensionError(f"expected {k} primal starting points")
            xs = [as_vector(a, name=f"x0[{i}]") for i, a in enumerate(arr)]
    n_dim = xs[0].shape[0]
    for P in proxes:
        if P.dim is not None and P.dim != n_dim:
            raise DimensionError(f"prox acts on R^{P.dim}, starting point in R^{n_dim}")
    if y0s is None:
        ys = [np.zeros(n_dim) for _ in range(k)]
    else:
        if len(y0s) != k:
            raise DimensionError(f"expected {k} dual starting points")
        ys = [as_vector(y, n_dim, f"y0[{i}]") for i, y in enumerate(y0s)]
    _require_steps("sum-swapped", cfg)
    sigma, tau = cfg.sigma, cfg.tau

    record = ConvergenceRecord(extra_columns=("consensus",) + tuple(monitors or ()))
    if x_ref is not None:
        x_ref = as_vector(x_ref, n_dim, "x_ref")
    tracker = _Tracker(record, n_dim, objective, objective_every, monitors, x_ref, callback)

    x_bars = [x.copy() for x in xs]
    for n in range(1, cfg.max_iter + 1):
        mean_y = sum(wi * y for wi, y in zip(w, ys))
        mean_xbar = sum(wi * xb for wi, xb in zip(w, x_bars))
        ys_new = [y - sigma * xb - mean_y + sigma * mean_xbar for y, xb in zip(ys, x_bars)]
        xs_new = [P(tau, x + tau * y) for P, x, y in zip(proxes, xs, ys_new)]
        x_bars = [2.0 * xn - x for xn, x in zip(xs_new, xs)]
        dx = _stack_norm(xs_new, xs)
        dy = _stack_norm(ys_new, ys)
        xs, ys = xs_new, ys_new
        center = sum(wi * x for wi, x in zip(w, xs))
        spread = max(float(np.linalg.norm(x - center)) for x in xs)
        tracker.step(n, center, dx, dy, consensus=spread)
        if cfg.stop_tol > 0 and max(dx, dy) <= cfg.stop_tol:
            record.converged = True
            break
    center = sum(wi * x for wi, x in zip(w, xs))
    record.fixed_point_residual = max(
        [float(np.linalg.norm(x - P(tau, x + tau * y))) for P, x, y in zip(proxes, xs, ys)]
        + [float(np.linalg.norm(x - center)) for x in xs]
        + [float(np.linalg.norm(sum(wi * y for wi, y in zip(w, ys))))]
    )
    return SwappedResult(xs, ys, record)
