import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _toys import CoupledQuadratic, ShrinkToy, quad_conj
from pdsplit.convex_problems import build_fw, four_anchor_instance, fw_primal_proxes
from pdsplit.exceptions import DimensionError, InnerSolveError, StepSizeError
from pdsplit.linops import DenseMatrix, IdentityMap
from pdsplit.prox import FunctionProx, NullResolvent, QuadraticProx, SoftThreshold, ZeroMap
from pdsplit.splitting import (
    ConvergenceRecord,
    SolverConfig,
    SumProblem,
    fixed_point_residual,
    run_ahu,
    run_pd,
    run_skew,
    run_sum,
    run_sum_compositions,
    run_sum_swapped,
    solve_normal,
    validate_stepsizes,
)

# scalar toy: f = x^2/2, g = (y - 2)^2/2, K = Id, solution x = 1
HALF_SQ = FunctionProx(lambda g, z: z / (1 + g), 1)
G_CONJ = quad_conj([2.0])
G_PROX = QuadraticProx([2.0])
ID1 = IdentityMap(1)


def test_pd_scalar_toy():
    x, y, log = run_pd(HALF_SQ, G_CONJ, ID1, SolverConfig(0.5, 0.5, 500, 1e-14))
    assert abs(x[0] - 1.0) < 1e-10
    assert abs(y[0] + 1.0) < 1e-10
    assert log.converged


def test_pd_with_null_dual_is_proximal_point():
    seen = []
    x, y, log = run_pd(SoftThreshold(1.0), ZeroMap(), ID1, SolverConfig(0.5, 1.0, 6),
                       x0=[5.0], callback=lambda n, x: seen.append(x[0]))
    assert seen == [4.0, 3.0, 2.0, 1.0, 0.0, 0.0]
    np.testing.assert_array_equal(y, [0.0])


def test_ahu_scalar_toy():
    x, _, _ = run_ahu(HALF_SQ, G_CONJ, ID1, SolverConfig(0.5, 0.5, 500))
    assert abs(x[0] - 1.0) < 1e-10


def test_ahu_with_zero_operator_decouples():
    Z = DenseMatrix([[0.0]])
    seen = []
    run_ahu(SoftThreshold(1.0), G_CONJ, Z, SolverConfig(0.5, 1.0, 4), x0=[3.5],
            callback=lambda n, x: seen.append(x[0]))
    assert seen == [2.5, 1.5, 0.5, 0.0]


def test_ahu_first_step_matches_pd():
    cfg = SolverConfig(0.5, 0.5, 1)
    a = run_pd(HALF_SQ, G_CONJ, ID1, cfg)
    b = run_ahu(HALF_SQ, G_CONJ, ID1, cfg)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)


def test_skew_scalar_toy():
    x, y, log = run_skew(HALF_SQ, G_PROX, ID1, SolverConfig(0.5, 0.5, 2000, 1e-14))
    ref = run_pd(HALF_SQ, G_CONJ, ID1, SolverConfig(0.5, 0.5, 500))
    assert abs(x[0] - 1.0) < 1e-9
    assert abs(x[0] - ref.x[0]) < 1e-9
    assert log.fixed_point_residual < 1e-9


def test_skew_degenerate_operators():
    x, y, log = run_skew(ZeroMap(2), NullResolvent(2), IdentityMap(2),
                         SolverConfig(0.5, 0.5, 300), x0=[1.0, -2.0], y0=[0.5, 0.5])
    assert np.all(np.isfinite(log.column("dx")))
    assert max(np.abs(x).max(), np.abs(y).max()) <= 10
    assert log.last("dx") < 1e-8 and log.last("dy") < 1e-8


def test_skew_general_operator_uses_cg():
    T = CoupledQuadratic()
    x, y, _ = run_skew(ZeroMap(2), NullResolvent(2), T.K, SolverConfig(0.5, 0.5, 1))
    # with everything zero the iterates stay at the origin
    np.testing.assert_array_equal(x, [0, 0])
    cfg = SolverConfig(0.9, 1.0, 5000, 1e-13)
    from pdsplit.prox import MoreauConjugate
    xs, ys, log = run_skew(MoreauConjugate(T.resolvent_A), QuadraticProx(T.b), T.K, cfg)
    np.testing.assert_allclose(xs, T.x_hat, atol=1e-8)
    np.testing.assert_allclose(ys, T.y_hat, atol=1e-8)


def test_solve_normal_examples():
    np.testing.assert_allclose(solve_normal(ID1, 1.0, [4.0]), [2.0])
    r = np.array([1.5, -2.0])
    np.testing.assert_allclose(solve_normal(DenseMatrix(np.zeros((2, 2))), 3.0, r), r)
    np.testing.assert_allclose(solve_normal(DenseMatrix([[2.0]]), 0.5, [4.0]), [2.0])


def test_solve_normal_orthogonal_closed_form():
    c, s = np.cos(0.4), np.sin(0.4)
    Q = DenseMatrix([[c, -s], [s, c]])
    r = np.array([1.0, 2.5])
    np.testing.assert_array_equal(solve_normal(Q, 0.5, r), r / 1.25)
    np.testing.assert_array_equal(solve_normal(Q, 0.5, r, "codomain"), r / 1.25)


@pytest.mark.parametrize("side", ["domain", "codomain"])
def test_solve_normal_residual(rng, side):
    M = rng.normal(size=(7, 4))
    K = DenseMatrix(M)
    n = 4 if side == "domain" else 7
    G = np.eye(n) + 0.81 * (M.T @ M if side == "domain" else M @ M.T)
    r = rng.normal(size=n)
    w = solve_normal(K, 0.9, r, side, tol=1e-12)
    assert np.linalg.norm(G @ w - r) <= 1e-12 * np.linalg.norm(r) * 1.01


def test_solve_normal_failure_reported():
    K = DenseMatrix(np.diag(np.arange(1.0, 30.0)))
    with pytest.raises(InnerSolveError):
        solve_normal(K, 2.0, np.ones(29), max_iter=2)
    with pytest.raises(DimensionError):
        solve_normal(K, 2.0, np.ones(3))


def test_sum_compositions_k1_matches_pd_trace():
    T = CoupledQuadratic()
    cfg = SolverConfig(0.2, 0.8, 50)
    a = run_pd(NullResolvent(2), T.conj_resolvent_B, T.K, cfg, x0=[1.0, 2.0])
    P = SumProblem([T.K], [T.conj_resolvent_B], [1.0])
    b = run_sum_compositions(P, SolverConfig(0.2, 0.8, 50, norm_bound_used=T.K.norm_bound or T.norm),
                             x0=[1.0, 2.0])
    np.testing.assert_allclose(a.log.column("dx"), b.log.column("dx"), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(a.x, b.x, rtol=1e-13)
    np.testing.assert_allclose(a.y, b.ys[0], rtol=1e-13)


def test_sum_k1_matches_compositions():
    P = SumProblem([IdentityMap(1)], [G_CONJ])
    cfg = SolverConfig(0.5, 0.5, 40)
    a = run_sum(P, cfg, x0=[3.0])
    b = run_sum_compositions(P, cfg, x0=[3.0])
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.log.column("dual_res"), b.log.column("dual_res"))


def test_sum_requires_identities():
    T = CoupledQuadratic()
    with pytest.raises(ValueError):
        run_sum(SumProblem([T.K], [T.conj_resolvent_B]), SolverConfig(0.1, 0.1))


def test_swapped_k1_is_proximal_point():
    seen = []
    xs, ys, _ = run_sum_swapped([SoftThreshold(1.0)], cfg=SolverConfig(0.5, 1.0, 6), x0s=[5.0],
                                callback=lambda n, x: seen.append(x[0]))
    assert seen == [4.0, 3.0, 2.0, 1.0, 0.0, 0.0]
    np.testing.assert_array_equal(ys[0], [0.0])


def test_swapped_identical_quadratics():
    a = np.array([1.0, -3.0])
    res = run_sum_swapped([QuadraticProx(a)] * 3, cfg=SolverConfig(0.5, 1.5, 3000, 1e-14))
    for x in res.xs:
        np.testing.assert_allclose(x, a, atol=1e-10)


def test_swapped_matches_sum_on_fw():
    inst = four_anchor_instance()
    cfg = SolverConfig(0.13, 1.4, 20000, 1e-13)
    ref = run_sum(build_fw(inst), cfg, x0=[44.0, 0.0])
    res = run_sum_swapped(fw_primal_proxes(inst), cfg=cfg, x0s=[44.0, 0.0])
    spread = max(np.linalg.norm(a - b) for a in res.xs for b in res.xs)
    assert spread <= 1e-5
    assert np.linalg.norm(res.x - ref.x) <= 1e-5
    assert np.linalg.norm(ref.x) <= 1e-5


def test_swapped_weighted_dual_sum_stays_zero(rng):
    T = ShrinkToy()
    w = np.array([0.3, 0.7])
    res = run_sum_swapped([T.prox_f, T.prox_g], w, SolverConfig(0.4, 2.0, 50),
                          x0s=rng.normal(size=(2, 2)))
    assert np.linalg.norm(w[0] * res.ys[0] + w[1] * res.ys[1]) < 1e-12


def test_validate_stepsizes_examples():
    assert validate_stepsizes("pd", 0.01, 9.99, 1.0)
    assert validate_stepsizes("sum-compositions", 0.05, 6.66, 3.0)
    v = validate_stepsizes("pd", 1.0, 1.0, 1.0)
    assert not v
    assert "< 1" in v.message
    assert validate_stepsizes("sum", 0.13, 1.4)
    assert not validate_stepsizes("skew", 1.0, 1.0)
    with pytest.raises(ValueError):
        validate_stepsizes("pd", 0.1, 0.1)
    with pytest.raises(ValueError):
        validate_stepsizes("nope", 0.1, 0.1)


def test_step_violation_rejected_before_iterating():
    calls = []
    with pytest.raises(StepSizeError):
        run_pd(HALF_SQ, G_CONJ, ID1, SolverConfig(1.0, 1.0), callback=lambda n, x: calls.append(n))
    with pytest.raises(StepSizeError):
        run_sum(SumProblem([ID1], [G_CONJ]), SolverConfig(1.0, 1.0))
    with pytest.raises(StepSizeError):
        run_sum_swapped([HALF_SQ], cfg=SolverConfig(2.0, 0.5), x0s=[0.0])
    with pytest.raises(StepSizeError):
        run_skew(HALF_SQ, G_PROX, ID1, SolverConfig(1.0, 1.0))
    assert calls == []


def test_missing_norm_is_estimated_and_inflated():
    T = CoupledQuadratic()
    _, _, log = run_pd(T.resolvent_A, T.conj_resolvent_B, T.K, SolverConfig(0.2, 0.8, 3))
    assert abs(log.norm_bound_used - 1.01 * T.norm) < 1e-6


def test_energy_bound_every_iterate():
    T = CoupledQuadratic()
    cfg = SolverConfig(0.2, 0.8, 500, norm_bound_used=T.norm)
    _, _, log = run_pd(T.resolvent_A, T.conj_resolvent_B, T.K, cfg, x0=[5.0, -4.0],
                       y0=[1.0, 3.0], x_ref=T.x_hat, y_ref=T.y_hat)
    energy = log.column("energy")
    assert len(energy) == 500
    assert np.all(energy <= log.energy_bound + 1e-9)


@given(st.floats(0.05, 2.0), st.floats(0.05, 0.99), st.integers(0, 2**31))
def test_energy_bound_property(sigma, frac, seed):
    T = CoupledQuadratic()
    tau = frac / (sigma * T.norm ** 2)
    r = np.random.default_rng(seed)
    cfg = SolverConfig(sigma, tau, 60, norm_bound_used=T.norm)
    _, _, log = run_pd(T.resolvent_A, T.conj_resolvent_B, T.K, cfg, x0=5 * r.normal(size=2),
                       y0=5 * r.normal(size=2), x_ref=T.x_hat, y_ref=T.y_hat)
    assert np.all(log.column("energy") <= log.energy_bound * (1 + 1e-12) + 1e-9)


def test_steps_vanish_and_fixed_point_holds():
    T = CoupledQuadratic()
    cfg = SolverConfig(0.2, 0.8, 5000, 1e-12, norm_bound_used=T.norm)
    x, y, log = run_pd(T.resolvent_A, T.conj_resolvent_B, T.K, cfg)
    assert log.converged
    assert log.last("dx") < log.column("dx")[0]
    assert log.last("dy") <= 1e-12
    res = fixed_point_residual(T.resolvent_A, T.conj_resolvent_B, T.K, 0.2, 0.8, x, y)
    assert res <= 1e-10
    assert log.fixed_point_residual == res
    np.testing.assert_allclose(x, T.x_hat, atol=1e-10)


def test_cross_algorithm_agreement():
    T = ShrinkToy()
    cfg = SolverConfig(0.5, 1.5, 20000, 1e-14)
    sols = {
        "pd": run_pd(T.prox_f, T.conj_g, T.K, cfg).x,
        "ahu": run_ahu(T.prox_f, T.conj_g, T.K, cfg).x,
        "skew": run_skew(T.conj_f, T.prox_g, T.K, cfg).x,
        "sum": run_sum(T.sum_problem(), cfg).x,
        "swapped": run_sum_swapped([T.prox_f, T.prox_g], cfg=cfg, x0s=[0.0, 0.0]).x,
    }
    for a in sols.values():
        np.testing.assert_allclose(a, T.x_hat, atol=1e-6)
        for b in sols.values():
            assert np.linalg.norm(a - b) <= 1e-5


def test_pd_skew_agree_on_coupled_instance():
    T = CoupledQuadratic()
    from pdsplit.prox import MoreauConjugate
    a = run_pd(T.resolvent_A, T.conj_resolvent_B, T.K,
               SolverConfig(0.2, 0.8, 20000, 1e-14, norm_bound_used=T.norm)).x
    b = run_ahu(T.resolvent_A, T.conj_resolvent_B, T.K,
                SolverConfig(0.2, 0.8, 20000, 1e-14, norm_bound_used=T.norm)).x
    c = run_skew(MoreauConjugate(T.resolvent_A), QuadraticProx(T.b), T.K,
                 SolverConfig(0.9, 1.0, 20000, 1e-14)).x
    for u in (a, b, c):
        for v in (a, b, c):
            assert np.linalg.norm(u - v) <= 1e-5


def test_dual_feasibility_decreases_on_fw():
    cfg = SolverConfig(0.13, 1.4, 200)
    _, ys, log = run_sum(build_fw(four_anchor_instance()), cfg, x0=[44.0, 0.0])
    d = log.column("dual_res")
    assert d[-1] < d[0] / 10
    assert abs(d[-1] - np.linalg.norm(np.mean(ys, axis=0))) < 1e-12


def test_sum_problem_validation():
    with pytest.raises(ValueError):
        SumProblem([ID1, ID1], [G_CONJ, G_CONJ], [0.5, 0.6])
    with pytest.raises(ValueError):
        SumProblem([ID1], [])
    with pytest.raises(DimensionError):
        SumProblem([ID1, IdentityMap(2)], [G_CONJ, G_CONJ])
    assert SumProblem([ID1, DenseMatrix([[2.0]])], [G_CONJ, G_CONJ]).norm_sq_sum() == pytest.approx(
        1 + (1.01 * 2) ** 2)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(0.0, 1.0)
    with pytest.raises(ValueError):
        SolverConfig(1.0, 1.0, max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(1.0, 1.0, stop_tol=-1)


def test_record_rows_increase():
    rec = ConvergenceRecord()
    rec.append(1, dx=1.0)
    with pytest.raises(ValueError):
        rec.append(1, dx=0.5)
    with pytest.raises(KeyError):
        rec.append(2, bogus=1.0)


def test_csv_format():
    T = CoupledQuadratic()
    cfg = SolverConfig(0.2, 0.8, 7, norm_bound_used=T.norm)
    _, _, log = run_pd(T.resolvent_A, T.conj_resolvent_B, T.K, cfg, x_ref=T.x_hat)
    text = log.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["iter", "dx", "dy", "objective", "dist_ref", "energy"]
    assert len(rows) == 1 + log.iterations == 8
    first = rows[1]
    assert first[0] == "1" and first[3] == "" and first[5] == ""
    mantissa = first[1].split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) >= 12
    assert float(first[4]) == log.rows[0]["dist_ref"]


def test_csv_to_path(tmp_path):
    rec = ConvergenceRecord(extra_columns=("isnr",))
    rec.append(1, dx=0.5, isnr=3.0)
    p = tmp_path / "log.csv"
    rec.to_csv(p)
    assert p.read_text().splitlines()[0] == "iter,dx,dy,objective,dist_ref,energy,isnr"


def test_objective_cadence():
    big = IdentityMap(10_001)
    calls = []

    def obj(x):
        calls.append(1)
        return 0.0

    run_pd(NullResolvent(), ZeroMap(), big, SolverConfig(0.5, 0.5, 25), objective=obj)
    assert len(calls) == 3  # n = 1, 10, 20
    calls.clear()
    run_pd(NullResolvent(), ZeroMap(), IdentityMap(3), SolverConfig(0.5, 0.5, 25), objective=obj)
    assert len(calls) == 25
