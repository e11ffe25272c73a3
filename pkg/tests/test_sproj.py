import numpy as np
import pytest

from semdist import (DataError, GradientPair, ProjectionResult,
                     batched_project, project, project_qp)


def pair(a, s):
    return GradientPair(delta_a=np.asarray(a, dtype=float),
                        delta_s=np.asarray(s, dtype=float))


def test_aligned_pair_unchanged():
    res = project(pair([1.0, 0.0], [1.0, 1.0]))
    assert not res.conflicted
    assert np.array_equal(res.projected, [1.0, 1.0])
    assert res.inner_before == res.inner_after == 1.0


def test_conflicting_pair_closed_form():
    res = project(pair([1.0, 0.0], [-1.0, 1.0]))
    assert res.conflicted
    assert np.allclose(res.projected, [0.0, 1.0], atol=1e-15)
    assert res.inner_before == -1.0
    assert abs(res.inner_after) <= 1e-15


def test_pure_opposition_projects_to_zero():
    res = project(pair([2.0, -3.0], [-2.0, 3.0]))
    assert np.allclose(res.projected, 0.0, atol=1e-15)


def test_zero_reference_rejected():
    with pytest.raises(DataError) as err:
        project(pair([0.0, 0.0], [1.0, 0.0]))
    assert err.value.kind == "zero_gradient"


def test_dimension_mismatch_rejected():
    with pytest.raises(DataError) as err:
        GradientPair(delta_a=np.ones(3), delta_s=np.ones(4))
    assert err.value.kind == "dimension_mismatch"


def test_paper_sign_trigger_flips_condition():
    p = pair([1.0, 0.0], [1.0, 1.0])
    res = project(p, paper_sign_trigger=True)
    assert res.conflicted
    assert np.allclose(res.projected, [0.0, 1.0], atol=1e-15)
    # and a conflicting pair passes through untouched in that mode
    q = pair([1.0, 0.0], [-1.0, 1.0])
    res2 = project(q, paper_sign_trigger=True)
    assert not res2.conflicted
    assert np.array_equal(res2.projected, q.delta_s)


def test_qp_no_conflict_returns_input():
    res = project_qp(pair([1.0, 0.0], [0.5, -2.0]))
    assert not res.conflicted
    assert np.array_equal(res.projected, [0.5, -2.0])


def test_qp_matches_closed_form_hand_case():
    res = project_qp(pair([1.0, 0.0], [-1.0, 1.0]))
    assert np.allclose(res.projected, [0.0, 1.0], atol=1e-10)


def test_qp_matches_closed_form_random():
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 100:
        da = rng.normal(size=16)
        ds = rng.normal(size=16)
        if da @ ds >= 0:
            continue
        p = pair(da, ds)
        a = project(p).projected
        b = project_qp(p).projected
        assert np.abs(a - b).max() < 1e-8
        checked += 1


def test_projection_is_grid_search_minimizer_2d():
    from tests.conftest import grid_search_projection

    rng = np.random.default_rng(32)
    for _ in range(10):
        da = rng.normal(size=2)
        ds = rng.normal(size=2)
        res = project(pair(da, ds))
        grid_best, resolution = grid_search_projection(da, ds)
        assert np.linalg.norm(res.projected - grid_best) <= resolution


def test_non_conflict_invariant_random():
    rng = np.random.default_rng(33)
    for dim in (2, 16):
        for _ in range(250):
            da = rng.normal(size=dim)
            ds = rng.normal(size=dim)
            res = project(pair(da, ds))
            bound = -1e-12 * np.linalg.norm(da) * np.linalg.norm(res.projected)
            assert res.inner_after >= bound


def test_projection_idempotent():
    rng = np.random.default_rng(34)
    da = rng.normal(size=8)
    ds = rng.normal(size=8)
    first = project(pair(da, ds))
    second = project(pair(da, first.projected))
    assert not second.conflicted
    assert np.array_equal(second.projected, first.projected)


def test_orthogonal_component_preserved():
    rng = np.random.default_rng(35)
    for _ in range(50):
        da = rng.normal(size=12)
        ds = rng.normal(size=12)
        res = project(pair(da, ds))
        unit = da / np.linalg.norm(da)
        perp_before = ds - (ds @ unit) * unit
        perp_after = res.projected - (res.projected @ unit) * unit
        assert np.abs(perp_before - perp_after).max() < 1e-12


def test_positive_scaling_equivariance():
    rng = np.random.default_rng(36)
    da = rng.normal(size=6)
    ds = rng.normal(size=6)
    base = project(pair(da, ds)).projected
    for c in (1e-3, 7.5, 1e4):
        scaled = project(pair(c * da, ds)).projected
        assert np.allclose(scaled, base, atol=1e-12)


def test_multi_constraint_dual_matches_cvxopt():
    # the dual solver generalizes past the single-reference case; cross-check
    # v = constraints.T @ theta + ds against an interior-point solve of the
    # primal  min 1/2 ||v - ds||^2  s.t.  constraints @ v >= 0.  The
    # interior-point answer is only ~1e-6 accurate, so compare optimality
    # (feasible and at least as good an objective), not coordinates.
    pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers

    from semdist.sproj import _solve_nonneg_dual

    rng = np.random.default_rng(38)
    for k, dim in ((1, 2), (2, 2), (2, 5), (3, 5)):
        for _ in range(5):
            constraints = rng.normal(size=(k, dim))
            ds = rng.normal(size=dim)
            theta = _solve_nonneg_dual(constraints, ds, max_iter=100_000,
                                       tol=1e-12)
            mine = constraints.T @ theta + ds
            sol = solvers.qp(
                matrix(np.eye(dim)), matrix(-ds),
                matrix(-constraints), matrix(np.zeros(k)),
                options={"show_progress": False})
            ref = np.array(sol["x"]).ravel()
            assert (constraints @ mine).min() > -1e-9
            obj_mine = 0.5 * np.sum((mine - ds) ** 2)
            obj_ref = 0.5 * np.sum((ref - ds) ** 2)
            # cvxopt may undercut the optimum by sitting ~1e-7 infeasible
            assert obj_mine <= obj_ref + 1e-6
            assert np.abs(mine - ref).max() < 1e-3


def test_batched_empty_and_single():
    assert batched_project([]) == []
    res = batched_project([pair([1.0, 0.0], [2.0, 5.0])])
    assert len(res) == 1 and not res[0].conflicted


def test_batched_matches_elementwise():
    rng = np.random.default_rng(37)
    pairs = [pair(rng.normal(size=4), rng.normal(size=4)) for _ in range(20)]
    batch = batched_project(pairs)
    for p, got in zip(pairs, batch):
        ref = project(p)
        assert np.array_equal(got.projected, ref.projected)
        assert got.conflicted == ref.conflicted


def test_batched_error_carries_index():
    pairs = [pair([1.0, 0.0], [1.0, 0.0]),
             pair([0.0, 0.0], [1.0, 0.0])]
    with pytest.raises(DataError) as err:
        batched_project(pairs)
    assert "pair 1" in str(err.value)
    assert err.value.kind == "zero_gradient"


def test_result_fields():
    res = project(pair([1.0, 1.0], [-3.0, 1.0]))
    assert isinstance(res, ProjectionResult)
    assert res.inner_before == pytest.approx(-2.0)
