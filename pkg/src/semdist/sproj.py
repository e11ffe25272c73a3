"""Conflict-free gradient projection.

Given a reference gradient ``delta_a`` and a second gradient ``delta_s``,
the projection removes the component of ``delta_s`` that points against
``delta_a``. ``project`` uses the closed form for the single-constraint
case; ``project_qp`` solves the equivalent non-negative dual quadratic
program

    min_theta  0.5 * theta' (G G') theta + (G delta_s)' theta,  theta >= 0
    output = G' theta* + delta_s

with G the stacked constraint gradients (one row here), which reduces to
the same answer. By default projection triggers on a direction conflict,
i.e. <delta_a, delta_s> < 0; ``paper_sign_trigger=True`` flips the trigger
to fire on <delta_a, delta_s> >= 0 instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class GradientPair:
    """A reference gradient and the gradient to be projected."""

    delta_a: np.ndarray
    delta_s: np.ndarray

    def __post_init__(self):
        da = np.asarray(self.delta_a, dtype=np.float64)
        ds = np.asarray(self.delta_s, dtype=np.float64)
        if da.ndim != 1 or ds.ndim != 1:
            raise DataError("gradients must be 1-D vectors", kind="bad_shape")
        if da.shape != ds.shape:
            raise DataError(
                f"dimension mismatch: {da.shape[0]} vs {ds.shape[0]}",
                kind="dimension_mismatch")
        if not (np.all(np.isfinite(da)) and np.all(np.isfinite(ds))):
            raise DataError("gradients contain NaN or Inf",
                            kind="nonfinite_data")
        object.__setattr__(self, "delta_a", da)
        object.__setattr__(self, "delta_s", ds)


@dataclass(frozen=True)
class ProjectionResult:
    projected: np.ndarray
    conflicted: bool
    inner_before: float
    inner_after: float


def _check_reference(da: np.ndarray):
    sq = float(da @ da)
    if sq == 0.0:
        raise DataError("reference gradient is the zero vector",
                        kind="zero_gradient")
    return sq


def project(pair: GradientPair, paper_sign_trigger: bool = False
            ) -> ProjectionResult:
    """Closed-form single-constraint projection.

    On trigger, returns delta_s - (<da,ds>/<da,da>) * da, which zeroes the
    inner product with delta_a while leaving the orthogonal component of
    delta_s untouched. ``conflicted`` reports whether projection fired.
    """
    da, ds = pair.delta_a, pair.delta_s
    norm_sq = _check_reference(da)
    inner = float(da @ ds)
    fired = inner >= 0.0 if paper_sign_trigger else inner < 0.0
    if not fired:
        return ProjectionResult(projected=ds.copy(), conflicted=False,
                                inner_before=inner, inner_after=inner)
    out = ds - (inner / norm_sq) * da
    return ProjectionResult(projected=out, conflicted=True,
                            inner_before=inner, inner_after=float(da @ out))


def _solve_nonneg_dual(constraints: np.ndarray, ds: np.ndarray,
                       max_iter: int, tol: float) -> np.ndarray:
    """Projected coordinate descent on the non-negative dual.

    Minimizes 0.5 theta' Q theta + b' theta over theta >= 0 with
    Q = G G', b = G ds. Converged when the KKT residual
    ||min(theta, Q theta + b)||_inf drops below tol (relative to |b|).
    """
    q = constraints @ constraints.T
    b = constraints @ ds
    k = b.shape[0]
    theta = np.zeros(k)
    scale = max(float(np.abs(b).max(initial=0.0)), 1.0)
    for _ in range(max_iter):
        for i in range(k):
            if q[i, i] == 0.0:
                continue
            theta[i] = max(0.0, theta[i] - (q[i] @ theta + b[i]) / q[i, i])
        grad = q @ theta + b
        if float(np.abs(np.minimum(theta, grad)).max(initial=0.0)) <= tol * scale:
            return theta
    raise DataError(f"dual QP did not converge within {max_iter} sweeps",
                    kind="qp_no_convergence")


def project_qp(pair: GradientPair, paper_sign_trigger: bool = False,
               tol: float = 1e-12) -> ProjectionResult:
    """Projection via the non-negative dual QP; agrees with ``project``.

    The iteration budget is 10 per gradient dimension, far beyond what the
    single-constraint dual needs (one sweep).
    """
    da, ds = pair.delta_a, pair.delta_s
    _check_reference(da)
    inner = float(da @ ds)
    fired = inner >= 0.0 if paper_sign_trigger else inner < 0.0
    if not fired:
        return ProjectionResult(projected=ds.copy(), conflicted=False,
                                inner_before=inner, inner_after=inner)
    constraints = da.reshape(1, -1)
    theta = _solve_nonneg_dual(constraints, ds, max_iter=10 * da.shape[0],
                               tol=tol)
    out = constraints.T @ theta + ds
    return ProjectionResult(projected=out, conflicted=True,
                            inner_before=inner, inner_after=float(da @ out))


def batched_project(pairs, paper_sign_trigger: bool = False
                    ) -> list[ProjectionResult]:
    """Elementwise ``project`` over a list of pairs, order preserved."""
    results = []
    for i, pair in enumerate(pairs):
        try:
            results.append(project(pair, paper_sign_trigger=paper_sign_trigger))
        except DataError as exc:
            raise DataError(f"pair {i}: {exc}", kind=exc.kind) from exc
    return results
