"""First/second-moment estimation and the PSD linear-algebra kernels.

All estimators are unbiased (n-1 divisor) and accumulate in float64 with a
fixed reduction order, so results are reproducible to ~1e-10 regardless of
BLAS thread count. Conditioning uses the linear-regression form

    cov(x | s) = cov(x) - cov(x, s) @ inv(cov(s) + eps*I) @ cov(s, x)

with a trace-scaled ridge eps, solved through a Cholesky factorization
(never an explicit inverse).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .embstore import EmbeddingMatrix
from .errors import DataError

DEFAULT_RIDGE_SCALE = 1e-6

_SYM_TOL = 1e-9
_PSD_TOL = 1e-8


@dataclass(frozen=True)
class GaussianSummary:
    """Sample mean and unbiased covariance of one embedding block."""

    mean: np.ndarray
    cov: np.ndarray
    n: int


@dataclass(frozen=True)
class ConditionalSummary:
    """Conditional covariances and regression coefficients of a paired block.

    ``coeff_fake`` / ``coeff_real`` map a centered condition vector to the
    corresponding shift of the conditional mean; ``ridge_used`` is the eps
    actually added to the condition covariance before factorizing.
    """

    cond_cov_fake: np.ndarray
    cond_cov_real: np.ndarray
    coeff_fake: np.ndarray
    coeff_real: np.ndarray
    ridge_used: float


def _as_f64(x) -> np.ndarray:
    data = x.data if isinstance(x, EmbeddingMatrix) else x
    return np.asarray(data, dtype=np.float64)


def _mean_cov(x: np.ndarray):
    n = x.shape[0]
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    return mean, 0.5 * (cov + cov.T)


def _cross(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    return xc.T @ yc / (n - 1)


def summarize(matrix: EmbeddingMatrix) -> GaussianSummary:
    """Arithmetic row mean and unbiased sample covariance."""
    if matrix.count < 2:
        raise DataError(f"need at least 2 rows for a covariance, got "
                        f"{matrix.count}", kind="too_few_samples")
    mean, cov = _mean_cov(_as_f64(matrix))
    return GaussianSummary(mean=mean, cov=cov, n=matrix.count)


def cross_covariance(x: EmbeddingMatrix, y: EmbeddingMatrix) -> np.ndarray:
    """Unbiased sample cross-covariance; transpose-symmetric in (x, y)."""
    if x.count != y.count:
        raise DataError(f"count mismatch: {x.count} vs {y.count}",
                        kind="count_mismatch")
    if x.dim != y.dim:
        raise DataError(f"dim mismatch: {x.dim} vs {y.dim}", kind="dim_mismatch")
    if x.count < 2:
        raise DataError("need at least 2 rows", kind="too_few_samples")
    return _cross(_as_f64(x), _as_f64(y))


def _ridge_eps(c_ss: np.ndarray, ridge_scale: float) -> float:
    return float(ridge_scale) * float(np.trace(c_ss)) / c_ss.shape[0]


def _spd_cholesky(a: np.ndarray):
    try:
        return scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise DataError(f"matrix is not positive definite: {exc}",
                        kind="not_positive_definite") from exc


def conditional_covariance(c_xx: np.ndarray, c_xs: np.ndarray,
                           c_ss: np.ndarray,
                           ridge_scale: float = DEFAULT_RIDGE_SCALE) -> np.ndarray:
    """Residual covariance of x after linear conditioning on s.

    Returns c_xx - c_xs @ inv(c_ss + eps*I) @ c_xs.T with
    eps = ridge_scale * trace(c_ss) / D, symmetrized.
    """
    c_xx = np.asarray(c_xx, dtype=np.float64)
    c_xs = np.asarray(c_xs, dtype=np.float64)
    c_ss = np.asarray(c_ss, dtype=np.float64)
    d = c_ss.shape[0]
    eps = _ridge_eps(c_ss, ridge_scale)
    cho = _spd_cholesky(c_ss + eps * np.eye(d))
    solved = scipy.linalg.cho_solve(cho, c_xs.T, check_finite=False)
    out = c_xx - c_xs @ solved
    return 0.5 * (out + out.T)


def summarize_conditionals(fake: np.ndarray, real: np.ndarray,
                           cond: np.ndarray,
                           ridge_scale: float = DEFAULT_RIDGE_SCALE
                           ) -> ConditionalSummary:
    """Build both conditional covariances and regression coefficients at once.

    ``fake``, ``real`` and ``cond`` are row-aligned N x D sample blocks; the
    conditioning variable is ``cond``. One Cholesky factorization of the
    (ridged) condition covariance is shared by all four products.
    """
    fake = np.asarray(fake, dtype=np.float64)
    real = np.asarray(real, dtype=np.float64)
    cond = np.asarray(cond, dtype=np.float64)
    if not fake.shape == real.shape == cond.shape:
        raise DataError(
            f"aligned blocks must share a shape, got {fake.shape}, "
            f"{real.shape}, {cond.shape}", kind="dim_mismatch")
    n = fake.shape[0]
    if n < 2:
        raise DataError("need at least 2 rows", kind="too_few_samples")

    # Center each block once; five products share the centered copies.
    fc = fake - fake.mean(axis=0)
    rc = real - real.mean(axis=0)
    sc = cond - cond.mean(axis=0)
    c_ff = fc.T @ fc / (n - 1)
    c_rr = rc.T @ rc / (n - 1)
    c_ss = sc.T @ sc / (n - 1)
    c_ss = 0.5 * (c_ss + c_ss.T)
    c_fs = fc.T @ sc / (n - 1)
    c_rs = rc.T @ sc / (n - 1)

    eps = _ridge_eps(c_ss, ridge_scale)
    cho = _spd_cholesky(c_ss + eps * np.eye(c_ss.shape[0]))
    solved_f = scipy.linalg.cho_solve(cho, c_fs.T, check_finite=False)
    solved_r = scipy.linalg.cho_solve(cho, c_rs.T, check_finite=False)
    cc_f = c_ff - c_fs @ solved_f
    cc_r = c_rr - c_rs @ solved_r
    return ConditionalSummary(
        cond_cov_fake=0.5 * (cc_f + cc_f.T),
        cond_cov_real=0.5 * (cc_r + cc_r.T),
        coeff_fake=solved_f.T,
        coeff_real=solved_r.T,
        ridge_used=eps,
    )


def conditional_mean_offsets(coeff: np.ndarray, conditions,
                             cond_mean: np.ndarray) -> np.ndarray:
    """Per-sample conditional-mean shifts: row i is coeff @ (conditions[i] - cond_mean)."""
    coeff = np.asarray(coeff, dtype=np.float64)
    cond = _as_f64(conditions)
    cond_mean = np.asarray(cond_mean, dtype=np.float64)
    if cond.ndim != 2 or coeff.ndim != 2 or coeff.shape[1] != cond.shape[1] \
            or cond_mean.shape != (cond.shape[1],):
        raise DataError(
            f"shape mismatch: coeff {coeff.shape}, conditions {cond.shape}, "
            f"mean {cond_mean.shape}", kind="dim_mismatch")
    return (cond - cond_mean) @ coeff.T


def matrix_sqrt_psd(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues slightly below zero (sample-covariance rounding) are clamped;
    anything worse than -1e-8 * ||a|| is rejected.
    """
    a = np.asarray(a, dtype=np.float64)
    scale = max(float(np.abs(a).max(initial=0.0)), np.finfo(np.float64).tiny)
    if float(np.abs(a - a.T).max(initial=0.0)) > _SYM_TOL * scale:
        raise DataError("matrix is not symmetric within tolerance",
                        kind="asymmetric")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    bound = _PSD_TOL * max(float(np.abs(w).max(initial=0.0)), 1e-300)
    if w.min(initial=0.0) < -bound:
        raise DataError(
            f"matrix has eigenvalue {w.min():.3e}, too negative to be PSD",
            kind="not_psd")
    root = v * np.sqrt(np.clip(w, 0.0, None)) @ v.T
    return 0.5 * (root + root.T)


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ X = b for symmetric positive-definite a via Cholesky."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cho = _spd_cholesky(a)
    return scipy.linalg.cho_solve(cho, b, check_finite=False)
