"""Shared synthetic-data builders for the test suite."""

import numpy as np
import pytest

from semdist import EmbeddingMatrix, PairedDataset, Record, Role


def unit_rows(rng, n, dim):
    x = rng.normal(size=(n, dim))
    return (x / np.linalg.norm(x, axis=1, keepdims=True)).astype(np.float32)


def build_dataset(fake, real, text, image_ids=None,
                  fake_role=Role.FAKE_IMAGE):
    """Identity-paired dataset from three row-aligned arrays."""
    n = fake.shape[0]
    if image_ids is None:
        image_ids = range(n)
    records = tuple(Record(i, i, i, int(image_ids[i]), 0) for i in range(n))
    return PairedDataset(
        text=EmbeddingMatrix(Role.TEXT, np.asarray(text, dtype=np.float32)),
        real=EmbeddingMatrix(Role.REAL_IMAGE, np.asarray(real, dtype=np.float32)),
        fake=EmbeddingMatrix(fake_role, np.asarray(fake, dtype=np.float32)),
        records=records)


def joint_gaussian_triple(dim=8, n=200_000, sigma=0.015, seed=7):
    """Jointly Gaussian (fake, real, text) samples with known moments.

    text ~ N(m_s, C_ss); fake = m_f + A_f (text - m_s) + noise_f and real
    likewise, so the conditional covariances are the (diagonal) noise
    covariances and every cross moment is analytic. Means are unit-norm and
    the dispersion is small, keeping row normalization a tiny perturbation.
    Returns (fake, real, text, moments dict).
    """
    g = np.random.default_rng(seed)
    dim_scale = np.sqrt(dim)
    m_s = g.normal(size=dim)
    m_s /= np.linalg.norm(m_s)
    m_f = m_s + 0.8 * g.normal(size=dim) / dim_scale
    m_f /= np.linalg.norm(m_f)
    m_r = m_s + 0.8 * g.normal(size=dim) / dim_scale
    m_r /= np.linalg.norm(m_r)

    c_ss_half = sigma * (np.eye(dim) + 0.3 * g.normal(size=(dim, dim)) / dim_scale)
    c_ss = c_ss_half @ c_ss_half.T
    a_f = 0.5 * g.normal(size=(dim, dim)) / dim_scale
    a_r = 0.5 * g.normal(size=(dim, dim)) / dim_scale
    noise_f_sd = sigma * (1.0 + 0.8 * g.random(size=dim))
    noise_r_sd = sigma * (1.0 + 0.8 * g.random(size=dim))

    text = m_s + g.normal(size=(n, dim)) @ c_ss_half.T
    fake = m_f + (text - m_s) @ a_f.T + g.normal(size=(n, dim)) * noise_f_sd
    real = m_r + (text - m_s) @ a_r.T + g.normal(size=(n, dim)) * noise_r_sd

    moments = {
        "m_s": m_s, "m_f": m_f, "m_r": m_r,
        "c_ss": c_ss, "a_f": a_f, "a_r": a_r,
        "cond_cov_fake": np.diag(noise_f_sd ** 2),
        "cond_cov_real": np.diag(noise_r_sd ** 2),
    }
    return fake, real, text, moments


def reference_ssd_cfid(fake32, real32, text32, ridge_scale=1e-6):
    """Independent flat reimplementation of the SSD/CFID pipeline.

    Works on already-normalized float32 rows, uses explicit matrix
    inverses, and shares no code with the library. Returns pre-scale
    (ss, dsv, cfid_first, trsv_diag).
    """
    f = fake32.astype(np.float64)
    r = real32.astype(np.float64)
    s = text32.astype(np.float64)
    n = f.shape[0]
    m_f, m_r, m_s = f.mean(0), r.mean(0), s.mean(0)
    ss = 1.0 - (m_f @ m_s) / (np.linalg.norm(m_f) * np.linalg.norm(m_s))

    def cov(a, b):
        return (a - a.mean(0)).T @ (b - b.mean(0)) / (n - 1)

    c_ss = cov(s, s)
    eps = ridge_scale * np.trace(c_ss) / c_ss.shape[0]
    inv = np.linalg.inv(c_ss + eps * np.eye(c_ss.shape[0]))
    cc_f = cov(f, f) - cov(f, s) @ inv @ cov(s, f)
    cc_r = cov(r, r) - cov(r, s) @ inv @ cov(s, r)
    dsv = float(np.sum((np.diag(cc_f) - np.diag(cc_r)) ** 2))

    a_f = cov(f, s) @ inv
    a_r = cov(r, s) @ inv
    diffs = (m_f - m_r) + (s - m_s) @ (a_f - a_r).T
    first = float(np.mean(np.sum(diffs ** 2, axis=1)))
    trsv = float(np.sum((np.sqrt(np.clip(np.diag(cc_f), 0, None))
                         - np.sqrt(np.clip(np.diag(cc_r), 0, None))) ** 2))
    return ss, dsv, first, trsv


def replicate_distractor_draws(records, n_text, k, seed):
    """Replica of the documented r_precision sampling stream."""
    import random

    texts_of_image = {}
    for rec in records:
        texts_of_image.setdefault(rec.image_id, set()).add(rec.text_index)
    rng = random.Random(seed)
    draws = []
    for rec in records:
        excluded = texts_of_image[rec.image_id]
        row = []
        while len(row) < k:
            j = rng.randrange(n_text)
            if j not in excluded and j not in row:
                row.append(j)
        draws.append(row)
    return draws


def grid_search_projection(da, ds, points=10_000):
    """Brute-force nearest-to-ds vector with <da, v> >= 0, in 2-D.

    Candidates are ds itself (when feasible) and a ``points``-sized grid
    along the constraint boundary line {v : <da, v> = 0}, which any
    constrained minimizer of a Euclidean projection onto a halfplane lies
    on. Returns (best_candidate, grid_resolution).
    """
    da = np.asarray(da, dtype=float)
    ds = np.asarray(ds, dtype=float)
    boundary_dir = np.array([-da[1], da[0]]) / np.linalg.norm(da)
    half_span = 2.0 * (np.linalg.norm(ds) + 1.0)
    ts = np.linspace(-half_span, half_span, points)
    candidates = ts[:, None] * boundary_dir
    if da @ ds >= 0:
        candidates = np.vstack([candidates, ds])
    dists = np.linalg.norm(candidates - ds, axis=1)
    resolution = 2.0 * half_span / (points - 1)
    return candidates[np.argmin(dists)], resolution


@pytest.fixture(scope="session")
def gaussian_triple():
    return joint_gaussian_triple()
