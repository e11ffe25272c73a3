"""Distributional text-image consistency metrics over a PairedDataset.

The headline score is SSD = SS + dSV, where SS is one minus the cosine
between the mean fake-image embedding and the mean text embedding, and dSV
is the squared L2 distance between the diagonals of the text-conditioned
fake and real image covariances. CFID couples a per-sample conditional-mean
distance with the trace term TrSV; CS is the clamped-cosine score; R is
retrieval precision against sampled distractor texts. Reported values are
multiplied by ``scale`` (default 100) except R, which stays a fraction.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass

import numpy as np

from . import gaussian
from .embstore import EmbeddingMatrix, PairedDataset, normalize_rows, subsample
from .errors import ConfigError, DataError

EVAL_METRICS = ("ssd", "cs", "cfid", "r")


@dataclass(frozen=True)
class MetricConfig:
    ridge_scale: float = 1e-6
    omega: float = 2.5
    scale: float = 100.0
    trsv_mode: str = "diag"
    seed: int = 0
    distractors: int = 99

    def __post_init__(self):
        if self.ridge_scale < 0:
            raise ConfigError(f"ridge_scale must be >= 0, got {self.ridge_scale}")
        if self.omega <= 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.scale <= 0:
            raise ConfigError(f"scale must be positive, got {self.scale}")
        if self.trsv_mode not in ("diag", "full"):
            raise ConfigError(f"trsv_mode must be 'diag' or 'full', "
                              f"got {self.trsv_mode!r}")
        if self.distractors < 1:
            raise ConfigError(f"distractors must be >= 1, got {self.distractors}")


@dataclass(frozen=True)
class MetricReport:
    """Named scalar results, already scaled, plus the effective config."""

    values: dict[str, float]
    scale: float
    config: dict
    n_records: int

    def __post_init__(self):
        for name, value in self.values.items():
            if not np.isfinite(value):
                raise DataError(f"metric {name} is not finite: {value}",
                                kind="nonfinite_metric")
        if self.values.get("dSV", 0.0) < 0.0:
            raise DataError("dSV must be non-negative", kind="bad_metric")
        if self.values.get("TrSV", 0.0) < -1e-8 * self.scale:
            raise DataError("TrSV below the PSD tolerance", kind="bad_metric")
        if not 0.0 <= self.values.get("R", 0.0) <= 1.0:
            raise DataError("R must lie in [0, 1]", kind="bad_metric")

    def to_dict(self) -> dict:
        return {"values": dict(self.values), "scale": self.scale,
                "config": dict(self.config), "n_records": self.n_records}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class StabilityCurve:
    """Mean/std of SSD at increasing subsample sizes."""

    points: tuple[tuple[int, float, float, int], ...]

    def __post_init__(self):
        counts = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise DataError("sample counts must be strictly increasing",
                            kind="bad_counts")

    def to_csv(self) -> str:
        lines = ["sample_count,mean_ssd,std_ssd,repeats"]
        for count, mean, std, repeats in self.points:
            lines.append(f"{count},{mean!r},{std!r},{repeats}")
        return "\n".join(lines) + "\n"


def ss_term(m_f: np.ndarray, m_s: np.ndarray) -> float:
    """1 - cos(m_f, m_s); 0 for identical directions, up to 2 for opposite."""
    m_f = np.asarray(m_f, dtype=np.float64)
    m_s = np.asarray(m_s, dtype=np.float64)
    nf = float(np.linalg.norm(m_f))
    ns = float(np.linalg.norm(m_s))
    if nf == 0.0 or ns == 0.0:
        raise DataError("cosine is undefined for a zero vector",
                        kind="zero_vector")
    if np.array_equal(m_f, m_s):
        return 0.0
    cos = float(m_f @ m_s) / (nf * ns)
    return 1.0 - min(1.0, max(-1.0, cos))


def dsv_term(cond_cov_fake: np.ndarray, cond_cov_real: np.ndarray) -> float:
    """Squared L2 distance between the two covariance diagonals."""
    a = np.asarray(cond_cov_fake, dtype=np.float64)
    b = np.asarray(cond_cov_real, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected equal square matrices, got {a.shape} and "
                        f"{b.shape}", kind="dim_mismatch")
    diff = np.diag(a) - np.diag(b)
    return float(diff @ diff)


def _clamped_sqrt_diag(cov: np.ndarray) -> np.ndarray:
    diag = np.diag(np.asarray(cov, dtype=np.float64)).copy()
    bound = 1e-8 * max(float(np.abs(diag).max(initial=0.0)), 1e-300)
    if diag.min(initial=0.0) < -bound:
        raise DataError(f"covariance diagonal has entry {diag.min():.3e}, "
                        "not PSD", kind="not_psd")
    return np.sqrt(np.clip(diag, 0.0, None))


def trsv_term(cond_cov_fake: np.ndarray, cond_cov_real: np.ndarray,
              mode: str = "diag") -> float:
    """Trace distance between conditional covariances.

    diag mode: sum_i (sqrt(var_f,i) - sqrt(var_r,i))^2 over the diagonals.
    full mode: Tr[Cf + Cr - 2 (Cf^1/2 Cr Cf^1/2)^1/2]. The two agree for
    diagonal inputs.
    """
    if mode == "diag":
        sf = _clamped_sqrt_diag(cond_cov_fake)
        sr = _clamped_sqrt_diag(cond_cov_real)
        diff = sf - sr
        return float(diff @ diff)
    if mode == "full":
        cf = np.asarray(cond_cov_fake, dtype=np.float64)
        cr = np.asarray(cond_cov_real, dtype=np.float64)
        root_f = gaussian.matrix_sqrt_psd(cf)
        inner = root_f @ cr @ root_f
        cross = gaussian.matrix_sqrt_psd(0.5 * (inner + inner.T))
        return float(np.trace(cf) + np.trace(cr) - 2.0 * np.trace(cross))
    raise ConfigError(f"unknown trsv mode {mode!r}")


def _aligned_blocks(dataset: PairedDataset):
    """Gather record-aligned f64 blocks, normalizing matrices not yet unit-norm."""
    if len(dataset.records) < 2:
        raise DataError("need at least 2 records", kind="too_few_samples")
    text = dataset.text if dataset.text.normalized else normalize_rows(dataset.text)
    real = dataset.real if dataset.real.normalized else normalize_rows(dataset.real)
    fake = dataset.fake if dataset.fake.normalized else normalize_rows(dataset.fake)
    t_idx = np.fromiter((r.text_index for r in dataset.records), dtype=np.int64)
    r_idx = np.fromiter((r.real_index for r in dataset.records), dtype=np.int64)
    f_idx = np.fromiter((r.fake_index for r in dataset.records), dtype=np.int64)
    return (fake.data[f_idx].astype(np.float64),
            real.data[r_idx].astype(np.float64),
            text.data[t_idx].astype(np.float64))


def _echo_config(config: MetricConfig, n_records: int) -> dict:
    echoed = asdict(config)
    echoed["n_records"] = n_records
    return echoed


def _ssd_values(f_blk, s_blk, cond, config: MetricConfig) -> dict:
    ss = ss_term(f_blk.mean(axis=0), s_blk.mean(axis=0))
    dsv = dsv_term(cond.cond_cov_fake, cond.cond_cov_real)
    return {"SSD": (ss + dsv) * config.scale,
            "SS": ss * config.scale,
            "dSV": dsv * config.scale}


def _cfid_values(f_blk, r_blk, s_blk, cond, config: MetricConfig) -> dict:
    # m_{f|s_i} - m_{r|s_i} = (m_f - m_r) + (A_f - A_r)(s_i - m_s); the
    # coefficient difference goes through one offsets product, not two.
    diffs = gaussian.conditional_mean_offsets(
        cond.coeff_fake - cond.coeff_real, s_blk, s_blk.mean(axis=0))
    diffs += f_blk.mean(axis=0) - r_blk.mean(axis=0)
    first = float(np.mean(np.einsum("ij,ij->i", diffs, diffs)))
    trsv = trsv_term(cond.cond_cov_fake, cond.cond_cov_real,
                     mode=config.trsv_mode)
    return {"CFID": (first + trsv) * config.scale,
            "CFID_first_moment": first * config.scale,
            "TrSV": trsv * config.scale}


def ssd(dataset: PairedDataset, config: MetricConfig = MetricConfig()
        ) -> MetricReport:
    """SSD = SS + dSV with the text embeddings as the conditioning variable."""
    f_blk, r_blk, s_blk = _aligned_blocks(dataset)
    cond = gaussian.summarize_conditionals(f_blk, r_blk, s_blk,
                                           ridge_scale=config.ridge_scale)
    return MetricReport(values=_ssd_values(f_blk, s_blk, cond, config),
                        scale=config.scale,
                        config=_echo_config(config, len(dataset)),
                        n_records=len(dataset))


def ssd_t(dataset: PairedDataset, config: MetricConfig = MetricConfig()
          ) -> MetricReport:
    """Caption-side SSD: fake captions vs real images, conditioned on images.

    The dataset's ``fake`` slot holds fake-caption embeddings, ``real`` the
    real-image embeddings, and ``text`` the reference captions whose
    conditional covariance the fake captions are compared against.
    """
    f_blk, r_blk, s_blk = _aligned_blocks(dataset)
    ss = ss_term(f_blk.mean(axis=0), r_blk.mean(axis=0))
    cond = gaussian.summarize_conditionals(f_blk, s_blk, r_blk,
                                           ridge_scale=config.ridge_scale)
    dsv = dsv_term(cond.cond_cov_fake, cond.cond_cov_real)
    values = {"SSD_T": (ss + dsv) * config.scale,
              "SS": ss * config.scale,
              "dSV": dsv * config.scale}
    return MetricReport(values=values, scale=config.scale,
                        config=_echo_config(config, len(dataset)),
                        n_records=len(dataset))


def clip_score(fake: EmbeddingMatrix, text: EmbeddingMatrix,
               omega: float = 2.5, scale: float = 100.0) -> float:
    """omega * mean(max(cos, 0)) over row-aligned pairs, times scale."""
    if fake.count != text.count:
        raise DataError(f"count mismatch: {fake.count} vs {text.count}",
                        kind="count_mismatch")
    if fake.count == 0:
        raise DataError("no pairs", kind="too_few_samples")
    f = fake.data.astype(np.float64)
    t = text.data.astype(np.float64)
    nf = np.linalg.norm(f, axis=1)
    nt = np.linalg.norm(t, axis=1)
    if (nf == 0).any() or (nt == 0).any():
        raise DataError("zero row in clip_score input", kind="zero_row")
    cos = np.einsum("ij,ij->i", f, t) / (nf * nt)
    return omega * float(np.mean(np.clip(cos, 0.0, None))) * scale


def cfid(dataset: PairedDataset, config: MetricConfig = MetricConfig()
         ) -> MetricReport:
    """Conditional Frechet distance between fake and real image blocks.

    First moment: mean_i ||m_{f|s_i} - m_{r|s_i}||^2 via the per-sample
    regression form. Second moment: trsv_term in the configured mode.
    """
    f_blk, r_blk, s_blk = _aligned_blocks(dataset)
    cond = gaussian.summarize_conditionals(f_blk, r_blk, s_blk,
                                           ridge_scale=config.ridge_scale)
    return MetricReport(values=_cfid_values(f_blk, r_blk, s_blk, cond, config),
                        scale=config.scale,
                        config=_echo_config(config, len(dataset)),
                        n_records=len(dataset))


def r_precision(fake: EmbeddingMatrix, text: EmbeddingMatrix, records,
                distractors_per_query: int = 99, seed: int = 0) -> float:
    """Fraction of records whose ground-truth text beats sampled distractors.

    For each record, ``distractors_per_query`` distinct text rows are drawn
    uniformly from the rows whose image_id differs from the query's.
    Sampling is seeded rejection sampling: records are visited in order and
    each draw is ``rng.randrange(text.count)``, discarded if excluded or
    already taken. Success requires the ground-truth text to hold the
    strict cosine maximum; ties count as failure.
    """
    records = list(records)
    if not records:
        raise DataError("no records", kind="too_few_samples")
    if distractors_per_query >= text.count - 1:
        raise DataError(
            f"{distractors_per_query} distractors requested but only "
            f"{text.count} text rows exist", kind="not_enough_distractors")

    t_hat = text.data.astype(np.float64)
    f_hat = fake.data.astype(np.float64)
    t_norms = np.linalg.norm(t_hat, axis=1)
    f_norms = np.linalg.norm(f_hat, axis=1)
    if (t_norms == 0).any() or (f_norms == 0).any():
        raise DataError("zero row in r_precision input", kind="zero_row")
    t_hat /= t_norms[:, None]
    f_hat /= f_norms[:, None]

    # Texts sharing an image with the query are never valid distractors.
    texts_of_image: dict[object, set[int]] = {}
    for rec in records:
        texts_of_image.setdefault(rec.image_id, set()).add(rec.text_index)
    for image_id, excluded in texts_of_image.items():
        if text.count - len(excluded) < distractors_per_query:
            raise DataError(
                f"image_id {image_id!r} leaves only "
                f"{text.count - len(excluded)} distractor candidates, need "
                f"{distractors_per_query}", kind="not_enough_distractors")

    randrange = random.Random(seed).randrange
    n_text = text.count
    k = distractors_per_query
    draws = np.empty((len(records), k), dtype=np.int64)
    for i, rec in enumerate(records):
        excluded = texts_of_image[rec.image_id]
        row: list[int] = []
        while len(row) < k:
            j = randrange(n_text)
            if j not in excluded and j not in row:
                row.append(j)
        draws[i] = row

    f_rows = np.fromiter((r.fake_index for r in records), dtype=np.int64)
    t_rows = np.fromiter((r.text_index for r in records), dtype=np.int64)
    hits = 0
    chunk = max(1, 16_000_000 // max(1, k * text.dim))
    for start in range(0, len(records), chunk):
        stop = min(start + chunk, len(records))
        q = f_hat[f_rows[start:stop]]
        gt_cos = np.einsum("ij,ij->i", q, t_hat[t_rows[start:stop]])
        d_cos = np.einsum("ij,ikj->ik", q, t_hat[draws[start:stop]])
        hits += int(np.sum(gt_cos > d_cos.max(axis=1)))
    return hits / len(records)


def evaluate(dataset: PairedDataset, config: MetricConfig = MetricConfig(),
             metrics=EVAL_METRICS) -> MetricReport:
    """Compute the selected metrics and merge them into one report.

    The conditional statistics are computed once and shared between the
    SSD and CFID paths, so selecting both costs one extra trace term, not
    a second pass over the data.
    """
    metrics = tuple(metrics)
    unknown = set(metrics) - set(EVAL_METRICS)
    if unknown:
        raise ConfigError(f"unknown metrics: {sorted(unknown)}")
    if not metrics:
        raise ConfigError("metric selection is empty")
    values: dict[str, float] = {}
    if "ssd" in metrics or "cfid" in metrics:
        f_blk, r_blk, s_blk = _aligned_blocks(dataset)
        cond = gaussian.summarize_conditionals(f_blk, r_blk, s_blk,
                                               ridge_scale=config.ridge_scale)
        if "ssd" in metrics:
            values.update(_ssd_values(f_blk, s_blk, cond, config))
        if "cfid" in metrics:
            values.update(_cfid_values(f_blk, r_blk, s_blk, cond, config))
        del f_blk, r_blk, s_blk, cond
    if "cs" in metrics:
        fake = EmbeddingMatrix(
            role=dataset.fake.role,
            data=dataset.fake.data[[r.fake_index for r in dataset.records]])
        text = EmbeddingMatrix(
            role=dataset.text.role,
            data=dataset.text.data[[r.text_index for r in dataset.records]])
        values["CS"] = clip_score(fake, text, omega=config.omega,
                                  scale=config.scale)
    if "r" in metrics:
        values["R"] = r_precision(dataset.fake, dataset.text, dataset.records,
                                  distractors_per_query=config.distractors,
                                  seed=config.seed)
    echoed = _echo_config(config, len(dataset))
    echoed["metrics"] = list(metrics)
    return MetricReport(values=values, scale=config.scale, config=echoed,
                        n_records=len(dataset))


def stability_sweep(dataset: PairedDataset, sample_counts, repeats: int,
                    seed: int, config: MetricConfig = MetricConfig()
                    ) -> StabilityCurve:
    """SSD mean/std over seeded subsamples at each sample count.

    std is the sample standard deviation across repeats (0.0 when
    repeats == 1). Deterministic for a fixed seed.
    """
    counts = [int(c) for c in sample_counts]
    if len(set(counts)) != len(counts):
        raise ConfigError(f"duplicate sample counts: {counts}")
    if sorted(counts) != counts:
        raise ConfigError(f"sample counts must be increasing: {counts}")
    if not counts:
        raise ConfigError("no sample counts given")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    if counts[-1] > len(dataset.records):
        raise DataError(f"sample count {counts[-1]} exceeds dataset size "
                        f"{len(dataset.records)}", kind="subsample_range")

    master = np.random.Generator(np.random.PCG64(seed))
    sub_seeds = master.integers(0, 2**63, size=(len(counts), repeats),
                                dtype=np.uint64)
    points = []
    for ci, count in enumerate(counts):
        vals = np.empty(repeats)
        for rep in range(repeats):
            sub = subsample(dataset, count, int(sub_seeds[ci, rep]))
            vals[rep] = ssd(sub, config).values["SSD"]
        std = float(np.std(vals, ddof=1)) if repeats > 1 else 0.0
        points.append((count, float(np.mean(vals)), std, repeats))
    return StabilityCurve(points=tuple(points))
