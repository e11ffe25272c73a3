"""Embedding storage: EMB1 binary files, paired-dataset manifests, subsampling.

EMB1 layout (all integers little-endian)::

    offset  size  field
    0       4     magic "EMB1"
    4       2     format version, currently 1
    6       1     dtype code, 0 = IEEE-754 binary32 little-endian
    7       1     role code (see Role)
    8       4     dim   (u32)
    12      8     count (u64)
    20      ...   count*dim values, row-major

The payload is written verbatim from the float32 buffer, so a write/read
round trip is bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError, EmbFormatError

MAGIC = b"EMB1"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sHBBIQ")

# Rows are considered unit-norm if ||row|| is within this of 1. Loose enough
# for float32 rounding, tight enough to catch genuinely unnormalized data.
UNIT_NORM_TOL = 1e-3

# Rows closer to unit norm than this are left untouched by normalize_rows,
# which makes the operation an exact fixed point on its own float32 output.
_RENORM_SKIP = 1e-6


class Role(IntEnum):
    TEXT = 0
    REAL_IMAGE = 1
    FAKE_IMAGE = 2
    FAKE_CAPTION = 3


def _row_norms(arr: np.ndarray) -> np.ndarray:
    # float64 accumulation without materializing a float64 copy of arr
    return np.sqrt(np.einsum("ij,ij->i", arr, arr, dtype=np.float64))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Immutable count x dim float32 embedding block with a role tag.

    A float32 C-contiguous input buffer is frozen in place rather than
    copied; anything else is converted first.
    """

    role: Role
    data: np.ndarray
    normalized: bool = field(init=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise DataError(f"embedding data must be 2-D, got ndim={arr.ndim}",
                            kind="bad_shape")
        if arr.shape[1] < 1:
            raise DataError("embedding dim must be positive", kind="bad_shape")
        if not np.all(np.isfinite(arr)):
            raise DataError("embedding data contains NaN or Inf",
                            kind="nonfinite_data")
        arr.flags.writeable = False
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "data", arr)
        norms = _row_norms(arr)
        unit = bool(np.all(np.abs(norms - 1.0) <= UNIT_NORM_TOL))
        object.__setattr__(self, "normalized", unit)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


class Record(NamedTuple):
    """One evaluation sample: indices into the three matrices plus ids."""

    text_index: int
    real_index: int
    fake_index: int
    image_id: object
    caption_id: object


@dataclass(frozen=True)
class PairedDataset:
    """Aligned text / real-image / fake-image embeddings bound by records."""

    text: EmbeddingMatrix
    real: EmbeddingMatrix
    fake: EmbeddingMatrix
    records: tuple[Record, ...]

    def __post_init__(self):
        object.__setattr__(self, "records",
                           tuple(Record(*r) for r in self.records))
        if not (self.text.dim == self.real.dim == self.fake.dim):
            raise DataError(
                f"dim mismatch: text={self.text.dim} real={self.real.dim} "
                f"fake={self.fake.dim}", kind="dim_mismatch")
        if not self.records:
            raise DataError("dataset has no records", kind="empty_records")
        for i, rec in enumerate(self.records):
            if not (0 <= rec.text_index < self.text.count
                    and 0 <= rec.real_index < self.real.count
                    and 0 <= rec.fake_index < self.fake.count):
                raise DataError(f"record {i} has an out-of-range index: {rec}",
                                kind="bad_record_index")

    def __len__(self) -> int:
        return len(self.records)


def write_emb(matrix: EmbeddingMatrix, path) -> None:
    """Write ``matrix`` to ``path`` in the EMB1 format.

    Rejects non-finite data before any byte is written.
    """
    data = np.ascontiguousarray(matrix.data, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise DataError("refusing to write non-finite embedding data",
                        kind="nonfinite_data")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_F32, int(matrix.role),
                          matrix.dim, matrix.count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_emb(path) -> EmbeddingMatrix:
    """Read an EMB1 file; raises EmbFormatError with a distinct kind per defect."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise EmbFormatError(f"{path}: file shorter than the EMB1 header",
                                 kind="truncated_header")
        magic, version, dtype, role, dim, count = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise EmbFormatError(f"{path}: bad magic {magic!r}", kind="bad_magic")
        if version != VERSION:
            raise EmbFormatError(f"{path}: unsupported version {version}",
                                 kind="unsupported_version")
        if dtype != DTYPE_F32:
            raise EmbFormatError(f"{path}: unsupported dtype code {dtype}",
                                 kind="unsupported_dtype")
        try:
            role = Role(role)
        except ValueError:
            raise EmbFormatError(f"{path}: unknown role code {role}",
                                 kind="bad_role") from None
        if dim < 1:
            raise EmbFormatError(f"{path}: dim must be positive, got {dim}",
                                 kind="bad_shape")
        expected = count * dim * 4
        payload = fh.read(expected)
        if len(payload) < expected:
            raise EmbFormatError(
                f"{path}: truncated payload, header declares {count}x{dim} "
                f"({expected} bytes) but {len(payload)} remain",
                kind="truncated_payload")
        if fh.read(1):
            raise EmbFormatError(f"{path}: trailing bytes after payload",
                                 kind="trailing_data")
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return EmbeddingMatrix(role=role, data=data)


def normalize_rows(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit L2 norm, preserving direction.

    Rows that are already unit-norm up to float32 rounding are returned
    bit-identical, so applying the operation twice changes nothing.
    """
    data = matrix.data
    norms = _row_norms(data)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(f"row {int(zero[0])} is the zero vector and cannot "
                        "be normalized", kind="zero_row")
    stale = np.abs(norms - 1.0) > _RENORM_SKIP
    if not stale.any():
        return matrix
    out = data.astype(np.float64)
    out[stale] /= norms[stale, None]
    return EmbeddingMatrix(role=matrix.role, data=out.astype(np.float32))


def subsample(dataset: PairedDataset, n: int, seed: int) -> PairedDataset:
    """Draw ``n`` records uniformly without replacement, deterministically.

    The returned dataset's matrices are restricted to the rows its records
    reference; record ids are preserved.
    """
    total = len(dataset.records)
    if not 1 <= n <= total:
        raise DataError(f"subsample size {n} outside [1, {total}]",
                        kind="subsample_range")
    rng = np.random.Generator(np.random.PCG64(seed))
    picks = rng.choice(total, size=n, replace=False)
    chosen = [dataset.records[i] for i in picks]

    def restrict(matrix, old_indices):
        uniq, inverse = np.unique(np.asarray(old_indices, dtype=np.int64),
                                  return_inverse=True)
        return EmbeddingMatrix(role=matrix.role, data=matrix.data[uniq]), inverse

    text, t_new = restrict(dataset.text, [r.text_index for r in chosen])
    real, r_new = restrict(dataset.real, [r.real_index for r in chosen])
    fake, f_new = restrict(dataset.fake, [r.fake_index for r in chosen])
    records = tuple(
        Record(int(t_new[i]), int(r_new[i]), int(f_new[i]),
               chosen[i].image_id, chosen[i].caption_id)
        for i in range(n))
    return PairedDataset(text=text, real=real, fake=fake, records=records)


def load_manifest(path) -> PairedDataset:
    """Load a record-manifest JSON and the three EMB1 files it names.

    Relative file paths resolve against the manifest's directory.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise EmbFormatError(f"{path}: not valid JSON: {exc}",
                                 kind="manifest_invalid") from exc
    for key in ("text_file", "real_file", "fake_file", "records"):
        if key not in doc:
            raise EmbFormatError(f"{path}: manifest missing key {key!r}",
                                 kind="manifest_invalid")

    def resolve(name):
        p = Path(doc[name])
        return p if p.is_absolute() else path.parent / p

    text = read_emb(resolve("text_file"))
    real = read_emb(resolve("real_file"))
    fake = read_emb(resolve("fake_file"))
    records = []
    for i, row in enumerate(doc["records"]):
        if not isinstance(row, (list, tuple)) or len(row) != 5:
            raise EmbFormatError(
                f"{path}: record {i} must be [t, r, f, image_id, caption_id]",
                kind="manifest_invalid")
        try:
            records.append(Record(int(row[0]), int(row[1]), int(row[2]),
                                  row[3], row[4]))
        except (TypeError, ValueError) as exc:
            raise EmbFormatError(f"{path}: record {i} has non-integer "
                                 f"indices: {exc}",
                                 kind="manifest_invalid") from exc
    return PairedDataset(text=text, real=real, fake=fake, records=tuple(records))


def write_manifest(path, text_file, real_file, fake_file,
                   records: Sequence[Record]) -> None:
    """Write a record-manifest JSON referencing the given embedding files."""
    doc = {
        "text_file": str(text_file),
        "real_file": str(real_file),
        "fake_file": str(fake_file),
        "records": [[r.text_index, r.real_index, r.fake_index,
                     r.image_id, r.caption_id] for r in records],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=0)
        fh.write("\n")
