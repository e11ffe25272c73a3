"""EMB1 writer: the binary embedding format the evaluation engine reads.

Layout (little-endian): magic "EMB1", u16 version = 1, u8 dtype = 0
(float32 LE), u8 role, u32 dim, u64 count, then count*dim row-major
float32 values.
"""

import struct

import numpy as np

_HEADER = struct.Struct("<4sHBBIQ")

ROLE_TEXT = 0
ROLE_REAL_IMAGE = 1
ROLE_FAKE_IMAGE = 2
ROLE_FAKE_CAPTION = 3


def write_emb1(path, rows: np.ndarray, role: int) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("refusing to write non-finite embeddings")
    count, dim = rows.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"EMB1", 1, 0, role, dim, count))
        fh.write(rows.tobytes())
