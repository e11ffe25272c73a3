#!/usr/bin/env python3
"""Regenerate the committed synthetic fixtures under tests/fixtures/.

Deterministic; rerunning must reproduce the same bytes.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from semdist import EmbeddingMatrix, Record, Role, write_emb, write_manifest

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"

N_IMAGES = 24
CAPTIONS_PER_IMAGE = 2
DIM = 8

LEXICON = [
    ("bird", "NOUN"), ("head", "NOUN"), ("tail", "NOUN"), ("beak", "NOUN"),
    ("wing", "NOUN"), ("breast", "NOUN"), ("crown", "NOUN"), ("belly", "NOUN"),
    ("blue", "ADJ"), ("red", "ADJ"), ("yellow", "ADJ"), ("black", "ADJ"),
    ("white", "ADJ"), ("long", "ADJ"), ("short", "ADJ"), ("pointy", "ADJ"),
    ("has", "VERB"), ("shows", "VERB"), ("sports", "VERB"), ("bears", "VERB"),
    ("this", "DET"), ("a", "DET"), ("its", "PRON"), ("and", "CCONJ"),
    ("on", "ADP"), ("with", "ADP"), ("is", "AUX"),
]


def unit(rng, n, dim):
    x = rng.normal(size=(n, dim))
    return (x / np.linalg.norm(x, axis=1, keepdims=True)).astype(np.float32)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240817)

    n_records = N_IMAGES * CAPTIONS_PER_IMAGE
    text = unit(rng, n_records, DIM)
    real_base = unit(rng, N_IMAGES, DIM)
    fake = real_base[np.arange(n_records) % N_IMAGES] \
        + 0.3 * rng.normal(size=(n_records, DIM)).astype(np.float32)
    fake = (fake / np.linalg.norm(fake, axis=1, keepdims=True)).astype(np.float32)

    write_emb(EmbeddingMatrix(Role.TEXT, text), OUT / "tiny.text.emb")
    write_emb(EmbeddingMatrix(Role.REAL_IMAGE, real_base), OUT / "tiny.real.emb")
    write_emb(EmbeddingMatrix(Role.FAKE_IMAGE, fake), OUT / "tiny.fake.emb")

    records = [Record(i, i % N_IMAGES, i, i % N_IMAGES, i // N_IMAGES)
               for i in range(n_records)]
    write_manifest(OUT / "tiny.manifest.json", "tiny.text.emb",
                   "tiny.real.emb", "tiny.fake.emb", records)

    # ground-truth-style manifest: fake slot re-reads the real images
    gt_records = [Record(i, i % N_IMAGES, i % N_IMAGES, i % N_IMAGES,
                         i // N_IMAGES) for i in range(n_records)]
    write_manifest(OUT / "tiny_gt.manifest.json", "tiny.text.emb",
                   "tiny.real.emb", "tiny.real.emb", gt_records)

    with open(OUT / "tiny.lexicon.tsv", "w", encoding="utf-8") as fh:
        for token, pos in LEXICON:
            fh.write(f"{token}\t{pos}\n")

    captions = [
        "this bird is blue on its tail and has a long pointy beak.",
        "a black bird with a red crown and a short beak.",
        "this bird shows a yellow belly, a white breast and long wings.",
        "a white bird bears a pointy black beak on its head.",
        "this red bird has short wings and a yellow tail.",
    ]
    with open(OUT / "tiny.captions.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(captions) + "\n")
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
