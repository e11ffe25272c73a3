"""Encoding jobs: images + captions + pairing -> EMB1 files, manifest, lexicon.

The pairing file is a sidecar with one image filename per caption line.
Outputs are writable by this package alone; the evaluation engine reads
them through its own loaders.
"""

from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emb1 import (ROLE_FAKE_IMAGE, ROLE_REAL_IMAGE, ROLE_TEXT, write_emb1)
from .encoders import load_image
from .tagger import tag_token

log = logging.getLogger("encoder_bridge")


@dataclass
class EncodeJob:
    images_dir: Path
    captions_file: Path
    pairing_file: Path
    out_prefix: Path
    fake_images_dir: Path | None = None
    device: str = "cpu"
    batch_size: int = 64

    def __post_init__(self):
        self.images_dir = Path(self.images_dir)
        self.captions_file = Path(self.captions_file)
        self.pairing_file = Path(self.pairing_file)
        self.out_prefix = Path(self.out_prefix)
        if self.fake_images_dir is not None:
            self.fake_images_dir = Path(self.fake_images_dir)


def read_captions(job: EncodeJob):
    captions = job.captions_file.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(captions):
        if not line.strip():
            raise ValueError(f"caption line {i + 1} is empty")
    return captions


def read_pairing(job: EncodeJob, n_captions: int):
    names = job.pairing_file.read_text(encoding="utf-8").splitlines()
    names = [n.strip() for n in names if n.strip()]
    if len(names) != n_captions:
        raise ValueError(
            f"pairing lists {len(names)} images for {n_captions} captions")
    missing = [n for n in names if not (job.images_dir / n).is_file()]
    if missing:
        raise ValueError(f"pairing references missing image files: {missing}")
    return names


def tokenize_caption(caption: str):
    return [t for t in (w.strip(string.punctuation).lower()
                        for w in caption.split()) if t]


def encode_images(encoder, images_dir: Path, names, batch_size=64):
    """Encode unique image files in first-appearance order.

    Returns (rows, kept_names). Undecodable files are skipped with a logged
    warning and excluded from the result, so downstream records referencing
    them must be dropped.
    """
    unique = list(dict.fromkeys(names))
    kept, images = [], []
    for name in unique:
        try:
            images.append(load_image(images_dir / name))
            kept.append(name)
        except Exception as exc:
            log.warning("skipping undecodable image %s (%s)", name, exc)
    if not kept:
        raise ValueError(f"no decodable images in {images_dir}")
    chunks = [encoder.encode_images(images[i:i + batch_size])
              for i in range(0, len(images), batch_size)]
    return np.vstack(chunks), kept


def encode_texts(encoder, captions):
    """Encode captions, truncating each at the encoder's token limit."""
    token_lists = []
    for i, caption in enumerate(captions):
        tokens = tokenize_caption(caption)
        if not tokens:
            raise ValueError(f"caption line {i + 1} has no tokens")
        if len(tokens) > encoder.max_tokens:
            log.warning("caption line %d truncated from %d to %d tokens",
                        i + 1, len(tokens), encoder.max_tokens)
            tokens = tokens[: encoder.max_tokens]
        token_lists.append(tokens)
    return encoder.encode_texts(token_lists)


def build_lexicon(captions_file, out_path) -> int:
    """Tag every distinct caption token and write a sorted TSV lexicon."""
    captions = Path(captions_file).read_text(encoding="utf-8").splitlines()
    tokens = set()
    for caption in captions:
        tokens.update(tokenize_caption(caption))
    with open(out_path, "w", encoding="utf-8") as fh:
        for token in sorted(tokens):
            fh.write(f"{token}\t{tag_token(token)}\n")
    return len(tokens)


def run_job(job: EncodeJob, encoder) -> dict:
    """Run the full encode pipeline; returns the manifest document."""
    captions = read_captions(job)
    pairing = read_pairing(job, len(captions))

    real_rows, kept = encode_images(encoder, job.images_dir, pairing,
                                    job.batch_size)
    image_index = {name: i for i, name in enumerate(kept)}

    text_rows = encode_texts(encoder, captions)

    if job.fake_images_dir is not None:
        fake_rows, fake_kept = encode_images(encoder, job.fake_images_dir,
                                             pairing, job.batch_size)
        fake_index = {name: i for i, name in enumerate(fake_kept)}
    else:
        # ground-truth-style output: the fake slot re-emits the real rows
        fake_rows, fake_index = real_rows, image_index

    records = []
    dropped = 0
    for line, name in enumerate(pairing):
        if name not in image_index or name not in fake_index:
            dropped += 1
            continue
        records.append([line, image_index[name], fake_index[name], name, line])
    if dropped:
        log.warning("dropped %d records whose image could not be encoded",
                    dropped)
    if not records:
        raise ValueError("no records left after dropping undecodable images")

    prefix = job.out_prefix
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_emb1(f"{prefix}.text.emb", text_rows, ROLE_TEXT)
    write_emb1(f"{prefix}.real.emb", real_rows, ROLE_REAL_IMAGE)
    write_emb1(f"{prefix}.fake.emb", fake_rows, ROLE_FAKE_IMAGE)
    build_lexicon(job.captions_file, f"{prefix}.lexicon.tsv")

    manifest = {
        "text_file": f"{prefix.name}.text.emb",
        "real_file": f"{prefix.name}.real.emb",
        "fake_file": f"{prefix.name}.fake.emb",
        "records": records,
        "encoder": getattr(encoder, "name", "unknown"),
        "device": job.device,
    }
    with open(f"{prefix}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=0)
        fh.write("\n")
    return manifest
