"""Encoders mapping images and captions into one joint embedding space.

``HashedBagEncoder`` is fully offline and deterministic: images go through
fixed random projections of coarse pixel statistics, texts through hashed
bag-of-token features, both into the same 512-dim unit sphere. It exists
so the pipeline (and the downstream evaluation engine) can run without any
model weights. ``ClipEncoder`` wraps a pretrained joint vision-language
checkpoint via ``transformers`` when that stack is installed.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

EMBEDDING_DIM = 512


class HashedBagEncoder:
    """Deterministic weight-free stand-in for a pretrained joint encoder."""

    name = "hashed-bag-v1"
    max_tokens = 18

    def __init__(self, dim: int = EMBEDDING_DIM, seed: int = 0x5EED):
        self.dim = dim
        rng = np.random.default_rng(seed)
        # 16x16 grayscale + 3 channel means -> dim
        self._image_proj = rng.normal(size=(16 * 16 + 3, dim)) / np.sqrt(dim)

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "little") % self.dim
        sign = 1.0 if digest[4] & 1 else -1.0
        vec = np.zeros(self.dim)
        vec[bucket] = sign
        # a second bucket reduces collisions between short vocabularies
        bucket2 = int.from_bytes(digest[5:9], "little") % self.dim
        vec[bucket2] += 0.5 if digest[9] & 1 else -0.5
        return vec

    def encode_texts(self, token_lists) -> np.ndarray:
        rows = np.zeros((len(token_lists), self.dim))
        for i, tokens in enumerate(token_lists):
            for tok in tokens:
                rows[i] += self._token_vector(tok)
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        if (norms == 0).any():
            raise ValueError("cannot encode an empty token list")
        return (rows / norms).astype(np.float32)

    def encode_images(self, images) -> np.ndarray:
        feats = np.empty((len(images), 16 * 16 + 3))
        for i, image in enumerate(images):
            rgb = image.convert("RGB")
            gray = np.asarray(rgb.convert("L").resize((16, 16)),
                              dtype=np.float64).ravel() / 255.0
            channels = np.asarray(rgb.resize((8, 8)), dtype=np.float64)
            feats[i, :256] = gray - gray.mean()
            feats[i, 256:] = channels.mean(axis=(0, 1)) / 255.0
        rows = feats @ self._image_proj
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        return rows.astype(np.float32)


class ClipEncoder:
    """Pretrained joint vision-language encoder via transformers."""

    max_tokens = 77

    def __init__(self, checkpoint: str = "openai/clip-vit-base-patch32",
                 device: str = "cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise RuntimeError(
                "the clip encoder needs the [clip] extra (torch + "
                "transformers) installed") from exc
        self.name = checkpoint
        self.device = device
        self._torch = torch
        self._model = CLIPModel.from_pretrained(checkpoint).to(device).eval()
        self._processor = CLIPProcessor.from_pretrained(checkpoint)
        self.dim = self._model.config.projection_dim

    def encode_texts(self, token_lists) -> np.ndarray:
        texts = [" ".join(tokens) for tokens in token_lists]
        inputs = self._processor(text=texts, return_tensors="pt",
                                 padding=True, truncation=True).to(self.device)
        with self._torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)

    def encode_images(self, images) -> np.ndarray:
        inputs = self._processor(
            images=[im.convert("RGB") for im in images],
            return_tensors="pt").to(self.device)
        with self._torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)


def make_encoder(kind: str, checkpoint: str | None, device: str):
    if kind == "hash":
        return HashedBagEncoder()
    if kind == "clip":
        return ClipEncoder(checkpoint or "openai/clip-vit-base-patch32",
                           device=device)
    raise ValueError(f"unknown encoder kind {kind!r}")


def load_image(path) -> Image.Image:
    with Image.open(path) as im:
        im.load()
        return im.copy()
