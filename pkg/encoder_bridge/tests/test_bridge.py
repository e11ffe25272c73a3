import json
import pathlib
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from encoder_bridge import (EncodeJob, HashedBagEncoder, build_lexicon,
                            encode_texts, run_job, tag_token)

# the evaluation engine is the validation surface for everything we emit
import semdist


@pytest.fixture()
def job_dir(tmp_path):
    images = tmp_path / "images"
    images.mkdir()
    colors = [(200, 30, 30), (30, 200, 30), (30, 30, 200)]
    for i, color in enumerate(colors):
        img = Image.new("RGB", (24, 24), color)
        for x in range(0, 24, 4 + i):  # give each image some structure
            for y in range(24):
                img.putpixel((x, y), (255 - color[0], 255, 40 * i))
        img.save(images / f"img{i}.png")
    captions = ["this black bird has a long pointy beak",
                "a small green bird sitting on a branch",
                "a blue bird with white wings",
                "this bird shows a red crown and a short tail"]
    (tmp_path / "captions.txt").write_text("\n".join(captions) + "\n",
                                           encoding="utf-8")
    pairing = ["img0.png", "img1.png", "img2.png", "img0.png"]
    (tmp_path / "pairing.txt").write_text("\n".join(pairing) + "\n",
                                          encoding="utf-8")
    return tmp_path


def _job(tmp_path, out="enc/out"):
    return EncodeJob(images_dir=tmp_path / "images",
                     captions_file=tmp_path / "captions.txt",
                     pairing_file=tmp_path / "pairing.txt",
                     out_prefix=tmp_path / out)


def test_outputs_pass_primary_validation(job_dir):
    manifest = run_job(_job(job_dir), HashedBagEncoder())
    prefix = job_dir / "enc" / "out"

    text = semdist.read_emb(f"{prefix}.text.emb")
    real = semdist.read_emb(f"{prefix}.real.emb")
    fake = semdist.read_emb(f"{prefix}.fake.emb")
    assert text.count == 4 and text.dim == 512
    assert real.count == 3
    assert text.role is semdist.Role.TEXT
    assert real.role is semdist.Role.REAL_IMAGE
    for matrix in (text, real, fake):
        norms = np.linalg.norm(matrix.data.astype(np.float64), axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-3
        assert matrix.normalized

    dataset = semdist.load_manifest(f"{prefix}.manifest.json")
    assert len(dataset.records) == 4
    assert manifest["encoder"] == "hashed-bag-v1"

    lexicon = semdist.load_lexicon(f"{prefix}.lexicon.tsv")
    assert lexicon.tags  # parsed without errors


def test_primary_cli_evaluates_bridge_output(job_dir):
    run_job(_job(job_dir), HashedBagEncoder())
    prefix = job_dir / "enc" / "out"
    result = subprocess.run(
        [sys.executable, "-m", "semdist.cli", "eval", "--manifest",
         f"{prefix}.manifest.json", "--metrics", "ssd,cfid"],
        capture_output=True, text=True, timeout=120)
    assert result.returncode == 0, result.stdout + result.stderr
    doc = json.loads(result.stdout)
    # fake slot re-emits the real rows, so this is a GT-style manifest
    assert doc["values"]["dSV"] == 0.0
    assert doc["values"]["CFID"] == 0.0


def test_encoding_is_deterministic(job_dir):
    run_job(_job(job_dir, out="a/run"), HashedBagEncoder())
    run_job(_job(job_dir, out="b/run"), HashedBagEncoder())
    for name in ("text", "real", "fake"):
        a = (job_dir / "a" / f"run.{name}.emb").read_bytes()
        b = (job_dir / "b" / f"run.{name}.emb").read_bytes()
        assert a == b


def test_repeated_image_rows_identical(job_dir):
    # caption lines 0 and 3 share img0.png; their records must point at a
    # single identical row
    run_job(_job(job_dir), HashedBagEncoder())
    ds = semdist.load_manifest(job_dir / "enc" / "out.manifest.json")
    first, last = ds.records[0], ds.records[3]
    assert first.real_index == last.real_index
    assert first.image_id == last.image_id == "img0.png"


def test_undecodable_image_skipped_and_excluded(job_dir, caplog):
    (job_dir / "images" / "img1.png").write_bytes(b"not a png at all")
    with caplog.at_level("WARNING", logger="encoder_bridge"):
        run_job(_job(job_dir), HashedBagEncoder())
    assert any("img1.png" in rec.message for rec in caplog.records)
    ds = semdist.load_manifest(job_dir / "enc" / "out.manifest.json")
    assert len(ds.records) == 3  # caption 1 dropped
    assert ds.real.count == 2
    assert all(r.image_id != "img1.png" for r in ds.records)


def test_empty_caption_line_errors_with_line_number(job_dir):
    (job_dir / "captions.txt").write_text("a bird\n\nanother bird\n",
                                          encoding="utf-8")
    (job_dir / "pairing.txt").write_text(
        "img0.png\nimg1.png\nimg2.png\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 2"):
        run_job(_job(job_dir), HashedBagEncoder())


def test_pairing_must_reference_existing_images(job_dir):
    (job_dir / "pairing.txt").write_text(
        "img0.png\nimg1.png\nmissing.png\nimg0.png\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing.png"):
        run_job(_job(job_dir), HashedBagEncoder())


def test_long_caption_truncated_with_warning(caplog):
    encoder = HashedBagEncoder()
    tokens = [f"word{i}" for i in range(30)]
    with caplog.at_level("WARNING", logger="encoder_bridge"):
        rows = encode_texts(encoder, [" ".join(tokens)])
    assert rows.shape == (1, 512)
    assert any("truncated" in rec.message for rec in caplog.records)
    short = encoder.encode_texts([tokens[:encoder.max_tokens]])
    assert np.array_equal(rows, short)


def test_tagger_examples():
    assert tag_token("bird") == "NOUN"
    assert tag_token("black") == "ADJ"
    assert tag_token("this") == "OTHER"
    assert tag_token("sitting") == "VERB"


def test_lexicon_sorted_deduplicated_and_loadable(job_dir, tmp_path):
    out = tmp_path / "lex.tsv"
    n = build_lexicon(job_dir / "captions.txt", out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == n
    tokens = [line.split("\t")[0] for line in lines]
    assert tokens == sorted(tokens)
    assert len(tokens) == len(set(tokens))  # "bird" appears once
    lexicon = semdist.load_lexicon(out)
    assert lexicon.tags["bird"] == "NOUN"
    assert lexicon.tags["black"] == "ADJ"
