"""CLI: encode an image folder plus captions into evaluation-ready files."""

import argparse
import logging
import sys

from .encoders import make_encoder
from .jobs import EncodeJob, run_job


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="encode",
        description="Encode images and captions into EMB1 embedding files, "
                    "a record manifest, and a POS lexicon")
    parser.add_argument("--images", required=True, help="image directory")
    parser.add_argument("--captions", required=True,
                        help="captions file, one per line")
    parser.add_argument("--pairing", required=True,
                        help="sidecar file: image filename per caption line")
    parser.add_argument("--out", required=True, help="output prefix")
    parser.add_argument("--fake-images", default=None,
                        help="directory of generated images named like the "
                             "real ones; omitted -> fake re-emits real")
    parser.add_argument("--encoder", choices=("hash", "clip"), default="hash")
    parser.add_argument("--checkpoint", default=None,
                        help="checkpoint id for --encoder clip")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=64)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        encoder = make_encoder(args.encoder, args.checkpoint, args.device)
        job = EncodeJob(images_dir=args.images, captions_file=args.captions,
                        pairing_file=args.pairing, out_prefix=args.out,
                        fake_images_dir=args.fake_images, device=args.device,
                        batch_size=args.batch_size)
        manifest = run_job(job, encoder)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}.{{text,real,fake}}.emb, manifest with "
          f"{len(manifest['records'])} records, lexicon")
    return 0


if __name__ == "__main__":
    sys.exit(main())
