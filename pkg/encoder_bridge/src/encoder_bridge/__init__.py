"""Encoder bridge: turn images + captions into evaluation-ready files."""

from .emb1 import write_emb1
from .encoders import ClipEncoder, HashedBagEncoder, make_encoder
from .jobs import (EncodeJob, build_lexicon, encode_images, encode_texts,
                   run_job)
from .tagger import tag_token

__version__ = "0.1.0"
