"""Hard-negative sentence construction by POS-constrained token replacement.

Nouns, verbs and adjectives are swapped for different tokens of the same
part of speech; everything else is left alone. POS comes from a static
TSV lexicon (``token<TAB>POS`` per line), not a runtime tagger.
"""

from __future__ import annotations

import math
import random
import re
import string
import warnings
from dataclasses import dataclass
from typing import Mapping

from .errors import ConfigError, DataError, LexiconError

NOUN, VERB, ADJ, OTHER = "NOUN", "VERB", "ADJ", "OTHER"
REPLACEABLE_POS = frozenset({NOUN, VERB, ADJ})


@dataclass(frozen=True)
class PosLexicon:
    tags: Mapping[str, str]
    pools: Mapping[str, tuple[str, ...]]


@dataclass(frozen=True)
class TokenizedCaption:
    tokens: tuple[str, ...]
    replaceable: tuple[int, ...]


def _strip_token(word: str) -> str:
    return word.strip(string.punctuation).lower()


def load_lexicon(path) -> PosLexicon:
    """Parse a token<TAB>POS lexicon; unknown POS map to OTHER, first tag wins."""
    tags: dict[str, str] = {}
    pools: dict[str, list[str]] = {NOUN: [], VERB: [], ADJ: [], OTHER: []}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(
                    f"{path}:{lineno}: expected 2 tab-separated fields, "
                    f"got {len(parts)}")
            token = parts[0].strip().lower()
            if not token or any(ch.isspace() for ch in token):
                raise LexiconError(f"{path}:{lineno}: bad token {parts[0]!r}")
            pos = parts[1].strip().upper()
            if pos not in (NOUN, VERB, ADJ):
                pos = OTHER
            if token in tags:
                if tags[token] != pos:
                    warnings.warn(
                        f"{path}:{lineno}: duplicate token {token!r} with "
                        f"conflicting tag {pos}, keeping {tags[token]}")
                continue
            tags[token] = pos
            pools[pos].append(token)
    return PosLexicon(tags=tags,
                      pools={p: tuple(v) for p, v in pools.items()})


def tokenize(caption: str, lexicon: PosLexicon) -> TokenizedCaption:
    """Lowercase, whitespace-split, strip edge punctuation, mark replaceables."""
    tokens = tuple(t for t in (_strip_token(w) for w in caption.split()) if t)
    replaceable = tuple(i for i, t in enumerate(tokens)
                        if lexicon.tags.get(t, OTHER) in REPLACEABLE_POS)
    return TokenizedCaption(tokens=tokens, replaceable=replaceable)


def replacement_count(ratio: float, n_replaceable: int) -> int:
    """ceil(ratio * n_replaceable), robust to float fuzz on exact multiples."""
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"ratio must be in [0, 1], got {ratio}")
    if n_replaceable == 0 or ratio == 0.0:
        return 0
    return max(1, math.ceil(ratio * n_replaceable - 1e-9))


def construct_hard_negative(caption: TokenizedCaption, lexicon: PosLexicon,
                            ratio: float, seed: int):
    """Replace a ceil(ratio * |replaceable|)-sized random subset of tokens.

    Each chosen position gets a uniformly drawn token of the same POS that
    differs from the original. Deterministic for a fixed seed. Returns
    (new_tokens, replaced_indices) with indices sorted ascending.
    """
    k = replacement_count(ratio, len(caption.replaceable))
    if k == 0:
        return tuple(caption.tokens), ()
    rng = random.Random(seed)
    positions = sorted(rng.sample(list(caption.replaceable), k))
    tokens = list(caption.tokens)
    for pos in positions:
        original = tokens[pos]
        tag = lexicon.tags[original]
        candidates = [t for t in lexicon.pools[tag] if t != original]
        if not candidates:
            raise DataError(
                f"pool for POS {tag} has no alternative to {original!r}",
                kind="pool_too_small")
        tokens[pos] = rng.choice(candidates)
    return tuple(tokens), tuple(positions)


def corrupt_line(line: str, lexicon: PosLexicon, ratio: float, seed: int):
    """Apply construct_hard_negative to a raw caption line, in place.

    Replaced tokens keep their surrounding punctuation and whitespace; a
    line with zero replacements comes back byte-identical. Returns
    (new_line, log_entry).
    """
    tokenized = tokenize(line, lexicon)
    new_tokens, replaced = construct_hard_negative(tokenized, lexicon,
                                                   ratio, seed)
    entry = {
        "replaced_indices": list(replaced),
        "originals": [tokenized.tokens[i] for i in replaced],
        "replacements": [new_tokens[i] for i in replaced],
    }
    if not replaced:
        return line, entry
    # Non-whitespace chunks, in order; chunk j carries token index j minus
    # the chunks whose core stripped to nothing.
    parts = re.split(r"(\s+)", line)
    token_idx = -1
    replaced_set = set(replaced)
    for pi, part in enumerate(parts):
        if not part or part.isspace():
            continue
        core = _strip_token(part)
        if not core:
            continue
        token_idx += 1
        if token_idx in replaced_set:
            lead = len(part) - len(part.lstrip(string.punctuation))
            trail = len(part) - len(part.rstrip(string.punctuation))
            parts[pi] = (part[:lead] + new_tokens[token_idx]
                         + (part[len(part) - trail:] if trail else ""))
    return "".join(parts), entry
