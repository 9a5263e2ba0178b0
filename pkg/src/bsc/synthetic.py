"""Toy parallel corpora with a known translation for every word.

Source word ``s007`` always appears together with its partner ``t007`` on
the target side. Sentences are drawn as a run of ``span`` consecutive
pairs on a ring of ``pairs`` concepts, plus ``noise`` pairs picked
uniformly, so topical neighbors co-occur often and the noise pairs form
the low-weight edges that the threshold removes.
"""

from __future__ import annotations

import numpy as np

from .corpus import SRC, TGT, Token
from .translate import LexiconPair


def twin_words(i: int) -> tuple[str, str]:
    return f"s{i:03d}", f"t{i:03d}"


def make_twin_corpus(n_sentences: int = 2000, pairs: int = 40, span: int = 3, noise: int = 1,
                     seed: int = 0):
    """Return ``(source_lines, target_lines, lexicon)``."""
    rng = np.random.default_rng(seed)
    src_lines, tgt_lines = [], []
    for _ in range(n_sentences):
        start = int(rng.integers(pairs))
        ids = [(start + k) % pairs for k in range(span)]
        ids += rng.integers(pairs, size=noise).tolist()
        src = [twin_words(i)[0] for i in ids]
        tgt = [twin_words(i)[1] for i in ids]
        rng.shuffle(src)
        rng.shuffle(tgt)
        src_lines.append(" ".join(src))
        tgt_lines.append(" ".join(tgt))
    lexicon = [LexiconPair(Token(twin_words(i)[0], SRC), Token(twin_words(i)[1], TGT))
               for i in range(pairs)]
    return src_lines, tgt_lines, lexicon
