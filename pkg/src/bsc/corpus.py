"""Parallel corpus ingestion and the language-tagged vocabulary.

A bilingual sentence is the source sentence concatenated with its aligned
target sentence. Tokens are keyed by ``(surface, lang)`` so that a French
``chat`` and an English ``chat`` are different graph nodes.
"""

from __future__ import annotations

import struct
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import AllTokensPruned, ArtifactFormatError, EmptyCorpus, IoFailure, MisalignedCorpus

SRC = "src"
TGT = "tgt"
LANGS = (SRC, TGT)

SENTENCES_MAGIC = b"BSC1"
SENTENCES_VERSION = 1

DEFAULT_PUNCTUATION = string.punctuation + "«»“”‘’„‚…–—¡¿"


def other_lang(lang: str) -> str:
    if lang == SRC:
        return TGT
    if lang == TGT:
        return SRC
    raise ValueError(f"unknown language tag {lang!r}")


class Token(NamedTuple):
    surface: str
    lang: str

    def __str__(self):
        return f"{self.lang}:{self.surface}"

    @classmethod
    def parse(cls, text: str) -> "Token":
        lang, _, surface = text.partition(":")
        if lang not in LANGS or not surface:
            raise ValueError(f"not a language-tagged token: {text!r}")
        return cls(surface, lang)


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    punctuation: str = DEFAULT_PUNCTUATION

    def tokenize(self, line: str) -> list[str]:
        if self.lowercase:
            line = line.lower()
        out = []
        for raw in line.split():
            tok = raw.strip(self.punctuation)
            if tok:
                out.append(tok)
        return out


class Vocabulary:
    """Dense node-id <-> Token mapping with corpus frequencies.

    ``remap`` is set on vocabularies produced by :func:`prune_by_frequency`
    and maps the parent vocabulary's ids to ids in this one (-1 if dropped).
    """

    def __init__(self, tokens: Sequence[Token], freqs, remap=None, min_freq: int = 1):
        self.tokens = list(tokens)
        self.freqs = np.asarray(freqs, dtype=np.int64)
        if len(self.tokens) != len(self.freqs):
            raise ValueError("tokens and frequencies differ in length")
        self._index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")
        self.remap = remap
        self.min_freq = min_freq
        self._is_src = np.array([t.lang == SRC for t in self.tokens], dtype=bool)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token) -> bool:
        return token in self._index

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.tokens == other.tokens and np.array_equal(self.freqs, other.freqs)

    def id_of(self, token: Token) -> int:
        return self._index[token]

    def get(self, token: Token, default=None):
        return self._index.get(token, default)

    def token(self, node_id: int) -> Token:
        return self.tokens[node_id]

    def frequency(self, node_id: int) -> int:
        return int(self.freqs[node_id])

    def lang_mask(self, lang: str) -> np.ndarray:
        """Boolean mask over node-ids selecting one language."""
        return self._is_src.copy() if lang == SRC else ~self._is_src

    def entries(self):
        for i, tok in enumerate(self.tokens):
            yield tok, i, int(self.freqs[i])

    def __repr__(self):
        return f"Vocabulary(size={self.size}, min_freq={self.min_freq})"


def build_corpus(source_lines: Sequence[str], target_lines: Sequence[str],
                 config: TokenizerConfig | None = None):
    """Tokenize aligned line pairs into a vocabulary and bilingual sentences.

    Node-ids are assigned in order of first occurrence, so identical input
    always produces identical ids. Each sentence is an int32 array of
    node-ids: source tokens followed by target tokens, duplicates kept.
    """
    if len(source_lines) != len(target_lines):
        raise MisalignedCorpus(len(source_lines), len(target_lines))
    config = config or TokenizerConfig()

    index: dict[Token, int] = {}
    tokens: list[Token] = []
    counts: list[int] = []
    sentences = []
    non_empty = 0
    for src_line, tgt_line in zip(source_lines, target_lines):
        ids = []
        for lang, line in ((SRC, src_line), (TGT, tgt_line)):
            for surface in config.tokenize(line):
                tok = Token(surface, lang)
                i = index.get(tok)
                if i is None:
                    i = index[tok] = len(tokens)
                    tokens.append(tok)
                    counts.append(0)
                counts[i] += 1
                ids.append(i)
        if ids:
            non_empty += 1
        sentences.append(np.array(ids, dtype=np.int32))

    if non_empty == 0:
        raise EmptyCorpus("corpus has no non-empty line pairs")
    return Vocabulary(tokens, counts), sentences


def read_lines(path) -> list[str]:
    """Read a UTF-8 file as lines, accepting LF or CRLF endings."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


def ingest(source_path, target_path, config: TokenizerConfig | None = None):
    return build_corpus(read_lines(source_path), read_lines(target_path), config)


def prune_by_frequency(vocab: Vocabulary, min_freq: int) -> Vocabulary:
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    keep = vocab.freqs >= min_freq
    if not keep.any():
        raise AllTokensPruned(f"no token has frequency >= {min_freq}")
    remap = np.full(vocab.size, -1, dtype=np.int64)
    remap[keep] = np.arange(int(keep.sum()))
    tokens = [t for t, k in zip(vocab.tokens, keep) if k]
    return Vocabulary(tokens, vocab.freqs[keep], remap=remap, min_freq=min_freq)


def reencode_sentences(sentences: Iterable[np.ndarray], remap: np.ndarray) -> list[np.ndarray]:
    """Map sentences onto a pruned vocabulary, dropping pruned tokens."""
    out = []
    for sent in sentences:
        new = remap[sent]
        out.append(new[new >= 0].astype(np.int32))
    return out


# -- persistence -------------------------------------------------------------

def write_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for tok, i, freq in vocab.entries():
            f.write(f"{i}\t{tok.lang}\t{tok.surface}\t{freq}\n")


def read_vocab(path) -> Vocabulary:
    tokens, freqs = [], []
    for lineno, line in enumerate(read_lines(path)):
        parts = line.split("\t")
        if len(parts) != 4 or int(parts[0]) != lineno or parts[1] not in LANGS:
            raise ArtifactFormatError(f"{path}:{lineno + 1}: malformed vocabulary row")
        tokens.append(Token(parts[2], parts[1]))
        freqs.append(int(parts[3]))
    return Vocabulary(tokens, freqs)


def _write_varint(buf: bytearray, value: int) -> None:
    while value >= 0x80:
        buf.append((value & 0x7F) | 0x80)
        value >>= 7
    buf.append(value)


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = shift = 0
    while True:
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if byte < 0x80:
            return result, pos
        shift += 7


def write_sentences(sentences: Sequence[np.ndarray], path) -> None:
    """Binary sentence stream: header then, per sentence, a varint length and
    varint deltas of the ascending node-ids (the multiset is kept)."""
    buf = bytearray(SENTENCES_MAGIC)
    buf += struct.pack("<IQ", SENTENCES_VERSION, len(sentences))
    for sent in sentences:
        ids = np.sort(np.asarray(sent, dtype=np.int64))
        _write_varint(buf, len(ids))
        prev = 0
        for i in ids.tolist():
            _write_varint(buf, i - prev)
            prev = i
    Path(path).write_bytes(bytes(buf))


def read_sentences(path) -> list[np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != SENTENCES_MAGIC:
        raise ArtifactFormatError(f"{path}: not a sentence file")
    version, count = struct.unpack_from("<IQ", data, 4)
    if version != SENTENCES_VERSION:
        raise ArtifactFormatError(f"{path}: unsupported version {version}")
    pos = 16
    out = []
    for _ in range(count):
        n, pos = _read_varint(data, pos)
        ids = []
        prev = 0
        for _ in range(n):
            delta, pos = _read_varint(data, pos)
            prev += delta
            ids.append(prev)
        out.append(np.array(ids, dtype=np.int32))
    return out
