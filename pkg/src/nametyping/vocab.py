"""Corpus vocabulary, unigram negative-sampling table, and window streaming.

Corpora are plain UTF-8 text files: one document per line, tokens separated
by whitespace. Tokenization itself is out of scope; inputs must be
pre-tokenized.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

DEFAULT_MIN_COUNT = 100
DEFAULT_TABLE_SIZE = 10_000_000
DEFAULT_POWER = 0.75


@dataclass
class Vocabulary:
    """Frequency-filtered token inventory of a corpus.

    Tokens are ordered by descending corpus count, ties broken
    lexicographically; ``index`` maps each token to its row id under that
    order. Instances are immutable by convention and safe to share across
    workers.
    """

    tokens: list[str]
    counts: np.ndarray  # int64, aligned with tokens
    lowercase: bool = False
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.tokens) != len(self.counts):
            raise ValueError("tokens and counts must have equal length")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    def id_of(self, token: str) -> Optional[int]:
        return self.index.get(token)

    def count_of(self, token: str) -> int:
        """Corpus frequency of ``token`` (0 if absent), honoring lowercasing."""
        if self.lowercase:
            token = token.lower()
        i = self.index.get(token)
        return int(self.counts[i]) if i is not None else 0

    def encode_line(self, line: str) -> np.ndarray:
        """Map one corpus line to an int32 array of row ids, dropping OOV."""
        if self.lowercase:
            line = line.lower()
        idx = self.index
        ids = [idx[t] for t in line.split() if t in idx]
        return np.asarray(ids, dtype=np.int32)

    def save_tsv(self, path) -> None:
        """Dump as ``token<TAB>count`` rows, descending count order."""
        with open(path, "w", encoding="utf-8") as f:
            for tok, cnt in zip(self.tokens, self.counts):
                f.write(f"{tok}\t{int(cnt)}\n")

    @classmethod
    def load_tsv(cls, path, lowercase: bool = False) -> "Vocabulary":
        tokens, counts = [], []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'token<TAB>count'")
                tokens.append(parts[0])
                counts.append(int(parts[1]))
        return cls(tokens=tokens, counts=np.asarray(counts, dtype=np.int64),
                   lowercase=lowercase)


@dataclass
class CorpusStats:
    total_tokens: int = 0
    total_lines: int = 0
    oov_tokens_dropped: int = 0

    def __post_init__(self):
        if min(self.total_tokens, self.total_lines, self.oov_tokens_dropped) < 0:
            raise ValueError("corpus stats must be non-negative")


@dataclass
class NegativeTable:
    """Precomputed unigram table for drawing negative samples.

    Row id ``i`` occupies a share of the table proportional to
    ``counts[i] ** power``; the deterministic cumulative fill bounds the
    approximation error per token by ``1 / size``.
    """

    table: np.ndarray  # int32 row ids

    @property
    def size(self) -> int:
        return len(self.table)

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return self.table[rng.integers(0, len(self.table), size=k)]


def build_vocabulary(corpus_path, min_count: int = DEFAULT_MIN_COUNT,
                     lowercase: bool = False) -> Vocabulary:
    """Scan a corpus file and build the min-count-filtered vocabulary.

    Deterministic for a fixed input file: tokens are ordered by descending
    count with lexicographic tie-break.

    Raises:
        OSError: unreadable corpus file.
        ValueError: nothing survives the frequency threshold.
    """
    if min_count < 1:
        raise ValueError("min_count must be a positive integer")
    counter: Counter[str] = Counter()
    with open(corpus_path, encoding="utf-8") as f:
        for line in f:
            if lowercase:
                line = line.lower()
            counter.update(line.split())
    kept = [(tok, cnt) for tok, cnt in counter.items() if cnt >= min_count]
    if not kept:
        raise ValueError(
            f"empty vocabulary: no token reaches min_count={min_count}")
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    tokens = [tok for tok, _ in kept]
    counts = np.asarray([cnt for _, cnt in kept], dtype=np.int64)
    return Vocabulary(tokens=tokens, counts=counts, lowercase=lowercase)


def collect_corpus_stats(corpus_path, vocab: Optional[Vocabulary] = None,
                         lowercase: Optional[bool] = None) -> CorpusStats:
    """Count tokens and lines; with a vocabulary, also count OOV drops."""
    if lowercase is None:
        lowercase = vocab.lowercase if vocab is not None else False
    total_tokens = total_lines = oov = 0
    index = vocab.index if vocab is not None else None
    with open(corpus_path, encoding="utf-8") as f:
        for line in f:
            total_lines += 1
            if lowercase:
                line = line.lower()
            toks = line.split()
            total_tokens += len(toks)
            if index is not None:
                oov += sum(1 for t in toks if t not in index)
    return CorpusStats(total_tokens=total_tokens, total_lines=total_lines,
                       oov_tokens_dropped=oov)


def build_negative_table(vocab: Vocabulary, size: int = DEFAULT_TABLE_SIZE,
                         power: float = DEFAULT_POWER) -> NegativeTable:
    """Build the smoothed-unigram sampling table for negative draws.

    Raises:
        ValueError: size smaller than the vocabulary.
    """
    if size < len(vocab):
        raise ValueError(f"table size {size} < vocabulary size {len(vocab)}")
    weights = np.power(vocab.counts.astype(np.float64), power)
    cumulative = np.cumsum(weights)
    cumulative /= cumulative[-1]
    table = np.zeros(size, dtype=np.int32)
    boundaries = np.floor(cumulative * size).astype(np.int64)
    start = 0
    for row_id, stop in enumerate(boundaries):
        table[start:stop] = row_id
        start = stop
    if start < size:  # rounding slack goes to the last token
        table[start:] = len(vocab) - 1
    return NegativeTable(table=table)


def keep_probability(token_freq, threshold: float):
    """Subsampling keep probability ``min(1, (sqrt(f/t) + 1) * t / f)``.

    Accepts a scalar or an array of relative frequencies. Raises on
    non-positive inputs.
    """
    f = np.asarray(token_freq, dtype=np.float64)
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if np.any(f <= 0) or np.any(f > 1):
        raise ValueError("token_freq must lie in (0, 1]")
    p = np.minimum(1.0, (np.sqrt(f / threshold) + 1.0) * threshold / f)
    return float(p) if np.isscalar(token_freq) else p


def iter_window_contexts(ids: np.ndarray, window: int,
                         effective: Optional[np.ndarray] = None
                         ) -> Iterator[tuple[int, list[tuple[int, int]]]]:
    """Yield (center id, [(context id, relative position), ...]) for one line.

    ``effective`` optionally gives a per-position window width (dynamic
    window sampling); otherwise the full ``window`` is used everywhere.
    """
    n = len(ids)
    for i in range(n):
        b = window if effective is None else int(effective[i])
        lo = max(0, i - b)
        hi = min(n, i + b + 1)
        ctx = [(int(ids[j]), j - i) for j in range(lo, hi) if j != i]
        yield int(ids[i]), ctx


def stream_windows(corpus_path, vocab: Vocabulary, window: int,
                   dynamic: bool = False, rng_seed: int = 0
                   ) -> Iterator[tuple[int, list[tuple[int, int]]]]:
    """Stream (center, context) windows over a corpus.

    OOV tokens are removed before windowing, so relative positions refer to
    the surviving token sequence. With ``dynamic`` set, each center draws
    its effective window size uniformly from [1, window], the convention of
    the classic embedding tools.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    rng = np.random.default_rng(rng_seed)
    with open(corpus_path, encoding="utf-8") as f:
        for line in f:
            ids = vocab.encode_line(line)
            if len(ids) == 0:
                continue
            eff = rng.integers(1, window + 1, size=len(ids)) if dynamic else None
            yield from iter_window_contexts(ids, window, eff)


def partition_lines(n_lines: int, n_parts: int) -> list[range]:
    """Split line indices into contiguous ranges, one per worker."""
    if n_parts < 1:
        raise ValueError("n_parts must be >= 1")
    base, extra = divmod(n_lines, n_parts)
    ranges = []
    start = 0
    for i in range(n_parts):
        size = base + (1 if i < extra else 0)
        ranges.append(range(start, start + size))
        start += size
    return ranges
