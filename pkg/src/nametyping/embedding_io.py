"""Read and write embedding interchange files.

Three formats are supported, declared explicitly (no sniffing):

* word2vec text: header line ``<vocab_size> <dim>``, then one
  ``token v1 ... vdim`` row per entry.
* word2vec binary: the same ASCII header line, then per entry the token
  bytes, a single space, ``dim`` little-endian IEEE-754 float32 values,
  and a newline separating entries.
* GloVe text: like word2vec text but without the header; the dimension is
  inferred from the first row.

Floats are printed with the shortest representation that round-trips the
stored float32 value, so text round-trips are exact.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional

import numpy as np

from .embeddings import EmbeddingMatrix


class EmbeddingFormatError(ValueError):
    """Malformed embedding file; carries the offending entry number."""

    def __init__(self, path, line: Optional[int], message: str):
        loc = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.line = line


class EmbeddingFileFormat(Enum):
    WORD2VEC_TEXT = "w2v-text"
    WORD2VEC_BINARY = "w2v-bin"
    GLOVE_TEXT = "glove"

    @classmethod
    def parse(cls, name: str) -> "EmbeddingFileFormat":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown embedding format: {name!r} "
                f"(expected one of {[f.value for f in cls]})") from None


def _finish(path, tokens, rows, restrict_to) -> EmbeddingMatrix:
    if restrict_to is not None:
        kept = [(t, r) for t, r in zip(tokens, rows) if t in restrict_to]
        tokens = [t for t, _ in kept]
        rows = [r for _, r in kept]
    if not tokens:
        raise EmbeddingFormatError(path, None, "no embeddings read")
    vectors = np.vstack(rows)
    if not np.isfinite(vectors).all():
        raise EmbeddingFormatError(path, None, "non-finite value in file")
    return EmbeddingMatrix(tokens=tokens, vectors=vectors,
                           metadata={"source": str(path)})


def _read_text(path, expect_header: bool, restrict_to) -> EmbeddingMatrix:
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim = None
    declared = None
    with open(path, encoding="utf-8") as f:
        first = True
        for lineno, line in enumerate(f, 1):
            line = line.rstrip()  # tolerate trailing whitespace
            if not line:
                continue
            parts = line.split(" ")
            if first and expect_header:
                first = False
                if len(parts) != 2:
                    raise EmbeddingFormatError(
                        path, lineno, "expected '<vocab_size> <dim>' header")
                try:
                    declared = (int(parts[0]), int(parts[1]))
                except ValueError:
                    raise EmbeddingFormatError(
                        path, lineno, "non-integer header fields") from None
                dim = declared[1]
                continue
            first = False
            token = parts[0]
            if dim is None:
                dim = len(parts) - 1
                if dim < 1:
                    raise EmbeddingFormatError(path, lineno, "row has no values")
            if len(parts) - 1 != dim:
                raise EmbeddingFormatError(
                    path, lineno,
                    f"row has {len(parts) - 1} values, expected {dim}")
            if token in seen:
                raise EmbeddingFormatError(path, lineno,
                                           f"duplicate token {token!r}")
            seen.add(token)
            try:
                vec = np.array(parts[1:], dtype=np.float32)
            except ValueError:
                raise EmbeddingFormatError(path, lineno,
                                           "unparsable float value") from None
            tokens.append(token)
            rows.append(vec)
    if declared is not None and declared[0] != len(tokens):
        raise EmbeddingFormatError(
            path, None,
            f"header declares {declared[0]} entries, file has {len(tokens)}")
    return _finish(path, tokens, rows, restrict_to)


def _read_binary(path, restrict_to) -> EmbeddingMatrix:
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    with open(path, "rb") as f:
        header = f.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(path, 1, "expected binary header "
                                                "'<vocab_size> <dim>'")
        try:
            n_entries, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(path, 1, "non-integer header fields") from None
        row_bytes = 4 * dim
        for entry in range(n_entries):
            token_bytes = bytearray()
            while True:
                ch = f.read(1)
                if not ch:
                    raise EmbeddingFormatError(
                        path, entry + 2, "unexpected end of file in token")
                if ch == b" ":
                    break
                token_bytes.extend(ch)
            payload = f.read(row_bytes)
            if len(payload) != row_bytes:
                raise EmbeddingFormatError(
                    path, entry + 2, "truncated float payload")
            nl = f.read(1)
            if nl not in (b"\n", b""):
                raise EmbeddingFormatError(
                    path, entry + 2, "missing newline between entries")
            try:
                token = token_bytes.decode("utf-8")
            except UnicodeDecodeError:
                raise EmbeddingFormatError(
                    path, entry + 2, "token is not valid UTF-8") from None
            if token in seen:
                raise EmbeddingFormatError(path, entry + 2,
                                           f"duplicate token {token!r}")
            seen.add(token)
            tokens.append(token)
            rows.append(np.frombuffer(payload, dtype="<f4"))
    return _finish(path, tokens, rows, restrict_to)


def read_embeddings(path, format: EmbeddingFileFormat,
                    restrict_to: Optional[set[str]] = None) -> EmbeddingMatrix:
    """Load an embedding file in the declared format.

    With ``restrict_to``, only rows whose token is in the set are kept
    (file order preserved). Raises EmbeddingFormatError on malformed input
    and OSError on unreadable paths.
    """
    if isinstance(format, str):
        format = EmbeddingFileFormat.parse(format)
    if format is EmbeddingFileFormat.WORD2VEC_TEXT:
        return _read_text(path, expect_header=True, restrict_to=restrict_to)
    if format is EmbeddingFileFormat.GLOVE_TEXT:
        return _read_text(path, expect_header=False, restrict_to=restrict_to)
    return _read_binary(path, restrict_to)


def _format_value(x: np.float32) -> str:
    # shortest string that parses back to the same float32
    return str(x)


def write_embeddings(matrix: EmbeddingMatrix, path,
                     format: EmbeddingFileFormat) -> None:
    """Write a matrix in the given format. Refuses empty matrices."""
    if isinstance(format, str):
        format = EmbeddingFileFormat.parse(format)
    if len(matrix) == 0:
        raise ValueError("refusing to write an empty embedding matrix")
    vectors = matrix.vectors
    if format is EmbeddingFileFormat.WORD2VEC_BINARY:
        with open(path, "wb") as f:
            f.write(f"{len(matrix)} {matrix.dim}\n".encode("utf-8"))
            for token, row in zip(matrix.tokens, vectors):
                f.write(token.encode("utf-8"))
                f.write(b" ")
                f.write(row.astype("<f4").tobytes())
                f.write(b"\n")
        return
    header = format is EmbeddingFileFormat.WORD2VEC_TEXT
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(f"{len(matrix)} {matrix.dim}\n")
        for token, row in zip(matrix.tokens, vectors):
            f.write(token)
            for x in row:
                f.write(" ")
                f.write(_format_value(x))
            f.write("\n")


def lookup(matrix: EmbeddingMatrix, token: str) -> Optional[np.ndarray]:
    """Case-sensitive lookup; returns the stored row or None."""
    return matrix.lookup(token)
