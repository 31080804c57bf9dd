import numpy as np
import pytest

from nametyping.embedding_io import (EmbeddingFileFormat, EmbeddingFormatError,
                                     lookup, read_embeddings, write_embeddings)
from nametyping.embeddings import EmbeddingMatrix

TEXT = EmbeddingFileFormat.WORD2VEC_TEXT
BINARY = EmbeddingFileFormat.WORD2VEC_BINARY
GLOVE = EmbeddingFileFormat.GLOVE_TEXT


def random_matrix(n, dim, seed=0):
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    return EmbeddingMatrix(tokens=[f"tok{i}" for i in range(n)],
                           vectors=vectors)


class TestRead:
    def test_word2vec_text(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("2 3\na 1 0 0\nb 0 1 0\n")
        m = read_embeddings(path, TEXT)
        assert m.tokens == ["a", "b"]
        assert m.vectors.shape == (2, 3)
        assert np.array_equal(m.vectors,
                              np.array([[1, 0, 0], [0, 1, 0]], np.float32))

    def test_glove_infers_dim_from_row_width(self, tmp_path):
        path = tmp_path / "v.glove"
        path.write_text("a 1 2 3\nb 4 5 6\n")
        m = read_embeddings(path, GLOVE)
        assert m.dim == 3 and m.tokens == ["a", "b"]

    def test_restrict_to_keeps_intersection_in_file_order(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("3 2\na 1 1\nb 2 2\nc 3 3\n")
        m = read_embeddings(path, TEXT, restrict_to={"c", "a", "zzz"})
        assert m.tokens == ["a", "c"]

    def test_header_count_mismatch(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("3 2\na 1 1\nb 2 2\n")
        with pytest.raises(EmbeddingFormatError, match="declares 3"):
            read_embeddings(path, TEXT)

    def test_row_width_mismatch_reports_line(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("2 3\na 1 0 0\nb 0 1\n")
        with pytest.raises(EmbeddingFormatError, match=":3"):
            read_embeddings(path, TEXT)

    def test_duplicate_token_rejected(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("2 2\na 1 1\na 2 2\n")
        with pytest.raises(EmbeddingFormatError, match="duplicate"):
            read_embeddings(path, TEXT)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("1 2\na nan 1\n")
        with pytest.raises(EmbeddingFormatError, match="non-finite"):
            read_embeddings(path, TEXT)

    def test_trailing_whitespace_tolerated(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("1 2\na 1 2  \n")
        m = read_embeddings(path, TEXT)
        assert np.array_equal(m.vectors, np.array([[1, 2]], np.float32))

    def test_truncated_binary_payload(self, tmp_path):
        path = tmp_path / "v.bin"
        path.write_bytes(b"1 4\na " + b"\x00" * 10)
        with pytest.raises(EmbeddingFormatError, match="truncated"):
            read_embeddings(path, BINARY)

    def test_format_must_be_known(self, tmp_path):
        with pytest.raises(ValueError, match="unknown embedding format"):
            read_embeddings(tmp_path / "v", "fasttext")


class TestWrite:
    def test_text_example_row(self, tmp_path):
        m = EmbeddingMatrix(tokens=["a"],
                            vectors=np.array([[1.0, -2.0]], np.float32))
        path = tmp_path / "v.txt"
        write_embeddings(m, path, TEXT)
        assert path.read_text() == "1 2\na 1.0 -2.0\n"

    def test_refuses_empty_matrix(self, tmp_path):
        m = random_matrix(1, 2)
        m.tokens, m.vectors = [], np.zeros((0, 2), np.float32)
        m.index = {}
        with pytest.raises(ValueError, match="empty"):
            write_embeddings(m, tmp_path / "v.txt", TEXT)

    def test_unwritable_path(self, tmp_path):
        m = random_matrix(2, 2)
        with pytest.raises(OSError):
            write_embeddings(m, tmp_path / "no" / "dir" / "v.txt", TEXT)


class TestRoundTrips:
    @pytest.mark.parametrize("fmt", [TEXT, GLOVE])
    def test_text_round_trip_is_exact_for_float32(self, tmp_path, fmt):
        m = random_matrix(7, 5, seed=3)
        path = tmp_path / "v.vec"
        write_embeddings(m, path, fmt)
        back = read_embeddings(path, fmt)
        assert back.tokens == m.tokens
        assert np.array_equal(back.vectors, m.vectors)

    def test_binary_round_trip_bit_exact(self, tmp_path):
        m = random_matrix(5, 16, seed=4)
        path = tmp_path / "v.bin"
        write_embeddings(m, path, BINARY)
        back = read_embeddings(path, BINARY)
        assert back.tokens == m.tokens
        assert back.vectors.tobytes() == m.vectors.tobytes()

    def test_extreme_values_round_trip(self, tmp_path):
        vectors = np.array([[1e-30, -1e30, 3.1415927, 0.0]], np.float32)
        m = EmbeddingMatrix(tokens=["x"], vectors=vectors)
        for fmt in (TEXT, GLOVE, BINARY):
            path = tmp_path / f"v.{fmt.value}"
            write_embeddings(m, path, fmt)
            back = read_embeddings(path, fmt)
            assert np.array_equal(back.vectors, vectors)

    def test_unicode_tokens_survive(self, tmp_path):
        vectors = np.array([[0.5, -0.5], [1.5, 2.5]], np.float32)
        m = EmbeddingMatrix(tokens=["naïve", "東京"], vectors=vectors)
        for fmt in (TEXT, BINARY):
            path = tmp_path / f"u.{fmt.value}"
            write_embeddings(m, path, fmt)
            back = read_embeddings(path, fmt)
            assert back.tokens == m.tokens
            assert np.array_equal(back.vectors, vectors)


class TestLookup:
    def test_present_token_returns_stored_row(self):
        m = random_matrix(3, 4)
        assert np.array_equal(lookup(m, "tok1"), m.vectors[1])

    def test_absent_token_returns_none(self):
        assert lookup(random_matrix(2, 2), "nope") is None

    def test_case_sensitive(self):
        m = EmbeddingMatrix(tokens=["A", "a"],
                            vectors=np.array([[1.0], [2.0]], np.float32))
        assert lookup(m, "A")[0] == 1.0
        assert lookup(m, "a")[0] == 2.0
