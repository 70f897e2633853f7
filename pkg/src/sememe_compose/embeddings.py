"""Dense embedding tables with a frozen/trainable partition and a plain-text
`token v1 ... vd` file format (identical for reading and writing)."""

from __future__ import annotations

import numpy as np


class UnknownTokenError(KeyError):
    """Lookup of a token the table does not declare."""

    def __str__(self):
        return self.args[0] if self.args else ""


class EmbeddingFormatError(ValueError):
    """Malformed embedding text input."""


class EmbeddingTable:
    """An ordered token list with a row-per-token float64 matrix.

    Row i belongs to tokens[i]. Unknown tokens are a hard error everywhere;
    nothing is ever silently backfilled with zeros. The `trainable` flags mark
    rows an optimizer may update; frozen rows must stay bit-identical.
    """

    def __init__(self, tokens, matrix, trainable=None):
        self.tokens: list[str] = list(tokens)
        self.matrix = np.array(matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.tokens):
            raise EmbeddingFormatError(
                f"matrix shape {self.matrix.shape} does not match {len(self.tokens)} tokens")
        self.dim = int(self.matrix.shape[1])
        if trainable is None:
            trainable = np.zeros(len(self.tokens), dtype=bool)
        self.trainable = np.array(trainable, dtype=bool)
        if self.trainable.shape != (len(self.tokens),):
            raise EmbeddingFormatError("trainable flags must align with tokens")
        self._index: dict[str, int] = {}
        for i, t in enumerate(self.tokens):
            if t in self._index:
                raise EmbeddingFormatError(f"duplicate token {t!r}")
            self._index[t] = i

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def __repr__(self):
        return f"EmbeddingTable(n={len(self.tokens)}, dim={self.dim})"

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownTokenError(f"unknown token {token!r}") from None

    def lookup(self, token: str) -> np.ndarray:
        """Row view for `token` (shares memory with the table)."""
        return self.matrix[self.index(token)]

    def mark_trainable(self, tokens, flag: bool = True):
        for t in tokens:
            self.trainable[self.index(t)] = flag

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.tokens, self.matrix.copy(), self.trainable.copy())

    def to_text(self) -> str:
        lines = []
        for t, row in zip(self.tokens, self.matrix):
            if any(ch.isspace() for ch in t) or not t:
                raise EmbeddingFormatError(f"token {t!r} cannot be serialized")
            lines.append(t + " " + " ".join(repr(float(v)) for v in row))
        return "\n".join(lines) + ("\n" if lines else "")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())


def load_embeddings(text: str, expected_dim: int | None = None) -> EmbeddingTable:
    """Parse embedding text; the dimension is taken from the first row unless
    `expected_dim` pins it. All rows are loaded frozen."""
    tokens, rows = [], []
    dim = expected_dim
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split(" ")
        if len(fields) < 2:
            raise EmbeddingFormatError(f"line {lineno}: expected `token v1 ... vd`")
        token, values = fields[0], fields[1:]
        if dim is None:
            dim = len(values)
        if len(values) != dim:
            raise EmbeddingFormatError(
                f"line {lineno}: expected {dim} values, got {len(values)}")
        try:
            rows.append([float(v) for v in values])
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric field") from None
        tokens.append(token)
    if not tokens:
        raise EmbeddingFormatError("no embedding rows found")
    return EmbeddingTable(tokens, np.array(rows, dtype=np.float64))


def read_embeddings(path, expected_dim: int | None = None) -> EmbeddingTable:
    with open(path, encoding="utf-8") as f:
        return load_embeddings(f.read(), expected_dim)


def init_random(tokens, dim: int, seed: int = 0, scale: float = 0.01) -> EmbeddingTable:
    """Uniform random table in [-scale, scale], all rows trainable."""
    tokens = list(tokens)
    if not tokens:
        raise EmbeddingFormatError("cannot initialize an empty token list")
    if scale <= 0:
        raise EmbeddingFormatError("scale must be positive")
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-scale, scale, size=(len(tokens), dim))
    return EmbeddingTable(tokens, matrix, trainable=np.ones(len(tokens), dtype=bool))


def matrix_to_text(arr: np.ndarray) -> str:
    """Serialize a 1-D or 2-D tensor in the embedding format, row index as token."""
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    lines = [str(i) + " " + " ".join(repr(float(v)) for v in row)
             for i, row in enumerate(arr)]
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str) -> np.ndarray:
    """Inverse of matrix_to_text; always returns a 2-D array."""
    table = load_embeddings(text)
    expected = [str(i) for i in range(len(table))]
    if table.tokens != expected:
        raise EmbeddingFormatError("matrix rows must be indexed 0..n-1 in order")
    return table.matrix
