"""Citation-need scoring: mean-embedding features behind a pluggable scorer.

Any callable producing a score in [0, 1] per sentence can stand in for the
bundled model; downstream metrics only consume the score.  The bundled model
is logistic regression over the concatenated sentence and section-title mean
embeddings.
"""

from __future__ import annotations

import re
import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .logistic import fit_logistic, sigmoid
from .wikitext import Position, Sentence

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:['\-][a-z0-9]+)*")

STORE_COLUMNS = ("revision_id", "section_title", "position", "y_hat", "sentence", "paragraph")


class EmbeddingError(ValueError):
    """Raised for malformed embedding files or dimension mismatches."""


@dataclass(frozen=True)
class EmbeddingTable:
    """Token vectors of a fixed dimension; out-of-vocabulary maps to zeros."""

    dimension: int
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self):
        for token, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise EmbeddingError(f"vector for {token!r} has wrong length")


@dataclass(frozen=True)
class NeedScore:
    position: Position
    y_hat: float
    y: int


class Scorer(Protocol):
    def __call__(self, sentence_vec: np.ndarray, section_vec: np.ndarray) -> float: ...


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a text embedding file: header ``count dim``, then token + values."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}: expected 'count dim' header")
        count, dim = int(header[0]), int(header[1])
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise EmbeddingError(f"{path}:{lineno}: expected token plus {dim} values")
            token = parts[0]
            if token in vectors:
                raise EmbeddingError(f"{path}:{lineno}: duplicate token {token!r}")
            vectors[token] = np.array(parts[1:], dtype=float)
    if len(vectors) != count:
        raise EmbeddingError(f"{path}: header says {count} tokens, found {len(vectors)}")
    return EmbeddingTable(dim, vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dimension}\n")
        for token, vec in table.vectors.items():
            fh.write(token + " " + " ".join(repr(v) for v in vec) + "\n")


def _mean_vector(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    zero = np.zeros(table.dimension)
    if not tokens:
        return zero
    total = np.zeros(table.dimension)
    for tok in tokens:
        total += table.vectors.get(tok, zero)
    return total / len(tokens)


def embed(sentence: Sentence, table: EmbeddingTable) -> tuple[np.ndarray, np.ndarray]:
    """Mean token embeddings for a sentence and its section title."""
    if not table.vectors:
        raise EmbeddingError("embedding table is empty")
    return (
        _mean_vector(tokenize(sentence.text), table),
        _mean_vector(tokenize(sentence.section_title), table),
    )


@dataclass(frozen=True)
class NeedModel:
    """Logistic scorer over concatenated (sentence, section) vectors."""

    weights: np.ndarray  # length 2 * dimension
    bias: float
    threshold: float = 0.5

    @property
    def dimension(self) -> int:
        return len(self.weights) // 2

    def __call__(self, sentence_vec: np.ndarray, section_vec: np.ndarray) -> float:
        return score(sentence_vec, section_vec, self)


def score(sentence_vec: np.ndarray, section_vec: np.ndarray, model: NeedModel) -> float:
    features = np.concatenate([sentence_vec, section_vec])
    if features.shape != model.weights.shape:
        raise EmbeddingError(
            f"feature length {features.shape[0]} does not match model "
            f"weight length {model.weights.shape[0]}"
        )
    return float(sigmoid(float(model.weights @ features) + model.bias))


def label(y_hat: float, threshold: float = 0.5) -> int:
    """Binary citation-need label; scores at the threshold round up to 1."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be inside (0, 1), got {threshold}")
    if not 0.0 <= y_hat <= 1.0:
        raise ValueError(f"score must be inside [0, 1], got {y_hat}")
    return 1 if y_hat >= threshold else 0


def score_sentences(
    sentences: Sequence[Sentence],
    table: EmbeddingTable,
    model: Scorer,
    threshold: float = 0.5,
) -> list[NeedScore]:
    out = []
    for sentence in sentences:
        svec, tvec = embed(sentence, table)
        y_hat = float(model(svec, tvec))
        out.append(NeedScore(sentence.position, y_hat, label(y_hat, threshold)))
    return out


def train_need_model(
    features: np.ndarray,
    labels: np.ndarray,
    *,
    threshold: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> NeedModel:
    """Fit the bundled logistic model on (n, 2*dim) feature rows."""
    beta, _ = fit_logistic(features, labels, tol=tol, max_iter=max_iter)
    return NeedModel(weights=beta[:-1], bias=float(beta[-1]), threshold=threshold)


def save_model(model: NeedModel, path: str | Path) -> None:
    """Plain-text model file: ``dim threshold`` header, weights, bias."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{model.dimension} {model.threshold!r}\n")
        fh.write(" ".join(repr(w) for w in model.weights) + "\n")
        fh.write(f"{model.bias!r}\n")


def load_model(path: str | Path) -> NeedModel:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}: expected 'dim threshold' header")
        dim, threshold = int(header[0]), float(header[1])
        weights = np.array(fh.readline().split(), dtype=float)
        bias = float(fh.readline())
    if len(weights) != 2 * dim:
        raise EmbeddingError(f"{path}: expected {2 * dim} weights, found {len(weights)}")
    return NeedModel(weights=weights, bias=bias, threshold=threshold)


class NeedStore:
    """SQLite-backed store of citation-needing sentences.

    Rows are keyed by (revision_id, position), so re-running a revision is an
    idempotent upsert.  Columns follow :data:`STORE_COLUMNS`.
    """

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path))
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS needing_sentences ("
            "  revision_id INTEGER NOT NULL,"
            "  section_title TEXT NOT NULL,"
            "  position TEXT NOT NULL,"
            "  y_hat REAL NOT NULL,"
            "  sentence TEXT NOT NULL,"
            "  paragraph TEXT NOT NULL,"
            "  PRIMARY KEY (revision_id, position))"
        )
        self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "NeedStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def rows(self, revision_id: int | None = None) -> list[tuple]:
        query = "SELECT revision_id, section_title, position, y_hat, sentence, paragraph FROM needing_sentences"
        params: tuple = ()
        if revision_id is not None:
            query += " WHERE revision_id = ?"
            params = (revision_id,)
        query += " ORDER BY revision_id, position"
        return list(self._conn.execute(query, params))

    def export_tsv(self, path: str | Path) -> int:
        rows = self.rows()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(STORE_COLUMNS) + "\n")
            for row in rows:
                fh.write("\t".join(_tsv_cell(v) for v in row) + "\n")
        return len(rows)


def _tsv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value).replace("\t", " ").replace("\n", " ")


def format_position(position: Position) -> str:
    return f"{position[0]}:{position[1]}"


def store_needing(
    store: NeedStore,
    scored: Iterable[tuple[Sentence, NeedScore]],
    revision_id: int,
) -> int:
    """Persist every needing (y=1) sentence of a revision in one transaction."""
    rows = [
        (
            revision_id,
            sentence.section_title,
            format_position(need.position),
            need.y_hat,
            sentence.text,
            sentence.paragraph,
        )
        for sentence, need in scored
        if need.y == 1
    ]
    try:
        with store._conn:  # rolls back on failure, keeping writes atomic
            store._conn.executemany(
                "INSERT OR REPLACE INTO needing_sentences VALUES (?, ?, ?, ?, ?, ?)",
                rows,
            )
    except sqlite3.Error as exc:
        raise RuntimeError(f"store failed for revision {revision_id}: {exc}") from exc
    return len(rows)
