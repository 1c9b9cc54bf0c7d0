"""Word embeddings: from-scratch skip-gram training and word2vec file IO.

The custom embedding is a skip-gram model with negative sampling trained on
per-table token streams, each stream treated as one sentence. Pretrained
vectors are read from the standard word2vec text and binary formats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .tokens import TokenStream, Vocabulary, build_vocab


class EmbeddingSource(Enum):
    CUSTOM_SKIP_GRAM = "CustomSkipGram"
    PRETRAINED_FILE = "PretrainedFile"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Token vectors aligned with a vocabulary's dense indices."""

    dim: int
    vectors: np.ndarray
    source: EmbeddingSource
    vocab: Vocabulary
    epoch_losses: tuple[float, ...] = ()

    def __post_init__(self):
        if self.vectors.shape != (len(self.vocab), self.dim):
            raise ValueError(
                f"vector matrix {self.vectors.shape} does not match "
                f"vocabulary size {len(self.vocab)} x dim {self.dim}"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding matrix contains non-finite values")

    def get(self, token: str) -> np.ndarray | None:
        idx = self.vocab.index.get(token)
        return None if idx is None else self.vectors[idx]


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 100
    window: int = 5
    negative_samples: int = 5
    epochs: int = 15
    learning_rate: float = 0.025
    min_count: int = 1
    seed: int = 42

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negative_samples < 1:
            raise ValueError("dim, window and negative_samples must all be >= 1")


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-x))


def pair_loss_and_grads(
    u: np.ndarray, v_pos: np.ndarray, v_negs: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Negative-sampling objective for one (center, context, negatives) sample.

    Returns (loss, d_u, d_v_pos, d_v_negs). Written for a single pair so the
    gradient can be checked against finite differences independently of the
    training loop.
    """
    pos_score = float(u @ v_pos)
    neg_scores = v_negs @ u
    loss = -math.log(_sigmoid(pos_score)) - float(np.sum(np.log(_sigmoid(-neg_scores))))
    g_pos = _sigmoid(pos_score) - 1.0
    g_negs = _sigmoid(neg_scores)
    d_u = g_pos * v_pos + g_negs @ v_negs
    d_v_pos = g_pos * u
    d_v_negs = g_negs[:, None] * u[None, :]
    return loss, d_u, d_v_pos, d_v_negs


def train_skipgram(streams: list[TokenStream], config: SkipGramConfig) -> EmbeddingMatrix:
    """Train skip-gram with negative sampling; deterministic given config.seed.

    Each stream is one sentence. Negatives are drawn from the unigram^0.75
    distribution; the learning rate decays linearly over all processed center
    words. The returned matrix is the input-side embedding.
    """
    vocab = build_vocab(streams, config.min_count)
    rng = np.random.default_rng(config.seed)
    n = len(vocab)
    d = config.dim

    syn0 = (rng.random((n, d)) - 0.5) / d  # input vectors
    syn1 = np.zeros((n, d))  # output (context) vectors

    freqs = np.zeros(n)
    for token, count in vocab.frequency.items():
        freqs[vocab.index[token]] = count
    noise = freqs**0.75
    noise /= noise.sum()

    sentences = [
        np.array([vocab.index[t] for t in s.tokens if t in vocab.index], dtype=np.int64)
        for s in streams
    ]
    sentences = [s for s in sentences if len(s) >= 2]
    if not sentences:
        raise ValueError("no stream has two or more in-vocabulary tokens")

    total_centers = sum(len(s) for s in sentences) * config.epochs
    min_lr = config.learning_rate * 1e-4
    processed = 0
    k = config.negative_samples
    window = config.window
    epoch_losses: list[float] = []

    for _ in range(config.epochs):
        loss_sum = 0.0
        pair_count = 0
        for sent in sentences:
            length = len(sent)
            negatives = rng.choice(n, size=(length, k), p=noise)
            for i in range(length):
                lr = max(min_lr, config.learning_rate * (1.0 - processed / total_centers))
                processed += 1
                lo = max(0, i - window)
                hi = min(length, i + window + 1)
                contexts = np.concatenate([sent[lo:i], sent[i + 1 : hi]])
                if len(contexts) == 0:
                    continue
                center = sent[i]
                negs = negatives[i]
                u = syn0[center]
                grad_u = np.zeros(d)
                for ctx in contexts:
                    keep = negs[negs != ctx]
                    loss, d_u, d_v_pos, d_v_negs = pair_loss_and_grads(u, syn1[ctx], syn1[keep])
                    grad_u += d_u
                    syn1[ctx] -= lr * d_v_pos
                    np.subtract.at(syn1, keep, lr * d_v_negs)
                    loss_sum += loss
                    pair_count += 1
                syn0[center] = u - lr * grad_u
        epoch_losses.append(loss_sum / max(1, pair_count))

    return EmbeddingMatrix(
        dim=d,
        vectors=syn0,
        source=EmbeddingSource.CUSTOM_SKIP_GRAM,
        vocab=vocab,
        epoch_losses=tuple(epoch_losses),
    )


def row_vector(stream: TokenStream, emb: EmbeddingMatrix) -> np.ndarray | None:
    """Unit-norm mean of the stream's in-vocabulary token vectors.

    Returns None when no token is in vocabulary or the mean is the zero
    vector.
    """
    rows = [emb.vocab.index[t] for t in stream.tokens if t in emb.vocab.index]
    if not rows:
        return None
    mean = emb.vectors[rows].astype(np.float64).mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        return None
    return mean / norm


def save_word2vec_text(emb: EmbeddingMatrix, path: str | Path) -> None:
    """Write the embedding in word2vec text format (full float precision)."""
    tokens = emb.vocab.tokens_in_order()
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{len(tokens)} {emb.dim}\n")
        for i, token in enumerate(tokens):
            values = " ".join(repr(float(x)) for x in emb.vectors[i])
            fh.write(f"{token} {values}\n")


def save_word2vec_binary(emb: EmbeddingMatrix, path: str | Path) -> None:
    """Write the embedding in word2vec binary format (little-endian float32)."""
    tokens = emb.vocab.tokens_in_order()
    with Path(path).open("wb") as fh:
        fh.write(f"{len(tokens)} {emb.dim}\n".encode("utf-8"))
        for i, token in enumerate(tokens):
            fh.write(token.encode("utf-8") + b" ")
            fh.write(emb.vectors[i].astype("<f4").tobytes())


class PretrainedFormatError(Exception):
    """Raised when a word2vec file's header and body disagree or values are bad."""


def _finish_pretrained(tokens: list[str], vectors: np.ndarray, dim: int) -> tuple[Vocabulary, EmbeddingMatrix]:
    if not np.all(np.isfinite(vectors)):
        raise PretrainedFormatError("embedding file contains non-finite values")
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(tokens)},
        frequency={t: 1 for t in tokens},
    )
    matrix = EmbeddingMatrix(
        dim=dim, vectors=vectors, source=EmbeddingSource.PRETRAINED_FILE, vocab=vocab
    )
    return vocab, matrix


def load_pretrained(path: str | Path) -> tuple[Vocabulary, EmbeddingMatrix]:
    """Load a word2vec file, auto-detecting text vs binary format."""
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise PretrainedFormatError("missing header line")
    try:
        count_s, dim_s = data[:newline].decode("utf-8").split()
        count, dim = int(count_s), int(dim_s)
    except ValueError as exc:
        raise PretrainedFormatError(f"bad header line: {exc}") from exc
    body = data[newline + 1 :]
    # Heuristic: text bodies decode as UTF-8 lines of "token floats...".
    try:
        text = body.decode("utf-8")
        is_text = all(ch.isprintable() or ch in "\n\r\t " for ch in text)
    except UnicodeDecodeError:
        is_text = False
    if is_text:
        return _load_text_body(text, count, dim)
    return _load_binary_body(body, count, dim)


def _load_text_body(text: str, count: int, dim: int) -> tuple[Vocabulary, EmbeddingMatrix]:
    lines = [line for line in text.split("\n") if line.strip()]
    if len(lines) != count:
        raise PretrainedFormatError(f"header declares {count} words, body has {len(lines)}")
    tokens: list[str] = []
    vectors = np.empty((count, dim))
    for i, line in enumerate(lines):
        parts = line.rstrip().split(" ")
        if len(parts) != dim + 1:
            raise PretrainedFormatError(
                f"word {i}: expected {dim} components, got {len(parts) - 1}"
            )
        tokens.append(parts[0])
        vectors[i] = [float(p) for p in parts[1:]]
    return _finish_pretrained(tokens, vectors, dim)


def _load_binary_body(body: bytes, count: int, dim: int) -> tuple[Vocabulary, EmbeddingMatrix]:
    tokens: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    offset = 0
    vec_bytes = 4 * dim
    for i in range(count):
        space = body.find(b" ", offset)
        if space < 0:
            raise PretrainedFormatError(f"header declares {count} words, body ends at word {i}")
        tokens.append(body[offset:space].decode("utf-8"))
        start = space + 1
        end = start + vec_bytes
        if end > len(body):
            raise PretrainedFormatError(f"word {i}: vector truncated")
        vectors[i] = np.frombuffer(body[start:end], dtype="<f4")
        offset = end
    if body[offset:].strip(b"\n"):
        raise PretrainedFormatError("trailing bytes after declared word count")
    return _finish_pretrained(tokens, vectors, dim)
