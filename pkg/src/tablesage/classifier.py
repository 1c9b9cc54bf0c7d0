"""Table classifier: fixed-length sequence encoding, a 4-layer LSTM stack
with a softmax head trained by Adam, and lossless model persistence.

Class labels are running integer ids for (company, table type) pairs; with
``include_company=False`` every company maps through one dummy entry so ids
enumerate table types alone.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import lstm
from .embeddings import EmbeddingMatrix, EmbeddingSource
from .tables import ExtractedTable, TableType
from .tokens import TokenStream, Vocabulary, tokenize_table

log = logging.getLogger(__name__)

MODEL_MAGIC = b"TSG1"
MODEL_VERSION = 1
_DUMMY_COMPANY = "*"


class ModelFormatError(Exception):
    """Base error for unreadable model files."""


class ModelVersionError(ModelFormatError):
    """Model file declares a format version this code does not know."""


class ModelChecksumError(ModelFormatError):
    """Model file bytes do not match their recorded checksum."""


@dataclass(frozen=True)
class LabelMap:
    """Running integer ids for (company, table_type) pairs."""

    include_company: bool
    ids: dict[tuple[str, str], int]

    @classmethod
    def build(cls, tables: list[ExtractedTable], include_company: bool = True) -> "LabelMap":
        ids: dict[tuple[str, str], int] = {}
        for t in tables:
            key = (t.company if include_company else _DUMMY_COMPANY, t.table_type.value)
            if key not in ids:
                ids[key] = len(ids)
        return cls(include_company=include_company, ids=dict(ids))

    def id_for(self, company: str, table_type: TableType) -> int:
        key = (company if self.include_company else _DUMMY_COMPANY, table_type.value)
        return self.ids[key]

    def label_of(self, table: ExtractedTable) -> int:
        return self.id_for(table.company, table.table_type)

    def __len__(self) -> int:
        return len(self.ids)

    def entries(self) -> list[tuple[str, str, int]]:
        """(company, table_type, id) triples sorted by id."""
        return sorted(((c, t, i) for (c, t), i in self.ids.items()), key=lambda e: e[2])


@dataclass(frozen=True)
class TrainConfig:
    seq_len: int = 40
    hidden_size: int = 64
    num_layers: int = 4
    batch_size: int = 16
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 100
    patience: int = 10
    train_fraction: float = 0.8
    seed: int = 42

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be in (0, 1)")
        if self.seq_len < 1:
            raise ValueError("seq_len must be >= 1")


@dataclass(frozen=True)
class SplitRecord:
    """A reproducible train/test partition, persisted with the model."""

    seed: int
    fraction: float
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    test_accuracy: float


@dataclass
class ClassifierModel:
    """Trained parameters plus everything needed to classify a raw table."""

    params: lstm.Params
    seq_len: int
    hidden_size: int
    num_layers: int
    label_map: LabelMap
    embedding_descriptor: dict
    split: SplitRecord | None = None
    embedding: EmbeddingMatrix | None = field(default=None, repr=False)

    @property
    def num_classes(self) -> int:
        return len(self.label_map)

    def attach_embedding(self, emb: EmbeddingMatrix) -> None:
        """Bind the embedding the model was trained with (checked by descriptor)."""
        desc = self.embedding_descriptor
        if emb.dim != desc["dim"] or len(emb.vocab) != desc["vocab_size"]:
            raise ValueError(
                f"embedding ({emb.source.value}, dim={emb.dim}, vocab={len(emb.vocab)}) "
                f"does not match model descriptor {desc}"
            )
        self.embedding = emb


def encode_sequence(stream: TokenStream, vocab: Vocabulary, seq_len: int) -> np.ndarray:
    """Map in-vocabulary tokens to indices, keep the first seq_len, left-pad.

    The pad index is ``len(vocab)``; embedding lookup maps it to the zero
    vector.
    """
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    pad = len(vocab)
    indices = [vocab.index[t] for t in stream.tokens if t in vocab.index][:seq_len]
    return np.array([pad] * (seq_len - len(indices)) + indices, dtype=np.int64)


def embed_sequences(encoded: np.ndarray, emb: EmbeddingMatrix) -> np.ndarray:
    """Look up embedded inputs (B, T, dim); the pad index embeds to zeros."""
    extended = np.vstack([emb.vectors.astype(np.float64), np.zeros((1, emb.dim))])
    return extended[encoded]


def split_train_test(
    table_ids: list[str], seed: int, fraction: float = 0.8
) -> SplitRecord:
    """Seeded shuffle then split; same seed always yields the same partition."""
    if len(table_ids) < 2:
        raise ValueError("need at least 2 tables to split")
    order = list(table_ids)
    rng = np.random.default_rng(seed)
    rng.shuffle(order)
    cut = int(round(len(order) * fraction))
    train, test = order[:cut], order[cut:]
    if not train or not test:
        raise ValueError(f"degenerate split: {len(train)} train / {len(test)} test")
    return SplitRecord(seed=seed, fraction=fraction, train_ids=tuple(train), test_ids=tuple(test))


def _accuracy(params: lstm.Params, x: np.ndarray, labels: np.ndarray) -> float:
    probs, _, _ = lstm.model_forward(params, x)
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def train(
    tables: list[ExtractedTable],
    embedding: EmbeddingMatrix,
    label_map: LabelMap,
    config: TrainConfig,
) -> tuple[ClassifierModel, list[EpochStats]]:
    """Mini-batch Adam training, deterministic given config.seed.

    Tables whose token stream encodes to all-pad are dropped with a warning.
    Evaluates the full test set each epoch; stops early after
    ``config.patience`` epochs without test-accuracy improvement and keeps
    the best-scoring parameters.
    """
    usable: list[ExtractedTable] = []
    for t in tables:
        stream = tokenize_table(t)
        if any(tok in embedding.vocab for tok in stream.tokens):
            usable.append(t)
        else:
            log.warning("dropping table %s: no in-vocabulary tokens", t.table_id)
    if not usable:
        raise ValueError("every table tokenized to an empty sequence")

    split = split_train_test([t.table_id for t in usable], config.seed, config.train_fraction)
    by_id = {t.table_id: t for t in usable}

    def batch_of(ids: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
        encoded = np.stack(
            [encode_sequence(tokenize_table(by_id[i]), embedding.vocab, config.seq_len) for i in ids]
        )
        labels = np.array([label_map.label_of(by_id[i]) for i in ids], dtype=np.int64)
        return embed_sequences(encoded, embedding), labels

    x_train, y_train = batch_of(split.train_ids)
    x_test, y_test = batch_of(split.test_ids)

    rng = np.random.default_rng(config.seed)
    params = lstm.init_params(
        rng, embedding.dim, config.hidden_size, len(label_map), config.num_layers
    )
    state = lstm.AdamState.for_params(params)

    best_params = {k: v.copy() for k, v in params.items()}
    best_accuracy = -1.0
    epochs_since_best = 0
    stats: list[EpochStats] = []

    n_train = len(y_train)
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = lstm.loss_and_grads(params, x_train[idx], y_train[idx])
            params, state = lstm.adam_step(
                params, grads, state,
                learning_rate=config.learning_rate,
                beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon,
            )
            loss_sum += loss * len(idx)
        accuracy = _accuracy(params, x_test, y_test)
        stats.append(EpochStats(epoch=epoch, train_loss=loss_sum / n_train, test_accuracy=accuracy))
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_params = {k: v.copy() for k, v in params.items()}
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                break

    model = ClassifierModel(
        params=best_params,
        seq_len=config.seq_len,
        hidden_size=config.hidden_size,
        num_layers=config.num_layers,
        label_map=label_map,
        embedding_descriptor={
            "source": embedding.source.value,
            "dim": embedding.dim,
            "vocab_size": len(embedding.vocab),
        },
        split=split,
        embedding=embedding,
    )
    return model, stats


def predict(model: ClassifierModel, table: ExtractedTable) -> np.ndarray:
    """Softmax probability vector for one table (components sum to 1)."""
    if model.embedding is None:
        raise ValueError("model has no embedding attached; call attach_embedding first")
    encoded = encode_sequence(tokenize_table(table), model.embedding.vocab, model.seq_len)
    x = embed_sequences(encoded[None, :], model.embedding)
    probs, _, _ = lstm.model_forward(model.params, x)
    return probs[0]


def _meta_dict(model: ClassifierModel, param_names: list[str]) -> dict:
    return {
        "seq_len": model.seq_len,
        "hidden_size": model.hidden_size,
        "num_layers": model.num_layers,
        "label_map": {
            "include_company": model.label_map.include_company,
            "entries": [list(e) for e in model.label_map.entries()],
        },
        "embedding": model.embedding_descriptor,
        "split": None
        if model.split is None
        else {
            "seed": model.split.seed,
            "fraction": model.split.fraction,
            "train_ids": list(model.split.train_ids),
            "test_ids": list(model.split.test_ids),
        },
        "params": [{"name": n, "shape": list(model.params[n].shape)} for n in param_names],
    }


def save_model(model: ClassifierModel, path) -> None:
    """Write magic, version, metadata block, float64 parameters, checksum."""
    param_names = sorted(model.params)
    meta = json.dumps(_meta_dict(model, param_names), sort_keys=True).encode("utf-8")
    blob = bytearray()
    blob += MODEL_MAGIC
    blob += struct.pack("<I", MODEL_VERSION)
    blob += struct.pack("<I", len(meta))
    blob += meta
    for name in param_names:
        blob += model.params[name].astype("<f8").tobytes()
    blob += hashlib.sha256(bytes(blob)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_model(path) -> ClassifierModel:
    """Read a model file back; the embedding must be re-attached by the caller."""
    data = open(path, "rb").read()
    if data[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != MODEL_VERSION:
        raise ModelVersionError(f"{path}: format version {version}, expected {MODEL_VERSION}")
    if len(data) < 44 or hashlib.sha256(data[:-32]).digest() != data[-32:]:
        raise ModelChecksumError(f"{path}: checksum mismatch (corrupt or truncated)")
    (meta_len,) = struct.unpack("<I", data[8:12])
    meta = json.loads(data[12 : 12 + meta_len].decode("utf-8"))
    offset = 12 + meta_len
    params: lstm.Params = {}
    for spec in meta["params"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        raw = data[offset : offset + 8 * count]
        if len(raw) != 8 * count:
            raise ModelChecksumError(f"{path}: parameter block truncated")
        params[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        offset += 8 * count
    label_meta = meta["label_map"]
    label_map = LabelMap(
        include_company=label_meta["include_company"],
        ids={(c, t): i for c, t, i in label_meta["entries"]},
    )
    split_meta = meta["split"]
    split = None
    if split_meta is not None:
        split = SplitRecord(
            seed=split_meta["seed"],
            fraction=split_meta["fraction"],
            train_ids=tuple(split_meta["train_ids"]),
            test_ids=tuple(split_meta["test_ids"]),
        )
    return ClassifierModel(
        params=params,
        seq_len=meta["seq_len"],
        hidden_size=meta["hidden_size"],
        num_layers=meta["num_layers"],
        label_map=label_map,
        embedding_descriptor=meta["embedding"],
        split=split,
    )
