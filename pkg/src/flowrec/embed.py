"""Skip-gram token embeddings trained with hierarchical softmax.

The output distribution is factorized over a Huffman tree built from
vocabulary frequencies: every leaf is a token, every internal node owns
a trainable vector, and the probability of a leaf given a context vector
is the product of per-branch sigmoids along its root path,

    p(target | context) = prod_k sigmoid((1 - 2 b_k) * <n_k, x>)

with b_k the recorded branch bit of step k. The (1 - 2 b_k) factor makes
the left/right masses at every node sum to one, so leaf probabilities
always normalize. Evaluation cost is the path length, logarithmic in the
vocabulary size.

Training performs one stochastic gradient step per (position, window
neighbor) pair, updating the center token's input vector and the node
vectors on the neighbor's path, with a linearly decaying learning rate.
"""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.special import expit

from .corpus import Corpus
from .errors import (
    ParseError,
    TrainingDivergedError,
    UnknownTokenError,
    ValidationError,
    VocabularyTooSmallError,
)

__all__ = [
    "HuffmanTree",
    "TrainConfig",
    "EmbeddingModel",
    "build_huffman",
    "leaf_probability",
    "pair_loss_gradients",
    "train",
    "untrained_model",
    "similarity",
    "save_model",
    "load_model",
]

MODEL_MAGIC = "flowrec-sg"
MODEL_VERSION = "v1"


@dataclass(frozen=True)
class HuffmanTree:
    """Per-leaf root paths: parallel arrays of internal node ids and branch bits."""

    paths: dict[str, tuple[np.ndarray, np.ndarray]]
    num_internal: int

    def path_length(self, key: str) -> int:
        return len(self.paths[key][0])

    def code(self, key: str) -> list[int]:
        return [int(b) for b in self.paths[key][1]]

    def max_path_length(self) -> int:
        return max(len(nodes) for nodes, _ in self.paths.values())


def build_huffman(frequencies: Mapping[str, int]) -> HuffmanTree:
    """Build the optimal prefix tree over vocabulary frequencies.

    Ties are broken deterministically: leaves are ordered by ascending
    canonical key, internal nodes by creation order after all leaves.
    When two nodes merge, the lighter one becomes branch 0.
    """
    if len(frequencies) < 2:
        raise VocabularyTooSmallError(
            f"need at least 2 tokens to build a tree, got {len(frequencies)}"
        )
    keys = sorted(frequencies)
    for key in keys:
        if frequencies[key] < 1:
            raise ValidationError(f"token {key!r} has non-positive frequency")

    n = len(keys)
    # Heap entries: (weight, tie_rank, node). Leaves are ("leaf", index),
    # internal nodes ("node", id); tie ranks place leaves (by key order)
    # before internal nodes of equal weight.
    heap: list[tuple[int, int, tuple[str, int]]] = [
        (frequencies[key], i, ("leaf", i)) for i, key in enumerate(keys)
    ]
    heapq.heapify(heap)
    parent: dict[tuple[str, int], tuple[int, int]] = {}
    next_tie = n
    node_id = 0
    while len(heap) > 1:
        w0, _, child0 = heapq.heappop(heap)
        w1, _, child1 = heapq.heappop(heap)
        parent[child0] = (node_id, 0)
        parent[child1] = (node_id, 1)
        heapq.heappush(heap, (w0 + w1, next_tie, ("node", node_id)))
        next_tie += 1
        node_id += 1

    paths: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for i, key in enumerate(keys):
        nodes: list[int] = []
        bits: list[int] = []
        cursor: tuple[str, int] = ("leaf", i)
        while cursor in parent:
            nid, bit = parent[cursor]
            nodes.append(nid)
            bits.append(bit)
            cursor = ("node", nid)
        nodes.reverse()
        bits.reverse()
        paths[key] = (
            np.asarray(nodes, dtype=np.int64),
            np.asarray(bits, dtype=np.int64),
        )
    return HuffmanTree(paths=paths, num_internal=node_id)


@dataclass(frozen=True)
class TrainConfig:
    window: int = 3
    dim: int = 50
    epochs: int = 5
    initial_learning_rate: float = 0.025
    final_learning_rate: float = 1e-4
    rng_seed: int = 1
    deterministic: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValidationError("window must be >= 1")
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if not self.final_learning_rate < self.initial_learning_rate:
            raise ValidationError(
                "final learning rate must be below the initial rate"
            )


@dataclass
class EmbeddingModel:
    """Vocabulary, input vectors, internal-node vectors, and the Huffman tree."""

    vocab: dict[str, int]
    frequencies: dict[str, int]
    vectors: np.ndarray       # (|T|, d) input embeddings
    node_vectors: np.ndarray  # (|T|-1, d) internal-node parameters
    dim: int
    tree: HuffmanTree
    train_config: TrainConfig | None = None

    def __post_init__(self):
        if self.vectors.shape != (len(self.vocab), self.dim):
            raise ValidationError("vector matrix shape does not match vocab/dim")
        if self.node_vectors.shape != (len(self.vocab) - 1, self.dim):
            raise ValidationError("node matrix shape does not match vocab/dim")
        self._index_to_key = sorted(self.vocab, key=self.vocab.__getitem__)

    @property
    def index_to_key(self) -> list[str]:
        return self._index_to_key

    def vector(self, key: str) -> np.ndarray:
        return self.vectors[self._index(key)]

    def _index(self, key: str) -> int:
        try:
            return self.vocab[key]
        except KeyError:
            raise UnknownTokenError(f"token {key!r} not in vocabulary") from None


def _path_logits(model: EmbeddingModel, target: str, context_vec: np.ndarray):
    nodes, bits = model.tree.paths[target]
    signs = 1.0 - 2.0 * bits
    node_vecs = model.node_vectors[nodes]
    return nodes, signs, node_vecs, signs * (node_vecs @ context_vec)


def leaf_probability(model: EmbeddingModel, target: str, context: str) -> float:
    """Probability of ``target`` under the tree-factorized output distribution."""
    context_vec = model.vector(context)
    if target not in model.tree.paths:
        raise UnknownTokenError(f"token {target!r} not in vocabulary")
    _, _, _, logits = _path_logits(model, target, context_vec)
    return float(np.prod(expit(logits)))


def pair_loss_gradients(
    model: EmbeddingModel, context: str, target: str
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss -log p(target|context) and its analytic gradients.

    Returns (loss, grad wrt the context input vector, path node ids,
    per-node gradient rows). Used by the SGD step and by gradient checks.
    """
    x = model.vector(context)
    if target not in model.tree.paths:
        raise UnknownTokenError(f"token {target!r} not in vocabulary")
    nodes, signs, node_vecs, logits = _path_logits(model, target, x)
    sig = expit(logits)
    loss = float(-np.sum(np.log(sig)))
    coeff = -(1.0 - sig) * signs          # dJ/dz * dz/d(inner)
    grad_x = coeff @ node_vecs
    grad_nodes = np.outer(coeff, x)
    return loss, grad_x, nodes, grad_nodes


def _sgd_step(
    vectors: np.ndarray,
    node_vectors: np.ndarray,
    tree: HuffmanTree,
    center_index: int,
    target_key: str,
    eta: float,
) -> None:
    nodes, bits = tree.paths[target_key]
    signs = 1.0 - 2.0 * bits
    x = vectors[center_index]
    node_vecs = node_vectors[nodes]
    g = (1.0 - expit(signs * (node_vecs @ x))) * signs
    dx = g @ node_vecs
    node_vectors[nodes] += eta * np.outer(g, x)
    vectors[center_index] += eta * dx


def _train_pass(
    sequences,
    vectors: np.ndarray,
    node_vectors: np.ndarray,
    tree: HuffmanTree,
    vocab: dict[str, int],
    cfg: TrainConfig,
    position_offset: int,
    total_positions: int,
) -> int:
    eta0 = cfg.initial_learning_rate
    etaf = cfg.final_learning_rate
    processed = position_offset
    for seq in sequences:
        keys = seq.keys()
        indices = [vocab[k] for k in keys]
        for i in range(len(keys)):
            eta = eta0 + (etaf - eta0) * (processed / total_positions)
            lo = max(0, i - cfg.window)
            hi = min(len(keys) - 1, i + cfg.window)
            for j in range(lo, hi + 1):
                if j == i:
                    continue
                _sgd_step(vectors, node_vectors, tree, indices[i], keys[j], eta)
            processed += 1
    return processed


def train(corpus: Corpus, cfg: TrainConfig) -> EmbeddingModel:
    """Learn token embeddings from the sequence corpus.

    Input vectors start uniform in [-0.5/d, 0.5/d] from the seed; node
    vectors start at zero, which makes every initial leaf probability
    0.5 per path step. In deterministic mode updates run in strict
    sequence order; otherwise sequences are sharded across threads with
    unsynchronized updates (results then vary run to run).
    """
    if not corpus.sequences:
        raise ValidationError("corpus is empty")
    if len(corpus.vocabulary) < 2:
        raise VocabularyTooSmallError(
            f"need at least 2 vocabulary tokens, got {len(corpus.vocabulary)}"
        )
    keys = sorted(corpus.vocabulary)
    vocab = {key: i for i, key in enumerate(keys)}
    tree = build_huffman(corpus.vocabulary)

    d = cfg.dim
    rng = np.random.default_rng(cfg.rng_seed & 0xFFFFFFFFFFFFFFFF)
    vectors = rng.uniform(-0.5 / d, 0.5 / d, size=(len(keys), d))
    node_vectors = np.zeros((len(keys) - 1, d))

    positions_per_epoch = sum(len(seq) for seq in corpus.sequences)
    total_positions = max(1, cfg.epochs * positions_per_epoch)

    for epoch in range(cfg.epochs):
        offset = epoch * positions_per_epoch
        if cfg.deterministic:
            _train_pass(
                corpus.sequences, vectors, node_vectors, tree, vocab, cfg,
                offset, total_positions,
            )
        else:
            _threaded_pass(
                corpus.sequences, vectors, node_vectors, tree, vocab, cfg,
                offset, total_positions,
            )
        if not (np.isfinite(vectors).all() and np.isfinite(node_vectors).all()):
            raise TrainingDivergedError(
                f"non-finite parameters after epoch {epoch + 1}"
            )

    return EmbeddingModel(
        vocab=vocab,
        frequencies=dict(corpus.vocabulary),
        vectors=vectors,
        node_vectors=node_vectors,
        dim=d,
        tree=tree,
        train_config=cfg,
    )


def _threaded_pass(sequences, vectors, node_vectors, tree, vocab, cfg,
                   offset, total_positions, workers: int = 4) -> None:
    # Throughput mode: shards update shared arrays without locks. Races
    # between steps are tolerated by contract; results are not reproducible.
    shards = [sequences[i::workers] for i in range(workers)]
    threads = []
    for shard in shards:
        if not shard:
            continue
        t = threading.Thread(
            target=_train_pass,
            args=(shard, vectors, node_vectors, tree, vocab, cfg,
                  offset, total_positions),
        )
        threads.append(t)
        t.start()
    for t in threads:
        t.join()


def similarity(model: EmbeddingModel, a: str, b: str) -> float:
    """Cosine similarity of the two tokens' input vectors (0 on zero norm)."""
    va = model.vector(a)
    vb = model.vector(b)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def _format_row(row: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in row)


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Write the model in the line-oriented text format.

    Header, one vector line per token, a ``#nodes`` section with the
    internal-node vectors, and a ``#codes`` section carrying each token's
    corpus frequency and root path so training can resume after a load.
    """
    n = len(model.vocab)
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION} {n} {model.dim}"]
    for key in model.index_to_key:
        lines.append(f"{key} {_format_row(model.vectors[model.vocab[key]])}")
    lines.append("#nodes")
    for row in model.node_vectors:
        lines.append(_format_row(row))
    lines.append("#codes")
    for key in model.index_to_key:
        nodes, bits = model.tree.paths[key]
        steps = " ".join(f"{n_}:{b}" for n_, b in zip(nodes, bits))
        lines.append(f"{key} {model.frequencies[key]} {steps}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_floats(text: str, expected: int, where: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != expected:
        raise ParseError(f"{where}: expected {expected} floats, got {len(parts)}")
    try:
        values = np.asarray([float(p) for p in parts])
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
    if not np.isfinite(values).all():
        raise ParseError(f"{where}: non-finite value")
    return values


def load_model(path: str | Path) -> EmbeddingModel:
    """Read a model file back; structural problems raise ParseError."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{path}: empty model file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != MODEL_MAGIC:
        raise ParseError(f"{path}: not a {MODEL_MAGIC} model file")
    if header[1] != MODEL_VERSION:
        raise ParseError(
            f"{path}: unsupported version {header[1]!r} (expected {MODEL_VERSION})"
        )
    try:
        n, dim = int(header[2]), int(header[3])
    except ValueError as exc:
        raise ParseError(f"{path}: bad header counts") from exc
    if n < 2 or dim < 1:
        raise ParseError(f"{path}: implausible header counts {n} x {dim}")
    expected_lines = 1 + n + 1 + (n - 1) + 1 + n
    if len(lines) < expected_lines:
        raise ParseError(
            f"{path}: truncated file ({len(lines)} lines, need {expected_lines})"
        )

    vocab: dict[str, int] = {}
    vectors = np.empty((n, dim))
    cursor = 1
    for i in range(n):
        line = lines[cursor + i]
        key, _, rest = line.partition(" ")
        if not key or key in vocab:
            raise ParseError(f"{path}: line {cursor + i + 1}: bad or repeated token")
        vocab[key] = i
        vectors[i] = _parse_floats(rest, dim, f"{path}: line {cursor + i + 1}")
    cursor += n
    if lines[cursor].strip() != "#nodes":
        raise ParseError(f"{path}: line {cursor + 1}: expected '#nodes'")
    cursor += 1
    node_vectors = np.empty((n - 1, dim))
    for i in range(n - 1):
        node_vectors[i] = _parse_floats(
            lines[cursor + i], dim, f"{path}: line {cursor + i + 1}"
        )
    cursor += n - 1
    if lines[cursor].strip() != "#codes":
        raise ParseError(f"{path}: line {cursor + 1}: expected '#codes'")
    cursor += 1
    frequencies: dict[str, int] = {}
    paths: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for i in range(n):
        where = f"{path}: line {cursor + i + 1}"
        parts = lines[cursor + i].split()
        if len(parts) < 3:
            raise ParseError(f"{where}: expected 'token freq node:bit ...'")
        key = parts[0]
        if key not in vocab:
            raise ParseError(f"{where}: unknown token {key!r} in codes")
        try:
            frequencies[key] = int(parts[1])
            steps = [p.split(":") for p in parts[2:]]
            node_ids = np.asarray([int(s[0]) for s in steps], dtype=np.int64)
            bits = np.asarray([int(s[1]) for s in steps], dtype=np.int64)
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{where}: malformed code entry") from exc
        if node_ids.size and (node_ids.min() < 0 or node_ids.max() >= n - 1):
            raise ParseError(f"{where}: node id out of range")
        if not np.isin(bits, (0, 1)).all():
            raise ParseError(f"{where}: branch bits must be 0 or 1")
        paths[key] = (node_ids, bits)
    if set(paths) != set(vocab):
        raise ParseError(f"{path}: codes section does not cover the vocabulary")

    return EmbeddingModel(
        vocab=vocab,
        frequencies=frequencies,
        vectors=vectors,
        node_vectors=node_vectors,
        dim=dim,
        tree=HuffmanTree(paths=paths, num_internal=n - 1),
        train_config=None,
    )


def untrained_model(corpus: Corpus, cfg: TrainConfig) -> EmbeddingModel:
    """Model at its random initialization: train with zero epochs."""
    return train(corpus, replace(cfg, epochs=0))
