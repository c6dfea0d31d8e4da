"""Generate the service-token sequence corpus from the knowledge graph.

Three strategies are provided:

* depth-first: every maximal path from every service inside each
  workflow's labeled subgraph (singleton tokens);
* breadth-first: one sequence per (workflow, start service) whose k-th
  token bundles the services first reached at depth k-1;
* probabilistic walk: seeded random walks over the whole graph, label
  agnostic, with softmax transition probabilities over normalized edge
  occurrence ratios and no token revisits.

Sequences shorter than two tokens are dropped everywhere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ValidationError
from .wskg import Wskg

__all__ = [
    "ServiceToken",
    "Provenance",
    "TokenSequence",
    "Corpus",
    "PwConfig",
    "generate_dfs",
    "generate_bfs",
    "generate_pw",
    "transition_distribution",
    "dedupe",
    "save_corpus",
    "load_corpus",
]

logger = logging.getLogger(__name__)

MIN_SEQUENCE_LENGTH = 2


@dataclass(frozen=True)
class ServiceToken:
    """A non-empty service set with a canonical key (members sorted, '&'-joined)."""

    members: tuple[str, ...]

    def __post_init__(self):
        if not self.members:
            raise ValidationError("token must have at least one member")
        for member in self.members:
            if not member or "&" in member or any(c.isspace() for c in member):
                raise ValidationError(
                    f"service id {member!r} cannot be used in a token "
                    "(empty, contains '&', or contains whitespace)"
                )
        object.__setattr__(self, "members", tuple(sorted(set(self.members))))

    @classmethod
    def single(cls, service: str) -> "ServiceToken":
        return cls(members=(service,))

    @classmethod
    def bundle(cls, services: Iterable[str]) -> "ServiceToken":
        return cls(members=tuple(services))

    @classmethod
    def from_key(cls, key: str) -> "ServiceToken":
        return cls(members=tuple(key.split("&")))

    @property
    def key(self) -> str:
        return "&".join(self.members)

    def __str__(self) -> str:
        return self.key


class Provenance(NamedTuple):
    strategy: str
    start: str
    label: str  # workflow label, or "pw" for label-agnostic walks


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[ServiceToken, ...]
    provenance: Provenance | None = None

    def keys(self) -> tuple[str, ...]:
        return tuple(t.key for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Corpus:
    """Sequences plus the token vocabulary with occurrence frequencies."""

    sequences: list[TokenSequence]
    vocabulary: dict[str, int] = field(init=False)

    def __post_init__(self):
        counts: dict[str, int] = {}
        for seq in self.sequences:
            for token in seq.tokens:
                counts[token.key] = counts.get(token.key, 0) + 1
        self.vocabulary = counts

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass(frozen=True)
class PwConfig:
    """Probabilistic-walk parameters: max walk length, walks per vertex, seed."""

    walk_length: int = 5
    walks_per_vertex: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.walk_length < 2:
            raise ValidationError("walk_length must be >= 2")
        if self.walks_per_vertex < 1:
            raise ValidationError("walks_per_vertex must be >= 1")


def _emit(sequences: list[TokenSequence], tokens: list[ServiceToken], prov: Provenance) -> None:
    if len(tokens) >= MIN_SEQUENCE_LENGTH:
        sequences.append(TokenSequence(tokens=tuple(tokens), provenance=prov))


def generate_dfs(graph: Wskg, max_paths_per_start: int | None = None) -> Corpus:
    """Every maximal path from every service within each labeled subgraph.

    ``max_paths_per_start`` caps path enumeration on dense workflows; a
    warning is logged when the cap truncates a start vertex.
    """
    sequences: list[TokenSequence] = []
    for label in _labels_sorted(graph):
        adjacency = graph.adjacency_for_label(label)
        for start in graph.services_for_label(label):
            count = 0
            for path in _maximal_paths(adjacency, start):
                if max_paths_per_start is not None and count >= max_paths_per_start:
                    logger.warning(
                        "path cap %d reached for start %r in workflow %r",
                        max_paths_per_start, start, label,
                    )
                    break
                count += 1
                _emit(
                    sequences,
                    [ServiceToken.single(s) for s in path],
                    Provenance("dfs", start, label),
                )
    return Corpus(sequences=sequences)


def _labels_sorted(graph: Wskg) -> list[str]:
    return graph.labels()


def _maximal_paths(adjacency: dict[str, list[str]], start: str):
    """Yield every root-to-terminal path from ``start`` in DFS order."""
    path = [start]
    stack = [iter(adjacency.get(start, ()))]
    while stack:
        advanced = False
        for nxt in stack[-1]:
            path.append(nxt)
            stack.append(iter(adjacency.get(nxt, ())))
            advanced = True
            break
        if advanced:
            continue
        if not adjacency.get(path[-1]):
            yield list(path)
        path.pop()
        stack.pop()


def generate_bfs(graph: Wskg) -> Corpus:
    """One sequence per (workflow, start): levels of the breadth-first frontier.

    Token k bundles the services first reached at depth k-1 from the
    start, so a join of several branches becomes one multi-service token.
    """
    sequences: list[TokenSequence] = []
    for label in _labels_sorted(graph):
        adjacency = graph.adjacency_for_label(label)
        for start in graph.services_for_label(label):
            tokens = [ServiceToken.single(start)]
            visited = {start}
            frontier = [start]
            while frontier:
                level: set[str] = set()
                for node in frontier:
                    for nxt in adjacency.get(node, ()):
                        if nxt not in visited:
                            level.add(nxt)
                if not level:
                    break
                visited |= level
                tokens.append(ServiceToken.bundle(level))
                frontier = sorted(level)
            _emit(sequences, tokens, Provenance("bfs", start, label))
    return Corpus(sequences=sequences)


def transition_distribution(
    graph: Wskg, u: str, excluded: frozenset[str] | set[str] = frozenset()
) -> dict[str, float]:
    """Softmax over normalized occurrence ratios of u's out-neighbors.

    Exponents use the full (unexcluded) out-weight of u; the softmax then
    renormalizes over the non-excluded neighbor set. Empty neighbor set
    yields an empty map.
    """
    neighbors = [v for v in graph.out_neighbors(u) if v not in excluded]
    if not neighbors:
        return {}
    total = graph.out_weight(u)
    weights = [math.exp(graph.occurrence(u, v) / total) for v in neighbors]
    norm = sum(weights)
    return {v: w / norm for v, w in zip(neighbors, weights)}


def _walk_once(graph: Wskg, start: str, length: int, rng: np.random.Generator) -> list[str]:
    walk = [start]
    visited = {start}
    while len(walk) < length:
        dist = transition_distribution(graph, walk[-1], visited)
        if not dist:
            break
        choices = sorted(dist)
        cdf = np.cumsum([dist[c] for c in choices])
        draw = rng.random()
        idx = int(np.searchsorted(cdf, draw, side="right"))
        nxt = choices[min(idx, len(choices) - 1)]
        walk.append(nxt)
        visited.add(nxt)
    return walk


def generate_pw(graph: Wskg, cfg: PwConfig) -> Corpus:
    """Seeded probabilistic walks from every non-sink vertex.

    Walks ignore workflow labels, never revisit a service, and stop at
    ``walk_length`` tokens or at the first dead end. Each start vertex
    owns an independent RNG stream derived from (seed, vertex index), so
    the result depends only on the configuration.
    """
    sequences: list[TokenSequence] = []
    starts = [u for u in sorted(graph.services) if graph.out_degree(u) > 0]
    entropy = cfg.rng_seed & 0xFFFFFFFFFFFFFFFF
    for index, start in enumerate(starts):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=entropy, spawn_key=(index,))
        )
        for _ in range(cfg.walks_per_vertex):
            walk = _walk_once(graph, start, cfg.walk_length, rng)
            _emit(
                sequences,
                [ServiceToken.single(s) for s in walk],
                Provenance("pw", start, "pw"),
            )
    return Corpus(sequences=sequences)


def dedupe(corpus: Corpus) -> Corpus:
    """Collapse sequences with identical key lists, keeping first occurrences."""
    seen: set[tuple[str, ...]] = set()
    kept: list[TokenSequence] = []
    for seq in corpus.sequences:
        keys = seq.keys()
        if keys in seen:
            continue
        seen.add(keys)
        kept.append(seq)
    return Corpus(sequences=kept)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """One sequence per line, tokens space-separated, bundle members '&'-joined."""
    lines = [" ".join(seq.keys()) for seq in corpus.sequences]
    Path(path).write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )


def load_corpus(path: str | Path) -> Corpus:
    """Read a corpus file; '#'-prefixed comment lines are ignored."""
    sequences: list[TokenSequence] = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = tuple(ServiceToken.from_key(k) for k in stripped.split(" "))
        if len(tokens) < MIN_SEQUENCE_LENGTH:
            raise ValidationError(
                f"{path}:{lineno}: sequence shorter than {MIN_SEQUENCE_LENGTH} tokens"
            )
        sequences.append(TokenSequence(tokens=tokens, provenance=None))
    return Corpus(sequences=sequences)
