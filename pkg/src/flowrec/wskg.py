"""The web-service knowledge graph: workflow-labeled dependency edges.

Built from a repository, the graph keeps one edge per (workflow, link),
so the same service pair may carry several parallel edges with different
workflow labels. The number of distinct labels on a pair is its
occurrence count, the basic quantity behind walk transition
probabilities and successor statistics.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import UnknownServiceError, ValidationError
from .ingest import Repository

__all__ = ["Edge", "Wskg", "build_wskg", "save_edge_list", "load_edge_list"]


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    workflow_label: str


class Wskg:
    """Immutable directed multigraph of service dependency edges."""

    def __init__(self, services: Iterable[str], edges: Iterable[Edge]):
        self.services: frozenset[str] = frozenset(services)
        unique = sorted(set(edges))
        for edge in unique:
            if edge.src not in self.services or edge.dst not in self.services:
                raise ValidationError(
                    f"edge {edge} references a service outside the graph"
                )
        self.edges: tuple[Edge, ...] = tuple(unique)
        out: dict[str, dict[str, list[str]]] = defaultdict(dict)
        inc: dict[str, dict[str, list[str]]] = defaultdict(dict)
        for edge in self.edges:
            out[edge.src].setdefault(edge.dst, []).append(edge.workflow_label)
            inc[edge.dst].setdefault(edge.src, []).append(edge.workflow_label)
        self._out = dict(out)
        self._in = dict(inc)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Wskg)
            and self.services == other.services
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"Wskg(services={len(self.services)}, edges={len(self.edges)})"

    def _require(self, service: str) -> None:
        if service not in self.services:
            raise UnknownServiceError(f"unknown service {service!r}")

    def labels(self) -> list[str]:
        return sorted({e.workflow_label for e in self.edges})

    def out_neighbors(self, u: str) -> list[str]:
        self._require(u)
        return sorted(self._out.get(u, ()))

    def in_neighbors(self, u: str) -> list[str]:
        self._require(u)
        return sorted(self._in.get(u, ()))

    def out_degree(self, u: str) -> int:
        self._require(u)
        return len(self._out.get(u, ()))

    def occurrence(self, u: str, v: str) -> int:
        """Number of workflows in which v directly follows u."""
        self._require(u)
        self._require(v)
        return len(self._out.get(u, {}).get(v, ()))

    def out_weight(self, u: str) -> int:
        """Total occurrence count over all out-neighbors of u."""
        self._require(u)
        return sum(len(labels) for labels in self._out.get(u, {}).values())

    def successor_counts(self, anchor: str, token_members: Iterable[str]) -> tuple[int, int]:
        """Occurrences of token members directly after / before the anchor.

        Members absent from the graph contribute zero to both counts.
        """
        self._require(anchor)
        members = list(token_members)
        if not members:
            raise ValidationError("token has no members")
        n_suc = 0
        n_pre = 0
        out_row = self._out.get(anchor, {})
        in_row = self._in.get(anchor, {})
        for member in members:
            n_suc += len(out_row.get(member, ()))
            n_pre += len(in_row.get(member, ()))
        return n_suc, n_pre

    def adjacency_for_label(self, label: str) -> dict[str, list[str]]:
        """Out-adjacency restricted to edges carrying one workflow label."""
        adjacency: dict[str, list[str]] = {}
        for edge in self.edges:
            if edge.workflow_label == label:
                adjacency.setdefault(edge.src, []).append(edge.dst)
        for src in adjacency:
            adjacency[src].sort()
        return adjacency

    def services_for_label(self, label: str) -> list[str]:
        nodes: set[str] = set()
        for edge in self.edges:
            if edge.workflow_label == label:
                nodes.add(edge.src)
                nodes.add(edge.dst)
        return sorted(nodes)


def build_wskg(repo: Repository) -> Wskg:
    """Assemble the knowledge graph from every workflow in the repository."""
    services: set[str] = set()
    edges: list[Edge] = []
    for graph in repo.workflows.values():
        services.update(graph.services)
        for src, dst in graph.links:
            edges.append(Edge(src=src, dst=dst, workflow_label=graph.id))
    return Wskg(services=services, edges=edges)


def save_edge_list(graph: Wskg, path: str | Path) -> None:
    """Write the graph as sorted ``src<TAB>dst<TAB>label`` lines."""
    lines = sorted(
        f"{e.src}\t{e.dst}\t{e.workflow_label}" for e in graph.edges
    )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_edge_list(path: str | Path) -> Wskg:
    """Read an edge-list file back into a graph.

    Services are recovered from edge endpoints, so isolated services do
    not survive a round-trip (they contribute nothing downstream).
    """
    edges: list[Edge] = []
    services: set[str] = set()
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValidationError(
                f"{path}:{lineno}: expected 'src<TAB>dst<TAB>label', got {line!r}"
            )
        src, dst, label = parts
        edges.append(Edge(src=src, dst=dst, workflow_label=label))
        services.update((src, dst))
    return Wskg(services=services, edges=edges)
