"""Parse workflow definition files into validated workflow graphs.

Two input formats are supported: a Taverna-subset XML dialect (root
``<workflow id=..>`` or ``<dataflow id=..>`` with ``<processor name=..>``
and ``<datalink><source>..</source><sink>..</sink></datalink>`` entries)
and a canonical JSON format::

    {"id": "941", "services": ["s1", "s2"], "links": [["s1", "s2"]]}

Workflows are directed acyclic graphs over globally named services.
Port-level datalinks (``processor:port``) collapse to processor-level
dependency pairs.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError

__all__ = [
    "Service",
    "WorkflowGraph",
    "Repository",
    "RepositoryLoad",
    "parse_taverna_xml",
    "parse_canonical_json",
    "serialize_canonical_json",
    "load_repository",
]


@dataclass(frozen=True)
class Service:
    """A uniquely identified software component."""

    id: str
    name: str

    def __post_init__(self):
        if not self.id:
            raise ValidationError("service id must be non-empty")
        if not self.name:
            raise ValidationError("service name must be non-empty")


@dataclass(frozen=True)
class WorkflowGraph:
    """One workflow: a set of services plus directed dependency links.

    Invariants enforced at construction: link endpoints are declared
    services, no self-loops, the link set holds no duplicates, and the
    directed graph is acyclic.
    """

    id: str
    services: frozenset[str]
    links: frozenset[tuple[str, str]]

    def __post_init__(self):
        if not self.id:
            raise ValidationError("workflow id must be non-empty")
        for src, dst in self.links:
            if src == dst:
                raise ValidationError(
                    f"workflow {self.id!r}: self-loop link on {src!r}"
                )
            for endpoint in (src, dst):
                if endpoint not in self.services:
                    raise ValidationError(
                        f"workflow {self.id!r}: link references undeclared "
                        f"service {endpoint!r}"
                    )
        cycle = _find_cycle(self.services, self.links)
        if cycle is not None:
            raise ValidationError(
                f"workflow {self.id!r} is cyclic: {' -> '.join(cycle)}"
            )

    def successors(self, service: str) -> list[str]:
        return sorted(dst for src, dst in self.links if src == service)

    def predecessors(self, service: str) -> list[str]:
        return sorted(src for src, dst in self.links if dst == service)

    def terminals(self) -> list[str]:
        """Services with no outgoing links."""
        sources = {src for src, _ in self.links}
        return sorted(s for s in self.services if s not in sources)


@dataclass
class Repository:
    """Workflows keyed by id plus the catalog of all referenced services."""

    workflows: dict[str, WorkflowGraph] = field(default_factory=dict)
    service_catalog: dict[str, Service] = field(default_factory=dict)

    def add(self, graph: WorkflowGraph) -> None:
        if graph.id in self.workflows:
            raise ValidationError(f"duplicate workflow id {graph.id!r}")
        self.workflows[graph.id] = graph
        for sid in graph.services:
            self.service_catalog.setdefault(sid, Service(id=sid, name=sid))

    def __len__(self) -> int:
        return len(self.workflows)

    def total_links(self) -> int:
        return sum(len(g.links) for g in self.workflows.values())


@dataclass
class RepositoryLoad:
    """Result of scanning a directory: the repository plus per-file outcomes."""

    repository: Repository
    loaded: int
    skipped: list[tuple[str, str]]  # (file name, reason)


def _find_cycle(
    nodes: frozenset[str], links: frozenset[tuple[str, str]]
) -> list[str] | None:
    """Return one cycle as a node list (closed) or None if acyclic."""
    adjacency: dict[str, list[str]] = {n: [] for n in nodes}
    for src, dst in links:
        adjacency[src].append(dst)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    parent: dict[str, str] = {}
    for root in sorted(nodes):
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(adjacency[root])))]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GRAY:
                    cycle = [nxt, node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    parent[nxt] = node
                    stack.append((nxt, iter(sorted(adjacency[nxt]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def _normalize_name(raw: str) -> str:
    """Trim surrounding whitespace; case is preserved."""
    return raw.strip()


def _strip_port(endpoint: str) -> str:
    """Drop a trailing ``:port`` suffix, keeping the owning processor name."""
    name = _normalize_name(endpoint)
    if ":" in name:
        name = name.split(":", 1)[0].rstrip()
    return name


def _build_graph(
    workflow_id: str, services: list[str], pairs: list[tuple[str, str]]
) -> WorkflowGraph:
    declared = set()
    for raw in services:
        name = _normalize_name(raw)
        if not name:
            raise ValidationError(
                f"workflow {workflow_id!r}: empty service name"
            )
        declared.add(name)
    deduped = frozenset(pairs)
    return WorkflowGraph(
        id=workflow_id, services=frozenset(declared), links=deduped
    )


def parse_taverna_xml(data: bytes | str) -> WorkflowGraph:
    """Parse a Taverna-subset XML document into a WorkflowGraph.

    Processors become services; each datalink yields one (source, sink)
    pair with port suffixes stripped; duplicate pairs collapse to one.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    workflow_id = root.get("id")
    if workflow_id is None:
        for child in root.iter("dataflow"):
            workflow_id = child.get("id")
            if workflow_id is not None:
                break
    if not workflow_id:
        raise ValidationError("workflow element carries no id attribute")

    services: list[str] = []
    for proc in root.iter("processor"):
        name = proc.get("name")
        if name is None:
            name_el = proc.find("name")
            name = name_el.text if name_el is not None else None
        if not name or not _normalize_name(name):
            raise ValidationError(
                f"workflow {workflow_id!r}: processor without a name"
            )
        services.append(name)

    declared = {_normalize_name(s) for s in services}
    pairs: list[tuple[str, str]] = []
    for tag in ("datalink", "link"):
        for link in root.iter(tag):
            src_el = link.find("source")
            dst_el = link.find("sink")
            if src_el is None or dst_el is None or not src_el.text or not dst_el.text:
                raise ValidationError(
                    f"workflow {workflow_id!r}: {tag} missing source or sink"
                )
            src = _strip_port(src_el.text)
            dst = _strip_port(dst_el.text)
            for endpoint in (src, dst):
                if endpoint not in declared:
                    raise ValidationError(
                        f"workflow {workflow_id!r}: link references undeclared "
                        f"processor {endpoint!r}"
                    )
            pairs.append((src, dst))

    return _build_graph(workflow_id, services, pairs)


def parse_canonical_json(data: bytes | str) -> WorkflowGraph:
    """Parse the canonical JSON workflow format, validating field by field."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc

    if not isinstance(doc, dict):
        raise ValidationError("top-level value must be an object")
    workflow_id = doc.get("id")
    if not isinstance(workflow_id, str) or not workflow_id:
        raise ValidationError("field 'id' must be a non-empty string")
    services = doc.get("services")
    if not isinstance(services, list):
        raise ValidationError("field 'services' must be a list")
    for i, entry in enumerate(services):
        if not isinstance(entry, str):
            raise ValidationError(f"field 'services[{i}]' must be a string")
    links = doc.get("links", [])
    if not isinstance(links, list):
        raise ValidationError("field 'links' must be a list")
    declared = {_normalize_name(s) for s in services}
    pairs: list[tuple[str, str]] = []
    for i, entry in enumerate(links):
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(e, str) for e in entry)
        ):
            raise ValidationError(
                f"field 'links[{i}]' must be a [source, sink] string pair"
            )
        src, dst = _normalize_name(entry[0]), _normalize_name(entry[1])
        for j, endpoint in enumerate((src, dst)):
            if endpoint not in declared:
                raise ValidationError(
                    f"field 'links[{i}][{j}]' references undeclared "
                    f"service {endpoint!r}"
                )
        pairs.append((src, dst))

    return _build_graph(workflow_id, services, pairs)


def serialize_canonical_json(graph: WorkflowGraph) -> str:
    """Serialize to the canonical JSON format (sorted, round-trip safe)."""
    doc = {
        "id": graph.id,
        "services": sorted(graph.services),
        "links": [list(pair) for pair in sorted(graph.links)],
    }
    return json.dumps(doc, ensure_ascii=False)


def load_repository(path: str | Path) -> RepositoryLoad:
    """Parse every ``*.xml`` and ``*.json`` workflow file under ``path``.

    Files that fail to parse or validate are skipped with a recorded
    reason; a workflow id appearing in two files is a hard conflict.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise OSError(f"not a readable directory: {directory}")

    repo = Repository()
    sources: dict[str, str] = {}  # workflow id -> file name
    skipped: list[tuple[str, str]] = []
    files = sorted(
        p for p in directory.iterdir() if p.suffix in (".xml", ".json")
    )
    for file_path in files:
        raw = file_path.read_bytes()
        try:
            if file_path.suffix == ".xml":
                graph = parse_taverna_xml(raw)
            else:
                graph = parse_canonical_json(raw)
        except (ParseError, ValidationError) as exc:
            skipped.append((file_path.name, str(exc)))
            continue
        if graph.id in sources:
            raise ValidationError(
                f"workflow id {graph.id!r} defined in both "
                f"{sources[graph.id]!r} and {file_path.name!r}"
            )
        sources[graph.id] = file_path.name
        repo.add(graph)

    return RepositoryLoad(repository=repo, loaded=len(repo), skipped=skipped)
