"""Seeded synthetic workflow repositories with planted sequential motifs.

Services split into fixed chains ("motifs") plus a few shared utility
sinks. Each workflow is a contiguous window of one chain, optionally
with a noise edge from a window service to a utility sink. Chain windows
recur across many workflows, so chain transitions are learnable; the
popular sink edges recur too, which makes duplicated walk sequences
over-represent them, the regime in which duplicate removal matters.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .ingest import Repository, WorkflowGraph

__all__ = ["make_synthetic_repository"]


def make_synthetic_repository(
    n_workflows: int = 200,
    n_services: int = 60,
    seed: int = 0,
    motif_length: int = 6,
    min_window: int = 3,
    noise_edge_prob: float = 0.35,
    n_common_sinks: int = 3,
) -> Repository:
    if n_services < motif_length + n_common_sinks:
        raise ValidationError("need at least one full motif plus the sinks")
    if min_window < 2 or min_window > motif_length:
        raise ValidationError("min_window must be in [2, motif_length]")

    rng = np.random.default_rng(seed)
    services = [f"svc{i:02d}" for i in range(n_services)]
    common_sinks = services[n_services - n_common_sinks :]
    pool = services[: n_services - n_common_sinks]
    motifs = [
        pool[start : start + motif_length]
        for start in range(0, len(pool) - motif_length + 1, motif_length)
    ]

    repo = Repository()
    for wid in range(n_workflows):
        chain = motifs[int(rng.integers(len(motifs)))]
        window = int(rng.integers(min_window, motif_length + 1))
        offset = int(rng.integers(0, motif_length - window + 1))
        segment = chain[offset : offset + window]
        nodes = set(segment)
        links = {
            (segment[i], segment[i + 1]) for i in range(len(segment) - 1)
        }
        if n_common_sinks and rng.random() < noise_edge_prob:
            src = segment[int(rng.integers(len(segment)))]
            dst = common_sinks[int(rng.integers(len(common_sinks)))]
            nodes.add(dst)
            links.add((src, dst))
        repo.add(
            WorkflowGraph(
                id=str(wid),
                services=frozenset(nodes),
                links=frozenset(links),
            )
        )
    return repo
