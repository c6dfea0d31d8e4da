from pathlib import Path

import pytest

from flowrec.ingest import Repository, load_repository

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fig3_repo() -> Repository:
    """Workflows 941, 306, 1097."""
    return load_repository(DATA / "fig3").repository


@pytest.fixture(scope="session")
def walks_repo() -> Repository:
    """Fig. 3 workflows plus the five downstream workflows around s7."""
    repo = load_repository(DATA / "fig3").repository
    extra = load_repository(DATA / "fig3_downstream").repository
    merged = Repository()
    for graph in repo.workflows.values():
        merged.add(graph)
    for graph in extra.workflows.values():
        merged.add(graph)
    return merged
