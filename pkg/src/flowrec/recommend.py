"""Rank candidate next tokens for a composition in progress.

A candidate's score is the product of two signals: an empirical
successor probability derived from graph adjacency counts,

    p_suc = exp(n_suc) / (exp(n_pre) + exp(n_suc)) = logistic(n_suc - n_pre),

and the cosine similarity of the learned embeddings. Every vocabulary
token not yet selected is scored against the last selected token; ties
break by ascending canonical key so rankings are fully deterministic.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field

from scipy.special import expit

from .corpus import ServiceToken
from .embed import EmbeddingModel, similarity
from .errors import ColdStartError, EmptySessionError, ValidationError
from .wskg import Wskg

__all__ = [
    "RecommendationEntry",
    "Session",
    "successor_probability",
    "p_successor",
    "score_token",
    "recommend_top_k",
    "select_token",
]


@dataclass(frozen=True)
class RecommendationEntry:
    token: ServiceToken
    score: float
    p_suc: float
    sim: float
    rank: int

    def to_dict(self) -> dict:
        return {
            "token": self.token.key,
            "members": list(self.token.members),
            "score": self.score,
            "pSuc": self.p_suc,
            "sim": self.sim,
            "rank": self.rank,
        }


@dataclass
class Session:
    """An interactive composition: the ordered list of selected tokens."""

    id: str = field(default_factory=lambda: uuid.uuid4().hex)
    selected: list[ServiceToken] = field(default_factory=list)
    unknown_keys: set[str] = field(default_factory=set)
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "selected": [
                {
                    "token": t.key,
                    "members": list(t.members),
                    "known": t.key not in self.unknown_keys,
                }
                for t in self.selected
            ],
            "createdAt": self.created_at,
            "updatedAt": self.updated_at,
        }


def successor_probability(n_suc: int, n_pre: int) -> float:
    """logistic(n_suc - n_pre): equal to the exponential ratio form
    exp(n_suc) / (exp(n_pre) + exp(n_suc)) but finite for any count size."""
    return float(expit(n_suc - n_pre))


def p_successor(graph: Wskg, anchor: str, token: ServiceToken) -> float:
    """Empirical probability that the token appears after the anchor."""
    n_suc, n_pre = graph.successor_counts(anchor, token.members)
    return successor_probability(n_suc, n_pre)


def _bundle_counts(graph: Wskg, last: ServiceToken, candidate: ServiceToken) -> tuple[int, int]:
    # Sum adjacency counts over the last token's members; members absent
    # from the graph contribute nothing.
    n_suc = 0
    n_pre = 0
    for anchor in last.members:
        if anchor not in graph.services:
            continue
        s, p = graph.successor_counts(anchor, candidate.members)
        n_suc += s
        n_pre += p
    return n_suc, n_pre


def score_token(
    model: EmbeddingModel,
    graph: Wskg,
    last: ServiceToken,
    candidate: ServiceToken,
    rank: int = 0,
) -> RecommendationEntry:
    """Score one candidate against the last selected token."""
    sim = similarity(model, last.key, candidate.key)
    n_suc, n_pre = _bundle_counts(graph, last, candidate)
    p_suc = successor_probability(n_suc, n_pre)
    return RecommendationEntry(
        token=candidate, score=p_suc * sim, p_suc=p_suc, sim=sim, rank=rank
    )


def recommend_top_k(
    model: EmbeddingModel, graph: Wskg, session: Session, k: int
) -> list[RecommendationEntry]:
    """Top-k candidates for the session, scores descending, keys tie-breaking.

    Every vocabulary token except the already-selected ones is scored
    against the last selected token. An unknown anchor raises a cold
    start error rather than falling back silently.
    """
    if k < 1:
        raise ValidationError(f"k must be positive, got {k}")
    if not session.selected:
        raise EmptySessionError("session has no selected tokens")
    last = session.selected[-1]
    if last.key not in model.vocab:
        raise ColdStartError(
            f"anchor token {last.key!r} never appeared in the training corpus"
        )
    exclude = {t.key for t in session.selected}
    scored = [
        score_token(model, graph, last, ServiceToken.from_key(key))
        for key in model.index_to_key
        if key not in exclude
    ]
    scored.sort(key=lambda e: (-e.score, e.token.key))
    return [
        RecommendationEntry(
            token=e.token, score=e.score, p_suc=e.p_suc, sim=e.sim, rank=i
        )
        for i, e in enumerate(scored[:k])
    ]


def select_token(
    session: Session, token: ServiceToken, model: EmbeddingModel | None = None
) -> Session:
    """Append a selection to the session; it becomes the next anchor.

    Free-form tokens outside the vocabulary are accepted but flagged, so
    a later recommendation can fail loudly on a cold-start anchor.
    """
    session.selected.append(token)
    if model is not None and token.key not in model.vocab:
        session.unknown_keys.add(token.key)
    session.updated_at = time.time()
    return session
