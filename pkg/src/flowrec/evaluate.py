"""Leave-last-service-out evaluation of the recommendation pipeline.

Workflows split into train/test by a seeded shuffle. For every test
workflow, each (terminal service, direct predecessor) pair becomes one
case: the predecessor is the anchor, the ground truth is the set of its
terminal successors in that workflow. Cases whose anchor is missing from
the training vocabulary, or whose ground truth shares no service with
it, are dropped and tallied separately.

Metrics at cutoff K: precision counts hit entries over returned entries,
recall counts distinct ground-truth services covered by hit entries over
the ground-truth size (an entry hits when it shares any service with the
truth), F1 is their harmonic mean, and VMRR is 1 - idx/K for the
earliest hit index (0 on a miss).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import corpus as corpus_mod
from .corpus import Corpus, PwConfig, ServiceToken
from .embed import EmbeddingModel, TrainConfig, train
from .errors import ValidationError
from .ingest import Repository
from .recommend import Session, recommend_top_k
from .wskg import Wskg, build_wskg

__all__ = [
    "EvalConfig",
    "EvalCase",
    "EvalCaseSet",
    "Metrics",
    "MetricsReport",
    "split_repository",
    "build_eval_cases",
    "hit",
    "compute_metrics",
    "run_evaluation",
    "sweep_pw",
    "sweep_to_csv",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("dfs", "bfs", "pw")


@dataclass(frozen=True)
class EvalConfig:
    train_fraction: float = 0.8
    k_values: tuple[int, ...] = (3, 5, 10)
    split_seed: int = 0
    strategy: str = "pw"
    dedupe: bool = True
    pw: PwConfig = field(default_factory=PwConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must be in (0, 1)")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ValidationError("k_values must be positive integers")
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )

    def to_dict(self) -> dict:
        return {
            "trainFraction": self.train_fraction,
            "kValues": list(self.k_values),
            "splitSeed": self.split_seed,
            "strategy": self.strategy,
            "dedupe": self.dedupe,
            "pw": {
                "walkLength": self.pw.walk_length,
                "walksPerVertex": self.pw.walks_per_vertex,
                "rngSeed": self.pw.rng_seed,
            },
            "train": {
                "window": self.train.window,
                "dim": self.train.dim,
                "epochs": self.train.epochs,
                "initialLearningRate": self.train.initial_learning_rate,
                "finalLearningRate": self.train.final_learning_rate,
                "rngSeed": self.train.rng_seed,
                "deterministic": self.train.deterministic,
            },
        }


@dataclass(frozen=True)
class EvalCase:
    workflow_id: str
    anchor: ServiceToken
    truth: frozenset[str]


@dataclass
class EvalCaseSet:
    cases: list[EvalCase]
    dropped_anchor: int = 0
    dropped_truth: int = 0


class Metrics(NamedTuple):
    precision: float
    recall: float
    f1: float
    vmrr: float


@dataclass
class MetricsReport:
    config: dict
    case_count: int
    dropped_anchor: int
    dropped_truth: int
    metrics: dict[int, Metrics]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "caseCount": self.case_count,
            "droppedCases": {
                "unknownAnchor": self.dropped_anchor,
                "unknownTruth": self.dropped_truth,
            },
            "metrics": {
                str(k): {
                    "pre": m.precision,
                    "rec": m.recall,
                    "f1": m.f1,
                    "vmrr": m.vmrr,
                }
                for k, m in sorted(self.metrics.items())
            },
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def split_repository(
    repo: Repository, cfg: EvalConfig
) -> tuple[Repository, Repository]:
    """Seeded uniform split by workflow id; both sides stay non-empty."""
    ids = sorted(repo.workflows)
    if len(ids) < 2:
        raise ValidationError("need at least 2 workflows to split")
    rng = np.random.default_rng(cfg.split_seed & 0xFFFFFFFFFFFFFFFF)
    order = list(rng.permutation(len(ids)))
    n_train = int(round(cfg.train_fraction * len(ids)))
    n_train = min(max(n_train, 1), len(ids) - 1)
    train_ids = {ids[i] for i in order[:n_train]}
    train_repo = Repository()
    test_repo = Repository()
    for wid in ids:
        (train_repo if wid in train_ids else test_repo).add(repo.workflows[wid])
    return train_repo, test_repo


def build_eval_cases(
    test_repo: Repository,
    train_vocab: Iterable[str],
    train_links: Iterable[tuple[str, str]] | None = None,
) -> EvalCaseSet:
    """One case per (terminal, direct predecessor) pair in each test workflow.

    ``train_links`` is accepted for a stricter edge-presence filter but
    is currently unused; filtering is by vocabulary membership only.
    """
    del train_links
    vocab_keys = set(train_vocab)
    known_members = {m for key in vocab_keys for m in key.split("&")}
    result = EvalCaseSet(cases=[])
    for wid in sorted(test_repo.workflows):
        graph = test_repo.workflows[wid]
        terminals = set(graph.terminals())
        for terminal in sorted(terminals):
            for pred in graph.predecessors(terminal):
                truth = frozenset(
                    dst for dst in graph.successors(pred) if dst in terminals
                )
                if pred not in vocab_keys:
                    result.dropped_anchor += 1
                elif not truth & known_members:
                    result.dropped_truth += 1
                else:
                    result.cases.append(
                        EvalCase(
                            workflow_id=wid,
                            anchor=ServiceToken.single(pred),
                            truth=truth,
                        )
                    )
    return result


def hit(entry: ServiceToken, truth: frozenset[str] | set[str]) -> bool:
    """An entry hits when it shares at least one service with the truth."""
    if not entry.members:
        raise ValidationError("entry has no members")
    return bool(set(entry.members) & set(truth))


def compute_metrics(
    ranked: Sequence[ServiceToken], truth: frozenset[str] | set[str], k: int
) -> Metrics:
    """Precision, recall, F1, and VMRR for one ranked list at cutoff k."""
    if k < 1:
        raise ValidationError(f"k must be positive, got {k}")
    if len(ranked) > k:
        raise ValidationError(f"got {len(ranked)} entries for cutoff {k}")
    if not truth:
        raise ValidationError("ground truth is empty")
    hits = [entry for entry in ranked if hit(entry, truth)]
    covered: set[str] = set()
    for entry in hits:
        covered |= set(entry.members) & set(truth)
    precision = len(hits) / len(ranked) if ranked else 0.0
    recall = len(covered) / len(truth)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    vmrr = 0.0
    for idx, entry in enumerate(ranked):
        if hit(entry, truth):
            vmrr = 1.0 - idx / k
            break
    return Metrics(precision=precision, recall=recall, f1=f1, vmrr=vmrr)


def _generate(graph: Wskg, cfg: EvalConfig) -> Corpus:
    if cfg.strategy == "dfs":
        generated = corpus_mod.generate_dfs(graph)
    elif cfg.strategy == "bfs":
        generated = corpus_mod.generate_bfs(graph)
    else:
        generated = corpus_mod.generate_pw(graph, cfg.pw)
    if cfg.dedupe:
        generated = corpus_mod.dedupe(generated)
    return generated


def run_evaluation(
    repo: Repository, cfg: EvalConfig, model: EmbeddingModel | None = None
) -> MetricsReport:
    """Full pipeline: split, generate, train, score every case, aggregate.

    A prebuilt ``model`` (for example an untrained baseline) can be
    substituted; it must share the training-side vocabulary semantics.
    """
    train_repo, test_repo = split_repository(repo, cfg)
    graph = build_wskg(train_repo)
    generated = _generate(graph, cfg)
    if model is None:
        model = train(generated, cfg.train)
    case_set = build_eval_cases(test_repo, model.vocab)
    k_max = max(cfg.k_values)

    per_k: dict[int, list[Metrics]] = {k: [] for k in cfg.k_values}
    for case in case_set.cases:
        session = Session(selected=[case.anchor])
        entries = recommend_top_k(model, graph, session, k_max)
        tokens = [e.token for e in entries]
        for k in cfg.k_values:
            per_k[k].append(compute_metrics(tokens[:k], case.truth, k))

    if not case_set.cases:
        logger.warning("no evaluation cases survived filtering")
    means: dict[int, Metrics] = {}
    for k, rows in per_k.items():
        if rows:
            means[k] = Metrics(
                *(float(np.mean([getattr(r, f) for r in rows])) for f in Metrics._fields)
            )
        else:
            means[k] = Metrics(0.0, 0.0, 0.0, 0.0)
    return MetricsReport(
        config=cfg.to_dict(),
        case_count=len(case_set.cases),
        dropped_anchor=case_set.dropped_anchor,
        dropped_truth=case_set.dropped_truth,
        metrics=means,
    )


def run_evaluation_pair(
    repo: Repository, cfg: EvalConfig
) -> tuple[MetricsReport, MetricsReport]:
    """Trained arm and untrained (random-vector) arm on the identical split."""
    trained = run_evaluation(repo, cfg)
    train_repo, _ = split_repository(repo, cfg)
    graph = build_wskg(train_repo)
    generated = _generate(graph, cfg)
    baseline_model = train(generated, replace(cfg.train, epochs=0))
    baseline = run_evaluation(repo, cfg, model=baseline_model)
    return trained, baseline


def sweep_pw(
    repo: Repository,
    l_values: Sequence[int],
    theta_values: Sequence[int],
    k_values: Sequence[int],
    base: EvalConfig | None = None,
) -> list[tuple[int, int, MetricsReport]]:
    """One full evaluation per (walk length, walks per vertex) grid cell.

    Duplicate sequences are removed in every cell; nothing is cached
    across cells.
    """
    if not l_values or not theta_values or not k_values:
        raise ValidationError("sweep grids must be non-empty")
    base = base or EvalConfig()
    cells: list[tuple[int, int, MetricsReport]] = []
    for l in sorted(l_values):
        for theta in sorted(theta_values):
            cfg = replace(
                base,
                strategy="pw",
                dedupe=True,
                k_values=tuple(k_values),
                pw=replace(base.pw, walk_length=l, walks_per_vertex=theta),
            )
            cells.append((l, theta, run_evaluation(repo, cfg)))
    return cells


def sweep_to_csv(cells: Sequence[tuple[int, int, MetricsReport]]) -> str:
    lines = ["l,theta,K,pre,rec,f1,vmrr"]
    for l, theta, report in cells:
        for k, m in sorted(report.metrics.items()):
            lines.append(
                f"{l},{theta},{k},{m.precision:.6f},{m.recall:.6f},"
                f"{m.f1:.6f},{m.vmrr:.6f}"
            )
    return "\n".join(lines) + "\n"
