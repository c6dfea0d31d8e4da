import json
from dataclasses import replace

import numpy as np
import pytest

from flowrec.corpus import PwConfig, ServiceToken, generate_pw
from flowrec.embed import TrainConfig, train
from flowrec.errors import ValidationError
from flowrec.evaluate import (
    EvalConfig,
    Metrics,
    build_eval_cases,
    compute_metrics,
    hit,
    run_evaluation,
    run_evaluation_pair,
    split_repository,
    sweep_pw,
    sweep_to_csv,
)
from flowrec.ingest import Repository, parse_canonical_json
from flowrec.synth import make_synthetic_repository
from flowrec.wskg import build_wskg


def _repo_of(n: int) -> Repository:
    repo = Repository()
    for i in range(n):
        repo.add(
            parse_canonical_json(
                json.dumps(
                    {"id": f"w{i}", "services": ["a", "b"], "links": [["a", "b"]]}
                )
            )
        )
    return repo


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------


def test_split_80_20():
    train_repo, test_repo = split_repository(_repo_of(10), EvalConfig(split_seed=4))
    assert len(train_repo) == 8
    assert len(test_repo) == 2
    assert set(train_repo.workflows).isdisjoint(test_repo.workflows)
    assert len(train_repo) + len(test_repo) == 10


def test_split_same_seed_identical():
    repo = _repo_of(25)
    cfg = EvalConfig(split_seed=99)
    first = split_repository(repo, cfg)
    second = split_repository(repo, cfg)
    assert set(first[0].workflows) == set(second[0].workflows)


def test_split_half_of_two():
    train_repo, test_repo = split_repository(
        _repo_of(2), EvalConfig(train_fraction=0.5, split_seed=0)
    )
    assert len(train_repo) == 1 and len(test_repo) == 1


def test_split_needs_two_workflows():
    with pytest.raises(ValidationError):
        split_repository(_repo_of(1), EvalConfig())


def test_config_validation():
    with pytest.raises(ValidationError):
        EvalConfig(train_fraction=1.0)
    with pytest.raises(ValidationError):
        EvalConfig(k_values=())
    with pytest.raises(ValidationError):
        EvalConfig(strategy="zigzag")


# ---------------------------------------------------------------------------
# case construction
# ---------------------------------------------------------------------------


def _single_workflow_repo(doc: str) -> Repository:
    repo = Repository()
    repo.add(parse_canonical_json(doc))
    return repo


def test_linear_workflow_gives_one_case():
    repo = _single_workflow_repo(
        '{"id":"t","services":["a","b","c"],"links":[["a","b"],["b","c"]]}'
    )
    result = build_eval_cases(repo, {"a", "b", "c"})
    assert len(result.cases) == 1
    case = result.cases[0]
    assert case.anchor == ServiceToken.single("b")
    assert case.truth == {"c"}


def test_941_cases_include_s4_with_both_terminals(fig3_repo):
    repo = Repository()
    repo.add(fig3_repo.workflows["941"])
    vocab = {f"s{i}" for i in range(1, 8)}
    result = build_eval_cases(repo, vocab)
    s4_cases = [c for c in result.cases if c.anchor.key == "s4"]
    # one case per (terminal, predecessor) pair: s4 precedes both s6 and s7
    assert len(s4_cases) == 2
    assert all(c.truth == {"s6", "s7"} for c in s4_cases)
    anchors = sorted(c.anchor.key for c in result.cases)
    assert anchors == ["s3", "s4", "s4", "s5"]


def test_unknown_anchor_dropped_and_counted():
    repo = _single_workflow_repo(
        '{"id":"t","services":["a","b","c"],"links":[["a","b"],["b","c"]]}'
    )
    result = build_eval_cases(repo, {"a", "c"})  # b missing
    assert result.cases == []
    assert result.dropped_anchor == 1
    assert result.dropped_truth == 0


def test_unknown_truth_dropped_and_counted():
    repo = _single_workflow_repo(
        '{"id":"t","services":["a","b","c"],"links":[["a","b"],["b","c"]]}'
    )
    result = build_eval_cases(repo, {"a", "b"})  # c missing from vocab
    assert result.cases == []
    assert result.dropped_truth == 1


def test_truth_known_through_bundle_membership():
    repo = _single_workflow_repo(
        '{"id":"t","services":["a","b","c"],"links":[["a","b"],["b","c"]]}'
    )
    result = build_eval_cases(repo, {"b", "c&d"})
    assert len(result.cases) == 1


# ---------------------------------------------------------------------------
# hit and metrics
# ---------------------------------------------------------------------------


def test_hit_rules():
    assert hit(ServiceToken.bundle(["s6", "s7"]), {"s7"})
    assert hit(ServiceToken.single("a"), {"a"})
    assert not hit(ServiceToken.single("a"), {"b"})


def test_metrics_arithmetic_example():
    ranked = [
        ServiceToken.single("x"),
        ServiceToken.single("g1"),
        ServiceToken.single("y"),
    ]
    m = compute_metrics(ranked, {"g1", "g2"}, 3)
    assert m.precision == pytest.approx(1 / 3)
    assert m.recall == pytest.approx(1 / 2)
    assert m.f1 == pytest.approx(0.4)


def test_vmrr_cases():
    g = {"t"}
    miss = [ServiceToken.single("x"), ServiceToken.single("y")]
    assert compute_metrics(miss, g, 5).vmrr == 0.0
    first = [ServiceToken.single("t")] + miss
    assert compute_metrics(first, g, 5).vmrr == 1.0
    third = miss + [ServiceToken.single("t")]
    assert compute_metrics(third, g, 10).vmrr == pytest.approx(0.8)


def test_metrics_errors():
    token = ServiceToken.single("a")
    with pytest.raises(ValidationError):
        compute_metrics([token], {"a"}, 0)
    with pytest.raises(ValidationError):
        compute_metrics([token, token], {"a"}, 1)
    with pytest.raises(ValidationError):
        compute_metrics([token], set(), 3)


def _reference_metrics(ranked, truth, k):
    # brute-force reference, written over boolean arrays
    flags = np.array([len(set(t.members) & truth) > 0 for t in ranked], dtype=bool)
    n = len(ranked)
    pre = float(flags.sum() / n) if n else 0.0
    covered = set()
    for token, flagged in zip(ranked, flags):
        if flagged:
            covered.update(set(token.members) & truth)
    rec = len(covered) / len(truth)
    f1 = 0.0 if (pre + rec) == 0 else 2 * pre * rec / (pre + rec)
    positions = np.flatnonzero(flags)
    vmrr = 0.0 if positions.size == 0 else 1.0 - positions[0] / k
    return Metrics(pre, rec, f1, float(vmrr))


def _random_instance(rng):
    pool = [f"p{i}" for i in range(12)]
    k = int(rng.integers(1, 12))
    n = int(rng.integers(0, k + 1))
    ranked = []
    for _ in range(n):
        size = int(rng.integers(1, 4))
        members = rng.choice(pool, size=size, replace=False)
        ranked.append(ServiceToken.bundle(members.tolist()))
    truth = set(rng.choice(pool, size=int(rng.integers(1, 5)), replace=False).tolist())
    return ranked, truth, k


def test_metrics_match_reference_on_randomized_instances():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        ranked, truth, k = _random_instance(rng)
        ours = compute_metrics(ranked, truth, k)
        ref = _reference_metrics(ranked, truth, k)
        assert ours == ref  # exact equality
        assert all(0.0 <= value <= 1.0 for value in ours)
        assert ours.f1 <= 2 * min(ours.precision, ours.recall) + 1e-15
        allowed = {0.0} | {1.0 - i / k for i in range(k)}
        assert any(abs(ours.vmrr - a) < 1e-12 for a in allowed)


def test_recall_monotone_in_k():
    rng = np.random.default_rng(5)
    for _ in range(100):
        ranked, truth, k = _random_instance(rng)
        if len(ranked) < 2:
            continue
        smaller = int(rng.integers(1, len(ranked)))
        m_small = compute_metrics(ranked[:smaller], truth, smaller)
        m_full = compute_metrics(ranked, truth, len(ranked))
        assert m_small.recall <= m_full.recall + 1e-15


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------


def _memorization_repo(fig3_repo, copies: int = 10) -> Repository:
    base = fig3_repo.workflows["941"]
    repo = Repository()
    for i in range(copies):
        repo.add(replace(base, id=f"copy{i}"))
    return repo


def test_perfect_memorization_recall_is_one(fig3_repo):
    repo = _memorization_repo(fig3_repo)
    cfg = EvalConfig(
        train_fraction=0.8,
        k_values=(10,),
        split_seed=3,
        strategy="dfs",
        dedupe=False,
        train=TrainConfig(window=2, dim=8, epochs=3, rng_seed=5),
    )
    report = run_evaluation(repo, cfg)
    assert report.case_count > 0
    assert report.metrics[10].recall == pytest.approx(1.0)


def test_untrained_arm_is_strictly_worse():
    repo = make_synthetic_repository(n_workflows=120, n_services=36, seed=8)
    cfg = EvalConfig(
        train_fraction=0.8,
        k_values=(5,),
        split_seed=21,
        strategy="pw",
        dedupe=True,
        pw=PwConfig(walk_length=5, walks_per_vertex=10, rng_seed=2),
        train=TrainConfig(window=3, dim=32, epochs=20, rng_seed=6),
    )
    trained, untrained = run_evaluation_pair(repo, cfg)
    assert trained.metrics[5].recall > untrained.metrics[5].recall


def test_run_evaluation_deterministic():
    repo = make_synthetic_repository(n_workflows=60, n_services=24, seed=14)
    cfg = EvalConfig(
        train_fraction=0.8,
        k_values=(3, 5),
        split_seed=9,
        strategy="pw",
        dedupe=True,
        pw=PwConfig(walk_length=4, walks_per_vertex=4, rng_seed=3),
        train=TrainConfig(window=2, dim=16, epochs=3, rng_seed=4),
    )
    assert run_evaluation(repo, cfg).to_dict() == run_evaluation(repo, cfg).to_dict()


def test_empty_case_set_reports_zero_not_crash():
    repo = Repository()
    # both workflows share no services, so the test anchor is unseen in training
    repo.add(parse_canonical_json('{"id":"w1","services":["a","b"],"links":[["a","b"]]}'))
    repo.add(parse_canonical_json('{"id":"w2","services":["x","y"],"links":[["x","y"]]}'))
    cfg = EvalConfig(
        train_fraction=0.5,
        k_values=(3,),
        split_seed=1,
        strategy="dfs",
        train=TrainConfig(window=1, dim=4, epochs=1, rng_seed=1),
    )
    report = run_evaluation(repo, cfg)
    assert report.case_count == 0
    assert report.dropped_anchor == 1
    assert report.metrics[3] == Metrics(0.0, 0.0, 0.0, 0.0)


def test_report_json_shape():
    repo = make_synthetic_repository(n_workflows=40, n_services=24, seed=2)
    cfg = EvalConfig(
        k_values=(3, 5, 10),
        split_seed=7,
        strategy="pw",
        pw=PwConfig(walk_length=4, walks_per_vertex=3, rng_seed=1),
        train=TrainConfig(window=2, dim=8, epochs=2, rng_seed=2),
    )
    doc = run_evaluation(repo, cfg).to_dict()
    assert set(doc) == {"config", "caseCount", "droppedCases", "metrics"}
    assert set(doc["metrics"]) == {"3", "5", "10"}
    for block in doc["metrics"].values():
        assert set(block) == {"pre", "rec", "f1", "vmrr"}
    json.dumps(doc)  # serializable


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------


def _small_cfg():
    return EvalConfig(
        split_seed=5,
        pw=PwConfig(walk_length=4, walks_per_vertex=2, rng_seed=9),
        train=TrainConfig(window=2, dim=8, epochs=2, rng_seed=3),
    )


def test_sweep_single_cell():
    repo = make_synthetic_repository(n_workflows=40, n_services=24, seed=6)
    cells = sweep_pw(repo, [5], [10], [3], base=_small_cfg())
    assert len(cells) == 1
    assert cells[0][:2] == (5, 10)


def test_sweep_grid_two_by_two():
    repo = make_synthetic_repository(n_workflows=40, n_services=24, seed=6)
    cells = sweep_pw(repo, [3, 5], [1, 2], [3], base=_small_cfg())
    assert [(l, t) for l, t, _ in cells] == [(3, 1), (3, 2), (5, 1), (5, 2)]


def test_sweep_csv_format():
    repo = make_synthetic_repository(n_workflows=40, n_services=24, seed=6)
    cells = sweep_pw(repo, [4], [2], [3, 5], base=_small_cfg())
    csv_text = sweep_to_csv(cells)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "l,theta,K,pre,rec,f1,vmrr"
    assert len(lines) == 3
    assert lines[1].startswith("4,2,3,")


def test_higher_theta_covers_at_least_as_many_linkages():
    repo = make_synthetic_repository(n_workflows=80, n_services=30, seed=10)
    cfg = _small_cfg()
    train_repo, _ = split_repository(repo, cfg)
    graph = build_wskg(train_repo)
    edges = {(e.src, e.dst) for e in graph.edges}

    def covered(theta: int) -> set[tuple[str, str]]:
        corpus = generate_pw(
            graph, PwConfig(walk_length=5, walks_per_vertex=theta, rng_seed=1)
        )
        pairs = set()
        for seq in corpus.sequences:
            keys = seq.keys()
            pairs.update(zip(keys, keys[1:]))
        return pairs & edges

    assert len(covered(10)) >= len(covered(1))


def test_sweep_rejects_empty_grid():
    repo = make_synthetic_repository(n_workflows=10, n_services=18, seed=0)
    with pytest.raises(ValidationError):
        sweep_pw(repo, [], [1], [3])
