import math

import numpy as np
import pytest

from flowrec.corpus import (
    Corpus,
    PwConfig,
    ServiceToken,
    TokenSequence,
    dedupe,
    generate_bfs,
    generate_dfs,
    generate_pw,
    load_corpus,
    save_corpus,
    transition_distribution,
)
from flowrec.errors import UnknownServiceError, ValidationError
from flowrec.ingest import Repository, parse_canonical_json
from flowrec.wskg import build_wskg


def _repo(*graph_docs: str) -> Repository:
    repo = Repository()
    for doc in graph_docs:
        repo.add(parse_canonical_json(doc))
    return repo


def _key_lists(corpus: Corpus) -> list[tuple[str, ...]]:
    return [seq.keys() for seq in corpus.sequences]


# ---------------------------------------------------------------------------
# tokens
# ---------------------------------------------------------------------------


def test_token_canonical_key_sorted():
    token = ServiceToken.bundle(["s7", "s6"])
    assert token.key == "s6&s7"
    assert ServiceToken.from_key("s6&s7") == token


def test_token_rejects_empty_and_reserved_characters():
    with pytest.raises(ValidationError):
        ServiceToken(members=())
    with pytest.raises(ValidationError):
        ServiceToken.single("a&b")
    with pytest.raises(ValidationError):
        ServiceToken.single("a b")


# ---------------------------------------------------------------------------
# depth-first generation
# ---------------------------------------------------------------------------


def test_dfs_941_worked_example(fig3_repo):
    repo = Repository()
    repo.add(fig3_repo.workflows["941"])
    corpus = generate_dfs(build_wskg(repo))
    expected = {
        ("s1", "s2", "s4", "s6"),
        ("s1", "s2", "s4", "s7"),
        ("s3", "s6"),
        ("s5", "s7"),
        ("s2", "s4", "s6"),
        ("s2", "s4", "s7"),
        ("s4", "s6"),
        ("s4", "s7"),
    }
    assert set(_key_lists(corpus)) == expected
    assert len(corpus.sequences) == 8


def test_dfs_single_edge_filters_suffix():
    corpus = generate_dfs(
        build_wskg(_repo('{"id":"w","services":["a","b"],"links":[["a","b"]]}'))
    )
    assert _key_lists(corpus) == [("a", "b")]


def _brute_force_paths(links: set[tuple[str, str]], start: str) -> set[tuple[str, ...]]:
    # independent oracle: recursive enumeration of maximal paths
    succ = {}
    for a, b in links:
        succ.setdefault(a, []).append(b)

    def walk(path):
        tail = path[-1]
        if not succ.get(tail):
            yield tuple(path)
            return
        for nxt in succ[tail]:
            yield from walk(path + [nxt])

    return set(walk([start]))


def test_dfs_linear_chain_oracle():
    links = {("a", "b"), ("b", "c")}
    corpus = generate_dfs(
        build_wskg(
            _repo('{"id":"w","services":["a","b","c"],"links":[["a","b"],["b","c"]]}')
        )
    )
    expected = set()
    for start in ("a", "b", "c"):
        expected |= {p for p in _brute_force_paths(links, start) if len(p) >= 2}
    assert set(_key_lists(corpus)) == expected == {("a", "b", "c"), ("b", "c")}


def test_dfs_count_matches_brute_force_on_random_dags():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(3, 8))
        names = [f"v{i}" for i in range(n)]
        links = {
            (names[i], names[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.35
        }
        if not links:
            continue
        doc = {
            "id": "w",
            "services": names,
            "links": [list(p) for p in sorted(links)],
        }
        import json

        corpus = generate_dfs(build_wskg(_repo(json.dumps(doc))))
        expected = set()
        for start in names:
            expected |= {
                p for p in _brute_force_paths(links, start) if len(p) >= 2
            }
        assert set(_key_lists(corpus)) == expected


def test_dfs_path_cap_logs_warning(caplog):
    repo = _repo(
        '{"id":"w","services":["a","b","c","d"],'
        '"links":[["a","b"],["a","c"],["b","d"],["c","d"]]}'
    )
    with caplog.at_level("WARNING"):
        corpus = generate_dfs(build_wskg(repo), max_paths_per_start=1)
    starts_a = [s for s in corpus.sequences if s.provenance.start == "a"]
    assert len(starts_a) == 1
    assert any("path cap" in r.message for r in caplog.records)


# ---------------------------------------------------------------------------
# breadth-first generation
# ---------------------------------------------------------------------------


def test_bfs_941_start_s1(fig3_repo):
    repo = Repository()
    repo.add(fig3_repo.workflows["941"])
    corpus = generate_bfs(build_wskg(repo))
    by_start = {
        seq.provenance.start: seq.keys() for seq in corpus.sequences
    }
    assert by_start["s1"] == ("s1", "s2", "s4", "s6&s7")


def test_bfs_941_full_output_filters_terminals(fig3_repo):
    repo = Repository()
    repo.add(fig3_repo.workflows["941"])
    corpus = generate_bfs(build_wskg(repo))
    starts = sorted(seq.provenance.start for seq in corpus.sequences)
    # starts s6 and s7 produce length-1 sequences and are filtered
    assert starts == ["s1", "s2", "s3", "s4", "s5"]
    expected = {
        ("s1", "s2", "s4", "s6&s7"),
        ("s2", "s4", "s6&s7"),
        ("s4", "s6&s7"),
        ("s3", "s6"),
        ("s5", "s7"),
    }
    assert set(_key_lists(corpus)) == expected


def test_bfs_1097_bundle(fig3_repo):
    corpus = generate_bfs(build_wskg(fig3_repo))
    seqs_1097 = [
        seq.keys()
        for seq in corpus.sequences
        if seq.provenance.label == "1097"
    ]
    assert seqs_1097 == [("s3", "s14&s15&s17&s18")]


def test_bfs_level_is_first_reach_depth():
    # a->b, a->c, b->d, c->d: d joins level 2 once, not twice
    corpus = generate_bfs(
        build_wskg(
            _repo(
                '{"id":"w","services":["a","b","c","d"],'
                '"links":[["a","b"],["a","c"],["b","d"],["c","d"]]}'
            )
        )
    )
    by_start = {s.provenance.start: s.keys() for s in corpus.sequences}
    assert by_start["a"] == ("a", "b&c", "d")


# ---------------------------------------------------------------------------
# transition distribution and probabilistic walks
# ---------------------------------------------------------------------------


def _softmax_oracle(counts: dict[str, int], excluded: set[str]) -> dict[str, float]:
    # independently coded softmax over occurrence ratios
    total = sum(counts.values())
    kept = {v: c for v, c in counts.items() if v not in excluded}
    weights = {v: math.exp(c / total) for v, c in kept.items()}
    norm = sum(weights.values())
    return {v: w / norm for v, w in weights.items()}


def test_transition_distribution_s7(walks_repo):
    graph = build_wskg(walks_repo)
    dist = transition_distribution(graph, "s7")
    oracle = _softmax_oracle({"s9": 1, "s10": 4}, set())
    assert dist["s10"] == pytest.approx(oracle["s10"], abs=1e-12)
    assert dist["s10"] == pytest.approx(0.6457, abs=1e-4)
    assert dist["s9"] == pytest.approx(0.3543, abs=1e-4)


def test_transition_distribution_singleton_and_symmetry():
    graph = build_wskg(
        _repo(
            '{"id":"w1","services":["u","a"],"links":[["u","a"]]}',
            '{"id":"w2","services":["u","b"],"links":[["u","b"]]}',
        )
    )
    assert transition_distribution(graph, "a") == {}
    dist = transition_distribution(graph, "u")
    assert dist == {"a": 0.5, "b": 0.5}
    only = transition_distribution(graph, "u", excluded={"b"})
    assert only == {"a": 1.0}


def test_transition_distribution_excluded_keeps_full_out_weight(walks_repo):
    graph = build_wskg(walks_repo)
    # exponents still use o_u = 5; with s9 excluded softmax is the singleton
    dist = transition_distribution(graph, "s7", excluded={"s9"})
    assert dist == {"s10": 1.0}


def test_transition_distribution_sums_to_one():
    repo = make_random_repo(seed=9)
    graph = build_wskg(repo)
    for u in sorted(graph.services):
        dist = transition_distribution(graph, u)
        if dist:
            assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_transition_distribution_unknown_service(walks_repo):
    with pytest.raises(UnknownServiceError):
        transition_distribution(build_wskg(walks_repo), "missing")


def make_random_repo(seed: int) -> Repository:
    import json

    rng = np.random.default_rng(seed)
    repo = Repository()
    for wid in range(12):
        n = int(rng.integers(2, 7))
        names = [f"x{i}" for i in range(n)]
        links = {
            (names[i], names[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.4
        }
        repo.add(
            parse_canonical_json(
                json.dumps(
                    {
                        "id": str(wid),
                        "services": names,
                        "links": [list(p) for p in sorted(links)],
                    }
                )
            )
        )
    return repo


def test_pw_single_chain_stops_at_sink():
    graph = build_wskg(
        _repo('{"id":"w","services":["a","b","c"],"links":[["a","b"],["b","c"]]}')
    )
    corpus = generate_pw(graph, PwConfig(walk_length=5, walks_per_vertex=1, rng_seed=0))
    from_a = [s.keys() for s in corpus.sequences if s.provenance.start == "a"]
    assert from_a == [("a", "b", "c")]


def test_pw_monte_carlo_matches_closed_form(walks_repo):
    graph = build_wskg(walks_repo)
    cfg = PwConfig(walk_length=2, walks_per_vertex=10_000, rng_seed=42)
    corpus = generate_pw(graph, cfg)
    from_s7 = [s for s in corpus.sequences if s.provenance.start == "s7"]
    assert len(from_s7) == 10_000
    frac_s10 = sum(1 for s in from_s7 if s.keys()[1] == "s10") / len(from_s7)
    expected = math.exp(0.8) / (math.exp(0.8) + math.exp(0.2))
    assert frac_s10 == pytest.approx(expected, abs=0.02)


def test_pw_cycle_across_workflows_stops():
    graph = build_wskg(
        _repo(
            '{"id":"w1","services":["a","b"],"links":[["a","b"]]}',
            '{"id":"w2","services":["a","b"],"links":[["b","a"]]}',
        )
    )
    corpus = generate_pw(graph, PwConfig(walk_length=10, walks_per_vertex=1, rng_seed=1))
    from_a = [s.keys() for s in corpus.sequences if s.provenance.start == "a"]
    assert from_a == [("a", "b")]


def test_pw_never_repeats_and_respects_length():
    graph = build_wskg(make_random_repo(seed=13))
    cfg = PwConfig(walk_length=4, walks_per_vertex=5, rng_seed=99)
    corpus = generate_pw(graph, cfg)
    assert corpus.sequences
    for seq in corpus.sequences:
        keys = seq.keys()
        assert len(keys) == len(set(keys))
        assert 2 <= len(keys) <= 4


def test_pw_adjacent_tokens_are_graph_edges():
    graph = build_wskg(make_random_repo(seed=21))
    corpus = generate_pw(graph, PwConfig(walk_length=5, walks_per_vertex=3, rng_seed=7))
    for seq in corpus.sequences:
        keys = seq.keys()
        for a, b in zip(keys, keys[1:]):
            assert graph.occurrence(a, b) >= 1


def test_pw_bit_reproducible():
    graph = build_wskg(make_random_repo(seed=2))
    cfg = PwConfig(walk_length=5, walks_per_vertex=4, rng_seed=77)
    first = generate_pw(graph, cfg)
    second = generate_pw(graph, cfg)
    assert _key_lists(first) == _key_lists(second)
    assert first.vocabulary == second.vocabulary


def test_dfs_bfs_adjacent_tokens_backed_by_labeled_edges(fig3_repo):
    graph = build_wskg(fig3_repo)
    for corpus in (generate_dfs(graph), generate_bfs(graph)):
        for seq in corpus.sequences:
            label = seq.provenance.label
            adjacency = graph.adjacency_for_label(label)
            for t1, t2 in zip(seq.tokens, seq.tokens[1:]):
                assert any(
                    m2 in adjacency.get(m1, ())
                    for m1 in t1.members
                    for m2 in t2.members
                )


# ---------------------------------------------------------------------------
# dedupe and corpus files
# ---------------------------------------------------------------------------


def test_dedupe_cross_workflow_duplicate():
    repo = _repo(
        '{"id":"1360","services":["s26","s19","s25"],"links":[["s26","s19"],["s19","s25"]]}',
        '{"id":"2067","services":["s26","s19","s25"],"links":[["s26","s19"],["s19","s25"]]}',
    )
    corpus = generate_dfs(build_wskg(repo))
    triples = [k for k in _key_lists(corpus) if k == ("s26", "s19", "s25")]
    assert len(triples) == 2
    deduped = dedupe(corpus)
    triples = [k for k in _key_lists(deduped) if k == ("s26", "s19", "s25")]
    assert len(triples) == 1


def test_dedupe_idempotent_and_noop_without_duplicates(fig3_repo):
    corpus = generate_dfs(build_wskg(fig3_repo))
    once = dedupe(corpus)
    twice = dedupe(once)
    assert _key_lists(once) == _key_lists(twice)
    no_dups = Corpus(
        sequences=[
            TokenSequence(tokens=(ServiceToken.single("a"), ServiceToken.single("b")))
        ]
    )
    assert _key_lists(dedupe(no_dups)) == _key_lists(no_dups)


def test_dedupe_recomputes_vocabulary():
    seq = TokenSequence(
        tokens=(ServiceToken.single("a"), ServiceToken.single("b"))
    )
    corpus = Corpus(sequences=[seq, seq])
    assert corpus.vocabulary == {"a": 2, "b": 2}
    assert dedupe(corpus).vocabulary == {"a": 1, "b": 1}


def test_corpus_file_round_trip(tmp_path, fig3_repo):
    graph = build_wskg(fig3_repo)
    corpus = generate_bfs(graph)
    path = tmp_path / "corpus.txt"
    save_corpus(corpus, path)
    text = path.read_text()
    assert "s1 s2 s4 s6&s7" in text.splitlines()
    loaded = load_corpus(path)
    assert _key_lists(loaded) == _key_lists(corpus)
    assert loaded.vocabulary == corpus.vocabulary


def test_corpus_file_ignores_comments(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("# header comment\na b\n\n# another\nb c d\n")
    loaded = load_corpus(path)
    assert _key_lists(loaded) == [("a", "b"), ("b", "c", "d")]


def test_all_sequences_have_min_length(fig3_repo):
    graph = build_wskg(fig3_repo)
    for corpus in (
        generate_dfs(graph),
        generate_bfs(graph),
        generate_pw(graph, PwConfig(walk_length=3, walks_per_vertex=2, rng_seed=5)),
    ):
        assert all(len(seq) >= 2 for seq in corpus.sequences)


def test_pw_config_validation():
    with pytest.raises(ValidationError):
        PwConfig(walk_length=1)
    with pytest.raises(ValidationError):
        PwConfig(walks_per_vertex=0)
