#!/usr/bin/env python3
# The three corpus generation strategies side by side, plus duplicate removal.

from flowrec import (
    PwConfig,
    Repository,
    build_wskg,
    dedupe,
    generate_bfs,
    generate_dfs,
    generate_pw,
    parse_canonical_json,
    transition_distribution,
)

DOCS = [
    # three workflows sharing services (s1 and s3 appear in two of them)
    '{"id": "941", "services": ["s1","s2","s3","s4","s5","s6","s7"],'
    ' "links": [["s1","s2"],["s2","s4"],["s4","s6"],["s4","s7"],["s3","s6"],["s5","s7"]]}',
    '{"id": "306", "services": ["s1","s3","s13"], "links": [["s1","s13"],["s3","s13"]]}',
    '{"id": "1097", "services": ["s3","s14","s15","s17","s18"],'
    ' "links": [["s3","s14"],["s3","s15"],["s3","s17"],["s3","s18"]]}',
]

repo = Repository()
for doc in DOCS:
    repo.add(parse_canonical_json(doc))
graph = build_wskg(repo)


def show(title, corpus, limit=None):
    print(f"\n{title}: {len(corpus.sequences)} sequences, "
          f"{len(corpus.vocabulary)} vocabulary tokens")
    for seq in corpus.sequences[:limit]:
        print(f"  [{seq.provenance.label}] " + " ".join(seq.keys()))


# Depth-first: every maximal path from every service, per workflow label.
show("depth-first", generate_dfs(graph))

# Breadth-first: one sequence per start; a level with several services
# becomes a bundle token such as "s6&s7".
show("breadth-first", generate_bfs(graph))

# Probabilistic walks: label-agnostic, seeded, acyclic. The transition
# distribution is a softmax over normalized occurrence ratios.
print("\ntransition distribution out of s4:",
      transition_distribution(graph, "s4"))
pw = generate_pw(graph, PwConfig(walk_length=4, walks_per_vertex=3, rng_seed=7))
show("probabilistic walks (l=4, theta=3, seed 7)", pw, limit=8)

# Walks repeat popular paths; duplicate removal keeps first occurrences.
deduped = dedupe(pw)
print(f"\nafter duplicate removal: {len(pw.sequences)} -> {len(deduped.sequences)} sequences")
