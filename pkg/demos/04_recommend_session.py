#!/usr/bin/env python3
# A scripted composition session: recommendations drive the next selection.

from flowrec import (
    Session,
    ServiceToken,
    TrainConfig,
    build_wskg,
    generate_dfs,
    parse_canonical_json,
    recommend_top_k,
    select_token,
)
from flowrec import Repository, train

DOCS = [
    '{"id": "941", "services": ["s1","s2","s3","s4","s5","s6","s7"],'
    ' "links": [["s1","s2"],["s2","s4"],["s4","s6"],["s4","s7"],["s3","s6"],["s5","s7"]]}',
    '{"id": "306", "services": ["s1","s3","s13"], "links": [["s1","s13"],["s3","s13"]]}',
]

repo = Repository()
for doc in DOCS:
    repo.add(parse_canonical_json(doc))
graph = build_wskg(repo)
model = train(generate_dfs(graph), TrainConfig(window=2, dim=16, epochs=15, rng_seed=4))

session = Session()
select_token(session, ServiceToken.single("s1"), model)
print(f"session {session.id[:8]} starts with s1")

# Each step: show the ranked candidates (score = pSuc x sim), then take
# the top entry, which immediately becomes the next anchor.
for step in range(3):
    entries = recommend_top_k(model, graph, session, k=3)
    if not entries:
        print("nothing left to recommend")
        break
    print(f"\nstep {step + 1}, anchor {session.selected[-1].key}:")
    for e in entries:
        print(f"  #{e.rank} {e.token.key:>4}  score={e.score:+.4f} "
              f"pSuc={e.p_suc:.4f} sim={e.sim:+.4f}")
    choice = entries[0].token
    select_token(session, choice, model)
    print(f"  -> selected {choice.key}")

print("\nfinal chain:", " -> ".join(t.key for t in session.selected))
