#!/usr/bin/env python3
# Train skip-gram embeddings with hierarchical softmax and inspect them.

import tempfile
from pathlib import Path

from flowrec import (
    PwConfig,
    TrainConfig,
    build_wskg,
    dedupe,
    generate_pw,
    leaf_probability,
    load_model,
    make_synthetic_repository,
    save_model,
    similarity,
    train,
)

# A seeded synthetic repository with planted sequential motifs: chains of
# services that recur across workflows, so their transitions are learnable.
repo = make_synthetic_repository(n_workflows=120, n_services=36, seed=5)
graph = build_wskg(repo)
corpus = dedupe(generate_pw(graph, PwConfig(walk_length=5, walks_per_vertex=10, rng_seed=2)))
print(f"corpus: {len(corpus.sequences)} sequences, {len(corpus.vocabulary)} tokens")

cfg = TrainConfig(window=3, dim=32, epochs=20, rng_seed=9)
model = train(corpus, cfg)
print(f"model: {len(model.vocab)} tokens x {model.dim} dims, "
      f"max tree path {model.tree.max_path_length()}")

# Tokens adjacent in the same motif should be closer than unrelated ones.
print("\nnearest neighbours of svc01 by cosine similarity:")
scores = sorted(
    ((similarity(model, "svc01", key), key) for key in model.vocab if key != "svc01"),
    reverse=True,
)
for value, key in scores[:5]:
    print(f"  {key}: {value:+.3f}")

# The tree factorization keeps the output distribution normalized.
total = sum(leaf_probability(model, key, "svc01") for key in model.vocab)
print(f"\nsum of leaf probabilities given svc01: {total:.12f}")

# Round-trip through the text model format.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.txt"
    save_model(model, path)
    reloaded = load_model(path)
    print(f"round-trip ok: {(reloaded.vectors == model.vectors).all()}")
    print(f"model file starts with: {path.read_text().splitlines()[0]!r}")
