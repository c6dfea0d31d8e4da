#!/usr/bin/env python3
# Parse workflow files, build the dependency knowledge graph, and query it.

from flowrec import (
    Repository,
    build_wskg,
    parse_canonical_json,
    parse_taverna_xml,
)

# A workflow in the Taverna-subset XML dialect. Processors become
# services; datalink port suffixes (":value") collapse to processor names.
WORKFLOW_941 = """
<workflow id="941">
  <processor name="s1"/><processor name="s2"/><processor name="s3"/>
  <processor name="s4"/><processor name="s5"/><processor name="s6"/>
  <processor name="s7"/>
  <datalink><source>s1:value</source><sink>s2:in</sink></datalink>
  <datalink><source>s2</source><sink>s4</sink></datalink>
  <datalink><source>s4</source><sink>s6</sink></datalink>
  <datalink><source>s4</source><sink>s7</sink></datalink>
  <datalink><source>s3</source><sink>s6</sink></datalink>
  <datalink><source>s5</source><sink>s7</sink></datalink>
</workflow>
"""

# The same service ids can appear in many workflows; that is the point.
OTHER_WORKFLOWS = [
    '{"id": "306", "services": ["s1", "s3", "s13"], "links": [["s1", "s13"], ["s3", "s13"]]}',
    '{"id": "3432", "services": ["s7", "s10"], "links": [["s7", "s10"]]}',
    '{"id": "245",  "services": ["s7", "s10"], "links": [["s7", "s10"]]}',
    '{"id": "232",  "services": ["s7", "s10"], "links": [["s7", "s10"]]}',
    '{"id": "231",  "services": ["s7", "s10"], "links": [["s7", "s10"]]}',
    '{"id": "957",  "services": ["s7", "s9"],  "links": [["s7", "s9"]]}',
]

repo = Repository()
repo.add(parse_taverna_xml(WORKFLOW_941))
for doc in OTHER_WORKFLOWS:
    repo.add(parse_canonical_json(doc))

print(f"repository: {len(repo)} workflows, {len(repo.service_catalog)} services, "
      f"{repo.total_links()} links")

graph = build_wskg(repo)
print(f"knowledge graph: {graph!r}")

# Parallel edges between the same pair, one per workflow, drive the
# occurrence counts used by walks and by online scoring.
print("\noccurrence counts out of s7:")
for neighbor in graph.out_neighbors("s7"):
    print(f"  s7 -> {neighbor}: {graph.occurrence('s7', neighbor)}")
print(f"total out-weight of s7: {graph.out_weight('s7')}")

n_suc, n_pre = graph.successor_counts("s7", ["s10"])
print(f"s10 after s7: {n_suc} times; s10 before s7: {n_pre} times")

# Restricting to one label recovers exactly that workflow's link set.
print("\nedges labeled '941':")
for src, dsts in sorted(graph.adjacency_for_label("941").items()):
    for dst in dsts:
        print(f"  {src} -> {dst}")
