"""Thresholded, weighted hashtag co-occurrence network construction.

Nodes survive the distinct-user filter, then every unordered pair of
surviving tags in one message increments an edge weight; edges below the
edge threshold are removed afterwards. Counting is sharded by message
range and merged by exact integer addition, so the result is independent
of sharding and of input order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import IO, Iterable, Mapping, Sequence

from .ingest import MessageRecord


@dataclass
class TagTable:
    """Bijection hashtag <-> dense id plus per-tag usage statistics."""

    names: tuple[str, ...]                 # id -> tag, ids dense 0..n-1
    ids: Mapping[str, int]                 # tag -> id
    distinct_users: tuple[int, ...]        # per id
    usage_counts: tuple[int, ...]          # messages containing the tag, per id

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, tag: str) -> int | None:
        return self.ids.get(tag)


@dataclass(frozen=True)
class CoOccurrenceGraph:
    """Weighted undirected graph over tag ids; immutable once built.

    Edges are keyed (i, j) with i < j; adjacency mirrors both directions.
    Self-loops are allowed only in aggregated quotient graphs (weight on
    key (i, i)); construction from messages never produces them.
    """

    nodes: frozenset[int]
    edges: Mapping[tuple[int, int], float]
    adjacency: Mapping[int, Mapping[int, float]]

    @staticmethod
    def from_edges(nodes: Iterable[int],
                   edges: Mapping[tuple[int, int], float]) -> "CoOccurrenceGraph":
        node_set = set(nodes)
        adj: dict[int, dict[int, float]] = {n: {} for n in sorted(node_set)}
        clean: dict[tuple[int, int], float] = {}
        for (i, j), w in edges.items():
            if i > j:
                i, j = j, i
            clean[(i, j)] = clean.get((i, j), 0.0) + w
            node_set.add(i)
            node_set.add(j)
            adj.setdefault(i, {})
            adj.setdefault(j, {})
        for (i, j), w in clean.items():
            if i == j:
                adj[i][i] = w
            else:
                adj[i][j] = w
                adj[j][i] = w
        return CoOccurrenceGraph(frozenset(node_set), clean, adj)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_weight(self) -> float:
        """Sum of edge weights, each undirected edge counted once."""
        return float(sum(self.edges.values()))

    def degree(self, node: int) -> float:
        """Weighted degree; a self-loop contributes twice its weight."""
        nbrs = self.adjacency.get(node, {})
        d = 0.0
        for other, w in nbrs.items():
            d += 2.0 * w if other == node else w
        return d

    def neighbors(self, node: int) -> Mapping[int, float]:
        return self.adjacency.get(node, {})


def tally_usage(records: Iterable[MessageRecord]) -> TagTable:
    """Count distinct users and containing messages per tag.

    Ids are assigned after sorting tags lexicographically, so the numbering
    does not depend on input order.
    """
    users_by_tag: dict[str, set[str]] = {}
    usage: Counter[str] = Counter()
    for rec in records:
        for tag in rec.hashtags:
            usage[tag] += 1
            users_by_tag.setdefault(tag, set()).add(rec.author_id)
    names = tuple(sorted(usage))
    ids = {tag: i for i, tag in enumerate(names)}
    return TagTable(
        names=names,
        ids=ids,
        distinct_users=tuple(len(users_by_tag[t]) for t in names),
        usage_counts=tuple(usage[t] for t in names),
    )


def _count_pairs_shard(records: Sequence[MessageRecord],
                       keep: Mapping[str, int]) -> Counter[tuple[int, int]]:
    counts: Counter[tuple[int, int]] = Counter()
    for rec in records:
        ids = sorted(keep[t] for t in rec.hashtags if t in keep)
        for i, j in combinations(ids, 2):
            counts[(i, j)] += 1
    return counts


def build_graph(
    records: Sequence[MessageRecord],
    table: TagTable,
    user_threshold: int = 3,
    edge_threshold: int = 3,
    shard_size: int = 100_000,
) -> CoOccurrenceGraph:
    """Build the co-occurrence graph from observation records.

    The node filter (distinct users >= user_threshold) runs before pair
    counting, so dropped tags contribute no pairs; edges below
    edge_threshold are removed after counting. Isolated surviving nodes
    are kept.
    """
    if user_threshold < 1 or edge_threshold < 1:
        raise ValueError("thresholds must be >= 1")
    keep = {tag: table.ids[tag]
            for i, tag in enumerate(table.names)
            if table.distinct_users[i] >= user_threshold}
    total: Counter[tuple[int, int]] = Counter()
    for start in range(0, len(records), shard_size):
        total.update(_count_pairs_shard(records[start:start + shard_size], keep))
    edges = {pair: float(w) for pair, w in total.items() if w >= edge_threshold}
    return CoOccurrenceGraph.from_edges(keep.values(), edges)


def graph_stats(g: CoOccurrenceGraph) -> dict:
    """Node/edge counts and a weight distribution summary."""
    weights = sorted(g.edges.values())
    summary: dict = {"n_nodes": g.n_nodes, "n_edges": g.n_edges}
    if weights:
        summary.update(
            weight_min=weights[0],
            weight_max=weights[-1],
            weight_total=float(sum(weights)),
            weight_median=weights[len(weights) // 2],
        )
    else:
        summary.update(weight_min=0.0, weight_max=0.0,
                       weight_total=0.0, weight_median=0.0)
    return summary


def write_edges_tsv(g: CoOccurrenceGraph, table: TagTable, sink: IO[str]) -> None:
    sink.write("tag_i\ttag_j\tweight\n")
    rows = sorted((table.names[i], table.names[j], w)
                  for (i, j), w in g.edges.items())
    for a, b, w in rows:
        sink.write(f"{a}\t{b}\t{w:g}\n")


def write_nodes_tsv(g: CoOccurrenceGraph, table: TagTable, sink: IO[str]) -> None:
    sink.write("tag\tdistinct_users\tusage_count\n")
    for i in sorted(g.nodes):
        sink.write(f"{table.names[i]}\t{table.distinct_users[i]}\t"
                   f"{table.usage_counts[i]}\n")


def read_edges_tsv(source: IO[str]) -> tuple[list[str], dict[tuple[str, str], float]]:
    """Read the edge-list export back; returns (tags mentioned, edges by tag)."""
    header = source.readline()
    if not header.startswith("tag_i"):
        raise ValueError("not an edge-list TSV (missing header)")
    tags: list[str] = []
    seen: set[str] = set()
    edges: dict[tuple[str, str], float] = {}
    for line in source:
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            continue
        a, b, w = parts
        edges[(a, b)] = float(w)
        for t in (a, b):
            if t not in seen:
                seen.add(t)
                tags.append(t)
    return tags, edges
