"""Topic clusters via greedy modularity maximization on the co-occurrence graph.

Detection runs repeated (local-move, aggregate) passes, recording one
partition per pass; level 0 is the finest. A hashtag's topic is the
community holding it at the selected level, or the tag itself (a
singleton topic) when the tag is not a graph node.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence, Union

from .cooccurrence import CoOccurrenceGraph, TagTable


@dataclass(frozen=True)
class Partition:
    """Assignment of every graph node to one community."""

    membership: Mapping[int, int]
    n_communities: int
    modularity: float


@dataclass(frozen=True)
class Cluster:
    community: int


@dataclass(frozen=True)
class Singleton:
    hashtag: str


TopicId = Union[Cluster, Singleton]


@dataclass(frozen=True)
class TopicModel:
    """Partition hierarchy plus the singleton fallback for absent tags."""

    tag_to_node: Mapping[str, int]
    levels: tuple[Partition, ...]
    selected_level: int

    @staticmethod
    def from_assignments(assignment: Mapping[str, int]) -> "TopicModel":
        """Single-level model from explicit tag -> community ids (tests, loading)."""
        tags = list(assignment)
        tag_to_node = {t: i for i, t in enumerate(tags)}
        membership = {i: assignment[t] for i, t in enumerate(tags)}
        part = Partition(membership, len(set(membership.values())), float("nan"))
        return TopicModel(tag_to_node, (part,), 0)


def modularity(g: CoOccurrenceGraph,
               p: Partition | Mapping[int, int],
               resolution: float = 1.0) -> float:
    """Weighted modularity of a partition; 0 for an empty graph.

    Q = sum_c [ W_in(c)/m - resolution * (K(c)/(2m))^2 ] with W_in the
    intra-community weight, K the community degree sum and m the total
    edge weight.
    """
    membership = p.membership if isinstance(p, Partition) else p
    m = g.total_weight()
    if m == 0:
        return 0.0
    for node in g.nodes:
        if node not in membership:
            raise ValueError(f"partition does not cover node {node}")
    w_in: dict[int, float] = {}
    k_tot: dict[int, float] = {}
    for (i, j), w in g.edges.items():
        if membership[i] == membership[j]:
            c = membership[i]
            w_in[c] = w_in.get(c, 0.0) + w
    for node in g.nodes:
        c = membership[node]
        k_tot[c] = k_tot.get(c, 0.0) + g.degree(node)
    two_m = 2.0 * m
    q = 0.0
    for c, k in k_tot.items():
        q += w_in.get(c, 0.0) / m - resolution * (k / two_m) ** 2
    return q


class _WorkingGraph:
    """Mutable adjacency view used between aggregation passes."""

    __slots__ = ("n", "adj", "m")

    def __init__(self, n: int, adj: list[dict[int, float]]):
        self.n = n
        self.adj = adj
        # self-loops count once toward total weight
        total = 0.0
        for i, nbrs in enumerate(adj):
            for j, w in nbrs.items():
                total += w if j != i else 2.0 * w
        self.m = total / 2.0

    @staticmethod
    def from_graph(g: CoOccurrenceGraph) -> tuple["_WorkingGraph", list[int]]:
        order = sorted(g.nodes)
        index = {node: i for i, node in enumerate(order)}
        adj: list[dict[int, float]] = [dict() for _ in order]
        for (a, b), w in g.edges.items():
            i, j = index[a], index[b]
            adj[i][j] = adj[i].get(j, 0.0) + w
            if i != j:
                adj[j][i] = adj[j].get(i, 0.0) + w
        return _WorkingGraph(len(order), adj), order

    def degree(self, i: int) -> float:
        d = 0.0
        for j, w in self.adj[i].items():
            d += 2.0 * w if j == i else w
        return d


def _local_move(wg: _WorkingGraph, rng: random.Random,
                resolution: float) -> tuple[list[int], bool]:
    """One Louvain pass: sweep shuffled nodes until no relocation improves.

    Returns (community label per node, whether any node moved). A node
    moves only if the best candidate's gain strictly exceeds the gain of
    staying; equal-gain candidates resolve to the smallest community id.
    """
    n = wg.n
    community = list(range(n))
    k = [wg.degree(i) for i in range(n)]
    sum_tot = k[:]
    m = wg.m
    moved_any = False
    if m == 0:
        return community, False

    order = list(range(n))
    rng.shuffle(order)

    while True:
        moved_in_sweep = False
        for x in order:
            c_old = community[x]
            k_x = k[x]
            # weight from x to each adjacent community (self-loop excluded:
            # it moves with x and cancels in gain differences)
            links: dict[int, float] = {c_old: 0.0}
            for y, w in wg.adj[x].items():
                if y == x:
                    continue
                c_y = community[y]
                links[c_y] = links.get(c_y, 0.0) + w
            sum_tot[c_old] -= k_x
            best_c = c_old
            best_gain = links[c_old] - resolution * sum_tot[c_old] * k_x / (2.0 * m)
            for c, w_to in links.items():
                if c == c_old:
                    continue
                gain = w_to - resolution * sum_tot[c] * k_x / (2.0 * m)
                if gain > best_gain or (gain == best_gain and best_c != c_old
                                        and c < best_c):
                    best_gain = gain
                    best_c = c
            sum_tot[best_c] += k_x
            if best_c != c_old:
                community[x] = best_c
                moved_in_sweep = True
                moved_any = True
        if not moved_in_sweep:
            break
    return community, moved_any


def _renumber(community: Sequence[int]) -> tuple[list[int], int]:
    """Densify labels in order of first appearance over ascending node id."""
    mapping: dict[int, int] = {}
    dense = []
    for c in community:
        if c not in mapping:
            mapping[c] = len(mapping)
        dense.append(mapping[c])
    return dense, len(mapping)


def _aggregate(wg: _WorkingGraph, dense: Sequence[int],
               n_comm: int) -> _WorkingGraph:
    adj: list[dict[int, float]] = [dict() for _ in range(n_comm)]
    for i in range(wg.n):
        ci = dense[i]
        for j, w in wg.adj[i].items():
            if j < i:
                continue  # each undirected edge once; self-loops have j == i
            cj = dense[j]
            a, b = (ci, cj) if ci <= cj else (cj, ci)
            adj[a][b] = adj[a].get(b, 0.0) + w
    # mirror off-diagonal entries
    for a in range(n_comm):
        for b, w in list(adj[a].items()):
            if b != a:
                adj[b][a] = w
    return _WorkingGraph(n_comm, adj)


def detect_hierarchy(g: CoOccurrenceGraph, seed: int,
                     resolution: float = 1.0) -> tuple[Partition, ...]:
    """Run Louvain passes, returning the partition recorded after each pass.

    Level 0 is the finest. Modularity is evaluated on the original graph
    at every level and never decreases between consecutive levels.
    """
    if not g.nodes:
        raise ValueError("cannot detect communities in an empty graph")
    rng = random.Random(seed)
    wg, node_order = _WorkingGraph.from_graph(g)
    # membership[i] = community of working-graph node i, projected to origin
    node_groups: list[list[int]] = [[node] for node in node_order]
    levels: list[Partition] = []

    while True:
        community, moved = _local_move(wg, rng, resolution)
        if not moved:
            if not levels:
                membership = {node: i for i, node in enumerate(node_order)}
                levels.append(Partition(membership, len(node_order),
                                        modularity(g, membership, resolution)))
            break
        dense, n_comm = _renumber(community)
        groups: list[list[int]] = [[] for _ in range(n_comm)]
        for i, c in enumerate(dense):
            groups[c].extend(node_groups[i])
        membership = {node: c for c, members in enumerate(groups)
                      for node in members}
        levels.append(Partition(membership, n_comm,
                                modularity(g, membership, resolution)))
        if n_comm == wg.n:
            break
        wg = _aggregate(wg, dense, n_comm)
        node_groups = groups
    return tuple(levels)


def louvain_detect(g: CoOccurrenceGraph, seed: int, resolution: float = 1.0,
                   table: TagTable | Mapping[str, int] | None = None,
                   level: int = 2) -> TopicModel:
    """Detect the topic hierarchy and wrap it as a TopicModel.

    `table` supplies the tag -> node-id mapping (a TagTable restricted to
    graph nodes, or a plain mapping); without it node ids double as names.
    The requested level is clamped to the hierarchy depth.
    """
    levels = detect_hierarchy(g, seed, resolution)
    if table is None:
        tag_to_node: Mapping[str, int] = {str(n): n for n in g.nodes}
    elif isinstance(table, TagTable):
        tag_to_node = {table.names[n]: n for n in g.nodes}
    else:
        tag_to_node = {t: n for t, n in table.items() if n in g.nodes}
    selected = min(level, len(levels) - 1)
    if selected != level:
        warnings.warn(f"requested level {level} exceeds hierarchy depth "
                      f"{len(levels)}; clamped to {selected}")
    return TopicModel(tag_to_node, levels, selected)


def select_level(model: TopicModel, level: int) -> Partition:
    """Partition at the given level, clamped to the coarsest with a warning."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if level >= len(model.levels):
        clamped = len(model.levels) - 1
        warnings.warn(f"requested level {level} exceeds hierarchy depth "
                      f"{len(model.levels)}; returning level {clamped}")
        level = clamped
    return model.levels[level]


def assign_topic(model: TopicModel, hashtag: str) -> TopicId:
    """Cluster(c) when the tag is a graph node, Singleton(tag) otherwise."""
    node = model.tag_to_node.get(hashtag)
    if node is None:
        return Singleton(hashtag)
    part = model.levels[model.selected_level]
    return Cluster(part.membership[node])


def write_partition_tsv(model: TopicModel, sink: IO[str]) -> None:
    depth = len(model.levels)
    header = "tag\t" + "\t".join(f"level{i}_id" for i in range(depth))
    sink.write(header + "\tselected_topic\n")
    for tag in sorted(model.tag_to_node):
        node = model.tag_to_node[tag]
        ids = [str(lvl.membership[node]) for lvl in model.levels]
        selected = model.levels[model.selected_level].membership[node]
        sink.write(f"{tag}\t" + "\t".join(ids) + f"\t{selected}\n")


def read_partition_tsv(source: IO[str]) -> TopicModel:
    """Load the selected-topic column of a partition export as a flat model."""
    header = source.readline().rstrip("\n").split("\t")
    if not header or header[0] != "tag" or header[-1] != "selected_topic":
        raise ValueError("not a partition TSV (unexpected header)")
    assignment: dict[str, int] = {}
    for line in source:
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(header):
            continue
        assignment[parts[0]] = int(parts[-1])
    return TopicModel.from_assignments(assignment)
