"""Interaction graphs, modularity, Louvain communities, and party labeling.

The interaction graph is undirected and simple: an edge says one user
retweeted or mentioned another at least once, and repeat interactions add
no parallel edges (a weighted mode exists behind a flag). Communities come
from Louvain-style modularity maximization with a seeded, per-level node
visit order, so results are reproducible for a given seed. After the usual
move/aggregate cycle converges, one more local-moving sweep runs over the
original nodes (repeating the cycle if it finds anything), which makes the
final partition stable under every single-node move.

Detected communities are labeled with the plurality party among their
known members (seed accounts or annotated users); ties and communities
below a size threshold stay UNLABELED.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Tweet
from .metrics import EvalReport, eval_metrics

__all__ = [
    "UNLABELED",
    "CommunityEval",
    "CommunityLabeling",
    "GraphError",
    "InteractionGraph",
    "Partition",
    "build_interaction_graph",
    "community_classify",
    "label_communities",
    "louvain",
    "modularity",
    "write_edges",
    "write_partition",
]

UNLABELED = "UNLABELED"

_SEED_MASK = (1 << 64) - 1
_LOUVAIN_STREAM = 5015
_GAIN_EPS = 1e-12


class GraphError(ValueError):
    """Raised for invalid graph inputs."""


@dataclass(frozen=True)
class InteractionGraph:
    """Simple undirected graph; nodes and edges kept in sorted order.

    ``weights`` aligns with ``edges``; unweighted graphs carry all-ones.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    weights: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def total_weight(self) -> float:
        return float(sum(self.weights))

    def degree(self) -> dict[str, int]:
        out = {node: 0 for node in self.nodes}
        for a, b in self.edges:
            out[a] += 1
            out[b] += 1
        return out

    def adjacency(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {node: {} for node in self.nodes}
        for (a, b), w in zip(self.edges, self.weights):
            out[a][b] = w
            out[b][a] = w
        return out


def build_interaction_graph(
    tweets: Sequence[Tweet],
    weighted: bool = False,
) -> InteractionGraph:
    """Collect retweet and mention pairs into a simple undirected graph.

    Both interaction kinds contribute the same edges; self-interactions
    are skipped. With ``weighted`` the edge weight counts interaction
    events instead of collapsing to 1.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for tweet in tweets:
        author = tweet.author_screen_name
        targets = []
        if tweet.retweet_of is not None:
            targets.append(tweet.retweet_of)
        targets.extend(tweet.mentions)
        for target in targets:
            if target == author:
                continue
            counts[(min(author, target), max(author, target))] += 1

    edges = tuple(sorted(counts))
    nodes = tuple(sorted({endpoint for edge in edges for endpoint in edge}))
    weights = tuple(float(counts[edge]) if weighted else 1.0 for edge in edges)
    return InteractionGraph(nodes=nodes, edges=edges, weights=weights)


@dataclass(frozen=True)
class Partition:
    """A community assignment together with its modularity score."""

    assignment: Mapping[str, int]
    modularity_q: float

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def communities(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node in sorted(self.assignment):
            out.setdefault(self.assignment[node], []).append(node)
        return out

    def sizes(self) -> dict[int, int]:
        return dict(Counter(self.assignment.values()))

    @classmethod
    def from_assignment(
        cls, graph: InteractionGraph, assignment: Mapping[str, int]
    ) -> "Partition":
        return cls(assignment=dict(assignment),
                   modularity_q=modularity(graph, assignment))


def modularity(graph: InteractionGraph, assignment: Mapping[str, int]) -> float:
    """Newman modularity Q = sum_c [ e_c/m - (d_c/2m)^2 ].

    ``e_c`` counts intra-community edge weight, ``d_c`` sums community
    strengths, ``m`` is the total edge weight; with unit weights this is
    the standard unweighted formula.
    """
    if graph.m == 0:
        raise GraphError("modularity undefined on an empty graph")
    missing = [node for node in graph.nodes if node not in assignment]
    if missing:
        raise GraphError(f"assignment misses {len(missing)} nodes, e.g. {missing[0]!r}")

    total = graph.total_weight()
    intra: Counter[int] = Counter()
    strength: Counter[int] = Counter()
    for (a, b), w in zip(graph.edges, graph.weights):
        ca, cb = assignment[a], assignment[b]
        strength[ca] += w
        strength[cb] += w
        if ca == cb:
            intra[ca] += w
    return float(
        sum(
            intra[c] / total - (strength[c] / (2.0 * total)) ** 2
            for c in strength
        )
    )


def _local_moving(
    adjacency: list[list[tuple[int, float]]],
    strength: list[float],
    total_weight: float,
    community: list[int],
    order: np.ndarray,
    resolution: float,
) -> bool:
    """Greedy single-node moves until stable; True if anything moved.

    A node moves to the neighboring community with the best modularity
    gain; ties keep the current community, then prefer the smallest
    community id, which pins the outcome for a fixed visit order.
    """
    sigma: Counter[int] = Counter()
    for node, c in enumerate(community):
        sigma[c] += strength[node]

    two_w = 2.0 * total_weight
    moved_any = False
    while True:
        moved = False
        for node in order:
            node = int(node)
            home = community[node]
            links: dict[int, float] = {}
            for neighbor, w in adjacency[node]:
                if neighbor != node:
                    c = community[neighbor]
                    links[c] = links.get(c, 0.0) + w
            sigma[home] -= strength[node]
            best_c = home
            best_gain = (
                links.get(home, 0.0)
                - resolution * strength[node] * sigma[home] / two_w
            )
            for c in sorted(links):
                if c == home:
                    continue
                gain = links[c] - resolution * strength[node] * sigma[c] / two_w
                if gain > best_gain + _GAIN_EPS:
                    best_gain = gain
                    best_c = c
            sigma[best_c] += strength[node]
            if best_c != home:
                community[node] = best_c
                moved = True
                moved_any = True
        if not moved:
            break
    return moved_any


def _densify(community: list[int]) -> list[int]:
    remap = {c: i for i, c in enumerate(sorted(set(community)))}
    return [remap[c] for c in community]


def _aggregate(
    adjacency: list[list[tuple[int, float]]],
    self_weight: list[float],
    community: list[int],
) -> tuple[list[list[tuple[int, float]]], list[float], list[float]]:
    """Collapse communities into supernodes, keeping internal weight as loops."""
    n_next = max(community) + 1
    loops = [0.0] * n_next
    between: list[dict[int, float]] = [dict() for _ in range(n_next)]
    for node, neighbors in enumerate(adjacency):
        cu = community[node]
        loops[cu] += self_weight[node]
        for neighbor, w in neighbors:
            if neighbor == node:
                continue
            cv = community[neighbor]
            if cv == cu:
                if neighbor > node:
                    loops[cu] += w
            else:
                between[cu][cv] = between[cu].get(cv, 0.0) + w
    new_adjacency = [sorted(links.items()) for links in between]
    new_strength = [
        sum(w for _, w in new_adjacency[c]) + 2.0 * loops[c] for c in range(n_next)
    ]
    return new_adjacency, loops, new_strength


def louvain(
    graph: InteractionGraph,
    rng_seed: int = 0,
    resolution: float = 1.0,
) -> Partition:
    """Seeded modularity maximization; community ids ordered by size.

    The move/aggregate cycle restarts from the original graph until a full
    local-moving sweep over original nodes finds nothing to improve.
    Community ids are dense, ordered by decreasing size with ties going to
    the community holding the lexicographically smallest node.
    """
    if graph.m == 0:
        raise GraphError("cannot detect communities in an empty graph")

    index = {node: i for i, node in enumerate(graph.nodes)}
    n = len(graph.nodes)
    base_adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (a, b), w in zip(graph.edges, graph.weights):
        ia, ib = index[a], index[b]
        base_adjacency[ia].append((ib, w))
        base_adjacency[ib].append((ia, w))
    base_adjacency = [sorted(neighbors) for neighbors in base_adjacency]
    base_self = [0.0] * n
    base_strength = [sum(w for _, w in neighbors) for neighbors in base_adjacency]
    total = graph.total_weight()

    rng = np.random.default_rng((rng_seed & _SEED_MASK, _LOUVAIN_STREAM))
    membership = list(range(n))

    while True:
        community = _densify(membership)
        moved = _local_moving(
            base_adjacency, base_strength, total, community,
            rng.permutation(n), resolution,
        )
        membership = _densify(community)
        if not moved:
            break

        adjacency, self_w, strength = _aggregate(base_adjacency, base_self, membership)
        while True:
            agg_community = list(range(len(adjacency)))
            moved_agg = _local_moving(
                adjacency, strength, total, agg_community,
                rng.permutation(len(adjacency)), resolution,
            )
            if not moved_agg:
                break
            agg_community = _densify(agg_community)
            membership = [agg_community[c] for c in membership]
            adjacency, self_w, strength = _aggregate(adjacency, self_w, agg_community)

    # final ids: decreasing size, ties to the community with the smallest node
    groups: dict[int, list[int]] = {}
    for node, c in enumerate(membership):
        groups.setdefault(c, []).append(node)
    ranked = sorted(groups.items(), key=lambda item: (-len(item[1]), min(item[1])))
    relabel = {old: new for new, (old, _) in enumerate(ranked)}

    assignment = {node: relabel[membership[i]] for node, i in index.items()}
    return Partition(assignment=assignment,
                     modularity_q=modularity(graph, assignment))


@dataclass(frozen=True)
class CommunityLabeling:
    """Party label (or UNLABELED) per community id."""

    labels: Mapping[int, str]
    min_size_fraction: float

    def label_of(self, community: int) -> str:
        return self.labels.get(community, UNLABELED)


def label_communities(
    partition: Partition,
    known: Mapping[str, str],
    min_size_fraction: float = 0.0005,
) -> CommunityLabeling:
    """Name each community after the plurality party of its known members.

    Communities smaller than ``min_size_fraction`` of all nodes, with no
    known members, or with a tied plurality are UNLABELED.
    """
    if not known:
        raise GraphError("no known node labels supplied")
    total_nodes = len(partition.assignment)
    sizes = partition.sizes()
    votes: dict[int, Counter[str]] = {}
    for node, party in known.items():
        community = partition.assignment.get(node)
        if community is not None:
            votes.setdefault(community, Counter())[party] += 1

    labels: dict[int, str] = {}
    for community, size in sizes.items():
        if size / total_nodes < min_size_fraction:
            labels[community] = UNLABELED
            continue
        tally = votes.get(community)
        if not tally:
            labels[community] = UNLABELED
            continue
        ranked = tally.most_common()
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            labels[community] = UNLABELED
        else:
            labels[community] = ranked[0][0]

    if all(label == UNLABELED for label in labels.values()):
        raise GraphError("no labelable community (all below threshold or unknown)")
    return CommunityLabeling(labels=labels, min_size_fraction=min_size_fraction)


@dataclass(frozen=True)
class CommunityEval:
    """Evaluation of community-predicted parties against known truth."""

    report: EvalReport
    coverage: float
    n_truth: int
    n_missing: int
    n_unlabeled: int


def community_classify(
    partition: Partition,
    labeling: CommunityLabeling,
    truth: Mapping[str, str],
) -> CommunityEval:
    """Score community labels against per-user truth.

    Truth users missing from the graph, or sitting in UNLABELED
    communities, are excluded from the confusion matrix and reported via
    ``coverage`` = evaluated / truth.
    """
    if not truth:
        raise GraphError("empty truth mapping")
    pairs: list[tuple[str, str]] = []
    n_missing = 0
    n_unlabeled = 0
    for user in sorted(truth):
        community = partition.assignment.get(user)
        if community is None:
            n_missing += 1
            continue
        predicted = labeling.label_of(community)
        if predicted == UNLABELED:
            n_unlabeled += 1
            continue
        pairs.append((truth[user], predicted))
    if not pairs:
        raise GraphError("no truth user falls in a labeled community")

    classes = tuple(sorted({t for t, _ in pairs} | {p for _, p in pairs}))
    class_index = {cls: i for i, cls in enumerate(classes)}
    matrix = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for true_label, predicted in pairs:
        matrix[class_index[true_label], class_index[predicted]] += 1

    return CommunityEval(
        report=eval_metrics(matrix, classes),
        coverage=len(pairs) / len(truth),
        n_truth=len(truth),
        n_missing=n_missing,
        n_unlabeled=n_unlabeled,
    )


def write_edges(graph: InteractionGraph, path: str | Path) -> None:
    """One "nodeA nodeB" line per edge, sorted, lowercase; weight appended
    only for weighted graphs."""
    weighted = any(w != 1.0 for w in graph.weights)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for (a, b), w in zip(graph.edges, graph.weights):
            if weighted:
                handle.write(f"{a} {b} {w:g}\n")
            else:
                handle.write(f"{a} {b}\n")


def write_partition(partition: Partition, path: str | Path) -> None:
    """Header "modularity <Q to 6 decimals>", then "node community_id" lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"modularity {partition.modularity_q:.6f}\n")
        for node in sorted(partition.assignment):
            handle.write(f"{node} {partition.assignment[node]}\n")
