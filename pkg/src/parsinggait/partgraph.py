"""Fine (11-node) and coarse (5-node) body-part graphs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gps.types import (DRESS, HEAD, LEFT_ARM, LEFT_FOOT, LEFT_HAND, LEFT_LEG, PART_NAMES,
                        RIGHT_ARM, RIGHT_FOOT, RIGHT_HAND, RIGHT_LEG, TORSO, ParsingFrame)

# anatomical contact adjacency between part labels
FINE_EDGES = (
    (HEAD, TORSO),
    (TORSO, LEFT_ARM), (TORSO, RIGHT_ARM), (TORSO, LEFT_LEG), (TORSO, RIGHT_LEG), (TORSO, DRESS),
    (LEFT_ARM, LEFT_HAND), (RIGHT_ARM, RIGHT_HAND),
    (LEFT_LEG, LEFT_FOOT), (RIGHT_LEG, RIGHT_FOOT),
    (DRESS, LEFT_LEG), (DRESS, RIGHT_LEG),
)

COARSE_GROUPS = (
    frozenset({HEAD, TORSO, DRESS}),
    frozenset({LEFT_ARM, LEFT_HAND}),
    frozenset({RIGHT_ARM, RIGHT_HAND}),
    frozenset({LEFT_LEG, LEFT_FOOT}),
    frozenset({RIGHT_LEG, RIGHT_FOOT}),
)
COARSE_NAMES = ("trunk", "left-arm-group", "right-arm-group", "left-leg-group", "right-leg-group")


def normalize_adjacency(adj) -> np.ndarray:
    """Symmetric renormalisation D^-1/2 (A + I) D^-1/2 with D the degree of A + I."""
    a = np.asarray(adj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency must be symmetric")
    a_hat = a + np.eye(a.shape[0])
    d = a_hat.sum(axis=1)
    # one rounding per entry: exact whenever d_i·d_j is a perfect square
    return a_hat / np.sqrt(np.outer(d, d))


@dataclass(frozen=True, eq=False)
class PartGraph:
    name: str
    node_labels: tuple
    node_names: tuple
    adjacency: np.ndarray
    normalized: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.node_labels)

    def label_to_node(self) -> np.ndarray:
        """Lookup table: label code -> node index (-1 for background)."""
        lut = np.full(256, -1, dtype=np.int64)
        for node, labels in enumerate(self.node_labels):
            for lab in labels:
                lut[lab] = node
        return lut

    def permuted(self, perm) -> "PartGraph":
        perm = np.asarray(perm)
        a = self.adjacency[np.ix_(perm, perm)]
        return PartGraph(self.name, tuple(self.node_labels[i] for i in perm),
                         tuple(self.node_names[i] for i in perm), a, normalize_adjacency(a))


def _build(name, groups, names) -> PartGraph:
    lut = {lab: i for i, g in enumerate(groups) for lab in g}
    c = len(groups)
    a = np.zeros((c, c))
    for u, v in FINE_EDGES:
        i, j = lut[u], lut[v]
        if i != j:
            a[i, j] = a[j, i] = 1.0
    a.setflags(write=False)
    norm = normalize_adjacency(a)
    norm.setflags(write=False)
    return PartGraph(name, tuple(groups), tuple(names), a, norm)


def fine_graph() -> PartGraph:
    groups = tuple(frozenset({lab}) for lab in range(1, 12))
    return _build("fine", groups, PART_NAMES[1:12])


def coarse_graph() -> PartGraph:
    return _build("coarse", COARSE_GROUPS, COARSE_NAMES)


def get_graph(name: str) -> PartGraph:
    if name == "fine":
        return fine_graph()
    if name == "coarse":
        return coarse_graph()
    raise ValueError(f"part_graph must be 'fine' or 'coarse', got {name!r}")


def group_mask(frame: ParsingFrame | np.ndarray, graph: PartGraph, node: int) -> np.ndarray:
    """Binary mask of the pixels whose label belongs to ``node``."""
    if not 0 <= node < graph.num_nodes:
        raise IndexError(f"node {node} out of range for a {graph.num_nodes}-node graph")
    labels = frame.labels if isinstance(frame, ParsingFrame) else np.asarray(frame)
    return np.isin(labels, sorted(graph.node_labels[node])).astype(np.uint8)


def group_masks(labels: np.ndarray, graph: PartGraph, dtype=np.float32) -> np.ndarray:
    """All node masks at once: ...×H×W labels -> ...×C×H×W indicators."""
    node = graph.label_to_node()[labels]
    out = node[..., None, :, :] == np.arange(graph.num_nodes)[:, None, None]
    return out.astype(dtype)


def is_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                frontier.append(int(j))
    return len(seen) == n
