import logging
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass
from itertools import combinations

import networkx as nx
import numpy as np

from apps.geometry.algebra import EigenData
from apps.geometry.points import ExactPoint, phi
from apps.substitutions.automaton import EvPeriodicPath
from apps.trees.tiles import Patch, TileKey, TreeSubRule, VertexRef, is_tree, vertex_classes

logger = logging.getLogger(__name__)

CROSSING_TOLERANCE = 1e-9
CROSSING_EDGE_LIMIT = 2000


@dataclass(frozen=True)
class AbstractVertex:
    """An interior vertex with no known expansion; it never coincides with anything."""

    instance: int
    name: str


@dataclass
class Embedding:
    """
    A patch drawn in E_c with straight edges.

    Vertices at equal exact points are merged, so the drawing is a tree only if φ separates the vertices which the
    abstract patch keeps apart.
    """

    nodes: dict[VertexRef, ExactPoint | AbstractVertex]
    graph: nx.MultiGraph
    coincidences: list[list[VertexRef]]
    mismatches: list[tuple[VertexRef, VertexRef]]
    crossings: int | None

    @property
    def tree(self) -> bool:
        return is_tree(self.graph)

    def segments(self, eigen: EigenData) -> list[tuple[np.ndarray, np.ndarray, int]]:
        """Float segments (start, end, tile instance), skipping edges at abstract vertices."""
        result = []
        for first, second, data in self.graph.edges(data=True):
            if isinstance(first, ExactPoint) and isinstance(second, ExactPoint):
                result.append((first.coordinates(eigen), second.coordinates(eigen), data["tile"]))
        return result

    def as_dict(self, eigen: EigenData) -> dict:
        points = sorted({node for node in self.nodes.values() if isinstance(node, ExactPoint)}, key=lambda p: p.vector)
        return {
            "tree": self.tree,
            "vertices": self.graph.number_of_nodes(),
            "edges": self.graph.number_of_edges(),
            "coincidences": len(self.coincidences),
            "mismatches": len(self.mismatches),
            "crossings": self.crossings,
            "points": [point.as_dict(eigen) for point in points],
        }


def _proper_crossing(first: tuple, second: tuple) -> bool:
    (a, b), (c, d) = first, second

    def orientation(p, q, r) -> float:
        return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))

    values = (orientation(a, b, c), orientation(a, b, d), orientation(c, d, a), orientation(c, d, b))
    if any(abs(value) <= CROSSING_TOLERANCE for value in values):
        return False
    return values[0] * values[1] < 0 and values[2] * values[3] < 0


def count_crossings(embedding: Embedding, eigen: EigenData) -> int | None:
    """Pairs of drawn edges crossing at interior points; None when the drawing is too large to check."""
    edges = [
        (first, second, first.coordinates(eigen), second.coordinates(eigen))
        for first, second in embedding.graph.edges()
        if isinstance(first, ExactPoint) and isinstance(second, ExactPoint) and first != second
    ]
    if len(edges) > CROSSING_EDGE_LIMIT or eigen.size != 3:
        return None
    crossings = 0
    for one, other in combinations(edges, 2):
        if {one[0], one[1]} & {other[0], other[1]}:
            continue
        crossings += _proper_crossing(one[2:], other[2:])
    return crossings


def embed_patch(
    rule: TreeSubRule,
    patch: Patch,
    eigen: EigenData,
    expansions: Mapping[TileKey, Mapping[str, EvPeriodicPath]] | None = None,
) -> Embedding:
    """
    Places the vertex δ of the tile at address e_0 ... e_{n-1} at φ(e_0 ... e_{n-1} δ).

    Interior vertices use the branch point expansions when given. Tiles with the same prototile are exact translates.
    """
    expansions = expansions or {}
    union = vertex_classes(rule.prototiles, patch)
    cache: dict[EvPeriodicPath, ExactPoint] = {}

    def place(path: EvPeriodicPath) -> ExactPoint:
        if path not in cache:
            cache[path] = phi(eigen, path)
        return cache[path]

    nodes: dict[VertexRef, ExactPoint | AbstractVertex] = {}
    graph = nx.MultiGraph()
    for number, instance in enumerate(patch.tiles):
        tile = rule.prototiles[instance.tile]
        for vertex in tile.gluing:
            nodes[(number, vertex)] = place(vertex.prepend(instance.address))
        for vertex in tile.interior:
            expansion = expansions.get(instance.tile, {}).get(vertex)
            if expansion is None:
                nodes[(number, vertex)] = AbstractVertex(number, vertex)
            else:
                nodes[(number, vertex)] = place(expansion.prepend(instance.address))
        graph.add_nodes_from(nodes[(number, vertex)] for vertex in tile.vertices)
        for first, second in tile.edges:
            graph.add_edge(nodes[(number, first)], nodes[(number, second)], tile=number)

    located: dict[ExactPoint, list[VertexRef]] = defaultdict(list)
    for ref, node in nodes.items():
        if isinstance(node, ExactPoint):
            located[node].append(ref)
    coincidences = [
        refs
        for refs in located.values()
        if len({union[ref] if isinstance(ref[1], EvPeriodicPath) else ref for ref in refs}) > 1
    ]
    mismatches = [(first, second) for first, second in patch.identifications if nodes[first] != nodes[second]]

    embedding = Embedding(nodes, graph, coincidences, mismatches, None)
    embedding.crossings = count_crossings(embedding, eigen)
    logger.info(
        f"Embedded {len(patch)} tiles: tree {embedding.tree}, {len(coincidences)} coincidences, "
        f"{len(mismatches)} mismatched gluings"
    )
    return embedding
