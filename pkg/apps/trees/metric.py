import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.substitutions.automaton import EvPeriodicPath
from apps.trees.rule import image_vertex, iterate
from apps.trees.shapes import median, spanned_tree, splits, tree_to_prototile
from apps.trees.tiles import Patch, Prototile, TileInstance, TileKey, TreeSubRule, glue

logger = logging.getLogger(__name__)

Coordinate = tuple[TileKey, frozenset[EvPeriodicPath]]


@dataclass(frozen=True)
class DistanceMatrix:
    """d' = M d, where d lists the distances between the gluing vertices of each tile."""

    coordinates: tuple[Coordinate, ...]
    matrix: np.ndarray

    def dominant(self) -> tuple[float, np.ndarray]:
        """The Perron eigenvalue with its nonnegative eigenvector normalized to sum 1."""
        values, vectors = np.linalg.eig(self.matrix.astype(float))
        best = int(np.argmax(values.real))
        vector = np.abs(vectors[:, best].real)
        return float(values[best].real), vector / vector.sum()

    def renormalized(self, start: np.ndarray, steps: int) -> np.ndarray:
        """(1/λ)^n M^n d, normalized to sum 1 after every step."""
        vector = np.asarray(start, dtype=float)
        for _ in range(steps):
            vector = self.matrix @ vector
            vector = vector / vector.sum()
        return vector

    def as_dict(self, rule: TreeSubRule) -> dict:
        value, vector = self.dominant()
        return {
            "coordinates": [
                {
                    "tile": rule.name(key),
                    "pair": [tail.render(rule.substitution) for tail in sorted(pair, key=EvPeriodicPath.sort_key)],
                }
                for key, pair in self.coordinates
            ],
            "matrix": self.matrix.tolist(),
            "eigenvalue": value,
            "eigenvector": vector.tolist(),
        }


def _members(union) -> dict:
    members: dict = {}
    for group in union.to_sets():
        for number, vertex in group:
            members.setdefault(union[(number, vertex)], {})[number] = vertex
    return members


def distance_matrix(rule: TreeSubRule) -> DistanceMatrix:
    """
    Counts, for each pair of gluing vertices of W_a, the pieces of the path between their images in τ(W_a).

    The path crosses each child between two of its gluing vertices, so every piece is a coordinate of a child tile.
    """
    coordinates = tuple((key, frozenset((first, second))) for key, first, second in rule.gluing_pairs())
    position = {coordinate: number for number, coordinate in enumerate(coordinates)}
    matrix = np.zeros((len(coordinates), len(coordinates)), dtype=np.int64)

    for row, (key, pair) in enumerate(coordinates):
        patch = rule.image(key)
        graph, union = glue(rule.prototiles, patch)
        members = _members(union)
        first, second = (rule.vertex_map[key][tail] for tail in sorted(pair, key=EvPeriodicPath.sort_key))
        nodes = nx.shortest_path(graph, union[first], union[second])
        piece_start = nodes[0]
        for index in range(len(nodes) - 1):
            current, following = nodes[index], nodes[index + 1]
            (data,) = graph.get_edge_data(current, following).values()
            child = data["tile"]
            last = index == len(nodes) - 2
            if not last:
                (after,) = graph.get_edge_data(following, nodes[index + 2]).values()
                if after["tile"] == child:
                    continue
            ends = frozenset((members[piece_start][child], members[following][child]))
            matrix[row, position[(patch.tiles[child].tile, ends)]] += 1
            piece_start = following
    return DistanceMatrix(coordinates, matrix)


def _root_patch(key: TileKey) -> Patch:
    return Patch((TileInstance(key, key),))


def _image_shape(rule: TreeSubRule, key: TileKey, times: int):
    """The tree spanned by τ^n of the gluing vertices of W_key, or None while two of them share a tile."""
    tile = rule.prototiles[key]
    patch = iterate(rule, _root_patch(key), times, check=False)
    addresses = {instance.address: number for number, instance in enumerate(patch.tiles)}
    refs = []
    for tail in tile.gluing:
        address, image = image_vertex(rule, key, tail, times)
        refs.append((addresses[address], image))
    if len({number for number, _ in refs}) < len(refs):
        return None
    graph, union = glue(rule.prototiles, patch)
    marked = {union[ref]: index for index, ref in enumerate(refs)}
    if len(marked) < len(refs):
        raise PreconditionError(f"Two gluing vertices of tile {rule.name(key)} have the same image")
    tree = spanned_tree(graph, marked)
    return tree, marked


def refine_tile(rule: TreeSubRule, key: TileKey, caps: Caps) -> Prototile:
    tile = rule.prototiles[key]
    if len(tile.gluing) <= 2:
        return tile
    previous = None
    for times in range(1, caps.depth + 1):
        shape = _image_shape(rule, key, times)
        if shape is None:
            previous = None
            continue
        current = splits(*shape)
        if previous is not None and previous[0] == current:
            logger.debug(f"Tile {rule.name(key)} refined after {times - 1} steps")
            return tree_to_prototile(key, tile.letter, tile.gluing, *previous[1])
        previous = (current, shape)
    raise CapExceededError(f"The shape of tile {rule.name(key)} does not settle", cap="DEPTH", limit=caps.depth)


def refine_simplicial(rule: TreeSubRule, caps: Caps | None = None) -> TreeSubRule:
    """
    Replaces each prototile by the tree its gluing vertices span in τ^n(W_a).

    n is the first depth where the images sit in distinct tiles and the spanned tree has the same splits one step later.
    """
    caps = caps or Caps.from_settings()
    refined = rule.with_prototiles({key: refine_tile(rule, key, caps) for key in rule.keys})
    refined.validate()
    return refined


def _tripod(tile: Prototile, vertex: str) -> tuple[EvPeriodicPath, EvPeriodicPath, EvPeriodicPath]:
    """Three gluing vertices in distinct branches at an interior vertex."""
    pruned = tile.graph.copy()
    pruned.remove_node(vertex)
    branches = list(
        sorted((node for node in component if isinstance(node, EvPeriodicPath)), key=EvPeriodicPath.sort_key)
        for component in nx.connected_components(pruned)
    )
    branches.sort(key=lambda branch: branch[0].sort_key())
    if len(branches) < 3:
        raise PreconditionError(f"Vertex {vertex} of tile {tile.key} is not a branch point")
    return branches[0][0], branches[1][0], branches[2][0]


def _track_branch_point(rule: TreeSubRule, key: TileKey, vertex: str) -> EvPeriodicPath:
    seen: dict[tuple[TileKey, str], int] = {}
    edges = []
    while (key, vertex) not in seen:
        seen[(key, vertex)] = len(edges)
        patch = rule.image(key)
        graph, union = glue(rule.prototiles, patch)
        first, second, third = (union[rule.vertex_map[key][tail]] for tail in _tripod(rule.prototiles[key], vertex))
        center = median(graph, first, second, third)
        # a gluing vertex of a child ends the expansion
        refs = sorted(
            _members(union)[center].items(), key=lambda ref: (not isinstance(ref[1], EvPeriodicPath), ref[0])
        )
        number, image = refs[0]
        child = rule.children[key][number]
        edges.append(child.edge)
        if isinstance(image, EvPeriodicPath):
            return image.prepend(edges)
        key, vertex = child.tile, image
    start = seen[(key, vertex)]
    return EvPeriodicPath.of(edges[:start], edges[start:])


def branch_point_expansions(rule: TreeSubRule) -> dict[TileKey, dict[str, EvPeriodicPath]]:
    """
    Prefix-suffix expansions of the branch points of the refined prototiles.

    A branch point is the center of a tripod of gluing vertices. τ sends it to the center of the tripod of their
    images, which is either a gluing vertex of a child or again a branch point of a child.
    """
    result = {}
    for key, tile in rule.prototiles.items():
        result[key] = {
            vertex: _track_branch_point(rule, key, vertex) for vertex in tile.interior if tile.graph.degree(vertex) >= 3
        }
    return result
