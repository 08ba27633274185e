import logging
import math
from collections import defaultdict
from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field
from itertools import permutations, product

import networkx as nx
import numpy as np

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.geometry.algebra import EigenData
from apps.geometry.embedding import AbstractVertex, embed_patch
from apps.trees.metric import branch_point_expansions
from apps.trees.rule import iterate
from apps.trees.tiles import Patch, TileInstance, TileKey, TreeSubRule, Vertex, vertex_classes, vertex_sort_key

logger = logging.getLogger(__name__)

OUTGROW = "*"
ANGLE_TOLERANCE = 1e-9

INITIAL = "initial"
FIRST = "first"

Direction = Vertex
Half = tuple[int, Direction, Direction]
Node = tuple[int, Direction]
Rotation = dict[Node, tuple[Half, ...]]


def image_name(rule: TreeSubRule, key: TileKey) -> str:
    return f"image:{rule.name(key)}"


def _direction_key(direction: Direction) -> tuple:
    return (2, "") if direction == OUTGROW else vertex_sort_key(direction)


def _half_key(half: Half) -> tuple:
    return (half[0],) + _direction_key(half[1]) + _direction_key(half[2])


def _canonical_cycle(items, key) -> tuple:
    """The cyclic sequence rotated to start at its smallest item."""
    items = tuple(items)
    if not items:
        return items
    start = min(range(len(items)), key=lambda index: key(items[index]))
    return items[start:] + items[:start]


def same_cycle(first, second) -> bool:
    first, second = tuple(first), tuple(second)
    if len(first) != len(second) or set(first) != set(second):
        return False
    if not first:
        return True
    start = second.index(first[0])
    return second[start:] + second[:start] == first


class PatchGraph:
    """
    The glued tree of a patch seen through its half-edges.

    A half-edge (n, u, w) leaves the vertex u of tile instance n towards w. A tile made of a single vertex gets one
    outgrow: a half-edge towards OUTGROW ending at a node of its own.
    """

    def __init__(self, rule: TreeSubRule, patch: Patch):
        self.rule = rule
        self.patch = patch
        union = vertex_classes(rule.prototiles, patch)
        self._canonical: dict[Node, Node] = {}
        for group in union.to_sets():
            first = min(group, key=lambda ref: (ref[0],) + _direction_key(ref[1]))
            self._canonical.update({ref: first for ref in group})

        self.halves: dict[Node, list[Half]] = defaultdict(list)
        self.graph = nx.Graph()
        self._edges = 0
        for number in range(len(patch)):
            tile = self.tile(number)
            self.graph.add_nodes_from(self.node(number, vertex) for vertex in tile.vertices)
            pairs = tile.edges if len(tile.vertices) > 1 else ((tile.vertices[0], OUTGROW),)
            for first, second in pairs:
                self.halves[self.node(number, first)].append((number, first, second))
                self.halves[self.node(number, second)].append((number, second, first))
                self.graph.add_edge(self.node(number, first), self.node(number, second))
                self._edges += 1

    def tile(self, number: int):
        return self.rule.prototiles[self.patch.tiles[number].tile]

    def node(self, number: int, vertex: Direction) -> Node:
        return self._canonical.get((number, vertex), (number, vertex))

    def target(self, half: Half) -> Node:
        return self.node(half[0], half[2])

    @staticmethod
    def reverse(half: Half) -> Half:
        return half[0], half[2], half[1]

    def is_gluing(self, number: int, vertex: Direction) -> bool:
        return vertex != OUTGROW and vertex in self.tile(number).gluing

    @property
    def tree(self) -> bool:
        return self.graph.number_of_nodes() - self._edges == 1 and nx.is_connected(self.graph)

    def toward(self, rotation: Rotation, node: Node, end: Node) -> Half:
        """The half-edge at `node` on the geodesic to `end`."""
        step = nx.shortest_path(self.graph, node, end)[1]
        return next(half for half in rotation[node] if self.target(half) == step)

    def following(self, rotation: Rotation, half: Half) -> Half:
        """The half-edge the contour takes after running along `half`."""
        back = self.reverse(half)
        cycle = rotation[self.target(half)]
        return cycle[(cycle.index(back) + 1) % len(cycle)]


def tile_patch(key: TileKey) -> Patch:
    return Patch((TileInstance(key, key),))


def order_patches(rule: TreeSubRule) -> dict[str, Patch]:
    """The patches whose cyclic orders matter: W, τ(W) and each τ(W_a)."""
    patches = {INITIAL: rule.initial, FIRST: iterate(rule, times=1, check=False)}
    patches.update({image_name(rule, key): rule.image(key) for key in rule.keys})
    return patches


@dataclass(frozen=True)
class CyclicOrders:
    """
    Cyclic orders of directions: per prototile vertex, and per node of a patch where several tiles meet.

    Orders are read clockwise. A node missing from `patches` whose directions all belong to one tile uses the order of
    its prototile.
    """

    tiles: Mapping[TileKey, Mapping[Vertex, tuple[Direction, ...]]]
    patches: Mapping[str, Mapping[Node, tuple[Half, ...]]] = field(default_factory=dict)
    mode: str = "explicit"

    def tile_order(self, rule: TreeSubRule, key: TileKey, vertex: Vertex) -> tuple[Direction, ...]:
        stored = self.tiles.get(key, {}).get(vertex)
        if stored is not None:
            return stored
        tile = rule.prototiles[key]
        if len(tile.vertices) == 1:
            return (OUTGROW,)
        neighbours = sorted(tile.graph.neighbors(vertex), key=vertex_sort_key)
        if len(neighbours) > 2:
            raise PreconditionError(f"No cyclic order at vertex {vertex} of tile {rule.name(key)}")
        return tuple(neighbours)

    def rotation(self, graph: PatchGraph, name: str | None) -> Rotation:
        """The rotation system of a patch graph, from the patch orders and the prototile orders."""
        stored = self.patches.get(name, {}) if name is not None else {}
        rotation: Rotation = {}
        for node, halves in graph.halves.items():
            if len(halves) <= 2:
                rotation[node] = tuple(halves)
            elif node in stored:
                if sorted(stored[node], key=_half_key) != sorted(halves, key=_half_key):
                    raise PreconditionError(f"The order at {node} of {name} does not list its directions")
                rotation[node] = tuple(stored[node])
            elif len({(number, vertex) for number, vertex, _ in halves}) == 1:
                number, vertex, _ = halves[0]
                key = graph.patch.tiles[number].tile
                order = tuple((number, vertex, direction) for direction in self.tile_order(graph.rule, key, vertex))
                if sorted(order, key=_half_key) != sorted(halves, key=_half_key):
                    raise PreconditionError(f"The order at vertex {vertex} of tile {graph.rule.name(key)} is stale")
                rotation[node] = order
            else:
                raise PreconditionError(f"No cyclic order at node {node} of {name}")
        return rotation

    def as_dict(self, rule: TreeSubRule) -> dict:
        """Vertices and directions by their index among the prototile vertices; the outgrow is written '*'."""

        def index(tile, direction) -> int | str:
            return OUTGROW if direction == OUTGROW else tile.vertices.index(direction)

        patches = order_patches(rule)
        tiles = {}
        for key, orders in self.tiles.items():
            tile = rule.prototiles[key]
            tiles[rule.name(key)] = {
                str(tile.vertices.index(vertex)): [index(tile, direction) for direction in order]
                for vertex, order in orders.items()
                if len(order) > 2
            }
        written = {}
        for name, nodes in self.patches.items():
            tile_of = {number: rule.prototiles[instance.tile] for number, instance in enumerate(patches[name].tiles)}
            written[name] = [
                {
                    "at": [node[0], index(tile_of[node[0]], node[1])],
                    "order": [
                        [number, index(tile_of[number], u), index(tile_of[number], w)] for number, u, w in halves
                    ],
                }
                for node, halves in sorted(nodes.items(), key=lambda item: (item[0][0],) + _direction_key(item[0][1]))
            ]
        return {"mode": self.mode, "tiles": tiles, "patches": written}

    @classmethod
    def from_dict(cls, rule: TreeSubRule, data: Mapping) -> "CyclicOrders":
        by_name = {rule.name(key): key for key in rule.keys}
        patches = order_patches(rule)

        def vertex(tile, value) -> Direction:
            if value == OUTGROW:
                return OUTGROW
            try:
                return tile.vertices[int(value)]
            except (IndexError, ValueError) as error:
                raise PreconditionError(f"Tile {rule.name(tile.key)} has no vertex {value!r}") from error

        tiles: dict[TileKey, dict[Vertex, tuple[Direction, ...]]] = {}
        for name, orders in data.get("tiles", {}).items():
            if name not in by_name:
                raise PreconditionError(f"Unknown tile {name!r} in the cyclic orders")
            tile = rule.prototiles[by_name[name]]
            tiles[tile.key] = {
                vertex(tile, at): tuple(vertex(tile, value) for value in order) for at, order in orders.items()
            }

        written: dict[str, dict[Node, tuple[Half, ...]]] = {}
        for name, entries in data.get("patches", {}).items():
            if name not in patches:
                raise PreconditionError(f"Unknown patch {name!r} in the cyclic orders")
            patch = patches[name]
            graph = PatchGraph(rule, patch)
            nodes = {}
            for entry in entries:
                number, at = entry["at"]
                node = graph.node(number, vertex(graph.tile(number), at))
                nodes[node] = tuple(
                    (one, vertex(graph.tile(one), u), vertex(graph.tile(one), w)) for one, u, w in entry["order"]
                )
            written[name] = nodes
        return cls(tiles, written, data.get("mode", "explicit"))


def _node_positions(rule: TreeSubRule, graph: PatchGraph, eigen: EigenData, expansions) -> dict[Node, np.ndarray]:
    embedding = embed_patch(rule, graph.patch, eigen, expansions)
    if embedding.mismatches:
        raise PreconditionError("Planar orders need an embedding which respects the gluings")
    positions: dict[Node, np.ndarray] = {}
    for ref, point in embedding.nodes.items():
        if isinstance(point, AbstractVertex):
            raise PreconditionError(f"Vertex {ref[1]} has no position; refine the rule before reading planar orders")
        positions[graph.node(*ref)] = point.coordinates(eigen)
    return positions


def _clockwise(graph: PatchGraph, node: Node, positions: Mapping[Node, np.ndarray]) -> tuple[Half, ...]:
    """Directions sorted by decreasing angle; outgrows split the widest gap."""
    angles: dict[Half, float] = {}
    outgrows = []
    for half in graph.halves[node]:
        if half[2] == OUTGROW:
            outgrows.append(half)
            continue
        offset = positions[graph.target(half)] - positions[node]
        if np.hypot(*offset) <= ANGLE_TOLERANCE:
            raise PreconditionError(f"Degenerate direction at node {node}: an edge has length zero")
        angles[half] = math.atan2(offset[1], offset[0])
    ordered = sorted(angles, key=lambda half: -angles[half])
    values = [angles[half] for half in ordered]
    gaps = [values[index] - values[index + 1] for index in range(len(values) - 1)]
    if values:
        gaps.append(values[-1] - values[0] + 2 * math.pi)
    if any(gap <= ANGLE_TOLERANCE for gap in gaps[:-1]) or (len(values) > 1 and gaps[-1] <= ANGLE_TOLERANCE):
        raise PreconditionError(f"Degenerate angles at node {node}: two directions coincide")
    if outgrows:
        outgrows.sort(key=_half_key)
        if not values:
            ordered = outgrows
        else:
            widest = max(range(len(gaps)), key=lambda index: (gaps[index], -index))
            ordered = ordered[: widest + 1] + outgrows + ordered[widest + 1 :]
    return _canonical_cycle(ordered, _half_key)


def planar_orders(
    rule: TreeSubRule, eigen: EigenData, expansions: Mapping[TileKey, Mapping[str, object]] | None = None
) -> CyclicOrders:
    """Orders read clockwise off the embedding of W, τ(W) and each τ(W_a) in the contracting plane."""
    if eigen.size != 3:
        raise PreconditionError("Planar orders need a contracting plane, that is three letters")
    expansions = branch_point_expansions(rule) if expansions is None else expansions
    patches: dict[str, Mapping[Node, tuple[Half, ...]]] = {}
    graphs: dict[str, PatchGraph] = {}
    for name, patch in order_patches(rule).items():
        graph = PatchGraph(rule, patch)
        if not graph.tree:
            raise PreconditionError(f"Planar orders need {name} to be a tree")
        positions = _node_positions(rule, graph, eigen, expansions)
        patches[name] = {
            node: _clockwise(graph, node, positions) for node, halves in graph.halves.items() if len(halves) > 2
        }
        graphs[name] = graph

    tiles: dict[TileKey, dict[Vertex, tuple[Direction, ...]]] = {}
    for key in rule.keys:
        tile = rule.prototiles[key]
        if len(tile.vertices) == 1:
            tiles[key] = {tile.vertices[0]: (OUTGROW,)}
            continue
        reference = next(
            (
                (name, number)
                for name, graph in graphs.items()
                for number, instance in enumerate(graph.patch.tiles)
                if instance.tile == key
            ),
            None,
        )
        if reference is None:
            raise PreconditionError(f"Tile {rule.name(key)} appears in no patch with planar orders")
        name, number = reference
        graph = graphs[name]
        tiles[key] = {}
        for vertex in tile.vertices:
            node = graph.node(number, vertex)
            cycle = patches[name].get(node, tuple(graph.halves[node]))
            directions = [direction for one, start, direction in cycle if one == number and start == vertex]
            tiles[key][vertex] = _canonical_cycle(directions, _direction_key)
    logger.info(f"Planar orders at {sum(len(nodes) for nodes in patches.values())} branch nodes")
    return CyclicOrders(tiles, patches, mode="planar")


def _choices(items: tuple, key) -> list[tuple]:
    """The cyclic orders of some items, each one starting at the smallest."""
    items = sorted(items, key=key)
    return [(items[0],) + rest for rest in permutations(items[1:])]


def search_orders(rule: TreeSubRule, accept, caps: Caps | None = None) -> CyclicOrders:
    """
    Tries every cyclic order at the branch vertices of the prototiles and at the nodes where tiles meet.

    `accept` receives candidate orders and tells whether they are good enough.
    """
    caps = caps or Caps.from_settings()
    sites: list[tuple[str, Hashable, list[tuple]]] = []
    for key in rule.keys:
        tile = rule.prototiles[key]
        for vertex in tile.vertices:
            neighbours = tuple(tile.graph.neighbors(vertex))
            if len(neighbours) > 2:
                sites.append(("tile", (key, vertex), _choices(neighbours, _direction_key)))
    for name, patch in order_patches(rule).items():
        graph = PatchGraph(rule, patch)
        for node, halves in graph.halves.items():
            if len(halves) > 2 and len({number for number, _, _ in halves}) > 1:
                sites.append((name, node, _choices(tuple(halves), _half_key)))

    total = math.prod(len(choices) for _, _, choices in sites)
    if total > caps.order_assignments:
        raise CapExceededError(
            f"{total} cyclic order assignments to try", cap="ORDER_ASSIGNMENTS", limit=caps.order_assignments
        )
    logger.info(f"Searching {total} cyclic order assignments at {len(sites)} sites")
    for assignment in product(*(choices for _, _, choices in sites)):
        tiles: dict[TileKey, dict[Vertex, tuple]] = defaultdict(dict)
        patches: dict[str, dict[Node, tuple]] = defaultdict(dict)
        for (kind, site, _), order in zip(sites, assignment, strict=True):
            if kind == "tile":
                key, vertex = site
                tiles[key][vertex] = order
            else:
                patches[kind][site] = order
        orders = CyclicOrders(dict(tiles), dict(patches), mode="search")
        if accept(orders):
            return orders
    raise PreconditionError("No cyclic orders satisfy the conditions; try a power of the substitution")


def assign_orders(
    rule: TreeSubRule,
    mode: str = "planar",
    eigen: EigenData | None = None,
    data: Mapping | None = None,
    expansions=None,
) -> CyclicOrders:
    if mode == "planar":
        if eigen is None:
            raise PreconditionError("Planar orders need the eigen data of the substitution")
        return planar_orders(rule, eigen, expansions)
    if mode == "explicit":
        if data is None:
            raise PreconditionError("Explicit orders need a description")
        return CyclicOrders.from_dict(rule, data)
    raise PreconditionError(f"Unknown order mode {mode!r}")
