import logging
from dataclasses import dataclass
from itertools import combinations

import networkx as nx

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.contour.orders import (
    FIRST,
    INITIAL,
    OUTGROW,
    CyclicOrders,
    Node,
    PatchGraph,
    Rotation,
    image_name,
    order_patches,
    same_cycle,
    tile_patch,
)
from apps.substitutions.automaton import build_automaton
from apps.trees.metric import refine_simplicial
from apps.trees.rule import add_gluing_point
from apps.trees.shapes import median, spanned_tree, splits
from apps.trees.tiles import TileKey, TreeSubRule

logger = logging.getLogger(__name__)

CONDITIONS = ("C1", "C2", "C3", "C4", "C5")


def triple_order(graph: PatchGraph, rotation: Rotation, first: Node, second: Node, third: Node) -> tuple:
    """
    The cyclic order of three nodes of a tree with a rotation system.

    Aligned nodes give the position of the middle one, otherwise the sense in which the branches at the median turn.
    """
    nodes = (first, second, third)
    center = median(graph.graph, *nodes)
    if center in nodes:
        return ("aligned", nodes.index(center))
    cycle = rotation[center]
    places = [cycle.index(graph.toward(rotation, center, node)) for node in nodes]
    first, second, third = places
    return ("branch", first < second < third or second < third < first or third < first < second)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    witnesses: tuple[str, ...] = ()
    checked: bool = True

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checked": self.checked, "witnesses": list(self.witnesses)}


@dataclass(frozen=True)
class ConditionReport:
    results: tuple[ConditionResult, ...]

    def __getitem__(self, name: str) -> ConditionResult:
        return next(result for result in self.results if result.name == name)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    def passes(self, *names: str) -> bool:
        return all(self[name].passed for name in names)

    def as_dict(self) -> dict:
        return {result.name: result.as_dict() for result in self.results}


class _Images:
    """W_a and τ(W_a) side by side, with the nodes of the images of the gluing vertices."""

    def __init__(self, rule: TreeSubRule, key: TileKey, orders: CyclicOrders | None):
        self.key = key
        self.tile = rule.prototiles[key]
        self.own = PatchGraph(rule, tile_patch(key))
        self.image = PatchGraph(rule, rule.image(key))
        self.own_rotation = orders.rotation(self.own, None) if orders else None
        self.image_rotation = orders.rotation(self.image, image_name(rule, key)) if orders else None
        self.nodes = {vertex: self.image.node(*rule.vertex_map[key][vertex]) for vertex in self.tile.gluing}

    def valence(self, vertex) -> tuple[int, int]:
        return len(self.own.halves[self.own.node(0, vertex)]), len(self.image.halves[self.nodes[vertex]])


def _simplicial(rule: TreeSubRule, images: _Images) -> list[str]:
    if len(set(images.nodes.values())) != len(images.nodes):
        return [f"{rule.name(images.key)}: two gluing vertices have the same image"]
    own_marked = {images.own.node(0, vertex): index for index, vertex in enumerate(images.tile.gluing)}
    image_marked = {images.nodes[vertex]: index for index, vertex in enumerate(images.tile.gluing)}
    own = splits(spanned_tree(images.own.graph, own_marked), own_marked)
    image = splits(spanned_tree(images.image.graph, image_marked), image_marked)
    return [] if own == image else [f"{rule.name(images.key)}: the hull of the images has another shape"]


def _valence(rule: TreeSubRule, images: _Images) -> list[str]:
    witnesses = []
    for index, vertex in enumerate(images.tile.gluing, start=1):
        own, image = images.valence(vertex)
        if own != image:
            witnesses.append(f"{rule.name(images.key)}{index}: valence {own} becomes {image}")
    return witnesses


def _tile_orders(rule: TreeSubRule, orders: CyclicOrders, graphs: dict[str, PatchGraph]) -> list[str]:
    witnesses = []
    for name, nodes in orders.patches.items():
        graph = graphs[name]
        for node, cycle in nodes.items():
            for number, vertex in sorted({(one, start) for one, start, _ in cycle}, key=lambda ref: ref[0]):
                directions = [direction for one, start, direction in cycle if one == number and start == vertex]
                if len(directions) < 3:
                    continue
                key = graph.patch.tiles[number].tile
                if not same_cycle(directions, orders.tile_order(rule, key, vertex)):
                    witnesses.append(f"{name}: tile {number} ({rule.name(key)}) at {node[1]}")
    return witnesses


def _triples(rule: TreeSubRule, images: _Images) -> list[str]:
    witnesses = []
    gluing = images.tile.gluing
    for triple in combinations(range(len(gluing)), 3):
        own = triple_order(images.own, images.own_rotation, *(images.own.node(0, gluing[index]) for index in triple))
        image = triple_order(images.image, images.image_rotation, *(images.nodes[gluing[index]] for index in triple))
        if own != image:
            names = ", ".join(f"{rule.name(images.key)}{index + 1}" for index in triple)
            witnesses.append(f"({names}): {own} becomes {image}")
    return witnesses


def _vershik_triples(rule: TreeSubRule, graph: PatchGraph, rotation: Rotation) -> list[str]:
    """Gluing points of one τ(W_a) inside τ(W) against their images under the Vershik map."""
    automaton = build_automaton(rule.substitution)
    by_address = {}
    for number, instance in enumerate(graph.patch.tiles):
        by_address.setdefault((instance.address, instance.tile), []).append(number)

    witnesses = []
    offset = 0
    for root in rule.initial.tiles:
        block = range(offset, offset + len(rule.children[root.tile]))
        offset = block.stop
        moved: list[tuple[Node, Node]] = []
        for number in block:
            instance = graph.patch.tiles[number]
            edge = instance.address[-1]
            if not edge.suffix:
                continue
            following = (instance.address[:-1] + (automaton.edge(edge.source, edge.position + 1),), instance.tile)
            targets = by_address.get(following, [])
            if len(targets) != 1:
                continue
            moved += [
                (graph.node(number, vertex), graph.node(targets[0], vertex)) for vertex in graph.tile(number).gluing
            ]
        for triple in combinations(moved, 3):
            sources = tuple(source for source, _ in triple)
            targets = tuple(target for _, target in triple)
            if len(set(sources)) < 3 or len(set(targets)) < 3:
                continue
            before = triple_order(graph, rotation, *sources)
            after = triple_order(graph, rotation, *targets)
            if before != after:
                witnesses.append(f"{sources}: {before} becomes {after}")
    return witnesses


def check_conditions(rule: TreeSubRule, orders: CyclicOrders) -> ConditionReport:
    """
    Tests the conditions under which the contour of W is carried to the contour of τ(W).

    C1: τ(W_a) spans a tree with the shape of W_a. C2: gluing vertices keep their valence. C3: the tiles inside the
    patches turn like their prototiles. C4: triples of gluing vertices keep their cyclic order under τ. C5: triples of
    gluing points of τ(W_a) keep their cyclic order under the Vershik map.
    """
    graphs = {name: PatchGraph(rule, patch) for name, patch in order_patches(rule).items()}
    images = [_Images(rule, key, orders) for key in rule.keys]
    witnesses = {
        "C1": [witness for item in images for witness in _simplicial(rule, item)],
        "C2": [witness for item in images for witness in _valence(rule, item)],
        "C3": _tile_orders(rule, orders, graphs),
        "C4": [witness for item in images for witness in _triples(rule, item)],
    }
    results = [ConditionResult(name, not found, tuple(found)) for name, found in witnesses.items()]

    if rule.covering is None and graphs[FIRST].tree:
        found = _vershik_triples(rule, graphs[FIRST], orders.rotation(graphs[FIRST], FIRST))
        results.append(ConditionResult("C5", not found, tuple(found)))
    else:
        results.append(ConditionResult("C5", True, checked=False))
    if not graphs[INITIAL].tree:
        results[0] = ConditionResult("C1", False, results[0].witnesses + ("W is not a tree",))

    report = ConditionReport(tuple(results))
    logger.info("Conditions: " + ", ".join(f"{result.name} {result.passed}" for result in report.results))
    return report


def valence_failures(rule: TreeSubRule) -> list[tuple[TileKey, object]]:
    failures = []
    for key in rule.keys:
        images = _Images(rule, key, None)
        failures += [(key, vertex) for vertex in images.tile.gluing if len(set(images.valence(vertex))) > 1]
    return failures


def _extra_gluing_point(rule: TreeSubRule, key: TileKey, vertex):
    """A gluing vertex of a child of τ(W_a) behind a direction at τ(x) which leaves the hull of the images."""
    images = _Images(rule, key, None)
    marked = {node: index for index, node in enumerate(images.nodes.values())}
    hull = set(spanned_tree(images.image.graph, marked).nodes)
    start = images.nodes[vertex]
    pruned = images.image.graph.copy()
    pruned.remove_node(start)
    for half in images.image.halves[start]:
        step = images.image.target(half)
        if step in hull or half[2] == OUTGROW:
            continue
        branch = nx.node_connected_component(pruned, step)
        candidates = sorted(
            (number, index)
            for number in range(len(images.image.patch))
            for index, tail in enumerate(images.image.tile(number).gluing)
            if images.image.node(number, tail) in branch
        )
        if candidates:
            number, index = candidates[0]
            tail = images.image.tile(number).gluing[index]
            return tail.prepend((rule.children[key][number].edge,))
    raise PreconditionError(f"No gluing point restores the valence of {vertex} in tile {rule.name(key)}")


def satisfy_valence(rule: TreeSubRule, caps: Caps | None = None) -> TreeSubRule:
    """Adds gluing points behind the extra directions at images of gluing vertices until valences agree."""
    caps = caps or Caps.from_settings()
    for _ in range(caps.depth):
        failures = valence_failures(rule)
        if not failures:
            return rule
        key, vertex = failures[0]
        logger.info(f"Valence of {vertex} in tile {rule.name(key)} changes under τ; adding a gluing point")
        rule = refine_simplicial(add_gluing_point(rule, _extra_gluing_point(rule, key, vertex)), caps)
    if valence_failures(rule):
        raise CapExceededError("Valences keep changing under τ", cap="DEPTH", limit=caps.depth)
    return rule
