import logging
from collections.abc import Sequence
from dataclasses import replace

from apps.common.errors import PreconditionError
from apps.singular.analysis import SingularAnalysis, SingularPair, SingularPointSet
from apps.substitutions.automaton import EvPeriodicPath, build_automaton
from apps.substitutions.free_group import Automorphism, GroupKey
from apps.trees.tiles import (
    Child,
    Identification,
    Patch,
    Prototile,
    TileInstance,
    TileKey,
    TreeSubRule,
    is_tree,
    quotient,
    star,
)

logger = logging.getLogger(__name__)


def _ref_key(ref) -> tuple:
    return ref[0], ref[1].sort_key()


def _identification_key(identification: Identification) -> tuple:
    return _ref_key(identification[0]) + _ref_key(identification[1])


def _child_gluings(
    pairs: Sequence[SingularPair], children: dict[TileKey, tuple[Child, ...]]
) -> dict[TileKey, tuple[Identification, ...]]:
    """Children for edges e and e' into a are glued at B(γ) and B(γ') for each singular pair (γ, γ') ending at a."""
    position = {key: {child.edge: number for number, child in enumerate(items)} for key, items in children.items()}
    gluings: dict[TileKey, set[Identification]] = {key: set() for key in children}
    for pair in pairs:
        first, second = pair.first, pair.second
        if first.end != second.end or first.edge(0) == second.edge(0):
            continue
        key = first.end
        gluing = sorted(
            ((position[key][first.edge(0)], first.behead(1)), (position[key][second.edge(0)], second.behead(1))),
            key=_ref_key,
        )
        gluings[key].add(tuple(gluing))
    return {key: tuple(sorted(items, key=_identification_key)) for key, items in gluings.items()}


def _initial_patch(points: SingularPointSet, pairs: Sequence[SingularPair]) -> Patch:
    """W: one tile per letter, glued where a singular pair joins gluing vertices of two tiles."""
    letters = points.substitution.letters
    tiles = tuple(TileInstance(letter, letter) for letter in letters)
    identifications = []
    for pair in pairs:
        if pair.first in points.by_tail and pair.second in points.by_tail:
            identifications.append(((pair.first.end, pair.first), (pair.second.end, pair.second)))
    return Patch(tiles, tuple(identifications))


def build_tree_substitution(analysis: SingularAnalysis) -> TreeSubRule:
    """
    Prototiles on the singular tails, the patch W and the rule τ.

    Each gluing vertex γ of W_a goes to B(γ) in the child of W_a for the first edge of γ.
    """
    points = analysis.points
    if points is None:
        raise PreconditionError("The tree substitution needs a parageometric substitution")
    substitution = analysis.substitution
    automaton = build_automaton(substitution)

    prototiles: dict[TileKey, Prototile] = {}
    for letter in substitution.letters:
        tails = points.tails(letter)
        if not tails:
            raise PreconditionError(f"No singular tail ends at {substitution.alphabet.name(letter)}")
        prototiles[letter] = star(letter, letter, tails)

    children = {
        letter: tuple(Child(edge, edge.source) for edge in automaton.into(letter)) for letter in substitution.letters
    }
    vertex_map = {}
    for letter, tile in prototiles.items():
        position = {child.edge: number for number, child in enumerate(children[letter])}
        vertex_map[letter] = {tail: (position[tail.edge(0)], tail.behead(1)) for tail in tile.gluing}

    rule = TreeSubRule(
        substitution,
        prototiles,
        children,
        _child_gluings(analysis.pairs, children),
        vertex_map,
        _initial_patch(points, analysis.pairs),
        frozenset(path for pair in analysis.pairs for path in (pair.first, pair.second)),
    )
    rule.validate()
    logger.info(
        "Tree substitution: "
        + ", ".join(f"{rule.name(key)} -> {len(rule.children[key])} tiles" for key in rule.keys)
    )
    return rule


def image_label(rule: TreeSubRule, points: SingularPointSet, key: TileKey, tail: EvPeriodicPath) -> GroupKey | None:
    """τ(Q(γ)) = σ^-1(p_0^-1) Q(B(γ)), written in the child copy the vertex map sends γ to."""
    label = points.by_tail[tail.behead(1)].label
    if label is None:
        return None
    automorphism = Automorphism(rule.substitution, points.group)
    group = automorphism.group
    move = automorphism.inverse(group.element(tail.edge(0).prefix) ** -1)
    return group.key(move * group.from_key(label))


def iterate(rule: TreeSubRule, patch: Patch | None = None, times: int = 1, check: bool = True) -> Patch:
    """τ^n of a patch, W by default; identifications follow the vertex map and each image brings its own gluings."""
    if times < 0:
        raise PreconditionError("A patch is iterated a nonnegative number of times")
    patch = rule.initial if patch is None else patch
    for step in range(times):
        tiles: list[TileInstance] = []
        first_child: list[int] = []
        identifications: list[Identification] = []
        for number, instance in enumerate(patch.tiles):
            first_child.append(len(tiles))
            tiles += [
                TileInstance(child.tile, instance.root, instance.address + (child.edge,))
                for child in rule.children[instance.tile]
            ]
            identifications += [
                ((first_child[number] + one, u), (first_child[number] + other, v))
                for (one, u), (other, v) in rule.gluings[instance.tile]
            ]
        for (one, u), (other, v) in patch.identifications:
            child_u, image_u = rule.vertex_map[patch.tiles[one].tile][u]
            child_v, image_v = rule.vertex_map[patch.tiles[other].tile][v]
            identifications.append(((first_child[one] + child_u, image_u), (first_child[other] + child_v, image_v)))
        patch = Patch(tuple(tiles), tuple(identifications))
        logger.debug(f"Iterate {step + 1}: {len(tiles)} tiles, {len(identifications)} identifications")
    if check and not is_tree(quotient(rule.prototiles, patch)):
        raise PreconditionError("The iterated patch is not a tree")
    return patch


def image_vertex(rule: TreeSubRule, key: TileKey, tail: EvPeriodicPath, times: int) -> tuple[tuple, EvPeriodicPath]:
    """The address (edges) of the tile of τ^n(W_key) holding τ^n(γ), with the gluing vertex there."""
    address = []
    for _ in range(times):
        child, tail = rule.follow(key, tail)
        address.append(child.edge)
        key = child.tile
    return tuple(address), tail


def add_gluing_point(rule: TreeSubRule, path: EvPeriodicPath) -> TreeSubRule:
    """
    Adds every tail of the path as a gluing vertex, each one sent by τ to the next tail.

    Tiles that gain a vertex go back to stars; refine the rule again to recover their shapes.
    """
    if rule.covering is not None:
        raise PreconditionError("Gluing points are added before pruning")
    tails = [tail for tail in path.tails() if tail not in rule.prototiles[tail.end].gluing]
    if not tails:
        return rule
    prototiles = dict(rule.prototiles)
    vertex_map = {key: dict(images) for key, images in rule.vertex_map.items()}
    for letter in sorted({tail.end for tail in tails}):
        added = tuple(sorted((tail for tail in tails if tail.end == letter), key=EvPeriodicPath.sort_key))
        prototiles[letter] = star(letter, letter, rule.prototiles[letter].gluing + added)
    for tail in tails:
        position = {child.edge: number for number, child in enumerate(rule.children[tail.end])}
        vertex_map[tail.end][tail] = (position[tail.edge(0)], tail.behead(1))
    logger.info(f"Added {len(tails)} gluing points")
    return replace(rule, prototiles=prototiles, vertex_map=vertex_map)
