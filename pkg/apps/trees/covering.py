import logging
from collections import deque
from dataclasses import dataclass, replace

import networkx as nx

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.geometry.algebra import EigenData
from apps.geometry.dual import Face, dual_child, stepped_letters
from apps.substitutions.automaton import EvPeriodicPath, PSEdge, build_automaton
from apps.substitutions.core import Letter
from apps.trees.shapes import restrict
from apps.trees.tiles import (
    Child,
    CoveringMap,
    CoverLetter,
    Patch,
    TileInstance,
    TileKey,
    TreeSubRule,
    identification_groups,
)

logger = logging.getLogger(__name__)


def live_vertices(rule: TreeSubRule, key: TileKey) -> frozenset[EvPeriodicPath]:
    """Gluing vertices some tail of which is itself a singular expansion."""
    return frozenset(
        vertex
        for vertex in rule.prototiles[key].gluing
        if any(tail in rule.singular for tail in vertex.tails())
    )


def _cover_sort_key(key) -> tuple:
    neighbours = getattr(key, "neighbours", frozenset())
    return key.letter, -len(neighbours), sorted(neighbours), len(key.kept), sorted(tail.sort_key() for tail in key.kept)


def _child_contexts(rule: TreeSubRule, key: CoverLetter) -> list[CoverLetter]:
    """The cover letters of the children of a tile keeping the given vertices."""
    identified = identification_groups(rule.image(key.letter))
    contexts = []
    for number, child in enumerate(rule.children[key.letter]):
        kept = set(identified.get(number, ())) | live_vertices(rule, child.tile)
        kept |= {
            image
            for vertex, (target, image) in rule.vertex_map[key.letter].items()
            if target == number and vertex in key.kept
        }
        contexts.append(CoverLetter(child.tile, frozenset(kept)))
    return contexts


def prune(rule: TreeSubRule) -> TreeSubRule:
    """
    Drops the gluing vertices which only lead to dead ends.

    A vertex of a tile is kept when it is identified with another tile or is live; children inherit the images of the
    kept vertices of their parent. Each distinct kept set becomes a cover letter.
    """
    if rule.covering is not None:
        raise PreconditionError("The rule is already a covering")
    identified = identification_groups(rule.initial)
    roots = [
        CoverLetter(instance.tile, frozenset(identified.get(number, ())) | live_vertices(rule, instance.tile))
        for number, instance in enumerate(rule.initial.tiles)
    ]

    children: dict[CoverLetter, tuple[Child, ...]] = {}
    pending = deque(roots)
    while pending:
        key = pending.popleft()
        if key in children:
            continue
        if not key.kept:
            raise PreconditionError(f"Tile {rule.name(key.letter)} would lose all its gluing vertices")
        contexts = _child_contexts(rule, key)
        children[key] = tuple(
            Child(child.edge, context) for child, context in zip(rule.children[key.letter], contexts, strict=True)
        )
        pending.extend(contexts)

    pruned = _covering_rule(rule, children, roots)
    logger.info(f"Pruned rule on {len(pruned.keys)} cover tiles")
    return pruned


def _covering_rule(rule: TreeSubRule, children: dict, roots: list, heuristic: bool = False) -> TreeSubRule:
    """Restricts each tile to the vertices its cover letter keeps and lifts the automaton along `children`."""
    alphabet = tuple(sorted(children, key=_cover_sort_key))
    automaton = nx.MultiDiGraph()
    automaton.add_nodes_from(alphabet)
    for key in alphabet:
        for child in children[key]:
            automaton.add_edge(child.tile, key, edge=child.edge)
    covering = CoveringMap(alphabet, {key: key.letter for key in alphabet}, automaton, heuristic)
    covering.check(build_automaton(rule.substitution).incoming)

    covered = replace(
        rule,
        prototiles={key: restrict(rule.prototiles[key.letter], key, key.kept) for key in alphabet},
        children={key: children[key] for key in alphabet},
        gluings={key: rule.gluings[key.letter] for key in alphabet},
        vertex_map={
            key: {vertex: image for vertex, image in rule.vertex_map[key.letter].items() if vertex in key.kept}
            for key in alphabet
        },
        initial=Patch(tuple(TileInstance(key, key) for key in roots), rule.initial.identifications),
        covering=covering,
    )
    covered.validate()
    return covered


@dataclass(frozen=True)
class AdjacencyLetter:
    """A tile key refined by the letters of the faces meeting the base point of its dual face."""

    letter: Letter
    neighbours: frozenset[Letter]
    kept: frozenset[EvPeriodicPath]


def _face_kind(rule: TreeSubRule, eigen: EigenData, key, face: Face) -> tuple:
    neighbours = stepped_letters(eigen, face.base)
    if rule.letter(key) not in neighbours:
        raise PreconditionError("A dual face left the stepped plane")
    return key, neighbours


def adjacency_covering(rule: TreeSubRule, eigen: EigenData, caps: Caps | None = None) -> TreeSubRule:
    """
    Splits each tile by the local adjacency type of the dual face sharing its address.

    The tile at address γ and the face E1*^n gives along γ are followed together; a face (x, i)* has the type of the
    letters j with (x, j)* in the stepped plane. Types must be carried by one dual step to a single type on every edge.
    Each tile keeps the gluing vertices pruning keeps on any path with its type. This is a heuristic.
    """
    if rule.covering is not None:
        raise PreconditionError("The rule is already a covering")
    caps = caps or Caps.from_settings()
    substitution = rule.substitution
    identified = identification_groups(rule.initial)
    level = [
        (
            CoverLetter(instance.tile, frozenset(identified.get(number, ())) | live_vertices(rule, instance.tile)),
            Face.unit(substitution.size, rule.letter(instance.tile)),
        )
        for number, instance in enumerate(rule.initial.tiles)
    ]
    roots = [_face_kind(rule, eigen, context.letter, face) for context, face in level]
    seen = {(context, kind) for (context, _), kind in zip(level, roots, strict=True)}
    kept: dict[tuple, set[EvPeriodicPath]] = {}
    transitions: dict[tuple[tuple, PSEdge], tuple] = {}

    for depth in range(caps.depth + 1):
        following, grew = [], False
        for context, face in level:
            kind = _face_kind(rule, eigen, context.letter, face)
            kept.setdefault(kind, set()).update(context.kept)
            for child, child_context in zip(rule.children[context.letter], _child_contexts(rule, context), strict=True):
                child_face = dual_child(substitution, face, child.edge)
                child_kind = _face_kind(rule, eigen, child.tile, child_face)
                if transitions.setdefault((kind, child.edge), child_kind) != child_kind:
                    raise PreconditionError("Adjacency classes do not close under one more dual step")
                if (child_context, child_kind) not in seen:
                    seen.add((child_context, child_kind))
                    grew = True
                following.append((child_context, child_face))
        if not grew:
            logger.debug(f"Adjacency types closed after {depth + 1} dual steps")
            break
        level = following
    else:
        raise CapExceededError("Adjacency types keep growing", cap="DEPTH", limit=caps.depth)

    letters = {kind: AdjacencyLetter(kind[0], kind[1], frozenset(vertices)) for kind, vertices in kept.items()}
    children = {}
    for kind, key in letters.items():
        lifted = []
        for child in rule.children[kind[0]]:
            target = transitions.get((kind, child.edge))
            if target not in letters:
                raise PreconditionError("Adjacency classes do not close under one more dual step")
            lifted.append(Child(child.edge, letters[target]))
        children[key] = tuple(lifted)

    covered = _covering_rule(rule, children, [letters[kind] for kind in roots], heuristic=True)
    logger.info(f"Adjacency covering on {len(covered.keys)} cover tiles")
    return covered
