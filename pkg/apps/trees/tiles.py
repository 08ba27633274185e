from collections import defaultdict
from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field, replace
from functools import cached_property

import networkx as nx
from networkx.utils import UnionFind

from apps.common.errors import PreconditionError
from apps.substitutions.automaton import EvPeriodicPath, PSEdge
from apps.substitutions.core import Letter, Substitution

TileKey = Hashable
Vertex = EvPeriodicPath | str
VertexRef = tuple[int, Vertex]
Identification = tuple[VertexRef, VertexRef]


def vertex_sort_key(vertex: Vertex) -> tuple:
    if isinstance(vertex, EvPeriodicPath):
        return (0, vertex.sort_key())
    return (1, vertex)


@dataclass(frozen=True)
class Prototile:
    """
    A finite tree W_a whose gluing vertices are tagged by the tails of singular expansions ending at its letter.

    Interior vertices are named by strings; they are branch points added by refinement or the center of a star.
    """

    key: TileKey
    letter: Letter
    gluing: tuple[EvPeriodicPath, ...]
    interior: tuple[str, ...] = ()
    edges: tuple[tuple[Vertex, Vertex], ...] = ()

    @property
    def vertices(self) -> tuple[Vertex, ...]:
        return self.gluing + self.interior

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.edges)
        return graph

    def validate(self) -> None:
        if not self.gluing:
            raise PreconditionError(f"Tile {self.key} has no gluing vertex")
        if any(tail.end != self.letter for tail in self.gluing):
            raise PreconditionError(f"Tile {self.key} carries a gluing tail ending at another letter")
        if not nx.is_tree(self.graph):
            raise PreconditionError(f"Tile {self.key} is not a tree")
        leaves = [vertex for vertex, degree in self.graph.degree if degree <= 1]
        if len(self.vertices) > 1 and any(vertex not in self.gluing for vertex in leaves):
            raise PreconditionError(f"Tile {self.key} has a leaf which is not a gluing vertex")


def star(key: TileKey, letter: Letter, gluing: tuple[EvPeriodicPath, ...]) -> Prototile:
    """A single vertex, an edge, or a star with a new center on the gluing vertices."""
    if len(gluing) == 1:
        return Prototile(key, letter, gluing)
    if len(gluing) == 2:
        return Prototile(key, letter, gluing, edges=((gluing[0], gluing[1]),))
    return Prototile(key, letter, gluing, ("x0",), tuple((vertex, "x0") for vertex in gluing))


@dataclass(frozen=True)
class Child:
    """The copy of a tile placed in τ(W_a) for the automaton edge a <-(p,s)- b."""

    edge: PSEdge
    tile: TileKey


@dataclass(frozen=True)
class TileInstance:
    """A tile of τ^n(W): its root tile in W and the edges followed from it."""

    tile: TileKey
    root: TileKey
    address: tuple[PSEdge, ...] = ()


@dataclass(frozen=True)
class Patch:
    tiles: tuple[TileInstance, ...]
    identifications: tuple[Identification, ...] = ()

    def __len__(self) -> int:
        return len(self.tiles)


def vertex_classes(prototiles: Mapping[TileKey, Prototile], patch: Patch) -> UnionFind:
    """The identified vertices of a patch; raises when two vertices of one tile instance would be merged."""
    union = UnionFind()
    for first, second in patch.identifications:
        for number, vertex in (first, second):
            if vertex not in prototiles[patch.tiles[number].tile].gluing:
                raise PreconditionError(f"Identification of {vertex} which is not a gluing vertex")
        union.union(first, second)
    for group in union.to_sets():
        instances = [number for number, _ in group]
        if len(instances) != len(set(instances)):
            raise PreconditionError("Inconsistent gluing: two vertices of one tile would be identified")
    return union


def glue(prototiles: Mapping[TileKey, Prototile], patch: Patch) -> tuple[nx.MultiGraph, UnionFind]:
    """
    The tiles of the patch glued along their identifications, with the classes naming its nodes.

    Edges remember the tile instance they come from.
    """
    union = vertex_classes(prototiles, patch)
    graph = nx.MultiGraph()
    for number, instance in enumerate(patch.tiles):
        tile = prototiles[instance.tile]
        graph.add_nodes_from(union[(number, vertex)] for vertex in tile.vertices)
        for first, second in tile.edges:
            graph.add_edge(union[(number, first)], union[(number, second)], tile=number)
    return graph, union


def quotient(prototiles: Mapping[TileKey, Prototile], patch: Patch) -> nx.MultiGraph:
    return glue(prototiles, patch)[0]


def is_tree(graph: nx.MultiGraph) -> bool:
    return graph.number_of_nodes() - graph.number_of_edges() == 1 and nx.is_connected(graph)


@dataclass(frozen=True)
class CoverLetter:
    """A letter together with the gluing vertices its tiles keep."""

    letter: Letter
    kept: frozenset[EvPeriodicPath]


@dataclass
class CoveringMap:
    """Cover letters with their forgetful map to the alphabet and the cover automaton."""

    alphabet: tuple[TileKey, ...]
    forgetful: dict[TileKey, Letter]
    automaton: nx.MultiDiGraph
    heuristic: bool = False

    def name(self, substitution: Substitution, key: TileKey) -> str:
        letter = self.forgetful[key]
        siblings = [other for other in self.alphabet if self.forgetful[other] == letter]
        return substitution.alphabet.name(letter) + "'" * siblings.index(key)

    def check(self, incoming: Mapping[Letter, tuple[PSEdge, ...]]) -> None:
        """Each cover letter has one incoming edge of the cover automaton per automaton edge into its letter."""
        for key in self.alphabet:
            lifted = sorted(data["edge"] for _, _, data in self.automaton.in_edges(key, data=True))
            if lifted != sorted(incoming[self.forgetful[key]]):
                raise PreconditionError(f"Cover letter {key} does not lift the automaton edges")


@dataclass(frozen=True)
class TreeSubRule:
    """
    The abstract tree substitution τ.

    For each tile key, τ(W_a) is made of one child per automaton edge into its letter; `gluings` identifies gluing
    vertices of distinct children and `vertex_map` sends each gluing vertex of W_a to a gluing vertex of a child.
    """

    substitution: Substitution
    prototiles: Mapping[TileKey, Prototile]
    children: Mapping[TileKey, tuple[Child, ...]]
    gluings: Mapping[TileKey, tuple[Identification, ...]]
    vertex_map: Mapping[TileKey, Mapping[EvPeriodicPath, VertexRef]]
    initial: Patch
    singular: frozenset[EvPeriodicPath] = frozenset()
    covering: CoveringMap | None = field(default=None, compare=False)

    @property
    def keys(self) -> tuple[TileKey, ...]:
        return tuple(self.prototiles)

    def letter(self, key: TileKey) -> Letter:
        return self.prototiles[key].letter

    def name(self, key: TileKey) -> str:
        if self.covering is not None:
            return self.covering.name(self.substitution, key)
        return self.substitution.alphabet.name(key)

    def image(self, key: TileKey) -> Patch:
        """τ(W_key) as a patch of its children."""
        tiles = tuple(TileInstance(child.tile, key, (child.edge,)) for child in self.children[key])
        return Patch(tiles, self.gluings[key])

    def follow(self, key: TileKey, tail: EvPeriodicPath) -> tuple[Child, EvPeriodicPath]:
        number, image = self.vertex_map[key][tail]
        return self.children[key][number], image

    def with_prototiles(self, prototiles: Mapping[TileKey, Prototile]) -> "TreeSubRule":
        return replace(self, prototiles=dict(prototiles))

    def gluing_pairs(self) -> list[tuple[TileKey, EvPeriodicPath, EvPeriodicPath]]:
        pairs = []
        for key, tile in self.prototiles.items():
            ordered = sorted(tile.gluing, key=vertex_sort_key)
            pairs += [(key, first, second) for index, first in enumerate(ordered) for second in ordered[index + 1 :]]
        return pairs

    def validate(self) -> None:
        for key, tile in self.prototiles.items():
            tile.validate()
            if set(self.vertex_map[key]) != set(tile.gluing):
                raise PreconditionError(f"The vertex map of tile {self.name(key)} does not cover its gluing vertices")
            for number, image in self.vertex_map[key].values():
                if image not in self.prototiles[self.children[key][number].tile].gluing:
                    raise PreconditionError(f"The vertex map of tile {self.name(key)} leaves the gluing vertices")
            vertex_classes(self.prototiles, self.image(key))
        vertex_classes(self.prototiles, self.initial)


def identification_groups(patch: Patch) -> dict[int, set[Vertex]]:
    """The identified vertices of each tile instance."""
    groups: dict[int, set[Vertex]] = defaultdict(set)
    for first, second in patch.identifications:
        for number, vertex in (first, second):
            groups[number].add(vertex)
    return groups
