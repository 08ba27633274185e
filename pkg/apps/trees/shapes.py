from collections.abc import Hashable, Mapping
from itertools import combinations

import networkx as nx

from apps.common.errors import PreconditionError
from apps.substitutions.automaton import EvPeriodicPath
from apps.substitutions.core import Letter
from apps.trees.tiles import Prototile, TileKey, Vertex, vertex_sort_key

Split = frozenset[int]


def spanned_tree(graph: nx.Graph | nx.MultiGraph, marked: Mapping[Hashable, int]) -> nx.Graph:
    """The smallest subtree holding the marked nodes, with unmarked nodes of degree 2 removed."""
    nodes = list(marked)
    tree = nx.Graph()
    tree.add_nodes_from(nodes)
    for source, target in combinations(nodes, 2):
        nx.add_path(tree, nx.shortest_path(graph, source, target))
    changed = True
    while changed:
        changed = False
        for node in list(tree.nodes):
            if node not in marked and tree.degree(node) == 2:
                first, second = tree.neighbors(node)
                tree.remove_node(node)
                tree.add_edge(first, second)
                changed = True
    return tree


def splits(tree: nx.Graph, marked: Mapping[Hashable, int]) -> frozenset[Split]:
    """The bipartitions of the marked labels cut out by the edges, each one given by the side without label 0."""
    result = set()
    for first, second in tree.edges:
        pruned = tree.copy()
        pruned.remove_edge(first, second)
        side = frozenset(marked[node] for node in nx.node_connected_component(pruned, first) if node in marked)
        result.add(side if 0 not in side else frozenset(marked.values()) - side)
    return frozenset(result)


def _branch_signature(tree: nx.Graph, node: Hashable, marked: Mapping[Hashable, int]) -> tuple:
    pruned = tree.copy()
    pruned.remove_node(node)
    branches = (
        tuple(sorted(marked[other] for other in component if other in marked))
        for component in nx.connected_components(pruned)
    )
    return tuple(sorted(branches))


def tree_to_prototile(
    key: TileKey, letter: Letter, gluing: tuple[EvPeriodicPath, ...], tree: nx.Graph, marked: Mapping[Hashable, int]
) -> Prototile:
    """Reads a prototile off a tree whose marked nodes carry gluing indices; interior names follow their branches."""
    interior = sorted(
        (node for node in tree.nodes if node not in marked), key=lambda node: _branch_signature(tree, node, marked)
    )
    names: dict[Hashable, Vertex] = {node: gluing[index] for node, index in marked.items()}
    names.update({node: f"x{number}" for number, node in enumerate(interior)})
    pairs = (tuple(sorted((names[u], names[v]), key=vertex_sort_key)) for u, v in tree.edges)
    edges = tuple(sorted(pairs, key=_edge_key))
    return Prototile(key, letter, gluing, tuple(f"x{number}" for number in range(len(interior))), edges)


def _edge_key(edge: tuple[Vertex, Vertex]) -> tuple:
    return vertex_sort_key(edge[0]) + vertex_sort_key(edge[1])


def restrict(tile: Prototile, key: TileKey, kept: frozenset[EvPeriodicPath]) -> Prototile:
    """The subtree of a prototile spanned by some of its gluing vertices."""
    gluing = tuple(vertex for vertex in tile.gluing if vertex in kept)
    if not gluing:
        raise PreconditionError(f"Tile {tile.key} would lose all its gluing vertices")
    marked = {vertex: index for index, vertex in enumerate(gluing)}
    return tree_to_prototile(key, tile.letter, gluing, spanned_tree(tile.graph, marked), marked)


def median(graph: nx.MultiGraph, first: Hashable, second: Hashable, third: Hashable) -> Hashable:
    """The center of the tripod spanned by three nodes of a tree."""
    common = (
        set(nx.shortest_path(graph, first, second))
        & set(nx.shortest_path(graph, first, third))
        & set(nx.shortest_path(graph, second, third))
    )
    if len(common) != 1:
        raise PreconditionError("Three points of a tree have exactly one median")
    return common.pop()
