import networkx as nx

from apps.substitutions.automaton import EvPeriodicPath
from apps.trees.tiles import Patch, TileInstance, TreeSubRule, Vertex, glue


def address(rule: TreeSubRule, instance: TileInstance) -> str:
    edges = " ".join(edge.render(rule.substitution) for edge in instance.address)
    return f"{rule.name(instance.root)}: {edges}" if edges else rule.name(instance.root)


def _vertex(rule: TreeSubRule, vertex: Vertex) -> str:
    return vertex.render(rule.substitution) if isinstance(vertex, EvPeriodicPath) else vertex


def prototiles_as_dict(rule: TreeSubRule) -> list[dict]:
    return [
        {
            "tile": rule.name(key),
            "letter": rule.substitution.alphabet.name(tile.letter),
            "gluing": [_vertex(rule, vertex) for vertex in tile.gluing],
            "interior": list(tile.interior),
            "edges": [[_vertex(rule, first), _vertex(rule, second)] for first, second in tile.edges],
        }
        for key, tile in rule.prototiles.items()
    ]


def rule_as_dict(rule: TreeSubRule) -> dict:
    images = {}
    for key in rule.keys:
        children = rule.children[key]
        images[rule.name(key)] = {
            "children": [
                {"edge": child.edge.render(rule.substitution), "tile": rule.name(child.tile)} for child in children
            ],
            "gluings": [
                [[number, _vertex(rule, vertex)] for number, vertex in identification]
                for identification in rule.gluings[key]
            ],
            "vertex_map": {
                _vertex(rule, vertex): [number, _vertex(rule, image)]
                for vertex, (number, image) in rule.vertex_map[key].items()
            },
        }
    result = {"prototiles": prototiles_as_dict(rule), "images": images, "initial": patch_as_dict(rule, rule.initial)}
    if rule.covering is not None:
        result["covering"] = {
            "heuristic": rule.covering.heuristic,
            "letters": {rule.name(key): rule.substitution.alphabet.name(rule.letter(key)) for key in rule.keys},
        }
    return result


def patch_as_dict(rule: TreeSubRule, patch: Patch) -> dict:
    return {
        "tiles": [
            {"id": number, "tile": rule.name(instance.tile), "address": address(rule, instance)}
            for number, instance in enumerate(patch.tiles)
        ],
        "identifications": [
            [[number, _vertex(rule, vertex)] for number, vertex in identification]
            for identification in patch.identifications
        ],
    }


def patch_to_dot(rule: TreeSubRule, patch: Patch, name: str = "patch") -> str:
    """The glued patch as an undirected graphviz graph, edges labeled by their tile."""
    graph, _ = glue(rule.prototiles, patch)
    numbers = {node: f"n{number}" for number, node in enumerate(graph.nodes)}
    dot = nx.MultiGraph(name=name, node={"shape": "point"})
    dot.add_nodes_from(numbers.values())
    for first, second, data in graph.edges(data=True):
        dot.add_edge(numbers[first], numbers[second], label=rule.name(patch.tiles[data["tile"]].tile))
    return nx.nx_pydot.to_pydot(dot).to_string()
