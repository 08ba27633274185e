import logging
from collections.abc import Iterator
from dataclasses import dataclass

import networkx as nx

from apps.common.caps import Caps
from apps.common.errors import CapExceededError
from apps.substitutions.automaton import (
    EvPeriodicPath,
    PrefixSuffixAutomaton,
    PSEdge,
    build_automaton,
    p_extreme,
)
from apps.substitutions.core import Letter, Substitution
from apps.substitutions.free_group import Automorphism, GroupKey
from apps.substitutions.words import BiInfiniteWord, periodic_point, shift, words_with_expansion

logger = logging.getLogger(__name__)

State = tuple[Letter, Letter, GroupKey]
Label = tuple[PSEdge, PSEdge]


@dataclass(frozen=True)
class WordPair:
    """Two distinct words that share the stated half and differ next to the origin."""

    first: BiInfiniteWord
    second: BiInfiniteWord
    shared_side: str


class LagAutomaton:
    """
    Pairs of prefix-suffix paths whose words share their left half.

    A state (x, x', Δ) records the letters at the origin of the two desubstituted words and their lag Δ = t'^-1 t,
    where the left halves read X t and X t'. Along edges x <-(p,s)- y and x' <-(p',s')- y' the lag becomes
    σ^-1(p' Δ p^-1), which has to split again into bounded positive parts.
    """

    def __init__(self, substitution: Substitution, caps: Caps):
        self.substitution = substitution
        self.caps = caps
        self.automaton = build_automaton(substitution)
        self.morphism = Automorphism(substitution)
        self.group = self.morphism.group

    def start_states(self) -> list[State]:
        letters = self.substitution.letters
        return [(x, other, ()) for x in letters for other in letters if x < other]

    def successors(self, state: State) -> list[tuple[Label, State]]:
        x, other, key = state
        group = self.group
        delta = group.from_key(key)
        result = []
        for edge in self.automaton.incoming[x]:
            for other_edge in self.automaton.incoming[other]:
                element = group.element(other_edge.prefix) * delta * group.element(edge.prefix) ** -1
                lag = self.morphism.inverse(element)
                split = group.split_lag(lag)
                if split is None:
                    continue
                other_tail, tail = split
                if len(tail) > self.caps.lag_bound or len(other_tail) > self.caps.lag_bound:
                    continue
                if not self.substitution.in_language(tail + (edge.source,)):
                    continue
                if not self.substitution.in_language(other_tail + (other_edge.source,)):
                    continue
                successor = (edge.source, other_edge.source, group.key(lag))
                result.append(((edge, other_edge), successor))
        return result

    def explore(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        pending = self.start_states()
        graph.add_nodes_from(pending)
        seen = set(pending)
        while pending:
            state = pending.pop()
            for label, successor in self.successors(state):
                graph.add_edge(state, successor, label=label)
                if successor not in seen:
                    if len(seen) >= self.caps.state_budget:
                        raise CapExceededError(
                            "The lag automaton has too many states", cap="STATE_BUDGET", limit=self.caps.state_budget
                        )
                    seen.add(successor)
                    pending.append(successor)
        logger.info(
            f"Lag automaton explored {graph.number_of_nodes()} states and {graph.number_of_edges()} transitions"
        )
        return graph

    @staticmethod
    def alive(graph: nx.MultiDiGraph) -> nx.MultiDiGraph:
        """Restriction to the states from which an infinite path starts."""
        cyclic = set()
        for component in nx.strongly_connected_components(graph):
            node = next(iter(component))
            if len(component) > 1 or graph.has_edge(node, node):
                cyclic |= component
        alive = set(cyclic)
        for node in cyclic:
            alive |= nx.ancestors(graph, node)
        return graph.subgraph(alive).copy()

    def lassos(self, graph: nx.MultiDiGraph) -> Iterator[tuple[list[Label], list[Label]]]:
        """Every infinite path made of a simple path followed by a simple cycle."""
        budget = self.caps.state_budget
        steps = 0
        for start in self.start_states():
            if start not in graph:
                continue
            stack = [(start, iter(list(graph.out_edges(start, data="label"))))]
            on_path = {start: 0}
            labels: list[Label] = []
            while stack:
                _, transitions = stack[-1]
                transition = next(transitions, None)
                if transition is None:
                    state, _ = stack.pop()
                    del on_path[state]
                    if labels:
                        labels.pop()
                    continue
                steps += 1
                if steps > budget:
                    raise CapExceededError("Too many lassos in the lag automaton", cap="STATE_BUDGET", limit=budget)
                _, successor, label = transition
                if successor in on_path:
                    index = on_path[successor]
                    yield labels[:index], labels[index:] + [label]
                    continue
                labels.append(label)
                on_path[successor] = len(stack)
                stack.append((successor, iter(list(graph.out_edges(successor, data="label")))))

    def pairs(self) -> list[tuple[EvPeriodicPath, EvPeriodicPath]]:
        graph = self.alive(self.explore())
        found = {}
        for head, cycle in self.lassos(graph):
            first = EvPeriodicPath.of([label[0] for label in head], [label[0] for label in cycle])
            second = EvPeriodicPath.of([label[1] for label in head], [label[1] for label in cycle])
            if first == second:
                continue
            found[frozenset((first, second))] = (first, second)
        return sorted(found.values(), key=lambda pair: (pair[0].sort_key(), pair[1].sort_key()))


def shares_half(first: BiInfiniteWord, second: BiInfiniteWord, side: str, length: int) -> bool:
    if side == "left":
        return first.letters(-length, 0) == second.letters(-length, 0)
    return first.letters(0, length) == second.letters(0, length)


def _verified(pairs: list[tuple[BiInfiniteWord, BiInfiniteWord]], side: str, caps: Caps) -> list[WordPair]:
    found: dict[frozenset, WordPair] = {}
    differ_at = 0 if side == "left" else -1
    for first, second in pairs:
        if first == second or frozenset((first, second)) in found:
            continue
        letters = [word.letters(differ_at, differ_at + 1) for word in (first, second)]
        if not shares_half(first, second, side, caps.language_length) or letters[0] == letters[1]:
            logger.debug(f"Discarding lag automaton pair {first.render()} / {second.render()}")
            continue
        found[frozenset((first, second))] = WordPair(first, second, side)
    return list(found.values())


def _word_pairs(substitution: Substitution, first: EvPeriodicPath, second: EvPeriodicPath):
    for word in words_with_expansion(substitution, first):
        for other in words_with_expansion(substitution, second):
            yield word, other


def left_sharing_pairs(substitution: Substitution, caps: Caps | None = None) -> list[WordPair]:
    """Pairs of words with a common left half that differ at the origin."""
    caps = caps or Caps.from_settings()
    substitution.require_primitive()
    pairs = [
        words
        for first, second in LagAutomaton(substitution, caps).pairs()
        for words in _word_pairs(substitution, first, second)
    ]
    return _verified(pairs, "left", caps)


def mirror_path(automaton: PrefixSuffixAutomaton, path: EvPeriodicPath) -> EvPeriodicPath:
    """The path of the substitution addressing the reversal of the word addressed by a path of its mirror."""
    images = automaton.substitution.images

    def flip(edge: PSEdge) -> PSEdge:
        return automaton.edge(edge.source, len(images[edge.source]) - 1 - edge.position)

    return EvPeriodicPath.of([flip(edge) for edge in path.head], [flip(edge) for edge in path.cycle])


def right_sharing_pairs(substitution: Substitution, caps: Caps | None = None) -> list[WordPair]:
    """Pairs of words with a common right half Z_0 Z_1 ... that differ at position -1."""
    caps = caps or Caps.from_settings()
    substitution.require_primitive()
    automaton = build_automaton(substitution)
    mirrored = LagAutomaton(substitution.mirror(), caps).pairs()
    pairs = []
    for first, second in mirrored:
        # the mirror pairs differ at the origin and share Z_1 Z_2 ...; one shift puts the difference at -1
        for word, other in _word_pairs(substitution, mirror_path(automaton, first), mirror_path(automaton, second)):
            pairs.append((shift(word, 1), shift(other, 1)))
    return _verified(pairs, "right", caps)


def periodic_components(substitution: Substitution) -> list[list[BiInfiniteWord]]:
    """
    The σ-periodic points δ.η grouped by shared halves.

    Two periodic points share their right half when they have the same η, their left half when they have the same δ.
    """
    substitution.require_primitive()
    p_min, p_max = p_extreme(build_automaton(substitution))
    graph = nx.Graph()
    for left in p_max:
        for right in p_min:
            if substitution.in_language((left.end, right.end)):
                graph.add_edge(("max", left), ("min", right))
    components = []
    for component in nx.connected_components(graph):
        members = []
        for u, v in graph.subgraph(component).edges:
            (_, left), (_, right) = sorted((u, v), key=lambda node: node[0] != "max")
            members.append(periodic_point(substitution, left, right))
        if len(members) > 1:
            members.sort(key=lambda word: (word.left.sort_key(), word.right.sort_key()))
            components.append(members)
    return components
