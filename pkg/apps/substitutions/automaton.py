import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

from apps.common.errors import PreconditionError
from apps.substitutions.core import EMPTY, Letter, Substitution, Word

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class PSEdge:
    """The transition a <-(p,s)- b of the prefix-suffix automaton, where the image of b is p a s."""

    target: Letter
    source: Letter
    position: int
    prefix: Word
    suffix: Word

    def render(self, substitution: Substitution) -> str:
        alphabet = substitution.alphabet
        prefix = alphabet.render(self.prefix) or "ε"
        suffix = alphabet.render(self.suffix) or "ε"
        return f"{alphabet.token(self.target)}<-({prefix},{suffix})-{alphabet.token(self.source)}"

    def as_dict(self, substitution: Substitution) -> dict:
        alphabet = substitution.alphabet
        return {
            "target": alphabet.name(self.target),
            "prefix": alphabet.render(self.prefix),
            "source": alphabet.name(self.source),
            "suffix": alphabet.render(self.suffix),
        }


class PrefixSuffixAutomaton:
    def __init__(self, substitution: Substitution):
        self.substitution = substitution
        self.edges: tuple[PSEdge, ...] = tuple(
            sorted(
                PSEdge(
                    target=letter,
                    source=source,
                    position=position,
                    prefix=image[:position],
                    suffix=image[position + 1 :],
                )
                for source, image in enumerate(substitution.images)
                for position, letter in enumerate(image)
            )
        )
        self._by_source = {(edge.source, edge.position): edge for edge in self.edges}

    def __len__(self) -> int:
        return len(self.edges)

    def edge(self, source: Letter, position: int) -> PSEdge:
        return self._by_source[(source, position)]

    def into(self, letter: Letter) -> tuple[PSEdge, ...]:
        return tuple(edge for edge in self.edges if edge.target == letter)

    @cached_property
    def incoming(self) -> dict[Letter, tuple[PSEdge, ...]]:
        return {letter: self.into(letter) for letter in self.substitution.letters}

    def first_edge(self, source: Letter) -> PSEdge:
        return self.edge(source, 0)

    def last_edge(self, source: Letter) -> PSEdge:
        return self.edge(source, len(self.substitution.images[source]) - 1)


def build_automaton(substitution: Substitution) -> PrefixSuffixAutomaton:
    return PrefixSuffixAutomaton(substitution)


def check_chain(edges: Sequence[PSEdge]) -> None:
    for current, following in zip(edges, edges[1:], strict=False):
        if current.source != following.target:
            raise PreconditionError(f"Edges {current} and {following} do not chain")


@dataclass(frozen=True)
class FinitePath:
    """Edges e_0 ... e_{n-1}; e_i goes from a_{i+1} to a_i, a_0 is the end and a_n the beginning."""

    edges: tuple[PSEdge, ...] = ()

    def __post_init__(self):
        check_chain(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[PSEdge]:
        return iter(self.edges)

    def __getitem__(self, index):
        return self.edges[index]

    @property
    def end(self) -> Letter | None:
        return self.edges[0].target if self.edges else None

    @property
    def beginning(self) -> Letter | None:
        return self.edges[-1].source if self.edges else None

    def prefix(self, substitution: Substitution) -> Word:
        return path_prefix(substitution, self.edges)

    def suffix(self, substitution: Substitution) -> Word:
        return path_suffix(substitution, self.edges)


def path_prefix(substitution: Substitution, edges: Iterable[PSEdge]) -> Word:
    """p(γ) = σ^{n-1}(p_{n-1}) ... σ(p_1) p_0."""
    result: Word = EMPTY
    for edge in reversed(tuple(edges)):
        result = substitution.apply(result) + edge.prefix
    return result


def path_suffix(substitution: Substitution, edges: Iterable[PSEdge]) -> Word:
    """s(γ) = s_0 σ(s_1) ... σ^{n-1}(s_{n-1})."""
    result: Word = EMPTY
    for edge in reversed(tuple(edges)):
        result = edge.suffix + substitution.apply(result)
    return result


def _primitive_root(cycle: tuple[PSEdge, ...]) -> tuple[PSEdge, ...]:
    size = len(cycle)
    for period in range(1, size + 1):
        if size % period == 0 and cycle == cycle[period:] + cycle[:period]:
            return cycle[:period]
    return cycle


@dataclass(frozen=True)
class EvPeriodicPath:
    """The infinite path α β β β ..., kept normalized so that equal paths compare equal."""

    head: tuple[PSEdge, ...]
    cycle: tuple[PSEdge, ...]

    @classmethod
    def of(cls, head: Iterable[PSEdge], cycle: Iterable[PSEdge]) -> "EvPeriodicPath":
        head, cycle = tuple(head), tuple(cycle)
        if not cycle:
            raise PreconditionError("An eventually periodic path needs a nonempty cycle")
        check_chain(head + cycle + cycle[:1])
        cycle = _primitive_root(cycle)
        while head and head[-1] == cycle[-1]:
            head = head[:-1]
            cycle = cycle[-1:] + cycle[:-1]
        return cls(head, cycle)

    @classmethod
    def periodic(cls, cycle: Iterable[PSEdge]) -> "EvPeriodicPath":
        return cls.of((), cycle)

    @property
    def end(self) -> Letter:
        return self.edge(0).target

    @property
    def preperiod(self) -> int:
        return len(self.head)

    @property
    def period(self) -> int:
        return len(self.cycle)

    def edge(self, index: int) -> PSEdge:
        if index < len(self.head):
            return self.head[index]
        return self.cycle[(index - len(self.head)) % len(self.cycle)]

    def edges(self, count: int) -> tuple[PSEdge, ...]:
        return tuple(self.edge(index) for index in range(count))

    def truncate(self, count: int) -> FinitePath:
        return FinitePath(self.edges(count))

    def behead(self, count: int = 1) -> "EvPeriodicPath":
        if count < len(self.head):
            return EvPeriodicPath.of(self.head[count:], self.cycle)
        shift = (count - len(self.head)) % len(self.cycle)
        return EvPeriodicPath.of((), self.cycle[shift:] + self.cycle[:shift])

    def tails(self) -> tuple["EvPeriodicPath", ...]:
        """B^n(γ) for n = 0 .. |α|+|β|-1; every further tail repeats one of these."""
        return tuple(self.behead(count) for count in range(len(self.head) + len(self.cycle)))

    def prepend(self, edges: Iterable[PSEdge]) -> "EvPeriodicPath":
        return EvPeriodicPath.of(tuple(edges) + self.head, self.cycle)

    @property
    def has_prefixes(self) -> bool:
        return any(edge.prefix for edge in self.cycle)

    @property
    def has_suffixes(self) -> bool:
        return any(edge.suffix for edge in self.cycle)

    def render(self, substitution: Substitution) -> str:
        head = " ".join(edge.render(substitution) for edge in self.head)
        cycle = " ".join(edge.render(substitution) for edge in self.cycle)
        return f"{head} ({cycle})^∞".strip()

    def as_dict(self, substitution: Substitution) -> dict:
        return {
            "head": [edge.as_dict(substitution) for edge in self.head],
            "cycle": [edge.as_dict(substitution) for edge in self.cycle],
        }

    def sort_key(self) -> tuple:
        return (len(self.head), len(self.cycle), self.head, self.cycle)


def behead(path: EvPeriodicPath, count: int) -> EvPeriodicPath:
    return path.behead(count)


def _vershik_edges(automaton: PrefixSuffixAutomaton, edges: Sequence[PSEdge]) -> tuple[PSEdge, ...]:
    """Rewrites e_0 ... e_r where r is the first index with a nonempty suffix."""
    last = edges[-1]
    rewritten = [automaton.edge(last.source, last.position + 1)]
    for _ in range(len(edges) - 1):
        rewritten.append(automaton.first_edge(rewritten[-1].target))
    return tuple(reversed(rewritten))


def _co_vershik_edges(automaton: PrefixSuffixAutomaton, edges: Sequence[PSEdge]) -> tuple[PSEdge, ...]:
    last = edges[-1]
    rewritten = [automaton.edge(last.source, last.position - 1)]
    for _ in range(len(edges) - 1):
        rewritten.append(automaton.last_edge(rewritten[-1].target))
    return tuple(reversed(rewritten))


def vershik(automaton: PrefixSuffixAutomaton, path: EvPeriodicPath | FinitePath) -> EvPeriodicPath | FinitePath:
    """Successor map: the expansion of S(Z) computed from the expansion of Z."""
    return _adic_step(automaton, path, forward=True)


def co_vershik(automaton: PrefixSuffixAutomaton, path: EvPeriodicPath | FinitePath) -> EvPeriodicPath | FinitePath:
    """Predecessor map: the expansion of S^-1(Z) computed from the expansion of Z."""
    return _adic_step(automaton, path, forward=False)


def _adic_step(automaton, path, forward: bool):
    def is_pivot(edge: PSEdge) -> bool:
        return bool(edge.suffix if forward else edge.prefix)

    rewrite = _vershik_edges if forward else _co_vershik_edges
    extreme = "P_max" if forward else "P_min"

    if isinstance(path, FinitePath):
        pivot = next((index for index, edge in enumerate(path.edges) if is_pivot(edge)), None)
        if pivot is None:
            raise PreconditionError(f"The path is in {extreme}: the adic map is not defined")
        edges = path.edges
        return FinitePath(rewrite(automaton, edges[: pivot + 1]) + edges[pivot + 1 :])

    horizon = len(path.head) + len(path.cycle)
    pivot = next((index for index in range(horizon) if is_pivot(path.edge(index))), None)
    if pivot is None:
        raise PreconditionError(f"The path is in {extreme}: the adic map is not defined")
    rewritten = rewrite(automaton, path.edges(pivot + 1))
    return path.behead(pivot + 1).prepend(rewritten)


def vershik_power(automaton: PrefixSuffixAutomaton, path, count: int):
    step = vershik if count >= 0 else co_vershik
    for _ in range(abs(count)):
        path = step(automaton, path)
    return path


def _extreme_paths(automaton: PrefixSuffixAutomaton, last: bool) -> tuple[EvPeriodicPath, ...]:
    substitution = automaton.substitution

    def follow(letter: Letter) -> Letter:
        image = substitution.images[letter]
        return image[-1] if last else image[0]

    on_cycle = set()
    for start in substitution.letters:
        letter = start
        for _ in range(substitution.size):
            letter = follow(letter)
        on_cycle.add(letter)
    closed = set()
    for letter in sorted(on_cycle):
        orbit = [letter]
        while follow(orbit[-1]) != letter:
            orbit.append(follow(orbit[-1]))
        closed.update(orbit)

    paths = []
    for end in sorted(closed):
        # walk backwards along the cycle: the source of each edge is the cycle predecessor
        predecessor = {follow(letter): letter for letter in closed}
        edges = []
        current = end
        while True:
            source = predecessor[current]
            edge = automaton.last_edge(source) if last else automaton.first_edge(source)
            edges.append(edge)
            current = source
            if current == end:
                break
        paths.append(EvPeriodicPath.periodic(edges))
    return tuple(paths)


def p_extreme(automaton: PrefixSuffixAutomaton) -> tuple[tuple[EvPeriodicPath, ...], tuple[EvPeriodicPath, ...]]:
    """(P_min, P_max): the infinite paths with only empty prefixes, respectively only empty suffixes."""
    return _extreme_paths(automaton, last=False), _extreme_paths(automaton, last=True)


def finite_paths(automaton: PrefixSuffixAutomaton, length: int, end: Letter | None = None) -> list[FinitePath]:
    """All paths of the given length, optionally restricted to an end letter."""
    ends = [end] if end is not None else list(automaton.substitution.letters)
    result = []
    for letter in ends:
        layer: list[tuple[PSEdge, ...]] = [()]
        for _ in range(length):
            layer = [
                edges + (edge,)
                for edges in layer
                for edge in automaton.incoming[edges[-1].source if edges else letter]
            ]
        result.extend(FinitePath(edges) for edges in layer)
    return result
