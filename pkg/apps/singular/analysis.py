import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from networkx.utils import UnionFind

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.singular.pairs import (
    WordPair,
    left_sharing_pairs,
    periodic_components,
    right_sharing_pairs,
)
from apps.substitutions.automaton import (
    EvPeriodicPath,
    PrefixSuffixAutomaton,
    build_automaton,
    co_vershik,
    vershik,
)
from apps.substitutions.core import Letter, Substitution, Word
from apps.substitutions.free_group import FreeGroup, GroupKey
from apps.substitutions.words import BiInfiniteWord, expansion, shift, word_expansion

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SingularClass:
    """Singular words closed under sharing a half, all read from the same origin."""

    members: tuple[BiInfiniteWord, ...]
    shared_side: str

    @property
    def expansions(self) -> tuple[EvPeriodicPath, ...]:
        return tuple(word_expansion(member) for member in self.members)

    @cached_property
    def left_letters(self) -> frozenset[Letter]:
        return frozenset(member.letters(-1, 0)[0] for member in self.members)

    @cached_property
    def right_letters(self) -> frozenset[Letter]:
        return frozenset(member.letters(0, 1)[0] for member in self.members)

    @property
    def index(self) -> int:
        return len(self.left_letters) + len(self.right_letters) - 2

    @property
    def periodic(self) -> bool:
        return any(member.left is not None and member.offset == 0 for member in self.members)

    def as_dict(self, substitution: Substitution) -> dict:
        alphabet = substitution.alphabet
        return {
            "shared_side": self.shared_side,
            "periodic": self.periodic,
            "index": self.index,
            "left_letters": sorted(alphabet.name(letter) for letter in self.left_letters),
            "right_letters": sorted(alphabet.name(letter) for letter in self.right_letters),
            "members": [
                {"word": member.render(), "offset": member.offset, "expansion": path.as_dict(substitution)}
                for member, path in zip(self.members, self.expansions, strict=True)
            ],
        }


@dataclass(frozen=True)
class IndexReport:
    indices: tuple[int, ...]
    total: int
    parageometric: bool

    def as_dict(self) -> dict:
        return {"indices": list(self.indices), "total": self.total, "parageometric": self.parageometric}


@dataclass(frozen=True)
class SingularPair:
    first: EvPeriodicPath
    second: EvPeriodicPath
    shared_side: str
    shift: int

    def as_dict(self, substitution: Substitution) -> dict:
        return {
            "shared_side": self.shared_side,
            "shift": self.shift,
            "first": self.first.as_dict(substitution),
            "second": self.second.as_dict(substitution),
        }


@dataclass(frozen=True)
class SingularPoint:
    """A tail δ ending at a letter, with its point written as label · P_k when a label was found."""

    tail: EvPeriodicPath
    label: GroupKey | None = None
    point: int | None = None

    @property
    def letter(self) -> Letter:
        return self.tail.end


@dataclass
class SingularPointSet:
    substitution: Substitution
    points: dict[Letter, tuple[SingularPoint, ...]]
    class_count: int = 1
    group: FreeGroup = field(init=False, repr=False)

    def __post_init__(self):
        self.group = FreeGroup(self.substitution.alphabet)

    def __getitem__(self, letter: Letter) -> tuple[SingularPoint, ...]:
        return self.points.get(letter, ())

    def tails(self, letter: Letter) -> tuple[EvPeriodicPath, ...]:
        return tuple(point.tail for point in self[letter])

    @cached_property
    def by_tail(self) -> dict[EvPeriodicPath, SingularPoint]:
        return {point.tail: point for points in self.points.values() for point in points}

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(self[letter]) for letter in self.substitution.letters)

    @cached_property
    def used_points(self) -> tuple[int, ...]:
        return tuple(sorted({p.point for ps in self.points.values() for p in ps if p.point is not None}))

    def point_name(self, point: int) -> str:
        if len(self.used_points) <= 1:
            return "P"
        return f"P{point + 1}"

    def render_label(self, label: GroupKey | None, point: int | None) -> str:
        if label is None or point is None:
            return "?"
        word = self.group.render(label)
        return f"{word} {self.point_name(point)}" if word else self.point_name(point)

    def render(self, point: SingularPoint) -> str:
        return self.render_label(point.label, point.point)

    def as_dict(self) -> dict:
        alphabet = self.substitution.alphabet
        return {
            alphabet.name(letter): [
                {"label": self.render(point), "tail": point.tail.as_dict(self.substitution)}
                for point in self[letter]
            ]
            for letter in self.substitution.letters
        }


def _word_key(word: BiInfiniteWord):
    left = word.left.sort_key() if word.left is not None else ()
    return word.offset, word.right.sort_key(), left


def _classes_from_pairs(pairs: list[WordPair], periodic: list[SingularClass]) -> list[SingularClass]:
    """Unions the pairs on each side; a class meeting a periodic class is absorbed into it."""
    merged = {member: number for number, singular_class in enumerate(periodic) for member in singular_class.members}
    extra: dict[int, set[BiInfiniteWord]] = defaultdict(set)
    classes = []
    for side in ("left", "right"):
        union = UnionFind()
        for pair in pairs:
            if pair.shared_side == side:
                union.union(pair.first, pair.second)
        for group in union.to_sets():
            number = next((merged[word] for word in group if word in merged), None)
            if number is not None:
                extra[number] |= group
                continue
            classes.append(SingularClass(tuple(sorted(group, key=_word_key)), side))
    absorbed = []
    for number, singular_class in enumerate(periodic):
        added = sorted(extra[number] - set(singular_class.members), key=_word_key)
        absorbed.append(SingularClass(singular_class.members + tuple(added), singular_class.shared_side))
    return absorbed + classes


def singular_words(substitution: Substitution, caps: Caps | None = None) -> list[SingularClass]:
    """The classes of singular words: transitive closure of sharing a half, read from their branching position."""
    caps = caps or Caps.from_settings()
    substitution.require_primitive()
    pairs = left_sharing_pairs(substitution, caps) + right_sharing_pairs(substitution, caps)
    periodic = [SingularClass(tuple(members), _periodic_side(members)) for members in periodic_components(substitution)]
    classes = _classes_from_pairs(pairs, periodic)
    logger.info(f"Found {len(classes)} classes of singular words")
    return classes


def _periodic_side(members: list[BiInfiniteWord]) -> str:
    if len({member.right for member in members}) == 1:
        return "right"
    if len({member.left for member in members}) == 1:
        return "left"
    return "both"


def index(
    substitution: Substitution, classes: list[SingularClass] | None = None, caps: Caps | None = None
) -> IndexReport:
    if classes is None:
        classes = singular_words(substitution, caps)
    indices = tuple(singular_class.index for singular_class in classes)
    total = sum(indices)
    return IndexReport(indices, total, total == 2 * substitution.size - 2)


def require_parageometric(substitution: Substitution, report: IndexReport) -> None:
    if not report.parageometric:
        raise PreconditionError(
            f"The substitution is not parageometric: index {report.total} < {2 * substitution.size - 2}"
        )


class ShiftedExpansions:
    """Γ(S^k Z) for the members of a class, computed with the Vershik map and desubstitution when it is undefined."""

    def __init__(self, automaton: PrefixSuffixAutomaton, word: BiInfiniteWord, caps: Caps):
        self.automaton = automaton
        self.word = word
        self.caps = caps
        self._paths: dict[int, EvPeriodicPath] = {0: word_expansion(word, caps)}

    def __getitem__(self, count: int) -> EvPeriodicPath:
        if count not in self._paths:
            step = 1 if count > 0 else -1
            previous = self[count - step]
            try:
                path = vershik(self.automaton, previous) if step > 0 else co_vershik(self.automaton, previous)
            except PreconditionError:
                path = expansion(shift(self.word, count), self.caps)
            self._paths[count] = path
        return self._paths[count]

    def passed_over(self, count: int) -> Word:
        """The letters between the origin of Z and the origin of S^count Z."""
        if count >= 0:
            return tuple(self[index].end for index in range(count))
        return tuple(self[index].end for index in range(count, 0))


def _direction_pairs(
    singular_class: SingularClass, orbits: list[ShiftedExpansions], direction: int, caps: Caps
) -> list[SingularPair]:
    found: list[SingularPair] = []
    quiet = 0
    for step in range(caps.shift_bound + 1):
        count = direction * step
        groups: dict[Word, list[int]] = defaultdict(list)
        for number, orbit in enumerate(orbits):
            groups[orbit.passed_over(count)].append(number)
        if all(len(members) < 2 for members in groups.values()):
            return found
        if direction < 0 and step == 0:
            continue
        new = [
            SingularPair(orbits[i][count], orbits[j][count], singular_class.shared_side, count)
            for members in groups.values()
            for i, j in combinations(members, 2)
            if orbits[i][count].edge(0) != orbits[j][count].edge(0)
        ]
        found.extend(new)
        quiet = 0 if new else quiet + 1
        if quiet >= caps.verify_window and step > 0:
            return found
    raise CapExceededError("Singular shifts keep producing pairs", cap="SHIFT_BOUND", limit=caps.shift_bound)


def singular_expansion_pairs(
    substitution: Substitution,
    classes: list[SingularClass] | None = None,
    caps: Caps | None = None,
) -> list[SingularPair]:
    """Expansion pairs of the shifts S^i of singular words that still share a half and have different first edges."""
    caps = caps or Caps.from_settings()
    if classes is None:
        classes = singular_words(substitution, caps)
    require_parageometric(substitution, index(substitution, classes))
    automaton = build_automaton(substitution)
    pairs: dict[frozenset, SingularPair] = {}
    for singular_class in classes:
        orbits = [ShiftedExpansions(automaton, member, caps) for member in singular_class.members]
        for direction in (1, -1):
            for pair in _direction_pairs(singular_class, orbits, direction, caps):
                pairs.setdefault(frozenset((pair.first, pair.second)), pair)
    result = sorted(pairs.values(), key=lambda pair: (pair.shift, pair.first.sort_key(), pair.second.sort_key()))
    logger.info(f"Found {len(result)} singular expansion pairs")
    return result


def _label_search_order(bound: int):
    yield 0
    for step in range(1, bound + 1):
        yield step
        yield -step


def label_tail(
    tail: EvPeriodicPath,
    orbits: list[list[ShiftedExpansions]],
    group: FreeGroup,
    caps: Caps,
) -> tuple[GroupKey | None, int | None]:
    """
    Writes Q(tail) as g · P_k where P_k is the point of class k.

    Q(V(γ)) = a_0^-1 Q(γ) and Q(V^-1(γ)) = a'_0 Q(γ), so the orbit position of the tail gives the group element.
    """
    for count in _label_search_order(caps.shift_bound):
        for number, class_orbits in enumerate(orbits):
            for orbit in class_orbits:
                try:
                    found = orbit[count] == tail
                except PreconditionError:
                    continue
                if not found:
                    continue
                passed = group.element(orbit.passed_over(count))
                return group.key(passed**-1 if count > 0 else passed), number
    return None, None


def sing_points(
    substitution: Substitution,
    pairs: list[SingularPair] | None = None,
    classes: list[SingularClass] | None = None,
    caps: Caps | None = None,
) -> SingularPointSet:
    """Tails B^n(γ), n ≥ 1, of the singular expansions grouped by end letter; they glue the prototiles."""
    caps = caps or Caps.from_settings()
    if classes is None:
        classes = singular_words(substitution, caps)
    if pairs is None:
        pairs = singular_expansion_pairs(substitution, classes, caps)
    automaton = build_automaton(substitution)
    group = FreeGroup(substitution.alphabet)
    orbits = [[ShiftedExpansions(automaton, member, caps) for member in c.members] for c in classes]

    tails: set[EvPeriodicPath] = set()
    for pair in pairs:
        for path in (pair.first, pair.second):
            tails.update(path.behead(count) for count in range(1, path.preperiod + path.period + 1))

    points: dict[Letter, list[SingularPoint]] = defaultdict(list)
    for tail in sorted(tails, key=EvPeriodicPath.sort_key):
        label, point = label_tail(tail, orbits, group, caps)
        if label is None:
            logger.warning(f"No label found for singular tail {tail.render(substitution)}")
        points[tail.end].append(SingularPoint(tail, label, point))
    return SingularPointSet(
        substitution,
        {letter: tuple(points[letter]) for letter in substitution.letters if points[letter]},
        len(classes),
    )


@dataclass(frozen=True)
class SingularAnalysis:
    substitution: Substitution
    classes: tuple[SingularClass, ...]
    report: IndexReport
    pairs: tuple[SingularPair, ...] = ()
    points: SingularPointSet | None = None

    def as_dict(self) -> dict:
        result = {
            "classes": [singular_class.as_dict(self.substitution) for singular_class in self.classes],
            "index": self.report.as_dict(),
        }
        if self.points is not None:
            result["pairs"] = [pair.as_dict(self.substitution) for pair in self.pairs]
            result["sing"] = self.points.as_dict()
        return result


def analyze_singular(substitution: Substitution, caps: Caps | None = None, gate: bool = True) -> SingularAnalysis:
    """Runs the whole singular analysis; with `gate` off a non-parageometric substitution stops after the index."""
    caps = caps or Caps.from_settings()
    classes = singular_words(substitution, caps)
    report = index(substitution, classes)
    if not report.parageometric:
        if gate:
            require_parageometric(substitution, report)
        return SingularAnalysis(substitution, tuple(classes), report)
    pairs = singular_expansion_pairs(substitution, classes, caps)
    points = sing_points(substitution, pairs, classes, caps)
    return SingularAnalysis(substitution, tuple(classes), report, tuple(pairs), points)
