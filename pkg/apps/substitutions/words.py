import logging
from dataclasses import dataclass, replace

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.substitutions.automaton import (
    EvPeriodicPath,
    PrefixSuffixAutomaton,
    PSEdge,
    build_automaton,
    p_extreme,
    path_prefix,
    vershik_power,
)
from apps.substitutions.core import EMPTY, Substitution, Word

logger = logging.getLogger(__name__)


def right_window(substitution: Substitution, path: EvPeriodicPath, length: int) -> Word:
    """Z_0 ... Z_{length-1} = a_0 s_0 σ(s_1) σ²(s_2) ... for the word Z whose right half is addressed by the path."""
    letters = [path.end]
    level = 0
    horizon = path.preperiod + path.period
    while len(letters) < length:
        if level >= horizon and not path.has_suffixes:
            raise PreconditionError("The path has only empty suffixes: its right half is not determined")
        letters.extend(substitution.iterate(path.edge(level).suffix, level))
        level += 1
    return tuple(letters[:length])


def left_window(substitution: Substitution, path: EvPeriodicPath, length: int) -> Word:
    """Z_{-length} ... Z_{-1}, the end of ... σ²(p_2) σ(p_1) p_0."""
    if length <= 0:
        return EMPTY
    letters: Word = EMPTY
    level = 0
    horizon = path.preperiod + path.period
    while len(letters) < length:
        if level >= horizon and not path.has_prefixes:
            raise PreconditionError("The path has only empty prefixes: its left half is not determined")
        letters = substitution.iterate(path.edge(level).prefix, level) + letters
        level += 1
    return letters[-length:]


def path_window(substitution: Substitution, path: EvPeriodicPath, left: int, right: int) -> Word:
    """The letters Z_{-left} ... Z_{right-1} of the word addressed by the path."""
    return left_window(substitution, path, left) + right_window(substitution, path, right)


@dataclass(frozen=True)
class BiInfiniteWord:
    """
    S^offset(Z) where the right half of Z is addressed by `right`.

    `left` addresses S^-1(Z) and is only needed for σ-periodic points, whose `right` path carries no prefix at all.
    """

    substitution: Substitution
    right: EvPeriodicPath
    left: EvPeriodicPath | None = None
    offset: int = 0

    def __post_init__(self):
        if self.left is None and not self.right.has_prefixes:
            raise PreconditionError("A word whose expansion has only empty prefixes needs its left expansion")
        if self.left is not None and not self.left.has_suffixes and not self.right.has_suffixes:
            raise PreconditionError("The right half of the word is not determined")

    def _base_left(self, length: int) -> Word:
        if length <= 0:
            return EMPTY
        if self.left is None:
            return left_window(self.substitution, self.right, length)
        return (left_window(self.substitution, self.left, length - 1) + (self.left.end,))[-length:]

    def letters(self, start: int, stop: int) -> Word:
        """W_start ... W_{stop-1}."""
        start, stop = start + self.offset, stop + self.offset
        if stop <= start:
            return EMPTY
        negative = self._base_left(-start)[: max(0, min(stop, 0) - start)] if start < 0 else EMPTY
        positive = right_window(self.substitution, self.right, stop)[max(start, 0) :] if stop > 0 else EMPTY
        return negative + positive

    def window(self, radius: int) -> Word:
        return self.letters(-radius, radius)

    def render(self, radius: int = 8) -> str:
        alphabet = self.substitution.alphabet
        return f"...{alphabet.render(self.letters(-radius, 0))}.{alphabet.render(self.letters(0, radius))}..."


def canonical(word: BiInfiniteWord) -> BiInfiniteWord:
    """Absorbs the shift into the expansion whenever the word is not a periodic point."""
    if word.left is not None or word.offset == 0:
        return word
    automaton = build_automaton(word.substitution)
    try:
        return replace(word, right=vershik_power(automaton, word.right, word.offset), offset=0)
    except PreconditionError:
        return word


def point_from_expansion(substitution: Substitution, path: EvPeriodicPath) -> BiInfiniteWord:
    """The word whose prefix-suffix expansion is the given path."""
    return BiInfiniteWord(substitution, path)


def periodic_point(substitution: Substitution, left: EvPeriodicPath, right: EvPeriodicPath) -> BiInfiniteWord:
    """The σ-periodic word δ.η with δ in P_max and η in P_min; end(δ)end(η) must be in the language."""
    if left.has_suffixes or right.has_prefixes:
        raise PreconditionError("A periodic point pairs a path of P_max with a path of P_min")
    if not substitution.in_language((left.end, right.end)):
        raise PreconditionError(
            f"{substitution.alphabet.render((left.end, right.end))} is not in the language of the substitution"
        )
    return BiInfiniteWord(substitution, right, left)


def shift(word: BiInfiniteWord, count: int) -> BiInfiniteWord:
    return canonical(replace(word, offset=word.offset + count))


def words_with_expansion(substitution: Substitution, path: EvPeriodicPath) -> list[BiInfiniteWord]:
    """
    Every word whose prefix-suffix expansion is the given path.

    A path with both prefixes and suffixes addresses a single word. A path ending in P_min or P_max addresses a shift
    S^k σ^n(P) of a σ-periodic point, one for each periodic point P compatible with the tail.
    """
    if path.has_prefixes and path.has_suffixes:
        return [point_from_expansion(substitution, path)]
    automaton = build_automaton(substitution)
    depth = path.preperiod
    tail = path.behead(depth)
    prefix_length = len(path_prefix(substitution, path.head))
    p_min, p_max = p_extreme(automaton)

    def lift(left: EvPeriodicPath, right: EvPeriodicPath, offset: int) -> BiInfiniteWord:
        for _ in range(depth):
            left = left.prepend((automaton.last_edge(left.end),))
            right = right.prepend((automaton.first_edge(right.end),))
        return BiInfiniteWord(substitution, right, left, offset)

    if path.has_prefixes:
        # the tail addresses S^-1(P) for P = tail.η
        offset = prefix_length - len(substitution.iterate((tail.end,), depth))
        return [lift(tail, right, offset) for right in p_min if substitution.in_language((tail.end, right.end))]
    if path.has_suffixes:
        return [lift(left, tail, prefix_length) for left in p_max if substitution.in_language((left.end, tail.end))]
    raise PreconditionError("A path with only empty prefixes and suffixes addresses no word")


def word_expansion(word: BiInfiniteWord, caps: Caps | None = None) -> EvPeriodicPath:
    """The expansion of the word, read off its representation when possible."""
    if word.left is None or word.offset == 0:
        return word.right
    automaton = build_automaton(word.substitution)
    try:
        if word.offset > 0:
            return vershik_power(automaton, word.right, word.offset)
        return vershik_power(automaton, word.left, word.offset + 1)
    except PreconditionError:
        return expansion(word, caps)


@dataclass(frozen=True)
class _Parse:
    starts: tuple[int, ...]
    letters: Word


def _parses(substitution: Substitution, window: Word, budget: int) -> list[_Parse]:
    """Every way of cutting the window into σ-images of a word whose 3-letter factors are in the language."""
    images = substitution.images
    complete: list[_Parse] = []
    pending: list[tuple[tuple[int, ...], Word]] = []
    for letter, image in enumerate(images):
        for cut in range(len(image)):
            visible = image[cut : cut + len(window)]
            if window[: len(visible)] == visible:
                pending.append(((-cut,), (letter,)))
    explored = 0
    while pending:
        explored += 1
        if explored > budget:
            raise CapExceededError(
                "Too many partial parses while recognizing a window", cap="STATE_BUDGET", limit=budget
            )
        starts, letters = pending.pop()
        position = starts[-1] + len(images[letters[-1]])
        if position >= len(window):
            complete.append(_Parse(starts, letters))
            continue
        for letter, image in enumerate(images):
            candidate = letters + (letter,)
            if not substitution.in_language(candidate[-3:]):
                continue
            visible = image[: len(window) - position]
            if window[position : position + len(visible)] == visible:
                pending.append((starts + (position,), candidate))
    return complete


def _read_parse(automaton: PrefixSuffixAutomaton, parse: _Parse, origin: int, base: int):
    """The edge covering the origin, the block count from the base cut and the letter starting at the base cut."""
    images = automaton.substitution.images
    index = next(
        index
        for index, start in enumerate(parse.starts)
        if start <= origin < start + len(images[parse.letters[index]])
    )
    edge = automaton.edge(parse.letters[index], origin - parse.starts[index])
    if base not in parse.starts:
        return edge, None, None
    base_index = parse.starts.index(base)
    return edge, index - base_index, parse.letters[base_index]


def desubstitute(word: BiInfiniteWord, caps: Caps | None = None) -> tuple[PSEdge, BiInfiniteWord]:
    """
    Writes the word as S^|p|(σ(W')) and returns the edge b <-(p,s)- a recognized at the origin with W'.

    The edge is read from an alignment of σ-images on a finite window around the origin. The radius doubles until every
    admissible alignment agrees on two consecutive radii, and the result is checked against the representation of the
    word.
    """
    caps = caps or Caps.from_settings()
    substitution = word.substitution
    substitution.require_primitive()
    automaton = build_automaton(substitution)
    head = word.right.edge(0)
    # the cut at the start of σ(a_1) in the base word
    base_cut = -word.offset - len(head.prefix)
    radius = 2 * substitution.max_image_length + abs(base_cut)

    previous = None
    for _ in range(caps.window_doublings + 1):
        window = word.window(radius)
        readings = {
            _read_parse(automaton, parse, radius, radius + base_cut)
            for parse in _parses(substitution, window, caps.state_budget)
        }
        if not readings:
            raise PreconditionError("The word has no desubstitution: some window is not in the language")
        if len(readings) == 1 and readings == previous:
            edge, blocks, letter = readings.pop()
            break
        previous = readings if len(readings) == 1 else None
        radius *= 2
    else:
        raise CapExceededError(
            "Recognizability radius not reached", cap="WINDOW_DOUBLINGS", limit=caps.window_doublings
        )

    if blocks is None or letter != head.source or (word.offset == 0 and edge != head):
        raise PreconditionError("The recognized desubstitution disagrees with the representation of the word")
    left = word.left.behead(1) if word.left is not None else None
    return edge, canonical(BiInfiniteWord(substitution, word.right.behead(1), left, blocks))


def expansion(word: BiInfiniteWord, caps: Caps | None = None) -> EvPeriodicPath:
    """The prefix-suffix expansion of the word, by repeated desubstitution until a state repeats."""
    caps = caps or Caps.from_settings()
    seen: dict[BiInfiniteWord, int] = {}
    edges: list[PSEdge] = []
    current = canonical(word)
    while current not in seen:
        if len(seen) >= caps.state_budget:
            raise CapExceededError("Desubstitution did not cycle", cap="STATE_BUDGET", limit=caps.state_budget)
        seen[current] = len(edges)
        edge, current = desubstitute(current, caps)
        edges.append(edge)
    start = seen[current]
    logger.debug(f"Expansion found after {len(edges)} desubstitutions, cycle starts at {start}")
    return EvPeriodicPath.of(edges[:start], edges[start:])
