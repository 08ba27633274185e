import logging
from collections import defaultdict
from dataclasses import dataclass

from apps.common.caps import Caps
from apps.common.errors import CapExceededError
from apps.singular.analysis import SingularClass, singular_words
from apps.substitutions.core import Letter, Substitution, Word

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpecialRay:
    """
    An infinite special word, kept as a window of its letters.

    A left-special ray is right-infinite and `word` holds its first letters; a right-special ray is left-infinite and
    `word` holds its last letters.
    """

    side: str
    word: Word
    extensions: frozenset[Letter]
    certified_by: int | None = None

    def as_dict(self, substitution: Substitution) -> dict:
        alphabet = substitution.alphabet
        return {
            "side": self.side,
            "word": alphabet.render(self.word),
            "extensions": sorted(alphabet.name(letter) for letter in self.extensions),
            "class": self.certified_by,
        }


def special_factors(substitution: Substitution, length: int, side: str) -> dict[Word, frozenset[Letter]]:
    """Factors of the given length with at least two extensions on the given side."""
    extensions: dict[Word, set[Letter]] = defaultdict(set)
    for factor in substitution.factors(length + 1):
        if side == "left":
            extensions[factor[1:]].add(factor[0])
        else:
            extensions[factor[:-1]].add(factor[-1])
    return {word: frozenset(letters) for word, letters in extensions.items() if len(letters) > 1}


def _stable_rays(substitution: Substitution, side: str, caps: Caps) -> list[SpecialRay]:
    length = caps.language_length
    short = special_factors(substitution, length, side)
    long = special_factors(substitution, 2 * length, side)
    rays: dict[Word, SpecialRay] = {}
    for word, letters in long.items():
        start = word[:length] if side == "left" else word[-length:]
        if start in rays or short.get(start) != letters:
            raise CapExceededError(
                f"Special factors still branch between lengths {length} and {2 * length}",
                cap="LANGUAGE_LENGTH",
                limit=length,
            )
        rays[start] = SpecialRay(side, word, letters)
    return sorted(rays.values(), key=lambda ray: ray.word)


def _class_branches(singular_class: SingularClass, length: int) -> list[tuple[str, Word, frozenset[Letter]]]:
    """The special halves the members of a class branch from."""
    branches = []
    by_right: dict[Word, set[Letter]] = defaultdict(set)
    by_left: dict[Word, set[Letter]] = defaultdict(set)
    for member in singular_class.members:
        by_right[member.letters(0, length)].add(member.letters(-1, 0)[0])
        by_left[member.letters(-length, 0)].add(member.letters(0, 1)[0])
    branches += [("left", word, frozenset(letters)) for word, letters in by_right.items() if len(letters) > 1]
    branches += [("right", word, frozenset(letters)) for word, letters in by_left.items() if len(letters) > 1]
    return branches


def special_rays(
    substitution: Substitution,
    caps: Caps | None = None,
    classes: list[SingularClass] | None = None,
) -> list[SpecialRay]:
    """
    Left-special right-infinite and right-special left-infinite rays of the language.

    Rays are read off special factors once their branching is the same at lengths L and 2L, and each one is certified
    by a class of singular words branching from it.
    """
    caps = caps or Caps.from_settings()
    substitution.require_primitive()
    if classes is None:
        classes = singular_words(substitution, caps)
    length = 2 * caps.language_length
    branches = {
        (side, word): number
        for number, singular_class in enumerate(classes)
        for side, word, _ in _class_branches(singular_class, length)
    }
    certified = []
    for side in ("left", "right"):
        for ray in _stable_rays(substitution, side, caps):
            number = branches.get((side, ray.word))
            if number is None:
                raise CapExceededError(
                    f"No singular class branches from the {side}-special ray {substitution.alphabet.render(ray.word)}",
                    cap="LAG_BOUND",
                    limit=caps.lag_bound,
                )
            certified.append(SpecialRay(side, ray.word, ray.extensions, number))
    logger.info(f"Certified {len(certified)} special rays")
    return certified
