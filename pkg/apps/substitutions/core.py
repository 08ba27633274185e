import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy

from apps.common.errors import PreconditionError, SubstitutionParseError

logger = logging.getLogger(__name__)

Letter = int
Word = tuple[Letter, ...]

EMPTY: Word = ()

_TOKEN = re.compile(r"\[([^\[\]\s]+)\]|([!-~])")


@dataclass(frozen=True)
class Alphabet:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise PreconditionError(f"Duplicate letter names in alphabet {self.names}")

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(range(len(self.names)))

    def index(self, name: str) -> Letter:
        try:
            return self.names.index(name)
        except ValueError as error:
            raise PreconditionError(f"Unknown letter {name!r}") from error

    def name(self, letter: Letter) -> str:
        return self.names[letter]

    def token(self, letter: Letter) -> str:
        name = self.names[letter]
        return name if len(name) == 1 and name not in "[]" else f"[{name}]"

    def render(self, word: Iterable[Letter]) -> str:
        return "".join(self.token(letter) for letter in word)

    def word(self, text: str) -> Word:
        """Parses a word written with single-character letters or bracketed names."""
        letters = []
        position = 0
        text = "".join(text.split())
        while position < len(text):
            match = _TOKEN.match(text, position)
            if not match:
                raise PreconditionError(f"Cannot read a letter at {text[position:]!r}")
            letters.append(self.index(match.group(1) or match.group(2)))
            position = match.end()
        return tuple(letters)


@dataclass(frozen=True)
class Substitution:
    """A non-erasing morphism of the free monoid, stored as one image per letter."""

    alphabet: Alphabet
    images: tuple[Word, ...]

    def __post_init__(self):
        if len(self.images) != len(self.alphabet):
            raise PreconditionError("A substitution needs exactly one image per letter")
        for letter, image in enumerate(self.images):
            if not image:
                raise PreconditionError(f"Image of {self.alphabet.name(letter)!r} is empty")
            if any(not 0 <= x < len(self.alphabet) for x in image):
                raise PreconditionError(f"Image of {self.alphabet.name(letter)!r} uses an unknown letter")

    @classmethod
    def from_dict(cls, rules: dict[str, str], names: Sequence[str] | None = None) -> "Substitution":
        alphabet = Alphabet(tuple(names or rules.keys()))
        return cls(alphabet, tuple(alphabet.word(rules[name]) for name in alphabet.names))

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def letters(self) -> range:
        return range(self.size)

    def __call__(self, word: Iterable[Letter]) -> Word:
        return self.apply(word)

    def apply(self, word: Iterable[Letter]) -> Word:
        result = []
        for letter in word:
            if not 0 <= letter < self.size:
                raise PreconditionError(f"Letter {letter} is not in the alphabet")
            result.extend(self.images[letter])
        return tuple(result)

    def iterate(self, word: Iterable[Letter], n: int) -> Word:
        word = tuple(word)
        for _ in range(n):
            word = self.apply(word)
        return word

    def power(self, n: int) -> "Substitution":
        return Substitution(self.alphabet, tuple(self.iterate((letter,), n) for letter in self.letters))

    def mirror(self) -> "Substitution":
        """The substitution whose images are the reversed images of this one."""
        return Substitution(self.alphabet, tuple(image[::-1] for image in self.images))

    @cached_property
    def max_image_length(self) -> int:
        return max(len(image) for image in self.images)

    @cached_property
    def incidence(self) -> sympy.Matrix:
        """Column b holds the abelianization of the image of b."""
        return sympy.Matrix(self.size, self.size, lambda a, b: self.images[b].count(a))

    @cached_property
    def inverse_incidence(self) -> sympy.Matrix:
        return self.incidence.inv()

    def abelianize(self, word: Iterable[Letter]) -> tuple[int, ...]:
        counts = [0] * self.size
        for letter in word:
            counts[letter] += 1
        return tuple(counts)

    @cached_property
    def is_primitive(self) -> bool:
        pattern = (np.array(self.incidence.tolist(), dtype=np.int64) > 0).astype(np.int64)
        power = pattern.copy()
        for _ in range((self.size - 1) ** 2 + 1):
            if power.all():
                return True
            power = np.minimum(power @ pattern, 1)
        return bool(power.all())

    def require_primitive(self) -> None:
        if not self.is_primitive:
            raise PreconditionError("The substitution is not primitive")

    @cached_property
    def _growing_power(self) -> "Substitution | None":
        """A power whose images all have length at least two, if one exists."""
        current = self
        for exponent in range(1, 2 * self.size + 2):
            if min(len(image) for image in current.images) >= 2:
                logger.debug(f"Using power {exponent} of the substitution to enumerate factors")
                return current
            current = Substitution(self.alphabet, tuple(self.apply(image) for image in current.images))
        return None

    @cached_property
    def _factor_cache(self) -> dict[int, frozenset[Word]]:
        return {}

    def factors(self, length: int) -> frozenset[Word]:
        """Factors of the given length of the language of a primitive substitution."""
        if length <= 0:
            return frozenset({EMPTY})
        cache = self._factor_cache
        if length not in cache:
            cache[length] = self._compute_factors(length)
        return cache[length]

    def _compute_factors(self, length: int) -> frozenset[Word]:
        growing = self._growing_power
        if growing is None:
            return frozenset({(letter,) for letter in self.letters}) if length == 1 else frozenset()
        if length <= 3:
            return self._closure_factors(length)
        shorter = (length - 2) // 2 + 2
        result = set()
        for word in self.factors(shorter):
            image = growing.apply(word)
            for start in range(len(image) - length + 1):
                result.add(image[start : start + length])
        return frozenset(result)

    def _closure_factors(self, length: int) -> frozenset[Word]:
        """Closes the set of factors of letter images under taking factors of images."""
        known: set[Word] = {(letter,) for letter in self.letters}
        pending = list(known)
        while pending:
            word = pending.pop()
            image = self.apply(word)
            for size in range(1, length + 1):
                for start in range(len(image) - size + 1):
                    factor = image[start : start + size]
                    if factor not in known:
                        known.add(factor)
                        pending.append(factor)
        return frozenset(word for word in known if len(word) == length)

    def language(self, max_length: int) -> frozenset[Word]:
        self.require_primitive()
        result: set[Word] = set()
        for length in range(1, max_length + 1):
            result |= self.factors(length)
        return frozenset(result)

    def in_language(self, word: Sequence[Letter]) -> bool:
        return not word or tuple(word) in self.factors(len(word))

    def render(self) -> str:
        token, render = self.alphabet.token, self.alphabet.render
        lines = (f"{token(letter)} -> {render(image)}" for letter, image in enumerate(self.images))
        return "\n".join(lines)


def parse_substitution(text: str) -> Substitution:
    """Reads rules written one per line as ``a -> ab``; ``#`` starts a comment."""
    rules: list[tuple[str, list[str], int]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise SubstitutionParseError("expected a rule of the form 'a -> word'", line=number)
        left, right = (part.strip() for part in line.split("->", 1))
        left_tokens = _tokens(left, number)
        right_tokens = _tokens(right, number)
        if len(left_tokens) != 1:
            raise SubstitutionParseError(f"left-hand side {left!r} must be a single letter", line=number)
        if not right_tokens:
            raise SubstitutionParseError("the image of a letter must not be empty", line=number)
        rules.append((left_tokens[0], right_tokens, number))

    if not rules:
        raise SubstitutionParseError("no rules found")

    names = [name for name, _, _ in rules]
    for name, _, number in rules:
        if names.count(name) > 1:
            raise SubstitutionParseError(f"letter {name!r} has more than one rule", line=number)
    alphabet = Alphabet(tuple(names))
    images = []
    for _, tokens, number in rules:
        unknown = [token for token in tokens if token not in names]
        if unknown:
            raise SubstitutionParseError(f"letter {unknown[0]!r} has no rule", line=number)
        images.append(tuple(alphabet.index(token) for token in tokens))
    return Substitution(alphabet, tuple(images))


def _tokens(text: str, line: int) -> list[str]:
    compact = "".join(text.split())
    tokens = []
    position = 0
    while position < len(compact):
        match = _TOKEN.match(compact, position)
        if not match:
            raise SubstitutionParseError(f"cannot read a letter at {compact[position:]!r}", line=line)
        tokens.append(match.group(1) or match.group(2))
        position = match.end()
    return tokens
