import logging
from collections.abc import Iterable, Sequence
from functools import cached_property, reduce
from itertools import permutations
from operator import mul

import sympy
from sympy.combinatorics.free_groups import FreeGroupElement, free_group

from apps.common.errors import PreconditionError
from apps.substitutions.core import Alphabet, Letter, Substitution, Word

logger = logging.getLogger(__name__)

GroupKey = tuple[tuple[Letter, int], ...]


class FreeGroup:
    """Free group on the letters of an alphabet, backed by sympy's reduced words."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        symbols = [sympy.Symbol(f"x{letter}") for letter in alphabet]
        group, *generators = free_group(symbols)
        self.group = group
        self.generators: tuple[FreeGroupElement, ...] = tuple(generators)
        self._letter_of = {symbol: letter for letter, symbol in enumerate(symbols)}

    @property
    def identity(self) -> FreeGroupElement:
        return self.group.identity

    def element(self, word: Iterable[Letter]) -> FreeGroupElement:
        return reduce(mul, (self.generators[letter] for letter in word), self.identity)

    def from_key(self, key: GroupKey) -> FreeGroupElement:
        return reduce(mul, (self.generators[letter] ** exponent for letter, exponent in key), self.identity)

    def key(self, element: FreeGroupElement) -> GroupKey:
        return tuple((self._letter_of[symbol], int(exponent)) for symbol, exponent in element.array_form)

    def letters(self, element: FreeGroupElement) -> tuple[tuple[Letter, int], ...]:
        """The element as a sequence of (letter, +1 or -1)."""
        result = []
        for letter, exponent in self.key(element):
            sign = 1 if exponent > 0 else -1
            result.extend([(letter, sign)] * abs(exponent))
        return tuple(result)

    def split_lag(self, element: FreeGroupElement) -> tuple[Word, Word] | None:
        """Writes the element as t'^-1 t with positive words t', t, or returns None."""
        letters = self.letters(element)
        negatives = 0
        while negatives < len(letters) and letters[negatives][1] < 0:
            negatives += 1
        if any(sign < 0 for _, sign in letters[negatives:]):
            return None
        left = tuple(letter for letter, _ in reversed(letters[:negatives]))
        right = tuple(letter for letter, _ in letters[negatives:])
        return left, right

    def image(self, element: FreeGroupElement, images: Sequence[FreeGroupElement]) -> FreeGroupElement:
        return reduce(
            mul,
            (images[letter] ** exponent for letter, exponent in self.key(element)),
            self.identity,
        )

    def render(self, element: FreeGroupElement | GroupKey) -> str:
        key = element if isinstance(element, tuple) and not isinstance(element, FreeGroupElement) else self.key(element)
        parts = []
        for letter, exponent in key:
            token = self.alphabet.token(letter)
            parts.append(token if exponent == 1 else f"{token}^{exponent}")
        return " ".join(parts)


class Automorphism:
    """A substitution seen as an endomorphism of the free group, with its inverse when it exists."""

    def __init__(self, substitution: Substitution, group: FreeGroup | None = None):
        self.substitution = substitution
        self.group = group or FreeGroup(substitution.alphabet)
        self.images = tuple(self.group.element(image) for image in substitution.images)

    def __call__(self, element: FreeGroupElement) -> FreeGroupElement:
        return self.group.image(element, self.images)

    @cached_property
    def inverse_images(self) -> tuple[FreeGroupElement, ...]:
        """Images of the generators under the inverse automorphism, found by Nielsen reduction."""
        basis = list(self.images)
        tracks = list(self.group.generators)
        while self._nielsen_step(basis, tracks):
            pass
        if any(len(element) == 0 for element in basis):
            raise PreconditionError("The substitution is not an automorphism of the free group: an image collapses")
        if any(len(element) > 1 for element in basis):
            stalled = [self.group.render(element) for element in basis]
            raise PreconditionError(
                f"Nielsen reduction stalled at {', '.join(stalled)}: no product of two of them is shorter",
                basis=stalled,
            )

        inverse: list[FreeGroupElement | None] = [None] * len(basis)
        for element, track in zip(basis, tracks, strict=True):
            ((letter, exponent),) = self.group.key(element)
            inverse[letter] = track if exponent == 1 else track**-1
        if any(item is None for item in inverse):
            raise PreconditionError("The substitution is not an automorphism of the free group")
        logger.debug(
            "Inverse automorphism: "
            + ", ".join(f"{self.group.alphabet.token(x)} -> {self.group.render(g)}" for x, g in enumerate(inverse))
        )
        return tuple(inverse)

    @staticmethod
    def _nielsen_step(basis: list[FreeGroupElement], tracks: list[FreeGroupElement]) -> bool:
        """Shortens one basis element by multiplying with another one; tracks record the products."""
        for i, j in permutations(range(len(basis)), 2):
            for exponent in (1, -1):
                other, other_track = basis[j] ** exponent, tracks[j] ** exponent
                for candidate, track in (
                    (basis[i] * other, tracks[i] * other_track),
                    (other * basis[i], other_track * tracks[i]),
                ):
                    if len(candidate) < len(basis[i]):
                        basis[i], tracks[i] = candidate, track
                        return True
        return False

    @cached_property
    def is_invertible(self) -> bool:
        try:
            return bool(self.inverse_images)
        except PreconditionError:
            return False

    def inverse(self, element: FreeGroupElement) -> FreeGroupElement:
        return self.group.image(element, self.inverse_images)
