import logging
from collections.abc import Iterable
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import sympy

from apps.common.caps import Caps
from apps.geometry.algebra import EigenData, RationalVector, rational_vector
from apps.substitutions.automaton import EvPeriodicPath, FinitePath, PSEdge, build_automaton
from apps.substitutions.core import Letter, Substitution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExactPoint:
    """
    A point of E_c, kept as a rational vector before projection.

    The eigenline of an irreducible Pisot matrix holds no nonzero rational vector, so two points are equal in E_c
    exactly when their vectors are equal.
    """

    vector: RationalVector

    @classmethod
    def origin(cls, size: int) -> "ExactPoint":
        return cls(rational_vector([0] * size))

    def __add__(self, other: "ExactPoint") -> "ExactPoint":
        return ExactPoint(tuple(first + second for first, second in zip(self.vector, other.vector, strict=True)))

    def __sub__(self, other: "ExactPoint") -> "ExactPoint":
        return ExactPoint(tuple(first - second for first, second in zip(self.vector, other.vector, strict=True)))

    def transform(self, matrix: sympy.Matrix) -> "ExactPoint":
        return ExactPoint(tuple(matrix * sympy.Matrix(self.vector)))

    def translate(self, letter: Letter) -> "ExactPoint":
        vector = list(self.vector)
        vector[letter] += 1
        return ExactPoint(tuple(vector))

    def coordinates(self, eigen: EigenData) -> np.ndarray:
        return eigen.coordinates(self.vector)

    def as_dict(self, eigen: EigenData) -> dict:
        return {"vector": [str(value) for value in self.vector], "xy": self.coordinates(eigen).tolist()}


def _abelian(substitution: Substitution, word) -> sympy.Matrix:
    return sympy.Matrix(substitution.abelianize(word))


def path_vector(substitution: Substitution, edges: Iterable[PSEdge]) -> sympy.Matrix:
    """ℓ(p(γ)) = Σ M^i ℓ(p_i), by Horner's rule from the last edge."""
    matrix = substitution.incidence
    vector = sympy.zeros(substitution.size, 1)
    for edge in reversed(tuple(edges)):
        vector = matrix * vector + _abelian(substitution, edge.prefix)
    return vector


def phi(eigen: EigenData, path: EvPeriodicPath) -> ExactPoint:
    """
    The Rauzy map of an eventually periodic expansion α β^∞.

    Its vector is ℓ(p(α)) + M^m (Id − M^n)^-1 ℓ(p(β)), with m = |α| and n = |β|.
    """
    substitution = eigen.substitution
    periodic = eigen.periodic_inverse(path.period) * path_vector(substitution, path.cycle)
    vector = path_vector(substitution, path.head) + eigen.matrix ** path.preperiod * periodic
    return ExactPoint(tuple(vector))


def finite_point(substitution: Substitution, path: FinitePath) -> ExactPoint:
    return ExactPoint(tuple(path_vector(substitution, path.edges)))


def domain_exchange_step(point: ExactPoint, letter: Letter) -> ExactPoint:
    """z ↦ z + π_c(ℓ(a)) on the piece of letter a."""
    return point.translate(letter)


def rauzy_cloud(
    substitution: Substitution, length: int, letter: Letter | None = None
) -> list[tuple[ExactPoint, Letter]]:
    """
    One point per path of the given length, labeled by the end letter.

    The points ending at a are the images M x + ℓ(p) of the points ending at b for each edge a <-(p,s)- b.
    """
    automaton = build_automaton(substitution)
    matrix = substitution.incidence
    layer = {end: [ExactPoint.origin(substitution.size)] for end in substitution.letters}
    for _ in range(length):
        layer = {
            end: [
                ExactPoint(tuple(matrix * sympy.Matrix(point.vector) + _abelian(substitution, edge.prefix)))
                for edge in automaton.incoming[end]
                for point in layer[edge.source]
            ]
            for end in substitution.letters
        }
    ends = [letter] if letter is not None else list(substitution.letters)
    cloud = [(point, end) for end in ends for point in layer[end]]
    logger.debug(f"Rauzy cloud of {len(cloud)} points at depth {length}")
    return cloud


@dataclass(frozen=True)
class CoincidenceWitness:
    first: Letter
    second: Letter
    iterations: int
    letter: Letter
    first_prefix: tuple[int, ...]
    second_prefix: tuple[int, ...]

    def as_dict(self, substitution: Substitution) -> dict:
        name = substitution.alphabet.name
        return {
            "letters": [name(self.first), name(self.second)],
            "n": self.iterations,
            "letter": name(self.letter),
            "prefixes": [list(self.first_prefix), list(self.second_prefix)],
        }


@dataclass(frozen=True)
class StrongCoincidence:
    holds: bool
    witnesses: tuple[CoincidenceWitness, ...]
    missing: tuple[tuple[Letter, Letter], ...] = ()

    def as_dict(self, substitution: Substitution) -> dict:
        name = substitution.alphabet.name
        return {
            "holds": self.holds,
            "witnesses": [witness.as_dict(substitution) for witness in self.witnesses],
            "missing": [[name(first), name(second)] for first, second in self.missing],
        }


def _occurrences(substitution: Substitution, letter: Letter, iterations: int, budget: int) -> set[tuple] | None:
    """(letter, ℓ(prefix)) for each occurrence in σ^n(letter); None past the length budget."""
    word = substitution.iterate((letter,), iterations)
    if len(word) > budget:
        return None
    found = set()
    counts = [0] * substitution.size
    for current in word:
        found.add((current, tuple(counts)))
        counts[current] += 1
    return found


def strong_coincidence(
    substitution: Substitution, caps: Caps | None = None, limit: int | None = None
) -> StrongCoincidence:
    """
    For each pair of letters, searches n such that σ^n(i) = p i s and σ^n(j) = p' i s' with ℓ(p) = ℓ(p').

    Gives up on a pair once σ^n of its letters is longer than the language length budget.
    """
    caps = caps or Caps.from_settings()
    limit = caps.iterations if limit is None else limit
    budget = caps.language_length**2
    witnesses, missing = [], []
    for first, second in combinations(substitution.letters, 2):
        witness = None
        for iterations in range(limit + 1):
            left = _occurrences(substitution, first, iterations, budget)
            right = _occurrences(substitution, second, iterations, budget)
            if left is None or right is None:
                break
            shared = sorted(left & right)
            if shared:
                letter, prefix = shared[0]
                witness = CoincidenceWitness(first, second, iterations, letter, prefix, prefix)
                break
        if witness is None:
            missing.append((first, second))
        else:
            witnesses.append(witness)
    result = StrongCoincidence(not missing, tuple(witnesses), tuple(missing))
    logger.info(f"Strong coincidence: {result.holds} ({len(witnesses)} witnessed pairs)")
    return result
