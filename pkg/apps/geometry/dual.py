import logging
from collections.abc import Iterable
from dataclasses import dataclass

import sympy

from apps.geometry.algebra import EigenData, RationalVector, rational_vector
from apps.substitutions.automaton import PSEdge, build_automaton
from apps.substitutions.core import Letter, Substitution

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Face:
    """The face (x, a)* of the unit hypercube at x, orthogonal to e_a."""

    letter: Letter
    base: RationalVector

    @classmethod
    def unit(cls, size: int, letter: Letter) -> "Face":
        return cls(letter, rational_vector([0] * size))

    @property
    def integral(self) -> bool:
        return all(value.is_integer for value in self.base)

    def as_dict(self, substitution: Substitution) -> dict:
        return {"letter": substitution.alphabet.name(self.letter), "base": [str(value) for value in self.base]}


def unit_faces(substitution: Substitution) -> set[Face]:
    return {Face.unit(substitution.size, letter) for letter in substitution.letters}


def dual_child(substitution: Substitution, face: Face, edge: PSEdge) -> Face:
    """The face E1* puts on the automaton edge a <-(p,s)- b into the letter of the face."""
    shifted = sympy.Matrix(face.base) + sympy.Matrix(substitution.abelianize(edge.prefix))
    return Face(edge.source, tuple(substitution.inverse_incidence * shifted))


def e1star_step(substitution: Substitution, faces: Iterable[Face]) -> set[Face]:
    """E1*(σ)(x, a)* = ⋃ (M^-1 (x + ℓ(p)), b)* over the automaton edges a <-(p,s)- b."""
    automaton = build_automaton(substitution)
    return {dual_child(substitution, face, edge) for face in faces for edge in automaton.incoming[face.letter]}


def e1star_iterate(substitution: Substitution, times: int, faces: Iterable[Face] | None = None) -> set[Face]:
    faces = set(faces) if faces is not None else unit_faces(substitution)
    for _ in range(times):
        faces = e1star_step(substitution, faces)
    if not all(face.integral for face in faces):
        logger.warning(f"E1* after {times} steps produced faces with non-integral bases")
    return faces


def stepped_letters(eigen: EigenData, base: RationalVector) -> frozenset[Letter]:
    """The letters i with (x, i)* in the stepped plane 0 <= <x, v> < v_i of the left eigenvector."""
    height = eigen.dot(eigen.v, base)
    if not height.is_zero and float(height) < 0:
        return frozenset()
    letters = []
    for letter, bound in enumerate(eigen.v):
        difference = height - bound
        if not difference.is_zero and float(difference) < 0:
            letters.append(letter)
    return frozenset(letters)
