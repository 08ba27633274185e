import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy

from apps.common.errors import PreconditionError
from apps.contour.orders import INITIAL, CyclicOrders, Half, Node, PatchGraph, Rotation, image_name, tile_patch
from apps.geometry.algebra import EigenData, ExactScalar, t
from apps.substitutions.core import Alphabet, Letter, Substitution
from apps.trees.tiles import TileKey, TreeSubRule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Arc:
    """The part of the contour of W_a running from its gluing vertex `start` to its gluing vertex `end` (from 1)."""

    tile: TileKey
    start: int
    end: int


def arc_name(rule: TreeSubRule, arc: Arc) -> str:
    separator = "" if arc.start < 10 and arc.end < 10 else "."
    return f"{rule.name(arc.tile)}{arc.start}{separator}{arc.end}"


@dataclass(frozen=True)
class ContourSub:
    """
    The contour substitution χ on arcs, with the contour of W.

    `positions[x][k]` is the position, in the image under σ of its letter, of the tile which carries the k-th arc of
    χ(x). The dual χ* puts x at that position of χ*(y) for the arc y found there.
    """

    rule: TreeSubRule = field(repr=False, compare=False)
    arcs: tuple[Arc, ...]
    images: Mapping[Arc, tuple[Arc, ...]]
    positions: Mapping[Arc, tuple[int, ...]]
    initial: tuple[Arc, ...]

    def name(self, arc: Arc) -> str:
        return arc_name(self.rule, arc)

    def letter(self, arc: Arc) -> Letter:
        return self.rule.letter(arc.tile)

    def forget(self, word) -> tuple[Letter, ...]:
        return tuple(self.letter(arc) for arc in word)

    @cached_property
    def dual(self) -> dict[Arc, tuple[Arc, ...]]:
        """χ*: each arc y maps to the arcs whose image meets y, ordered by the position of the carrying tile."""
        substitution = self.rule.substitution
        slots: dict[Arc, list[Arc | None]] = {
            arc: [None] * len(substitution.images[self.letter(arc)]) for arc in self.arcs
        }
        for arc in self.arcs:
            for found, position in zip(self.images[arc], self.positions[arc], strict=True):
                if slots[found][position] is not None:
                    raise PreconditionError(f"Arc {self.name(found)} is covered twice at position {position}")
                slots[found][position] = arc
        for arc, slot in slots.items():
            if None in slot:
                raise PreconditionError(f"Arc {self.name(arc)} is not covered at position {slot.index(None)}")
        return {arc: tuple(slot) for arc, slot in slots.items()}

    def occurrence(self, arc: Arc, found: Arc, position: int) -> int:
        """The index in χ(arc) of the arc `found` carried by the tile at `position`."""
        for index, (other, where) in enumerate(zip(self.images[arc], self.positions[arc], strict=True)):
            if other == found and where == position:
                return index
        raise PreconditionError(f"Arc {self.name(found)} does not occur in the image of {self.name(arc)}")

    @cached_property
    def alphabet(self) -> Alphabet:
        return Alphabet(tuple(self.name(arc) for arc in self.arcs))

    def _as_substitution(self, images: Mapping[Arc, tuple[Arc, ...]]) -> Substitution:
        index = {arc: number for number, arc in enumerate(self.arcs)}
        return Substitution(self.alphabet, tuple(tuple(index[found] for found in images[arc]) for arc in self.arcs))

    @cached_property
    def substitution(self) -> Substitution:
        return self._as_substitution(self.images)

    @cached_property
    def dual_substitution(self) -> Substitution:
        return self._as_substitution(self.dual)

    def word(self, arcs) -> tuple[Letter, ...]:
        index = {arc: number for number, arc in enumerate(self.arcs)}
        return tuple(index[arc] for arc in arcs)

    def as_dict(self) -> dict:
        render = self.alphabet.render
        return {
            "contour": render(self.word(self.initial)),
            "chi": {self.name(arc): render(self.word(self.images[arc])) for arc in self.arcs},
            "dual": {self.name(arc): render(self.word(self.dual[arc])) for arc in self.arcs},
        }


Segment = tuple[int, object, object]


def _walk(graph: PatchGraph, rotation: Rotation, half: Half, done: Callable[[Node, Half], bool]) -> list[Segment]:
    """
    Runs along the contour from a half-edge leaving a gluing vertex, cutting it at each gluing vertex reached.

    A segment (n, u, w) runs inside tile instance n from its gluing vertex u to its gluing vertex w. The walk stops
    after the first segment for which `done(node reached, next half-edge)` holds.
    """
    segments: list[Segment] = []
    opened = half[1]
    for _ in range(2 * sum(len(halves) for halves in graph.halves.values()) + 2):
        number, _, reached = half
        following = graph.following(rotation, half)
        if graph.is_gluing(number, reached):
            segments.append((number, opened, reached))
            if done(graph.target(half), following):
                return segments
            opened = following[1]
        half = following
    raise PreconditionError("The contour does not close up")


def _arc(graph: PatchGraph, segment: Segment) -> Arc:
    number, start, end = segment
    tile = graph.tile(number)
    return Arc(tile.key, tile.gluing.index(start) + 1, tile.gluing.index(end) + 1)


def tile_arcs(rule: TreeSubRule, orders: CyclicOrders, key: TileKey) -> tuple[Arc, ...]:
    """The arcs of W_a in contour order, starting from its first gluing vertex."""
    graph = PatchGraph(rule, tile_patch(key))
    rotation = orders.rotation(graph, None)
    first = rotation[graph.node(0, rule.prototiles[key].gluing[0])][0]
    segments = _walk(graph, rotation, first, lambda node, following: following == first)
    return tuple(_arc(graph, segment) for segment in segments)


def initial_contour(rule: TreeSubRule, orders: CyclicOrders) -> tuple[Arc, ...]:
    """The contour of W as a cyclic word of arcs."""
    graph = PatchGraph(rule, rule.initial)
    rotation = orders.rotation(graph, INITIAL)
    first = rotation[graph.node(0, graph.tile(0).gluing[0])][0]
    segments = _walk(graph, rotation, first, lambda node, following: following == first)
    return tuple(_arc(graph, segment) for segment in segments)


def _image(rule: TreeSubRule, key: TileKey, graph: PatchGraph, rotation: Rotation, arc: Arc, known) -> list[Segment]:
    """The segments of the contour of τ(W_a) from the image of the start of an arc to the image of its end."""
    tile = rule.prototiles[key]
    start = graph.node(*rule.vertex_map[key][tile.gluing[arc.start - 1]])
    end = graph.node(*rule.vertex_map[key][tile.gluing[arc.end - 1]])
    if arc.start == arc.end:
        first = rotation[start][0]
    elif start == end:
        raise PreconditionError(f"Both ends of arc {arc_name(rule, arc)} have the same image")
    else:
        first = graph.toward(rotation, start, end)
    segments = _walk(graph, rotation, first, lambda node, following: node == end)
    for segment in segments:
        found = _arc(graph, segment)
        if found not in known:
            raise PreconditionError(
                f"The contour of τ(W_{rule.name(key)}) meets an unlabeled arc {arc_name(rule, found)}"
            )
    return segments


def contour_substitution(rule: TreeSubRule, orders: CyclicOrders) -> ContourSub:
    """
    χ(a_ij) is the run of arcs of the children met along the contour of τ(W_a) between the images of i and j.

    The contour turns clockwise around each node, so it follows the cyclic orders.
    """
    arcs = {key: tile_arcs(rule, orders, key) for key in rule.keys}
    known = {arc for items in arcs.values() for arc in items}
    images: dict[Arc, tuple[Arc, ...]] = {}
    positions: dict[Arc, tuple[int, ...]] = {}
    for key in rule.keys:
        graph = PatchGraph(rule, rule.image(key))
        rotation = orders.rotation(graph, image_name(rule, key))
        for arc in arcs[key]:
            segments = _image(rule, key, graph, rotation, arc, known)
            images[arc] = tuple(_arc(graph, segment) for segment in segments)
            positions[arc] = tuple(rule.children[key][number].edge.position for number, _, _ in segments)
    contour = ContourSub(
        rule, tuple(arc for key in rule.keys for arc in arcs[key]), images, positions, initial_contour(rule, orders)
    )
    logger.info(f"Contour substitution on {len(contour.arcs)} arcs, contour of W with {len(contour.initial)} arcs")
    return contour


def contour_iterates(contour: ContourSub, times: int, word=None) -> tuple[Arc, ...]:
    """χ^n of the contour of W (or of a given cyclic word): a contour of τ^n(W)."""
    if times < 0:
        raise PreconditionError("The contour is iterated a nonnegative number of times")
    word = tuple(contour.initial if word is None else word)
    for _ in range(times):
        word = tuple(found for arc in word for found in contour.images[arc])
    return word


def _kernel_vector(rows: list[list[ExactScalar]], zero: ExactScalar) -> list[ExactScalar]:
    """A nonzero solution of a square singular system over Q(λ), by Gaussian elimination."""
    rows = [list(row) for row in rows]
    size = len(rows[0])
    pivots: list[int] = []
    rank = 0
    for column in range(size):
        pivot = next((row for row in range(rank, len(rows)) if not rows[row][column].is_zero), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inverse = rows[rank][column].inverse()
        rows[rank] = [entry * inverse for entry in rows[rank]]
        for row in range(len(rows)):
            if row != rank and not rows[row][column].is_zero:
                factor = rows[row][column]
                rows[row] = [entry - factor * other for entry, other in zip(rows[row], rows[rank], strict=True)]
        pivots.append(column)
        rank += 1
    free = next((column for column in range(size) if column not in pivots), None)
    if free is None:
        raise PreconditionError("λ is not an eigenvalue of the contour matrix")
    vector = [zero] * size
    vector[free] = zero + 1
    for row, column in enumerate(pivots):
        vector[column] = -rows[row][free]
    return vector


@dataclass(frozen=True)
class ContourSpectrum:
    char_poly: tuple[int, ...]
    factors: tuple[tuple[tuple[int, ...], int], ...]
    primitive: bool
    eigenvalue: float
    lengths: Mapping[Arc, ExactScalar]

    def as_dict(self, contour: ContourSub) -> dict:
        return {
            "char_poly": list(self.char_poly),
            "factors": [{"coefficients": list(factor), "multiplicity": power} for factor, power in self.factors],
            "primitive": self.primitive,
            "eigenvalue": self.eigenvalue,
            "lengths": {
                contour.name(arc): {"exact": str(length), "value": float(length)}
                for arc, length in self.lengths.items()
            },
        }


def contour_spectrum(contour: ContourSub, eigen: EigenData) -> ContourSpectrum:
    """
    The characteristic polynomial of M_χ and the arc lengths ℓ_S1.

    The lengths form the positive left eigenvector for λ, so an arc and its image under χ have lengths in ratio
    λ; they are exact in Q(λ) and sum to 1.
    """
    substitution = contour.substitution
    matrix = substitution.incidence
    poly = matrix.charpoly(t)
    coefficients = tuple(int(value) for value in poly.all_coeffs())
    _, factor_list = sympy.factor_list(poly.as_expr(), t)
    factors = tuple(
        (tuple(int(value) for value in sympy.Poly(factor, t).all_coeffs()), power) for factor, power in factor_list
    )
    primitive = substitution.is_primitive
    if not primitive:
        raise PreconditionError("The contour substitution is not primitive")

    values = np.linalg.eigvals(np.array(matrix.tolist(), dtype=float))
    dominant = float(max(values, key=lambda value: value.real).real)
    if abs(dominant - eigen.report.eigenvalue) > 1e-8:
        raise PreconditionError(f"The contour matrix has dominant eigenvalue {dominant}, not λ")

    number_field = eigen.number_field
    zero = number_field.element(0)
    value = number_field.element(t)
    size = substitution.size
    # ℓ M = λ ℓ, written as (ᵗM − λ Id) ℓ = 0
    rows = [
        [number_field.element(int(matrix[column, row])) - (value if row == column else zero) for column in range(size)]
        for row in range(size)
    ]
    vector = _kernel_vector(rows, zero)
    total = sum(vector, zero)
    vector = [entry / total for entry in vector]
    if any(float(entry) <= 0 for entry in vector):
        raise PreconditionError("The arc lengths are not all positive")
    lengths = {arc: vector[index] for index, arc in enumerate(contour.arcs)}
    logger.info(f"Contour spectrum: {poly.as_expr()}, dominant eigenvalue {dominant}")
    return ContourSpectrum(coefficients, factors, primitive, dominant, lengths)
