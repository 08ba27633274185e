import logging
import math
from collections import defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PreconditionError
from apps.contour.substitution import Arc, ContourSub, ContourSpectrum
from apps.geometry.algebra import EigenData, ExactScalar, t
from apps.substitutions.automaton import (
    EvPeriodicPath,
    PSEdge,
    PrefixSuffixAutomaton,
    build_automaton,
    finite_paths,
    p_extreme,
    vershik,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Circle:
    """A contour substitution with exact arc lengths; the contour of W, read in order, is a circle of length 1."""

    contour: ContourSub
    lengths: Mapping[Arc, ExactScalar]

    @property
    def order(self) -> tuple[Arc, ...]:
        return self.contour.initial

    def left_ends(self) -> dict[Arc, ExactScalar]:
        if len(set(self.order)) != len(self.order):
            raise PreconditionError("An arc appears twice on the contour of W")
        ends = {}
        position = self.lengths[self.order[0]] * 0
        for arc in self.order:
            ends[arc] = position
            position = position + self.lengths[arc]
        return ends


class _Offsets:
    """Positions along arcs of the points addressed by paths of the dual automaton."""

    def __init__(self, circle: Circle, eigen: EigenData):
        self.circle = circle
        self.contour = circle.contour
        self.arcs = circle.contour.arcs
        self.shrink = eigen.number_field.element(t).inverse()
        self.zero = eigen.number_field.element(0)

    def step(self, edge: PSEdge) -> ExactScalar:
        """The length of χ(x) before the arc y carried at the edge's position, for an edge x <- y of χ*."""
        arc, found = self.arcs[edge.target], self.arcs[edge.source]
        index = self.contour.occurrence(arc, found, edge.position)
        return sum((self.circle.lengths[other] for other in self.contour.images[arc][:index]), self.zero)

    def finite(self, edges: Sequence[PSEdge]) -> ExactScalar:
        total, scale = self.zero, self.zero + 1
        for edge in edges:
            scale = scale * self.shrink
            total = total + scale * self.step(edge)
        return total

    def periodic(self, path: EvPeriodicPath) -> ExactScalar:
        """Σ λ^-(i+1) ℓ(p_i), summed as a geometric series over the cycle."""
        head = self.finite(path.head)
        cycle = self.finite(path.cycle)
        return head + self._power(len(path.head)) * cycle / (1 - self._power(len(path.cycle)))

    def _power(self, exponent: int) -> ExactScalar:
        result = self.zero + 1
        for _ in range(exponent):
            result = result * self.shrink
        return result

    @cached_property
    def left_ends(self) -> dict[Arc, ExactScalar]:
        return self.circle.left_ends()

    def cylinder(self, edges: Sequence[PSEdge]) -> tuple[ExactScalar, ExactScalar]:
        """Start and length of the arc of a finite path, on the circle."""
        start = self.left_ends[self.arcs[edges[0].target]] + self.finite(edges)
        return start, self._power(len(edges)) * self.circle.lengths[self.arcs[edges[-1].source]]


def _dual_automaton(contour: ContourSub) -> PrefixSuffixAutomaton:
    return build_automaton(contour.dual_substitution)


def extend_by_pmax(contour: ContourSub, spectrum: ContourSpectrum, eigen: EigenData) -> Circle:
    """
    Cuts the arcs at the points of the paths of χ* with empty suffixes, and rewrites χ on the pieces.

    The new cut points of a tile are numbered after its gluing vertices. Each image is read off the image of the whole
    arc, which the cut points of its ends must hit exactly.
    """
    circle = Circle(contour, spectrum.lengths)
    offsets = _Offsets(circle, eigen)
    cuts: dict[Arc, set[ExactScalar]] = defaultdict(set)
    for path in p_extreme(_dual_automaton(contour))[1]:
        arc = contour.arcs[path.end]
        offset = offsets.periodic(path)
        length = circle.lengths[arc]
        if not offset.is_zero and offset != length and 0 < float(offset) < float(length):
            cuts[arc].add(offset)
    if not cuts:
        logger.info("No path with empty suffixes ends inside an arc")
        return circle

    numbers = {key: len(contour.rule.prototiles[key].gluing) for key in contour.rule.keys}
    pieces: dict[Arc, list[tuple[Arc, ExactScalar, ExactScalar]]] = {}
    for arc in contour.arcs:
        points = sorted(cuts.get(arc, ()), key=float)
        ends = [arc.start]
        for _ in points:
            numbers[arc.tile] += 1
            ends.append(numbers[arc.tile])
        ends.append(arc.end)
        bounds = [offsets.zero] + points + [circle.lengths[arc]]
        pieces[arc] = [
            (Arc(arc.tile, ends[index], ends[index + 1]), bounds[index], bounds[index + 1])
            for index in range(len(ends) - 1)
        ]

    value = eigen.number_field.element(t)
    images: dict[Arc, tuple[Arc, ...]] = {}
    positions: dict[Arc, tuple[int, ...]] = {}
    lengths: dict[Arc, ExactScalar] = {}
    for arc in contour.arcs:
        laid: list[tuple[Arc, int, ExactScalar, ExactScalar]] = []
        position = offsets.zero
        for found, where in zip(contour.images[arc], contour.positions[arc], strict=True):
            laid += [(piece, where, position + start, position + end) for piece, start, end in pieces[found]]
            position = position + circle.lengths[found]
        for piece, start, end in pieces[arc]:
            first = next((index for index, item in enumerate(laid) if item[2] == value * start), None)
            last = next((index for index, item in enumerate(laid) if item[3] == value * end), None)
            if first is None or last is None or last < first:
                raise PreconditionError(f"A cut point of {contour.name(arc)} does not map onto a cut point")
            images[piece] = tuple(item[0] for item in laid[first : last + 1])
            positions[piece] = tuple(item[1] for item in laid[first : last + 1])
            lengths[piece] = end - start

    extended = ContourSub(
        contour.rule,
        tuple(piece for arc in contour.arcs for piece, _, _ in pieces[arc]),
        images,
        positions,
        tuple(piece for arc in contour.initial for piece, _, _ in pieces[arc]),
    )
    logger.info(f"Extended contour substitution on {len(extended.arcs)} arcs ({sum(map(len, cuts.values()))} cuts)")
    return Circle(extended, lengths)


def _modulo_one(value: ExactScalar) -> ExactScalar:
    value = value - math.floor(float(value))
    if float(value) < 0:
        value = value + 1
    if value == 1:
        value = value - 1
    return value


@dataclass(frozen=True)
class IETPiece:
    arcs: tuple[Arc, ...]
    start: ExactScalar
    length: ExactScalar
    rotation: ExactScalar

    @property
    def image_start(self) -> ExactScalar:
        return _modulo_one(self.start + self.rotation)

    def as_dict(self, contour: ContourSub) -> dict:
        return {
            "arcs": [contour.name(arc) for arc in self.arcs],
            "start": {"exact": str(self.start), "value": float(self.start)},
            "length": {"exact": str(self.length), "value": float(self.length)},
            "rotation": {"exact": str(self.rotation), "value": float(self.rotation)},
            "image_start": float(self.image_start),
        }


@dataclass(frozen=True)
class IETSpec:
    """A piecewise rotation of the circle of length 1 with its pieces in circle order."""

    circle: Circle
    pieces: tuple[IETPiece, ...]
    depth: int

    def __call__(self, position: float) -> float:
        position %= 1
        for piece in self.pieces:
            offset = (position - float(piece.start)) % 1
            if offset < float(piece.length):
                return (position + float(piece.rotation)) % 1
        raise PreconditionError(f"No piece holds the point {position}")

    def as_dict(self) -> dict:
        contour = self.circle.contour
        return {
            "depth": self.depth,
            "arcs": [
                {
                    "name": contour.name(arc),
                    "exact": str(self.circle.lengths[arc]),
                    "value": float(self.circle.lengths[arc]),
                }
                for arc in self.circle.order
            ],
            "pieces": [piece.as_dict(contour) for piece in self.pieces],
        }


def _arc_rotations(circle: Circle, offsets: _Offsets, automaton, depth: int) -> dict[Arc, ExactScalar] | None:
    """The rotation the Vershik map performs on the cylinders of each arc, or None when an arc moves in two ways."""
    found: dict[Arc, set[ExactScalar]] = defaultdict(set)
    for path in finite_paths(automaton, depth):
        if not any(edge.suffix for edge in path.edges):
            continue
        start, _ = offsets.cylinder(path.edges)
        image, _ = offsets.cylinder(vershik(automaton, path).edges)
        found[circle.contour.arcs[path.end]].add(_modulo_one(image - start))
    if any(len(values) != 1 for values in found.values()) or set(found) != set(circle.order):
        return None
    return {arc: values.pop() for arc, values in found.items()}


def _pieces(circle: Circle, rotations: Mapping[Arc, ExactScalar]) -> tuple[IETPiece, ...]:
    ends = circle.left_ends()
    runs: list[list[Arc]] = []
    for arc in circle.order:
        if runs and rotations[runs[-1][-1]] == rotations[arc]:
            runs[-1].append(arc)
        else:
            runs.append([arc])
    if len(runs) > 1 and rotations[runs[0][0]] == rotations[runs[-1][-1]]:
        runs[0] = runs.pop() + runs[0]
    pieces = []
    for run in runs:
        length = sum((circle.lengths[arc] for arc in run[1:]), circle.lengths[run[0]])
        pieces.append(IETPiece(tuple(run), ends[run[0]], length, rotations[run[0]]))
    return tuple(pieces)


def _check_bijective(pieces: Sequence[IETPiece]) -> None:
    total = sum((piece.length for piece in pieces[1:]), pieces[0].length)
    if total != 1:
        raise PreconditionError("The pieces do not fill the circle")
    ordered = sorted(pieces, key=lambda piece: float(piece.image_start))
    for piece, following in zip(ordered, ordered[1:] + ordered[:1], strict=True):
        if _modulo_one(piece.image_start + piece.length) != following.image_start:
            raise PreconditionError("The images of the pieces overlap or leave gaps")


def induced_iet(circle: Circle, eigen: EigenData, depth: int | None = None, caps: Caps | None = None) -> IETSpec:
    """
    The piecewise rotation of the circle carried by the Vershik map on the paths of χ*.

    Each cylinder is rotated by the difference of the positions of its image and itself; an arc must move as one block.
    Adjacent arcs rotated by the same amount merge, and the result must not change when the depth grows by one.
    """
    caps = caps or Caps.from_settings()
    automaton = _dual_automaton(circle.contour)
    offsets = _Offsets(circle, eigen)
    if depth is None:
        depth = max(len(path.head) for path in p_extreme(automaton)[1]) + 2
    previous = None
    for current in range(depth, depth + caps.depth + 1):
        rotations = _arc_rotations(circle, offsets, automaton, current)
        if rotations is not None and rotations == previous:
            pieces = _pieces(circle, rotations)
            _check_bijective(pieces)
            logger.info(f"Piecewise rotation with {len(pieces)} pieces, stable at depth {current}")
            return IETSpec(circle, pieces, current - 1)
        previous = rotations
        logger.debug(f"Rotations at depth {current} are {'not yet' if rotations is None else ''} settled")
    raise CapExceededError("The piecewise rotation does not settle", cap="DEPTH", limit=caps.depth)
