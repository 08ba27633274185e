import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import matplotlib
from matplotlib.collections import LineCollection, PolyCollection
from matplotlib.figure import Figure
from matplotlib.patches import Arc as ArcPatch

from apps.common.errors import PreconditionError
from apps.contour.iet import IETSpec
from apps.geometry.algebra import EigenData
from apps.geometry.dual import Face, e1star_iterate
from apps.geometry.embedding import Embedding
from apps.geometry.points import rauzy_cloud
from apps.pipeline.config import RenderOptions
from apps.substitutions.core import Substitution
from apps.trees.tiles import Patch, TreeSubRule

logger = logging.getLogger(__name__)

SVG_SALT = "rauzy-trees"
CONTOUR_RADIUS = 1.0
IMAGE_RADIUS = 1.2

Point = tuple[float, float]


@dataclass(frozen=True)
class Polyline:
    points: tuple[Point, ...]
    color: str
    width: float = 1.0


@dataclass(frozen=True)
class Polygon:
    points: tuple[Point, ...]
    color: str


@dataclass(frozen=True)
class Disk:
    center: Point
    radius: float
    color: str


@dataclass(frozen=True)
class CircleArc:
    """The part of a circle centered at the origin between two positions, in turns read clockwise from the top."""

    radius: float
    start: float
    end: float
    color: str
    width: float = 1.0


@dataclass(frozen=True)
class Label:
    position: Point
    text: str
    color: str = "#000000"


Primitive = Polyline | Polygon | Disk | CircleArc | Label


@dataclass
class Scene:
    title: str
    layers: list[list[Primitive]] = field(default_factory=list)

    def layer(self) -> list[Primitive]:
        self.layers.append([])
        return self.layers[-1]

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.layers)


def _degrees(turns: float) -> float:
    return 90.0 - 360.0 * turns


def _draw_layer(axes, layer: list[Primitive], options: RenderOptions) -> None:
    lines: dict[tuple[str, float], list] = defaultdict(list)
    polygons: dict[str, list] = defaultdict(list)
    disks: dict[tuple[str, float], list] = defaultdict(list)
    for item in layer:
        if isinstance(item, Polyline):
            lines[(item.color, item.width)].append(item.points)
        elif isinstance(item, Polygon):
            polygons[item.color].append(item.points)
        elif isinstance(item, Disk):
            disks[(item.color, item.radius)].append(item.center)
        elif isinstance(item, CircleArc):
            theta1, theta2 = _degrees(item.end), _degrees(item.start)
            axes.add_patch(
                ArcPatch(
                    (0, 0),
                    2 * item.radius,
                    2 * item.radius,
                    theta1=theta1,
                    theta2=theta2,
                    color=item.color,
                    linewidth=item.width * options.stroke,
                )
            )
        elif isinstance(item, Label):
            axes.text(*item.position, item.text, color=item.color, ha="center", va="center", fontsize=8)
    for (color, width), segments in sorted(lines.items()):
        axes.add_collection(LineCollection(segments, colors=color, linewidths=width * options.stroke))
    for color, shapes in sorted(polygons.items()):
        axes.add_collection(PolyCollection(shapes, facecolors=color, edgecolors="#ffffff", linewidths=0.1))
    for (color, radius), centers in sorted(disks.items()):
        xs, ys = zip(*centers, strict=True)
        axes.scatter(xs, ys, s=(radius * options.point_size) ** 2, c=color, linewidths=0)


def to_svg(scene: Scene, options: RenderOptions) -> str:
    """Draws a scene with matplotlib; the output is identical for identical scenes."""
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        figure = Figure(figsize=(options.size, options.size))
        axes = figure.add_subplot()
        axes.set_aspect("equal")
        axes.set_axis_off()
        axes.set_title(scene.title)
        for layer in scene.layers:
            _draw_layer(axes, layer, options)
        axes.autoscale_view()
        buffer = io.StringIO()
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    logger.debug(f"Rendered {scene.title!r} with {len(scene)} primitives")
    return buffer.getvalue()


def tree_scene(
    rule: TreeSubRule, patch: Patch, embedding: Embedding, eigen: EigenData, options: RenderOptions, title: str
) -> Scene:
    scene = Scene(title)
    layer = scene.layer()
    for start, end, tile in sorted(embedding.segments(eigen), key=lambda item: (item[2], *item[0], *item[1])):
        color = options.color(rule.letter(patch.tiles[tile].tile))
        layer.append(Polyline((tuple(start.tolist()), tuple(end.tolist())), color))
    return scene


def cloud_scene(substitution: Substitution, eigen: EigenData, iterations: int, options: RenderOptions) -> Scene:
    """Points of the Rauzy fractal approximated by the paths of the given length, colored by their letter."""
    scene = Scene(f"Rauzy fractal, depth {iterations}")
    layer = scene.layer()
    for point, letter in rauzy_cloud(substitution, iterations):
        layer.append(Disk(tuple(point.coordinates(eigen).tolist()), 1.0, options.color(letter)))
    return scene


def _face_points(eigen: EigenData, face: Face) -> tuple[Point, ...]:
    others = [letter for letter in range(eigen.size) if letter != face.letter]
    base = list(face.base)
    if len(others) == 1:
        corners = [base, [value + (index == others[0]) for index, value in enumerate(base)]]
    elif len(others) == 2:
        first, second = others
        corners = [
            base,
            [value + (index == first) for index, value in enumerate(base)],
            [value + (index in (first, second)) for index, value in enumerate(base)],
            [value + (index == second) for index, value in enumerate(base)],
        ]
    else:
        raise PreconditionError("Dual patches are drawn for two or three letters only")
    return tuple(tuple(eigen.coordinates(corner).tolist()) for corner in corners)


def dual_scene(substitution: Substitution, eigen: EigenData, iterations: int, options: RenderOptions) -> Scene:
    scene = Scene(f"E1* patch, {iterations} iterations")
    layer = scene.layer()
    for face in sorted(e1star_iterate(substitution, iterations)):
        points = _face_points(eigen, face)
        color = options.color(face.letter)
        layer.append(Polyline(points, color) if len(points) == 2 else Polygon(points, color))
    return scene


def circle_scene(iet: IETSpec, options: RenderOptions) -> Scene:
    """The contour of W on the inner circle and the images of the pieces of the rotation on the outer circle."""
    contour = iet.circle.contour
    scene = Scene("Piecewise rotation of the contour")
    arcs, pieces, labels = scene.layer(), scene.layer(), scene.layer()
    position = 0.0
    for arc in iet.circle.order:
        length = float(iet.circle.lengths[arc])
        arcs.append(CircleArc(CONTOUR_RADIUS, position, position + length, options.color(contour.letter(arc)), 2.0))
        middle = _degrees(position + length / 2)
        labels.append(Label(_polar(0.85 * CONTOUR_RADIUS, middle), contour.name(arc)))
        position += length
    for number, piece in enumerate(iet.pieces):
        start, length = float(piece.start), float(piece.length)
        image = float(piece.image_start)
        color = options.color(number)
        pieces.append(CircleArc(CONTOUR_RADIUS * 1.05, start, start + length, color, 1.0))
        pieces.append(CircleArc(IMAGE_RADIUS, image, image + length, color, 2.0))
    return scene


def _polar(radius: float, degrees: float) -> Point:
    return (radius * math.cos(math.radians(degrees)), radius * math.sin(math.radians(degrees)))
