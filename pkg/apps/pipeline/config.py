import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from django.conf import settings

from apps.common.caps import Caps
from apps.common.errors import PreconditionError
from apps.substitutions.core import Substitution, parse_substitution
from apps.substitutions.fixtures import FIXTURES

PLANAR = "planar"
ADJACENCY = "adjacency"
DEFAULT_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass(frozen=True)
class RenderOptions:
    palette: tuple[str, ...] = DEFAULT_PALETTE
    stroke: float = 1.0
    point_size: float = 1.5
    size: float = 8.0

    @classmethod
    def from_settings(cls) -> "RenderOptions":
        options = getattr(settings, "RENDER_OPTIONS", {})
        palette = tuple(getattr(settings, "RENDER_PALETTE", DEFAULT_PALETTE))
        return cls(
            palette=palette or DEFAULT_PALETTE,
            stroke=float(options.get("STROKE", cls.stroke)),
            point_size=float(options.get("POINT_SIZE", cls.point_size)),
            size=float(options.get("SIZE", cls.size)),
        )

    def color(self, letter: int) -> str:
        return self.palette[letter % len(self.palette)]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a pipeline command depends on; two runs with the same digest produce the same artifacts."""

    rules: str
    source: str = ""
    caps: Caps = field(default_factory=Caps)
    iterations: int = 3
    prune: bool = False
    cover: str | None = None
    orders: str = PLANAR
    orders_data: dict | None = None
    render: RenderOptions = field(default_factory=RenderOptions)

    def __post_init__(self):
        if not 0 <= self.iterations <= self.caps.iterations:
            raise PreconditionError(f"Iterations must lie between 0 and {self.caps.iterations}")
        if self.cover not in (None, ADJACENCY):
            raise PreconditionError(f"Unknown covering {self.cover!r}")
        if self.prune and self.cover:
            raise PreconditionError("Pruning and the adjacency covering exclude each other")

    @classmethod
    def from_options(
        cls,
        source: str,
        iterations: int | None = None,
        prune: bool = False,
        cover: str | None = None,
        orders: str | None = None,
        **caps,
    ) -> "PipelineConfig":
        """Reads a rules file, or a fixture by name, with caps from the settings overridden by the options."""
        if source in FIXTURES:
            rules = FIXTURES[source]
        else:
            path = Path(source)
            if not path.is_file():
                raise PreconditionError(f"No substitution file or fixture named {source!r}")
            rules = path.read_text()

        orders = orders or PLANAR
        orders_data = None
        if orders != PLANAR:
            path = Path(orders)
            if not path.is_file():
                raise PreconditionError(f"No cyclic orders file {orders!r}")
            try:
                orders_data = json.loads(path.read_text())
            except json.JSONDecodeError as error:
                raise PreconditionError(f"Cyclic orders file {orders!r} is not JSON: {error}") from error

        limits = Caps.from_settings(**caps)
        return cls(
            rules=rules,
            source=source,
            caps=limits,
            iterations=limits.iterations if iterations is None else iterations,
            prune=prune,
            cover=cover,
            orders=PLANAR if orders_data is None else "explicit",
            orders_data=orders_data,
            render=RenderOptions.from_settings(),
        )

    @property
    def substitution(self) -> Substitution:
        return parse_substitution(self.rules)

    def with_iterations(self, iterations: int) -> "PipelineConfig":
        return replace(self, iterations=iterations)

    def as_dict(self) -> dict:
        data = asdict(self)
        data["render"]["palette"] = list(self.render.palette)
        return data

    def digest(self) -> str:
        canonical = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()
