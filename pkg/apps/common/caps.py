from dataclasses import asdict, dataclass, fields, replace

from django.conf import settings

from apps.common.errors import PreconditionError


@dataclass(frozen=True)
class Caps:
    """Upper bounds on every search the pipeline runs; hitting one raises CapExceededError."""

    language_length: int = 64
    shift_bound: int = 32
    verify_window: int = 4
    lag_bound: int = 6
    state_budget: int = 20000
    depth: int = 12
    window_doublings: int = 10
    iterations: int = 14
    order_assignments: int = 100000

    def __post_init__(self):
        for field in fields(self):
            if getattr(self, field.name) <= 0:
                raise PreconditionError(f"Cap {field.name} must be positive")

    @classmethod
    def from_settings(cls, **overrides) -> "Caps":
        configured = {key.lower(): value for key, value in getattr(settings, "PIPELINE_CAPS", {}).items()}
        known = {field.name for field in fields(cls)}
        caps = cls(**{key: int(value) for key, value in configured.items() if key in known})
        return replace(caps, **{key: value for key, value in overrides.items() if value is not None})

    def as_dict(self) -> dict:
        return asdict(self)
