"""Python access to the crackflux core: scenarios, validation and audits."""

from ._crackflux import (
    CrackfluxError,
    ParseError,
    Scenario,
    __version__,
    fondlem_audit,
    singular_field,
)

__all__ = [
    "CrackfluxError",
    "ParseError",
    "Scenario",
    "__version__",
    "fondlem_audit",
    "singular_field",
]
