"""
Error types and first-class result values shared by every module
"""

from dataclasses import dataclass, field
from typing import Any, Optional


class FixpointError(Exception):
    """Base class for errors raised by fixpoint-cc"""


class DimensionError(FixpointError, ValueError):
    """Vector or function dimensions do not line up"""


class SizeLimitError(FixpointError, ValueError):
    """A construction would exceed a configured size cap"""


class SchemaError(FixpointError, ValueError):
    """A JSON document does not match the expected schema"""


class ReductionError(FixpointError, ValueError):
    """A reduction was asked for on an instance it does not apply to"""


@dataclass(frozen=True)
class Violation:
    """Witness of a broken coloring promise, reported at the point of detection"""

    vertex: int
    reason: str

    def to_dict(self) -> dict:
        return {"vertex": self.vertex, "reason": self.reason}


class ColoringError(FixpointError, ValueError):
    """A coloring handed to a construction breaks its boundary rules"""

    def __init__(self, violation: Violation):
        super().__init__(f"vertex {violation.vertex}: {violation.reason}")
        self.violation = violation


@dataclass
class ProtocolResult:
    """
    Outcome of a protocol run.

    status is "ok" when `solution` is a declared answer, "failure" when the
    protocol ran to completion without finding one, and "violation" when a
    party detected a broken promise (see `witness`).
    """

    status: str
    solution: Any
    transcript: Any
    reason: str = ""
    witness: Optional[Violation] = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"
