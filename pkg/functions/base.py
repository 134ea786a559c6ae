"""
Common interface for evaluable Lipschitz maps [0,1]^n -> [0,1]^m and their JSON registry
"""

from typing import Any, Callable, Dict, Type

import numpy as np

from utils.errors import DimensionError, SchemaError
from utils.numerics import NormKind
from utils.serialization import decode_real, encode_real, require

FUNCTION_TYPES: Dict[str, Type["LipschitzFunction"]] = {}


def register(type_name: str) -> Callable[[Type["LipschitzFunction"]], Type["LipschitzFunction"]]:
    """Class decorator adding a function type to the JSON registry"""

    def wrap(cls):
        cls.type_name = type_name
        FUNCTION_TYPES[type_name] = cls
        return cls

    return wrap


class LipschitzFunction:
    """
    An evaluable map with a certified Lipschitz bound.

    `lipschitz` is an upper bound on the Lipschitz constant in the normalized
    `norm`, valid on the whole domain (or, for maps defined on a subset, on
    that subset; see the subclass). Protocols and reductions rely on it being
    a true bound, never an estimate.
    """

    type_name = "abstract"

    def __init__(self, in_dim: int, out_dim: int, lipschitz: float, norm: NormKind):
        if in_dim < 1 or out_dim < 1:
            raise DimensionError(f"dimensions must be positive, got {in_dim} -> {out_dim}")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.lipschitz = float(lipschitz)
        self.norm = NormKind.parse(norm)

    def __call__(self, x) -> np.ndarray:
        point = np.asarray(x, dtype=float).ravel()
        if point.size != self.in_dim:
            raise DimensionError(
                f"{self.type_name} expects inputs of dimension {self.in_dim}, got {point.size}"
            )
        return self.evaluate(point)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError

    def header(self) -> Dict[str, Any]:
        return {
            "type": self.type_name,
            "n": self.in_dim,
            "m": self.out_dim,
            "p": self.norm.to_json(),
            "lambda": encode_real(self.lipschitz),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.in_dim}->{self.out_dim}, lambda={self.lipschitz:g}, p={self.norm})"


def function_from_dict(document: Dict[str, Any]) -> LipschitzFunction:
    """Rebuild any registered function from its JSON object"""
    if not isinstance(document, dict):
        raise SchemaError("a function must be a JSON object")
    _load_builtin_types()
    type_name = document.get("type", "anchor")
    cls = FUNCTION_TYPES.get(type_name)
    if cls is None:
        raise SchemaError(f"unknown function type {type_name!r}")
    try:
        return cls.from_dict(document)
    except (KeyError, TypeError, IndexError) as e:
        raise SchemaError(f"malformed {type_name!r} function: {e}") from e


def _load_builtin_types() -> None:
    # Gadget maps register themselves from the reduction and embedding modules
    import functions.anchor  # noqa: F401
    import functions.combined  # noqa: F401
    import reductions.brouwer  # noqa: F401
    import reductions.local  # noqa: F401
    import sperner.embedding  # noqa: F401


def read_norm(document: Dict[str, Any]) -> NormKind:
    try:
        return NormKind.parse(require(document, "p"))
    except ValueError as e:
        raise SchemaError(str(e)) from e


def read_lambda(document: Dict[str, Any]) -> float:
    return decode_real(require(document, "lambda"))
