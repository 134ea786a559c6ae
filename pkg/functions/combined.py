"""
Composition, concatenation and mean of two Lipschitz maps, plus small building blocks
(identity, projections, constants, complements) used by reductions and tests.
"""

from typing import Any, Dict, Sequence

import numpy as np

from functions.base import LipschitzFunction, function_from_dict, read_norm, register
from utils.errors import DimensionError, SchemaError
from utils.numerics import INF, NormKind
from utils.serialization import decode_real, decode_vector, encode_real, encode_vector, require

COMPOSE = "compose"
CONCAT = "concat"
MEAN = "mean"
KINDS = (COMPOSE, CONCAT, MEAN)


def concat_lipschitz(left: LipschitzFunction, right: LipschitzFunction, norm: NormKind) -> float:
    """
    Bound for x -> (f(x), g(x)) in normalized norms.

    With output widths m_f, m_g the normalized norm of the pair weighs each block
    by its width, so the bound is ((m_f*l_f^p + m_g*l_g^p) / (m_f + m_g))^(1/p);
    for equal widths that is the normalized norm of (l_f, l_g).
    """
    if norm.is_inf:
        return max(left.lipschitz, right.lipschitz)
    total = left.out_dim + right.out_dim
    weighted = left.out_dim * left.lipschitz ** norm.p + right.out_dim * right.lipschitz ** norm.p
    return float((weighted / total) ** (1.0 / norm.p))


@register("combined")
class CombinedFunction(LipschitzFunction):
    """f_B after f_A, the pair (f_A, f_B), or their coordinatewise mean"""

    def __init__(self, kind: str, left: LipschitzFunction, right: LipschitzFunction):
        if kind not in KINDS:
            raise ValueError(f"unknown combination {kind!r}, expected one of {KINDS}")
        if left.norm != right.norm:
            raise ValueError(f"cannot combine functions under norms {left.norm} and {right.norm}")
        norm = left.norm
        if kind == COMPOSE:
            if left.out_dim != right.in_dim:
                raise DimensionError(f"compose needs {left.out_dim} == {right.in_dim}")
            dims = (left.in_dim, right.out_dim)
            lam = left.lipschitz * right.lipschitz
        elif kind == CONCAT:
            if left.in_dim != right.in_dim:
                raise DimensionError(f"concat needs equal input dims, got {left.in_dim} and {right.in_dim}")
            dims = (left.in_dim, left.out_dim + right.out_dim)
            lam = concat_lipschitz(left, right, norm)
        else:
            if (left.in_dim, left.out_dim) != (right.in_dim, right.out_dim):
                raise DimensionError("mean needs identical dimensions on both sides")
            dims = (left.in_dim, left.out_dim)
            lam = (left.lipschitz + right.lipschitz) / 2.0
        super().__init__(dims[0], dims[1], lam, norm)
        self.kind = kind
        self.left = left
        self.right = right

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return combined_eval(self, x)

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc.update({"kind": self.kind, "left": self.left.to_dict(), "right": self.right.to_dict()})
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "CombinedFunction":
        return cls(
            require(document, "kind"),
            function_from_dict(require(document, "left")),
            function_from_dict(require(document, "right")),
        )


def combined_eval(func: CombinedFunction, x) -> np.ndarray:
    point = np.asarray(x, dtype=float).ravel()
    if point.size != func.in_dim:
        raise DimensionError(f"expected a point of dimension {func.in_dim}, got {point.size}")
    if func.kind == COMPOSE:
        return func.right(func.left(point))
    if func.kind == CONCAT:
        return np.concatenate([func.left(point), func.right(point)])
    return (func.left(point) + func.right(point)) / 2.0


def compose(f_a: LipschitzFunction, f_b: LipschitzFunction) -> CombinedFunction:
    """f_B(f_A(x))"""
    return CombinedFunction(COMPOSE, f_a, f_b)


def concat(f_a: LipschitzFunction, f_b: LipschitzFunction) -> CombinedFunction:
    return CombinedFunction(CONCAT, f_a, f_b)


def mean(f_a: LipschitzFunction, f_b: LipschitzFunction) -> CombinedFunction:
    return CombinedFunction(MEAN, f_a, f_b)


@register("identity")
class Identity(LipschitzFunction):
    def __init__(self, dim: int, norm=INF):
        super().__init__(dim, dim, 1.0, norm)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return x.copy()

    def to_dict(self) -> Dict[str, Any]:
        return self.header()

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "Identity":
        return cls(int(require(document, "n")), read_norm(document))


@register("projection")
class Projection(LipschitzFunction):
    """
    x -> x[start:start+width].

    In normalized norms a block of width w out of n coordinates can carry
    (n/w)^(1/p) of the whole norm, which is the certified bound.
    """

    def __init__(self, in_dim: int, start: int, width: int, norm=INF):
        if start < 0 or width < 1 or start + width > in_dim:
            raise DimensionError(f"block [{start}, {start + width}) does not fit in dimension {in_dim}")
        norm = NormKind.parse(norm)
        lam = 1.0 if norm.is_inf else (in_dim / width) ** (1.0 / norm.p)
        super().__init__(in_dim, width, lam, norm)
        self.start = start

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return x[self.start : self.start + self.out_dim].copy()

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["start"] = self.start
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "Projection":
        return cls(int(require(document, "n")), int(require(document, "start")), int(require(document, "m")), read_norm(document))


@register("constant")
class Constant(LipschitzFunction):
    def __init__(self, value: Sequence[float], in_dim: int, norm=INF):
        value = np.asarray(value, dtype=float).ravel()
        if np.any(value < 0) or np.any(value > 1):
            raise ValueError("a constant must lie in [0,1]^m")
        super().__init__(in_dim, value.size, 0.0, norm)
        self.value = value

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.value.copy()

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["value"] = encode_vector(self.value)
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "Constant":
        value = decode_vector(require(document, "value"))
        if len(value) != document.get("m", len(value)):
            raise SchemaError("constant value does not match its declared m")
        return cls(value, int(require(document, "n")), read_norm(document))


@register("complement")
class Complement(LipschitzFunction):
    """x -> 1 - f(x)"""

    def __init__(self, inner: LipschitzFunction):
        super().__init__(inner.in_dim, inner.out_dim, inner.lipschitz, inner.norm)
        self.inner = inner

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self.inner(x)

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["inner"] = self.inner.to_dict()
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "Complement":
        return cls(function_from_dict(require(document, "inner")))


@register("scaled")
class Scaled(LipschitzFunction):
    """x -> c * f(x) for a factor c in [0,1]"""

    def __init__(self, inner: LipschitzFunction, factor: float):
        if not 0 <= factor <= 1:
            raise ValueError(f"scale factor must lie in [0,1], got {factor}")
        super().__init__(inner.in_dim, inner.out_dim, factor * inner.lipschitz, inner.norm)
        self.inner = inner
        self.factor = float(factor)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.factor * self.inner(x)

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc.update({"factor": encode_real(self.factor), "inner": self.inner.to_dict()})
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "Scaled":
        return cls(function_from_dict(require(document, "inner")), decode_real(require(document, "factor")))
