"""
Two-party Brouwer instances: composition, concatenation, mean and r-local families
"""

from typing import Any, Dict, Optional

import numpy as np

from functions.anchor import random_lipschitz
from functions.base import LipschitzFunction, function_from_dict
from functions.combined import CombinedFunction, compose, concat, mean
from utils.errors import DimensionError, SchemaError
from utils.numerics import NormKind, normalized_norm
from utils.serialization import check_format, decode_real, encode_real, require, with_format

COMP = "comp"
CONCAT = "concat"
MEAN = "mean"
LOCAL = "local"
KINDS = (COMP, CONCAT, MEAN, LOCAL)


class BrouwerInstance:
    """
    One player's function each (or a shared r-local family) plus the target accuracy.

    comp:   f_A: [0,1]^n -> [0,1]^m, f_B: [0,1]^m -> [0,1]^n, target f_B(f_A(x))
    concat: f_A, f_B: [0,1]^n -> [0,1]^(n/2), target (f_A(x), f_B(x))
    mean:   f_A, f_B: [0,1]^n -> [0,1]^n, target (f_A(x) + f_B(x)) / 2
    local:  target f_{x,y}(z) = f'(x|L(z), y|L(z), z) of a LocalFamily
    """

    def __init__(
        self,
        kind: str,
        f_a: Optional[LipschitzFunction] = None,
        f_b: Optional[LipschitzFunction] = None,
        epsilon: float = 0.1,
        family=None,
        provenance: Optional[Dict[str, Any]] = None,
    ):
        if kind not in KINDS:
            raise ValueError(f"unknown instance kind {kind!r}, expected one of {KINDS}")
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.kind = kind
        self.f_a = f_a
        self.f_b = f_b
        self.epsilon = float(epsilon)
        self.family = family
        self.provenance = provenance
        self._check_dims()
        self._target = self._build_target()

    def _check_dims(self) -> None:
        if self.kind == LOCAL:
            if self.family is None:
                raise ValueError("a local instance needs a LocalFamily")
            return
        if self.f_a is None or self.f_b is None:
            raise ValueError(f"a {self.kind} instance needs both players' functions")
        a, b = self.f_a, self.f_b
        if self.kind == COMP and (a.out_dim != b.in_dim or b.out_dim != a.in_dim):
            raise DimensionError(f"comp needs f_A: n->m and f_B: m->n, got {a.in_dim}->{a.out_dim} and {b.in_dim}->{b.out_dim}")
        if self.kind == CONCAT:
            n = a.in_dim
            if n % 2 or b.in_dim != n or a.out_dim != n // 2 or b.out_dim != n // 2:
                raise DimensionError(f"concat needs even n and f_A, f_B: n -> n/2, got n={n}")
        if self.kind == MEAN and not (a.in_dim == a.out_dim == b.in_dim == b.out_dim):
            raise DimensionError("mean needs f_A, f_B: n -> n")

    def _build_target(self):
        if self.kind == COMP:
            return compose(self.f_a, self.f_b)
        if self.kind == CONCAT:
            return concat(self.f_a, self.f_b)
        if self.kind == MEAN:
            return mean(self.f_a, self.f_b)
        return None

    @property
    def dim(self) -> int:
        if self.kind == LOCAL:
            return self.family.n
        return self.f_a.in_dim

    @property
    def norm(self) -> NormKind:
        if self.kind == LOCAL:
            return self.family.norm
        return self.f_a.norm

    @property
    def lambda_a(self) -> float:
        return self.family.lipschitz if self.kind == LOCAL else self.f_a.lipschitz

    @property
    def lambda_b(self) -> float:
        return self.family.lipschitz if self.kind == LOCAL else self.f_b.lipschitz

    @property
    def lambda_combined(self) -> float:
        """Certified Lipschitz bound of the map whose fixed point is sought"""
        if self.kind == LOCAL:
            return self.family.lipschitz
        return self._target.lipschitz

    @property
    def target(self) -> Optional[CombinedFunction]:
        return self._target

    def evaluate(self, x) -> np.ndarray:
        """The referee's view: the full map whose approximate fixed point is sought"""
        point = np.asarray(x, dtype=float).ravel()
        if point.size != self.dim:
            raise DimensionError(f"expected a point of dimension {self.dim}, got {point.size}")
        if self.kind == LOCAL:
            from reductions.local import local_eval

            return local_eval(self.family, point)
        return self._target(point)

    def residual(self, x) -> float:
        point = np.asarray(x, dtype=float).ravel()
        return normalized_norm(self.evaluate(point) - point, self.norm)

    def to_dict(self) -> Dict[str, Any]:
        doc = {
            "type": "brouwer",
            "kind": self.kind,
            "epsilon": encode_real(self.epsilon),
            "p": self.norm.to_json(),
        }
        if self.kind == LOCAL:
            doc["family"] = self.family.to_dict()
        else:
            doc["f_A"] = self.f_a.to_dict()
            doc["f_B"] = self.f_b.to_dict()
        if self.provenance:
            doc["provenance"] = self.provenance
        return with_format(doc)

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "BrouwerInstance":
        check_format(document, "brouwer")
        kind = require(document, "kind")
        epsilon = decode_real(require(document, "epsilon"))
        try:
            if kind == LOCAL:
                from reductions.local import LocalFamily

                family = LocalFamily.from_dict(require(document, "family"))
                return cls(kind, epsilon=epsilon, family=family, provenance=document.get("provenance"))
            f_a = function_from_dict(require(document, "f_A"))
            f_b = function_from_dict(require(document, "f_B"))
            return cls(kind, f_a, f_b, epsilon, provenance=document.get("provenance"))
        except SchemaError:
            raise
        except ValueError as e:
            raise SchemaError(f"invalid {kind!r} instance: {e}") from e

    def __repr__(self) -> str:
        return f"BrouwerInstance({self.kind}, n={self.dim}, eps={self.epsilon:g}, p={self.norm})"


def random_instance(
    kind: str,
    seed: int,
    n: int,
    lam: float = 1.0,
    epsilon: float = 0.1,
    norm="inf",
    m: Optional[int] = None,
    anchor_count: int = 8,
    **local_params,
) -> BrouwerInstance:
    """
    Seeded instance of the given kind; both players' functions are lam-Lipschitz.

    `m` is the middle dimension of a comp instance (defaults to n). For local
    instances the extra keyword arguments go to random_local_family.
    """
    if kind == LOCAL:
        from reductions.local import random_local_family

        family = random_local_family(seed, n=n, lambda_base=lam, norm=norm, **local_params)
        return BrouwerInstance(LOCAL, epsilon=epsilon, family=family)
    if kind == COMP:
        mid = n if m is None else m
        f_a = random_lipschitz(seed, n, mid, lam, norm, anchor_count)
        f_b = random_lipschitz(seed + 1, mid, n, lam, norm, anchor_count)
    elif kind == CONCAT:
        if n % 2:
            raise DimensionError(f"concat instances need an even dimension, got {n}")
        f_a = random_lipschitz(seed, n, n // 2, lam, norm, anchor_count)
        f_b = random_lipschitz(seed + 1, n, n // 2, lam, norm, anchor_count)
    elif kind == MEAN:
        f_a = random_lipschitz(seed, n, n, lam, norm, anchor_count)
        f_b = random_lipschitz(seed + 1, n, n, lam, norm, anchor_count)
    else:
        raise ValueError(f"unknown instance kind {kind!r}")
    return BrouwerInstance(kind, f_a, f_b, epsilon)
