"""
Anchor-based Lipschitz functions with on-demand McShane extension.

A function is stored as finitely many anchors (s, v_s) with s in [0,1]^n and
v_s in [0,1]^m. Off the anchors it is evaluated coordinatewise as

    F(x)_i = clamp_[0,1]( min_s ( v_s[i] + lambda * ||x - s|| ) )

Each coordinate is a minimum of lambda-Lipschitz functions, so F is
lambda-Lipschitz coordinatewise and therefore in every normalized p-norm.
F agrees with the anchors when they are coordinatewise lambda-regular, which
holds automatically for the max norm and is what `lipschitz_regularize`
produces for any norm. For the Euclidean norm this stands in for Kirszbraun's
extension; agreement with arbitrary l2-Lipschitz anchors is not attempted.
"""

from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from functions.base import LipschitzFunction, read_lambda, read_norm, register
from utils.errors import DimensionError, SchemaError
from utils.numerics import INF, NormKind, default_tolerance, row_norms
from utils.serialization import decode_vector, encode_vector, require


def _pairwise(points: np.ndarray, norm: NormKind) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    k = points.shape[0]
    return row_norms(diff.reshape(k * k, -1), norm).reshape(k, k)


@register("anchor")
class AnchorFunction(LipschitzFunction):
    """A lambda-Lipschitz map given by anchors plus the McShane extension rule"""

    def __init__(
        self,
        points: Sequence[Sequence[float]],
        values: Sequence[Sequence[float]],
        lam: float,
        norm=INF,
        check: bool = True,
        tol: Optional[float] = None,
    ):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if points.shape[0] == 0 or points.size == 0:
            raise DimensionError("an anchor function needs at least one anchor")
        if points.shape[0] != values.shape[0]:
            raise DimensionError(f"{points.shape[0]} anchor points but {values.shape[0]} values")
        if lam < 0:
            raise ValueError(f"lambda must be >= 0, got {lam}")
        super().__init__(points.shape[1], values.shape[1], lam, norm)
        for name, arr in (("anchor points", points), ("anchor values", values)):
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(f"{name} must lie in [0,1]")
        self.points = points
        self.values = values
        if check:
            bad = self.lipschitz_violation(tol)
            if bad is not None:
                s, t, ratio = bad
                raise ValueError(
                    f"anchors {s} and {t} break the {self.lipschitz:g}-Lipschitz bound (ratio {ratio:.6g})"
                )

    @property
    def anchors(self) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        return zip(self.points, self.values)

    def lipschitz_violation(self, tol: Optional[float] = None) -> Optional[Tuple[int, int, float]]:
        """First anchor pair breaking ||v_s - v_t|| <= lambda * ||s - t||, or None"""
        slack = default_tolerance() if tol is None else tol
        k = self.points.shape[0]
        dx = _pairwise(self.points, self.norm)
        dv = _pairwise(self.values, self.norm)
        excess = dv - self.lipschitz * dx
        for s in range(k):
            for t in range(s + 1, k):
                if excess[s, t] > slack:
                    ratio = dv[s, t] / dx[s, t] if dx[s, t] > 0 else float("inf")
                    return s, t, float(ratio)
        return None

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return mcshane_eval(self, x)

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["anchors"] = [
            {"x": encode_vector(s), "v": encode_vector(v)} for s, v in zip(self.points, self.values)
        ]
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "AnchorFunction":
        anchors = require(document, "anchors")
        if not isinstance(anchors, list) or not anchors:
            raise SchemaError("anchors must be a nonempty list")
        points = [decode_vector(require(a, "x")) for a in anchors]
        values = [decode_vector(require(a, "v")) for a in anchors]
        func = cls(points, values, read_lambda(document), read_norm(document))
        n = document.get("n", func.in_dim)
        m = document.get("m", func.out_dim)
        if (n, m) != (func.in_dim, func.out_dim):
            raise SchemaError(f"declared dims {n}->{m} disagree with anchors {func.in_dim}->{func.out_dim}")
        return func


def mcshane_eval(func: AnchorFunction, x) -> np.ndarray:
    point = np.asarray(x, dtype=float).ravel()
    if point.size != func.in_dim:
        raise DimensionError(f"expected a point of dimension {func.in_dim}, got {point.size}")
    dist = row_norms(func.points - point, func.norm)
    candidates = func.values + func.lipschitz * dist[:, None]
    return np.clip(candidates.min(axis=0), 0.0, 1.0)


def lipschitz_regularize(raw, lam: float, norm=INF) -> AnchorFunction:
    """
    Lower McShane regularization of raw (point, value) data.

    Each value v_s[i] becomes min_t (raw_t[i] + lam * ||s - t||); the result is
    coordinatewise lam-regular, so it passes the anchor invariant for every norm
    and equals the raw data whenever that already was lam-regular.
    """
    raw = list(raw)
    if not raw:
        raise DimensionError("lipschitz_regularize needs at least one raw point")
    norm = NormKind.parse(norm)
    points = np.atleast_2d(np.array([np.asarray(s, dtype=float).ravel() for s, _ in raw]))
    values = np.atleast_2d(np.array([np.asarray(v, dtype=float).ravel() for _, v in raw]))
    dist = _pairwise(points, norm)
    regular = (values[None, :, :] + lam * dist[:, :, None]).min(axis=1)
    return AnchorFunction(points, np.clip(regular, 0.0, 1.0), lam, norm)


def random_lipschitz(seed: int, n: int, m: int, lam: float, norm=INF, anchor_count: int = 8) -> AnchorFunction:
    """Seeded random anchor function: uniform anchors and values, then regularized"""
    if anchor_count < 1:
        raise ValueError(f"anchor_count must be >= 1, got {anchor_count}")
    rng = np.random.default_rng(seed)
    points = rng.random((anchor_count, n))
    values = rng.random((anchor_count, m))
    return lipschitz_regularize(zip(points, values), lam, norm)


def constant_function(value: Sequence[float], in_dim: int, norm=INF) -> AnchorFunction:
    return AnchorFunction([np.zeros(in_dim)], [list(value)], 0.0, norm)
