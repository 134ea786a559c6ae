"""
Normalized norms, grids and the vector identities the rest of the package relies on.

Every norm in this package is NORMALIZED: for x in R^n,

    ||x||_p   = ((1/n) * sum_i |x_i|^p) ** (1/p)     for finite p >= 1
    ||x||_inf = max_i |x_i|

so the all-ones vector has norm 1 in every dimension. numpy.linalg.norm and
most libraries compute the unnormalized norm; do not mix the two, every
epsilon bound in the protocols and reductions is stated for the normalized one.
"""

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from utils.errors import DimensionError


def default_tolerance() -> float:
    """Absolute tolerance for epsilon comparisons (FIXPOINT_TOLERANCE, default 1e-9)"""
    return float(os.getenv("FIXPOINT_TOLERANCE", "1e-9"))


@dataclass(frozen=True)
class NormKind:
    """A normalized p-norm; p is a real >= 1 or math.inf for the max norm"""

    p: float

    def __post_init__(self):
        if math.isnan(self.p) or self.p < 1:
            raise ValueError(f"norm exponent must be >= 1 or inf, got {self.p}")

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @classmethod
    def parse(cls, value: Union["NormKind", float, int, str]) -> "NormKind":
        if isinstance(value, NormKind):
            return value
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "max"):
                return cls(math.inf)
            return cls(float(text))
        return cls(float(value))

    def to_json(self) -> Union[str, float]:
        return "inf" if self.is_inf else self.p

    def __str__(self) -> str:
        return "inf" if self.is_inf else f"{self.p:g}"


INF = NormKind(math.inf)
L2 = NormKind(2.0)


def normalized_norm(x: Sequence[float], p: Union[NormKind, float, str] = INF) -> float:
    """Normalized p-norm of a nonempty vector"""
    arr = np.abs(np.asarray(x, dtype=float).ravel())
    if arr.size == 0:
        raise DimensionError("normalized_norm of an empty vector")
    norm = NormKind.parse(p)
    if norm.is_inf:
        return float(arr.max())
    if norm.p == 1:
        return float(arr.mean())
    if norm.p == 2:
        return float(math.sqrt(np.mean(arr * arr)))
    return float(np.mean(arr ** norm.p) ** (1.0 / norm.p))


def row_norms(rows: np.ndarray, p: Union[NormKind, float, str] = INF) -> np.ndarray:
    """Normalized norm of every row of a 2-D array"""
    arr = np.abs(np.atleast_2d(np.asarray(rows, dtype=float)))
    if arr.shape[1] == 0:
        raise DimensionError("row_norms of zero-length rows")
    norm = NormKind.parse(p)
    if norm.is_inf:
        return arr.max(axis=1)
    if norm.p == 2:
        return np.sqrt(np.mean(arr * arr, axis=1))
    return np.mean(arr ** norm.p, axis=1) ** (1.0 / norm.p)


def distance(x: Sequence[float], y: Sequence[float], p: Union[NormKind, float, str] = INF) -> float:
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"distance between shapes {a.shape} and {b.shape}")
    return normalized_norm(a - b, p)


def as_point(coords: Sequence[float], dim: Optional[int] = None, tol: float = 0.0) -> np.ndarray:
    """
    Validate coordinates as a point of [0,1]^dim and return it as a float64 array.

    Coordinates within `tol` of the box are clipped onto it.
    """
    point = np.array(coords, dtype=float).ravel()
    if point.size == 0:
        raise DimensionError("a point needs at least one coordinate")
    if dim is not None and point.size != dim:
        raise DimensionError(f"expected a point of dimension {dim}, got {point.size}")
    if np.any(np.isnan(point)) or np.any(point < -tol) or np.any(point > 1 + tol):
        raise ValueError(f"point {point.tolist()} leaves [0,1]^{point.size}")
    return np.clip(point, 0.0, 1.0)


def split_blocks(x: Sequence[float], sizes: Sequence[int]) -> list:
    arr = np.asarray(x, dtype=float)
    if sum(sizes) != arr.size:
        raise DimensionError(f"block sizes {list(sizes)} do not cover a vector of length {arr.size}")
    return np.split(arr, np.cumsum(sizes)[:-1])


def block_extraction_factor(blocks: int, p: Union[NormKind, float, str]) -> float:
    """Factor r^(1/p) bounding one block's normalized norm by the whole vector's (1 for p = inf)"""
    norm = NormKind.parse(p)
    if norm.is_inf:
        return 1.0
    return float(blocks) ** (1.0 / norm.p)


@dataclass(frozen=True)
class GridSpec:
    """
    The lattice {0, alpha, 2*alpha, ..., floor(1/alpha)*alpha}^dim.

    When 1/alpha is an integer the lattice is closed (it reaches 1) and every
    point of the cube lies within alpha/2 of a grid point per coordinate.
    Otherwise the gap above the last grid point is covered only to within
    alpha; callers that need the alpha/2 radius check `closed`.
    """

    dim: int
    alpha: float

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"grid dimension must be positive, got {self.dim}")
        if not (0 < self.alpha <= 1):
            raise ValueError(f"grid spacing must lie in (0, 1], got {self.alpha}")

    @property
    def closed(self) -> bool:
        inverse = 1.0 / self.alpha
        return abs(inverse - round(inverse)) <= 1e-9 * max(1.0, inverse)

    def require_closed(self) -> None:
        if not self.closed:
            raise ValueError(f"1/alpha must be an integer, got alpha={self.alpha}")

    @property
    def steps(self) -> int:
        inverse = 1.0 / self.alpha
        return int(round(inverse)) if self.closed else int(math.floor(inverse))

    @property
    def points_per_axis(self) -> int:
        return self.steps + 1

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    def level(self, index) -> np.ndarray:
        index = np.asarray(index, dtype=float)
        return index / self.steps if self.closed else index * self.alpha

    def axis(self) -> np.ndarray:
        return self.level(np.arange(self.points_per_axis))


def grid_points(spec: GridSpec) -> Iterator[np.ndarray]:
    """Lattice points of the grid in lexicographic order (lazy; the grid can be large)"""
    axis = spec.axis()
    for index in itertools.product(range(spec.points_per_axis), repeat=spec.dim):
        yield axis[list(index)]


def grid_array(spec: GridSpec) -> np.ndarray:
    """All grid points as a (size, dim) array, in the same order as grid_points"""
    axis = spec.axis()
    mesh = np.meshgrid(*([axis] * spec.dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def nearest_grid(x: Sequence[float], spec: GridSpec) -> np.ndarray:
    """Nearest grid point per coordinate; a coordinate exactly halfway rounds down"""
    point = np.asarray(x, dtype=float).ravel()
    if point.size != spec.dim:
        raise DimensionError(f"point of dimension {point.size} against a grid of dimension {spec.dim}")
    scaled = point * spec.steps if spec.closed else point / spec.alpha
    lower = np.floor(scaled)
    index = np.where(scaled - lower > 0.5, lower + 1, lower)
    index = np.clip(index, 0, spec.steps)
    return spec.level(index)


def grid_index(x: Sequence[float], spec: GridSpec) -> int:
    """Position of a grid point in the lexicographic enumeration"""
    point = np.asarray(x, dtype=float)
    idx = np.rint(point * spec.steps if spec.closed else point / spec.alpha).astype(int)
    position = 0
    for value in idx:
        position = position * spec.points_per_axis + int(value)
    return position


def within(value: float, bound: float, tol: Optional[float] = None) -> bool:
    """value <= bound up to an absolute tolerance"""
    slack = default_tolerance() if tol is None else tol
    return value <= bound + slack
