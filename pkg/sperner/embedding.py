"""
Sperner colorings that simulate a pair of functions f_A: simplex^b -> simplex^a,
f_B: simplex^a -> simplex^b.

The big simplex has dimension d = a + b + 1: colors 0..a belong to A, colors
a+1..d to B. The hyperplane H = {B-mass = t*} separates the two sides and its
cross-section is the product simplex^a x simplex^b. Vertices of cells crossing
H are colored from the functions, so a panchromatic cell sits where p is near
f_A(q) and q is near f_B(p), i.e. near a fixed point of f_B(f_A(.)).
"""

from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from functions.base import LipschitzFunction, function_from_dict, register
from protocols.instances import COMP, BrouwerInstance
from reductions.records import BackmapStep, EpsilonMap, ReductionRecord
from sperner.coloring import SpernerColoring
from sperner.triangulation import Cell, Triangulation, build_triangulation
from utils.errors import DimensionError, ReductionError, SchemaError
from utils.numerics import default_tolerance
from utils.serialization import require

SimplexMap = Callable[[np.ndarray], np.ndarray]


def mu_vector(w: Sequence[float]) -> np.ndarray:
    """
    Coefficients mu >= 0 with w = sum_i mu_i (v_i - o), at least one of them zero.

    w is a difference of two barycentric vectors; its component along the all-ones
    direction is dropped, since the v_i - o sum to zero.
    """
    lam = np.asarray(w, dtype=float).ravel()
    lam = lam - lam.mean()
    return lam - lam.min()


def mu_color(w: Sequence[float]) -> int:
    """Smallest index whose coefficient in the conical representation of w is zero"""
    lam = np.asarray(w, dtype=float).ravel()
    return int(np.argmin(lam - lam.mean()))


def t_star(k: int) -> float:
    """B-mass of the separating hyperplane; (2*floor(k/2)+1)/(2k) is never j/k"""
    return (2 * (k // 2) + 1) / (2 * k)


def cross_section_coords(
    x: Sequence[float], a: int, b: int, t: float, tol: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """(p, q) in simplex^a x simplex^b for a barycentric point x of the big simplex lying on H"""
    point = np.asarray(x, dtype=float).ravel()
    if point.size != a + b + 2:
        raise DimensionError(f"expected {a + b + 2} barycentric coordinates, got {point.size}")
    tol = default_tolerance() if tol is None else tol
    mass = point[a + 1 :].sum()
    if abs(mass - t) > tol:
        raise ValueError(f"point has B-mass {mass:.12g}, not on the hyperplane at {t:.12g}")
    return point[: a + 1] / (1.0 - t), point[a + 1 :] / t


def cross_section_point(p: Sequence[float], q: Sequence[float], t: float) -> np.ndarray:
    return np.concatenate([(1.0 - t) * np.asarray(p, dtype=float), t * np.asarray(q, dtype=float)])


def _crossing_points(bary: np.ndarray, masses: np.ndarray, t: float) -> np.ndarray:
    """
    Mean of the points where the edges of each cell meet H.

    bary: (cells, d+1, d+1) barycentric vertex coordinates; masses: (cells, d+1).
    Every cell passed in must cross H.
    """
    cells, width, _ = bary.shape
    total = np.zeros((cells, width))
    count = np.zeros(cells)
    for i in range(width):
        for j in range(i + 1, width):
            mi, mj = masses[:, i], masses[:, j]
            crosses = (mi - t) * (mj - t) < 0
            if not crosses.any():
                continue
            share = np.where(crosses, (t - mi) / np.where(crosses, mj - mi, 1.0), 0.0)
            point = bary[:, i] + share[:, None] * (bary[:, j] - bary[:, i])
            total[crosses] += point[crosses]
            count[crosses] += 1
    return total / count[:, None]


def crossing_point(T: Triangulation, cell: Cell, a: int) -> np.ndarray:
    """h(cell): the canonical point of H inside a cell that crosses it"""
    rows = T.vertices[list(cell.vertices)]
    masses = rows[:, a + 1 :].sum(axis=1) / T.k
    t = t_star(T.k)
    if not (masses.min() < t < masses.max()):
        raise ValueError(f"cell {cell.index} does not cross the hyperplane")
    return _crossing_points((rows / T.k)[None], masses[None], t)[0]


def _side_fallback(T: Triangulation, vertex_ids: np.ndarray, a: int, a_side: np.ndarray) -> np.ndarray:
    """Argmax-barycentric color among the vertex's side indices inside its face's support"""
    y = T.vertices[vertex_ids].astype(float)
    side = np.zeros_like(T.support[vertex_ids])
    side[:, : a + 1] = a_side[:, None]
    side[:, a + 1 :] = ~a_side[:, None]
    allowed = side & T.support[vertex_ids]
    return np.argmax(np.where(allowed, y, -1.0), axis=1)


def brouwer_to_sperner(
    f_a: SimplexMap, f_b: SimplexMap, a: int, b: int, k: int, T: Optional[Triangulation] = None
) -> Tuple[SpernerColoring, Dict[str, Any]]:
    """
    Sperner coloring of the (a+b+1)-simplex at resolution k, split at t = a+1.

    Cells crossing H are visited in cell order and each gets the colors of its
    canonical point h: A-side vertices take mu_color(f_A(q) - p), B-side
    vertices a+1+mu_color(f_B(p) - q). A vertex keeps the color of the first
    cell that reaches it. Vertices off the crossing cells, or whose color
    breaks the boundary rule, take the argmax-barycentric color of their side.

    Returns the coloring and the parameters `sperner_backmap` needs.
    """
    if a < 0 or b < 0:
        raise ValueError(f"need a, b >= 0, got a={a}, b={b}")
    d = a + b + 1
    T = build_triangulation(d, k) if T is None else T
    if (T.d, T.k) != (d, k):
        raise ValueError(f"triangulation has d={T.d}, k={T.k}; expected d={d}, k={k}")
    _check_map(f_a, b + 1, a + 1, "f_A")
    _check_map(f_b, a + 1, b + 1, "f_B")
    t = t_star(k)

    vertex_mass = T.vertices[:, a + 1 :].sum(axis=1) / k
    a_side = vertex_mass < t
    colors = _side_fallback(T, np.arange(T.vertex_count), a, a_side)

    cell_mass = vertex_mass[T.cell_vertices]
    crossing = np.nonzero((cell_mass.min(axis=1) < t) & (cell_mass.max(axis=1) > t))[0]
    if crossing.size:
        rows = T.cell_vertices[crossing]
        h = _crossing_points(T.vertices[rows] / k, cell_mass[crossing], t)
        side_colors = np.empty((crossing.size, 2), dtype=np.int64)
        for n, point in enumerate(h):
            p, q = cross_section_coords(point, a, b, t)
            side_colors[n, 0] = mu_color(np.asarray(f_a(q), dtype=float) - p)
            side_colors[n, 1] = a + 1 + mu_color(np.asarray(f_b(p), dtype=float) - q)

        flat = rows.ravel()
        proposed = np.where(a_side[rows], side_colors[:, :1], side_colors[:, 1:]).ravel()
        first_ids, first = np.unique(flat, return_index=True)
        chosen = proposed[first]
        ok = T.support[first_ids, chosen]
        colors[first_ids[ok]] = chosen[ok]

    coloring = SpernerColoring.from_colors(d, k, colors, a + 1)
    return coloring, {"d": d, "k": k, "a": a, "b": b}


def _check_map(f, in_dim: int, out_dim: int, name: str) -> None:
    if isinstance(f, LipschitzFunction) and (f.in_dim, f.out_dim) != (in_dim, out_dim):
        raise DimensionError(f"{name} must map {in_dim} to {out_dim} coordinates, got {f.in_dim} -> {f.out_dim}")


def _resolve_cell(T: Triangulation, solution) -> Cell:
    if isinstance(solution, Cell):
        return solution
    if isinstance(solution, dict):
        return T.cell_from_dict(solution.get("cell", solution))
    raise SchemaError(f"cannot read a cell from {type(solution).__name__}")


def sperner_backmap(solution, params: Dict[str, Any]) -> np.ndarray:
    """
    q of the canonical point of a panchromatic cell; with the interval chart,
    the coordinate s of q = (1 - s, s).
    """
    try:
        d, k, a, b = (int(require(params, key)) for key in ("d", "k", "a", "b"))
    except (TypeError, ValueError) as e:
        raise SchemaError(f"malformed embedding parameters: {e}") from e
    T = build_triangulation(d, k)
    cell = _resolve_cell(T, solution)
    try:
        _, q = cross_section_coords(crossing_point(T, cell, a), a, b, t_star(k))
    except ValueError as e:
        raise ReductionError(f"cell {cell.index} cannot be mapped back: {e}") from e
    if params.get("chart") == "interval":
        return np.array([q[1]])
    return q


@register("interval_chart")
class IntervalChart(LipschitzFunction):
    """
    A map [0,1] -> [0,1] read on the 1-simplex through s <-> (1 - s, s).

    Both coordinates move by |ds|, so the normalized norms of differences
    equal |ds| and the Lipschitz bound carries over unchanged (on the simplex).
    """

    def __init__(self, inner: LipschitzFunction):
        if (inner.in_dim, inner.out_dim) != (1, 1):
            raise DimensionError(f"interval chart needs a map 1 -> 1, got {inner.in_dim} -> {inner.out_dim}")
        super().__init__(2, 2, inner.lipschitz, inner.norm)
        self.inner = inner

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        u = float(self.inner(x[1:2])[0])
        return np.array([1.0 - u, u])

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["inner"] = self.inner.to_dict()
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "IntervalChart":
        return cls(function_from_dict(require(document, "inner")))


def comp_to_sperner(src: BrouwerInstance, k: int) -> ReductionRecord:
    """One-dimensional composition instance -> Sperner coloring of the 3-simplex split at t = 2"""
    if src.kind != COMP:
        raise ReductionError(f"expected a comp instance, got {src.kind}")
    if (src.f_a.in_dim, src.f_a.out_dim) != (1, 1):
        raise ReductionError(f"the simplex embedding takes n = m = 1, got {src.f_a.in_dim} -> {src.f_a.out_dim}")
    coloring, params = brouwer_to_sperner(IntervalChart(src.f_a), IntervalChart(src.f_b), 1, 1, k)
    params["chart"] = "interval"
    return ReductionRecord(
        ["comp_to_sperner"],
        src,
        coloring,
        EpsilonMap(None, "recovery radius is measured per k"),
        [BackmapStep("sperner_q", params)],
    )
