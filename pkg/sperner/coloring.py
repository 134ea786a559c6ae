"""
Sperner colorings split between two players, their validation and the brute-force oracle
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from sperner.triangulation import Cell, Triangulation
from utils.errors import SchemaError, Violation
from utils.serialization import check_format, require, with_format


class SpernerColoring:
    """
    Color classes C_0..C_d over the vertex ids of a triangulation.

    Player A holds C_0..C_(t-1) (her vertex set S_A is their union) and player B
    holds C_t..C_d. Classes are kept as given so a broken partition can be
    reported rather than silently repaired.
    """

    def __init__(self, d: int, k: int, t: int, classes: Sequence[Sequence[int]]):
        if len(classes) != d + 1:
            raise ValueError(f"expected {d + 1} color classes, got {len(classes)}")
        if not 0 <= t <= d + 1:
            raise ValueError(f"split t must lie in [0, {d + 1}], got {t}")
        self.d = d
        self.k = k
        self.t = t
        self.classes = [sorted(int(v) for v in cls) for cls in classes]

    @classmethod
    def from_colors(cls, d: int, k: int, colors: Sequence[int], t: int) -> "SpernerColoring":
        colors = np.asarray(colors)
        return cls(d, k, t, [np.nonzero(colors == i)[0].tolist() for i in range(d + 1)])

    def colors(self, vertex_count: int) -> np.ndarray:
        """Color per vertex id (-1 where no class claims it; the last claim wins on overlaps)"""
        out = np.full(vertex_count, -1, dtype=np.int64)
        for i, cls in enumerate(self.classes):
            out[cls] = i
        return out

    def holder(self, color: int) -> str:
        return "A" if color < self.t else "B"

    def party_classes(self, party: str) -> List[int]:
        return list(range(self.t)) if party == "A" else list(range(self.t, self.d + 1))

    def to_dict(self) -> Dict[str, Any]:
        return with_format({"type": "sperner", "d": self.d, "k": self.k, "t": self.t, "classes": self.classes})

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "SpernerColoring":
        check_format(document, "sperner")
        try:
            return cls(
                int(require(document, "d")),
                int(require(document, "k")),
                int(require(document, "t")),
                [list(c) for c in require(document, "classes")],
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, SchemaError):
                raise
            raise SchemaError(f"invalid sperner coloring: {e}") from e

    def __repr__(self) -> str:
        return f"SpernerColoring(d={self.d}, k={self.k}, t={self.t})"


def validate_sperner(T: Triangulation, c: SpernerColoring) -> Optional[Violation]:
    """None for a valid split coloring, otherwise the violation at the smallest vertex id"""
    if (c.d, c.k) != (T.d, T.k):
        raise SchemaError(f"coloring is for d={c.d}, k={c.k}; triangulation has d={T.d}, k={T.k}")
    count = T.vertex_count
    for cls in c.classes:
        if cls and (cls[0] < 0 or cls[-1] >= count):
            raise SchemaError(f"color class refers to a vertex outside 0..{count - 1}")
    claims = np.zeros((count, T.d + 1), dtype=bool)
    for i, cls in enumerate(c.classes):
        claims[cls, i] = True
    hits = claims.sum(axis=1)
    colors = np.argmax(claims, axis=1)
    supported = T.support[np.arange(count), colors]

    bad = (hits != 1) | ~supported
    if not bad.any():
        return None
    v = int(np.argmax(bad))
    if hits[v] == 0:
        return Violation(v, "vertex is in no color class (S_A and S_B do not cover T)")
    if hits[v] > 1:
        owners = {c.holder(i) for i in np.nonzero(claims[v])[0]}
        where = "S_A and S_B overlap" if len(owners) > 1 else f"classes of {owners.pop()} overlap"
        return Violation(v, f"vertex is in several color classes ({where})")
    support = np.nonzero(T.support[v])[0].tolist()
    if len(support) == 1:
        return Violation(v, f"corner v_{support[0]} has color {colors[v]}")
    return Violation(v, f"color {colors[v]} is not in the support {support} of the vertex's face")


def random_sperner_coloring(T: Triangulation, seed: int, t: int = 1) -> SpernerColoring:
    """Each vertex gets a uniform color from the support of its face"""
    rng = np.random.default_rng(seed)
    keys = rng.random((T.vertex_count, T.d + 1))
    keys[~T.support] = -1.0
    return SpernerColoring.from_colors(T.d, T.k, np.argmax(keys, axis=1), t)


def _color_array(T: Triangulation, coloring) -> np.ndarray:
    if isinstance(coloring, SpernerColoring):
        return coloring.colors(T.vertex_count)
    return np.asarray(coloring, dtype=np.int64)


def panchromatic_mask(T: Triangulation, coloring, palette: Optional[Sequence[int]] = None) -> np.ndarray:
    """Per cell: do its vertices carry every color of `palette` (default 0..d)?"""
    colors = _color_array(T, coloring)
    palette = list(range(T.d + 1)) if palette is None else list(palette)
    cell_colors = colors[T.cell_vertices]
    mask = np.ones(T.cell_count, dtype=bool)
    for color in palette:
        mask &= (cell_colors == color).any(axis=1)
    return mask


def brute_force_panchromatic(T: Triangulation, coloring) -> List[Cell]:
    """Every cell whose d+1 vertices carry all d+1 colors, in cell order"""
    return [T.cell(int(i)) for i in np.nonzero(panchromatic_mask(T, coloring))[0]]


def is_panchromatic(T: Triangulation, coloring, cell: Cell) -> bool:
    colors = _color_array(T, coloring)
    return set(int(colors[v]) for v in cell.vertices) == set(range(T.d + 1))
