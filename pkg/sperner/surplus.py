"""
Surplus colorings: two colors merged into one, the facet graph they induce, and
the path that graph is guaranteed to contain.

Merging color t into color s (s < t) leaves d colors. A facet is panchromatic
when its d vertices carry all of them. Every cell has zero or two panchromatic
facets, and the only boundary facets that can be panchromatic lie in the face
of the simplex avoiding v_t (the start side, terminal f_0) or the face avoiding
v_s (the end side, terminal f_d). The graph is therefore a union of paths and
cycles, and some path runs from f_0 to f_d.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sperner.triangulation import Triangulation
from utils.errors import ColoringError, Violation

F0 = "f_0"
FD = "f_d"

Facet = Tuple[int, int]  # (cell index, position of the vertex the facet leaves out)
Node = Union[int, str]


def merge_coloring(colors: Sequence[int], d: int, pair: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """c'(v) = c(v) except that color t becomes s; the default pair (0, d) gives c mod d"""
    s, t = (0, d) if pair is None else pair
    arr = np.asarray(colors, dtype=np.int64)
    return np.where(arr == t, s, arr)


def validate_surplus(T: Triangulation, merged: np.ndarray, pair: Tuple[int, int]) -> Optional[Violation]:
    """First vertex breaking the boundary rules of a surplus coloring, or None"""
    s, t = pair
    count = T.vertex_count
    if merged.shape != (count,):
        raise ValueError(f"expected {count} colors, got shape {merged.shape}")
    in_range = (merged >= 0) & (merged <= T.d) & (merged != t)
    safe = np.where(in_range, merged, s)
    allowed = T.support[np.arange(count), safe] | ((safe == s) & T.support[:, t])
    bad = ~(in_range & allowed)
    if not bad.any():
        return None
    v = int(np.argmax(bad))
    if not in_range[v]:
        return Violation(v, f"merged color {merged[v]} is outside the surplus palette")
    return Violation(v, f"merged color {merged[v]} is not allowed on the face {np.nonzero(T.support[v])[0].tolist()}")


class SurplusGraph:
    """
    Cells joined through shared panchromatic facets, plus the two terminals.

    Adjacency is computed on demand from the triangulation; `materialize`
    builds the full adjacency map for small instances.
    """

    def __init__(self, T: Triangulation, merged: Sequence[int], pair: Optional[Tuple[int, int]] = None):
        self.T = T
        self.pair = (0, T.d) if pair is None else tuple(pair)
        self.merged = np.asarray(merged, dtype=np.int64)
        violation = validate_surplus(T, self.merged, self.pair)
        if violation is not None:
            raise ColoringError(violation)
        s, t = self.pair
        self.palette = [c for c in range(T.d + 1) if c != t]
        self._start = [f for f in T.boundary_facets(t) if self.facet_is_panchromatic(*f)]
        self._end = [f for f in T.boundary_facets(s) if self.facet_is_panchromatic(*f)]

    def facet_colors(self, cell: int, pos: int) -> List[int]:
        return [int(self.merged[v]) for v in self.T.facet(cell, pos)]

    def facet_is_panchromatic(self, cell: int, pos: int) -> bool:
        return sorted(self.facet_colors(cell, pos)) == self.palette

    def panchromatic_facets(self, cell: int) -> List[int]:
        return [pos for pos in range(self.T.d + 1) if self.facet_is_panchromatic(cell, pos)]

    def terminal_facets(self, terminal: str) -> List[Facet]:
        return list(self._start if terminal == F0 else self._end)

    def neighbors(self, node: Node) -> List[Node]:
        if node == F0 or node == FD:
            return [cell for cell, _ in self.terminal_facets(node)]
        out: List[Node] = []
        for pos in self.panchromatic_facets(node):
            other, _ = self.T.neighbor(node, pos)
            out.append(other if other is not None else self._terminal_of((node, pos)))
        return out

    def degree(self, node: Node) -> int:
        return len(self.neighbors(node))

    def _terminal_of(self, facet: Facet) -> str:
        s, _ = self.pair
        on_end = all(self.T.vertices[v, s] == 0 for v in self.T.facet(*facet))
        return FD if on_end else F0

    def exit_position(self, cell: int, entry: int) -> int:
        """Door-out rule: leave through the facet dropping the other vertex colored like w_entry"""
        row = self.T.cell_vertices[cell]
        color = self.merged[row[entry]]
        for pos, v in enumerate(row):
            if pos != entry and self.merged[v] == color:
                return pos
        raise ValueError(f"cell {cell} has no second vertex colored {color}")

    def materialize(self) -> Dict[Node, List[Node]]:
        """Adjacency of every node with positive degree"""
        graph: Dict[Node, List[Node]] = {F0: self.neighbors(F0), FD: self.neighbors(FD)}
        cell_colors = self.merged[self.T.cell_vertices]
        present = np.ones(self.T.cell_count, dtype=bool)
        for color in self.palette:
            present &= (cell_colors == color).any(axis=1)
        for cell in np.nonzero(present)[0]:
            graph[int(cell)] = self.neighbors(int(cell))
        return graph


def surplus_graph(T: Triangulation, merged: Sequence[int], pair: Optional[Tuple[int, int]] = None) -> SurplusGraph:
    return SurplusGraph(T, merged, pair)


@dataclass
class SurplusPath:
    """
    Cells p_1..p_r from f_0 to f_d with the facets e_0..e_r around them:
    e_0 is p_1's facet on the start side, e_i is shared by p_i and p_(i+1),
    e_r is p_r's facet on the end side. Facets are (cell, dropped position).
    """

    cells: List[int]
    edges: List[Facet]

    @property
    def r(self) -> int:
        return len(self.cells)


def _follow(graph: SurplusGraph, cell: int, entry: int) -> Tuple[SurplusPath, str]:
    T = graph.T
    cells = [cell]
    edges: List[Facet] = [(cell, entry)]
    for _ in range(T.cell_count):
        out = graph.exit_position(cell, entry)
        edges.append((cell, out))
        nxt, pos = T.neighbor(cell, out)
        if nxt is None:
            return SurplusPath(cells, edges), graph._terminal_of((cell, out))
        cells.append(nxt)
        cell, entry = nxt, pos
    raise RuntimeError("surplus path did not reach the boundary")


def surplus_path(graph: SurplusGraph) -> Optional[SurplusPath]:
    """
    Path from f_0 to f_d.

    Start facets are tried in (cell, position) order; a path that comes back to
    the start side uses up its far end as well, and the sweep moves on.
    Returns None only if no path reaches f_d, which a valid coloring rules out.
    """
    used = set()
    for facet in graph.terminal_facets(F0):
        if facet in used:
            continue
        path, terminal = _follow(graph, *facet)
        used.add(facet)
        if terminal == FD:
            return path
        used.add(path.edges[-1])
    return None
