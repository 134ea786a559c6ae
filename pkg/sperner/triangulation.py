"""
Freudenthal (Kuhn) subdivision of the d-simplex at resolution k.

Vertices are the lattice points y in Z^(d+1) with y >= 0 and sum(y) = k, the
barycentric numerators of y / k, numbered in lexicographic order. A cell is a
base vertex b plus a permutation pi of the moves 1..d, where move j adds
e_j - e_(j-1); its vertices are w_0 = b and w_t = w_(t-1) + move pi_t. The pair
is a cell exactly when every w_t stays non-negative, which happens iff b_0 >= 1
and, for j >= 2 with b_(j-1) = 0, move j-1 comes before move j. There are k^d
cells, ordered by (base vertex id, permutation in lexicographic order).
"""

import itertools
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import SchemaError, SizeLimitError


def default_max_cells() -> int:
    return int(os.getenv("FIXPOINT_MAX_CELLS", "100000000"))


@dataclass(frozen=True)
class Cell:
    index: int
    base: Tuple[int, ...]
    perm: Tuple[int, ...]
    vertices: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"base": list(self.base), "perm": list(self.perm)}


def _compositions(k: int, parts: int):
    """All non-negative integer vectors of length `parts` summing to k, lexicographically"""
    if parts == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, parts - 1):
            yield (first,) + rest


class Triangulation:
    def __init__(self, d: int, k: int, max_cells: Optional[int] = None):
        if d < 1 or k < 1:
            raise ValueError(f"need d >= 1 and k >= 1, got d={d}, k={k}")
        cap = default_max_cells() if max_cells is None else max_cells
        if k ** d > cap:
            raise SizeLimitError(f"{k}^{d} cells exceed the cap of {cap}")
        self.d = d
        self.k = k
        self._binom = np.array(
            [[math.comb(a, q) for q in range(d + 1)] for a in range(k + d + 1)], dtype=np.int64
        )
        self.vertices = np.array(list(_compositions(k, d + 1)), dtype=np.int64)
        self.support = self.vertices > 0
        self.moves = np.zeros((d + 1, d + 1), dtype=np.int64)
        for j in range(1, d + 1):
            self.moves[j, j] = 1
            self.moves[j, j - 1] = -1
        self.perms = list(itertools.permutations(range(1, d + 1)))
        self._perm_index = {p: i for i, p in enumerate(self.perms)}
        self._build_cells()

    # vertices

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def cell_count(self) -> int:
        return self.cell_vertices.shape[0]

    def rank(self, points) -> np.ndarray:
        """Lexicographic ids of lattice points (rows of an array)"""
        pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
        ids = np.zeros(pts.shape[0], dtype=np.int64)
        remaining = np.full(pts.shape[0], self.k, dtype=np.int64)
        for i in range(self.d):
            q = self.d - i
            y = pts[:, i]
            ids += self._binom[remaining + q, q] - self._binom[remaining - y + q, q]
            remaining = remaining - y
        return ids

    def vertex_id(self, point: Sequence[int]) -> int:
        y = np.asarray(point, dtype=np.int64)
        if y.size != self.d + 1 or np.any(y < 0) or y.sum() != self.k:
            raise ValueError(f"{list(point)} is not a vertex of the k={self.k} lattice in dimension {self.d}")
        return int(self.rank(y)[0])

    def corner(self, i: int) -> int:
        y = np.zeros(self.d + 1, dtype=np.int64)
        y[i] = self.k
        return self.vertex_id(y)

    def barycentric(self, vertex: int) -> np.ndarray:
        return self.vertices[vertex] / self.k

    # cells

    def _build_cells(self) -> None:
        d = self.d
        bases = self.vertices
        all_ids = np.arange(self.vertex_count, dtype=np.int64)
        keys, rows = [], []
        for p_index, perm in enumerate(self.perms):
            position = {move: pos for pos, move in enumerate(perm)}
            mask = bases[:, 0] >= 1
            for j in range(2, d + 1):
                if position[j - 1] > position[j]:
                    mask &= bases[:, j - 1] >= 1
            chosen = bases[mask]
            walk = [self.rank(chosen)]
            current = chosen
            for move in perm:
                current = current + self.moves[move]
                walk.append(self.rank(current))
            rows.append(np.stack(walk, axis=1))
            keys.append(all_ids[mask] * len(self.perms) + p_index)
        keys = np.concatenate(keys)
        order = np.argsort(keys, kind="stable")
        self._keys = keys[order]
        self.cell_vertices = np.concatenate(rows)[order]

    def cell(self, index: int) -> Cell:
        key = int(self._keys[index])
        base_id, p_index = divmod(key, len(self.perms))
        return Cell(
            int(index),
            tuple(int(v) for v in self.vertices[base_id]),
            self.perms[p_index],
            tuple(int(v) for v in self.cell_vertices[index]),
        )

    def find_cell(self, base: Sequence[int], perm: Sequence[int]) -> Optional[int]:
        """Index of the cell (base, perm), or None if that pair is not a cell"""
        b = np.asarray(base, dtype=np.int64)
        p_index = self._perm_index.get(tuple(int(m) for m in perm))
        if p_index is None or b.size != self.d + 1 or np.any(b < 0) or b.sum() != self.k:
            return None
        key = int(self.rank(b)[0]) * len(self.perms) + p_index
        pos = int(np.searchsorted(self._keys, key))
        if pos < self._keys.size and self._keys[pos] == key:
            return pos
        return None

    def cell_from_dict(self, document: Dict[str, Any]) -> Cell:
        try:
            index = self.find_cell(document["base"], document["perm"])
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed cell: {e}") from e
        if index is None:
            raise SchemaError(f"({document['base']}, {document['perm']}) is not a cell of this triangulation")
        return self.cell(index)

    def facet(self, index: int, t: int) -> Tuple[int, ...]:
        """Vertex ids of the facet of cell `index` that leaves out w_t"""
        row = self.cell_vertices[index]
        return tuple(int(v) for pos, v in enumerate(row) if pos != t)

    def neighbor(self, index: int, t: int) -> Tuple[Optional[int], int]:
        """
        Cell across the facet that leaves out w_t, and the position of its new vertex.

        Returns (None, position) when that facet lies on the boundary of the simplex.
        """
        cell = self.cell(index)
        d = self.d
        base = np.array(cell.base, dtype=np.int64)
        perm = list(cell.perm)
        if 0 < t < d:
            perm[t - 1], perm[t] = perm[t], perm[t - 1]
            new_pos = t
        elif t == 0:
            base = base + self.moves[perm[0]]
            perm = perm[1:] + perm[:1]
            new_pos = d
        elif t == d:
            base = base - self.moves[perm[-1]]
            perm = perm[-1:] + perm[:-1]
            new_pos = 0
        else:
            raise ValueError(f"facet position {t} out of range for d={d}")
        return self.find_cell(base, perm), new_pos

    def boundary_facets(self, i: int) -> List[Tuple[int, int]]:
        """(cell, t) for every cell facet lying in the face y_i = 0, in cell order"""
        coords = self.vertices[:, i][self.cell_vertices]
        zero = coords == 0
        hits = np.nonzero(zero.sum(axis=1) == self.d)[0]
        return [(int(c), int(np.argmin(zero[c]))) for c in hits]

    def __repr__(self) -> str:
        return f"Triangulation(d={self.d}, k={self.k}, vertices={self.vertex_count}, cells={self.cell_count})"


def build_triangulation(d: int, k: int, max_cells: Optional[int] = None) -> Triangulation:
    return Triangulation(d, k, max_cells)
