"""
Communication protocols for split Sperner colorings.

surplus:        one party holds exactly two color classes {s, t}; the other
                merges them, walks the surplus path alone and binary-searches
                it with the two-class party answering one bit per query.
single missing: one party holds d of the d+1 classes, infers the last one and
                solves alone; only the answer is sent.
three players:  d = 2 with one class per player over a broadcast channel.
"""

from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from protocols.channel import Channel, bits_for, decode_uint, encode_uint
from sperner.coloring import SpernerColoring, brute_force_panchromatic, validate_sperner
from sperner.surplus import SurplusGraph, SurplusPath, surplus_path
from sperner.triangulation import Triangulation, build_triangulation
from utils.errors import ColoringError, ProtocolResult, Violation


def surplus_bit_bound(r: int, n: int) -> int:
    """(ceil(log2 r) + 1) * (ceil(log2 r) + ceil(log2 n) + 1)"""
    lr = bits_for(r)
    return (lr + 1) * (lr + bits_for(n) + 1)


def _class_owner(inst: SpernerColoring, vertex_count: int) -> np.ndarray:
    owner = np.full(vertex_count, -1, dtype=np.int64)
    for i, cls in enumerate(inst.classes):
        owner[cls] = i
    return owner


def _builder_view(T: Triangulation, inst: SpernerColoring, classes: List[int], merged_color: int) -> np.ndarray:
    """Colors the path builder knows, with every vertex outside its classes set to the merged color"""
    view = np.full(T.vertex_count, merged_color, dtype=np.int64)
    for i in classes:
        view[inst.classes[i]] = i
    return view


def _merged_vertex(T: Triangulation, graph: SurplusGraph, facet) -> int:
    s, _ = graph.pair
    for v in T.facet(*facet):
        if graph.merged[v] == s:
            return v
    raise ValueError("panchromatic facet without a merged-color vertex")


def _binary_search(
    T: Triangulation,
    graph: SurplusGraph,
    path: SurplusPath,
    channel: Channel,
    builder: str,
    oracle: str,
    answer,
) -> Tuple[Optional[int], Optional[Violation]]:
    """
    Narrow the edges e_lo (merged vertex truly s) and e_hi (truly t) down to neighbors.

    `answer(vertex)` is the oracle's reply: True for t, False for s, or a
    Violation when the vertex is not one of the oracle's.
    Returns (path position of the panchromatic cell, None) or (None, witness).
    """
    r = path.r
    lo, hi = 0, r
    index_width = bits_for(r)
    vertex_width = bits_for(T.vertex_count)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        vertex = _merged_vertex(T, graph, path.edges[mid])
        query = channel.send(builder, encode_uint(mid, index_width) + encode_uint(vertex, vertex_width))
        asked = decode_uint(query[index_width:])
        reply = answer(asked)
        if isinstance(reply, Violation):
            channel.send(oracle, "0")
            return None, reply
        channel.send(oracle, "1" if reply else "0")
        if reply:
            hi = mid
        else:
            lo = mid
    return lo, None


def _solve_split(
    T: Triangulation,
    view: np.ndarray,
    pair: Tuple[int, int],
    channel: Channel,
    builder: str,
    oracle: str,
    answer: Callable[[int], Union[bool, Violation]],
) -> ProtocolResult:
    try:
        graph = SurplusGraph(T, view, pair)
    except ColoringError as e:
        return ProtocolResult("violation", None, channel.transcript(None), str(e), e.violation)
    path = surplus_path(graph)
    if path is None:
        witness = Violation(-1, "no surplus path from f_0 to f_d")
        return ProtocolResult("violation", None, channel.transcript(None), witness.reason, witness)

    position, witness = _binary_search(T, graph, path, channel, builder, oracle, answer)
    if witness is not None:
        return ProtocolResult("violation", None, channel.transcript(None), witness.reason, witness)
    cell = T.cell(path.cells[position])
    return ProtocolResult(
        "ok",
        cell,
        channel.transcript(cell.to_dict()),
        details={
            "r": path.r,
            "bound": surplus_bit_bound(path.r, T.vertex_count),
            "builder": builder,
            "pair": list(pair),
        },
    )


def run_surplus_protocol(inst: SpernerColoring, T: Optional[Triangulation] = None) -> ProtocolResult:
    """
    Two-party protocol when one side holds exactly two color classes.

    The other side (holding d - 1 classes) builds the surplus path; if both
    sides hold two classes (d = 3, t = 2) B answers.
    """
    T = build_triangulation(inst.d, inst.k) if T is None else T
    a_classes = inst.party_classes("A")
    b_classes = inst.party_classes("B")
    if len(b_classes) == 2:
        builder, oracle, builder_classes, pair = "A", "B", a_classes, tuple(b_classes)
    elif len(a_classes) == 2:
        builder, oracle, builder_classes, pair = "B", "A", b_classes, tuple(a_classes)
    else:
        raise ValueError(f"the surplus protocol needs a party with exactly two classes (d={inst.d}, t={inst.t})")
    s, t = pair
    owner = _class_owner(inst, T.vertex_count)

    def answer(vertex: int):
        if vertex >= T.vertex_count or owner[vertex] not in pair:
            return Violation(vertex, f"{oracle} was asked about a vertex outside its classes")
        return bool(owner[vertex] == t)

    view = _builder_view(T, inst, builder_classes, s)
    return _solve_split(T, view, pair, Channel(("A", "B")), builder, oracle, answer)


def run_single_missing_color_protocol(inst: SpernerColoring, T: Optional[Triangulation] = None) -> ProtocolResult:
    """One party holds d classes, colors the rest with the missing one and sends the first panchromatic cell"""
    T = build_triangulation(inst.d, inst.k) if T is None else T
    d = inst.d
    if inst.t == d:
        solver, classes = "A", inst.party_classes("A")
    elif inst.t == 1:
        solver, classes = "B", inst.party_classes("B")
    else:
        raise ValueError(f"no party holds exactly {d} classes (d={d}, t={inst.t})")
    missing = next(i for i in range(d + 1) if i not in classes)
    view = _builder_view(T, inst, classes, missing)
    return _solve_alone(T, SpernerColoring.from_colors(d, inst.k, view, inst.t), solver)


def run_local_protocol(inst: SpernerColoring, T: Optional[Triangulation] = None) -> ProtocolResult:
    """t = 0 or t = d + 1: one party holds the whole coloring"""
    T = build_triangulation(inst.d, inst.k) if T is None else T
    if inst.t not in (0, inst.d + 1):
        raise ValueError(f"both parties hold classes when t={inst.t}")
    return _solve_alone(T, inst, "B" if inst.t == 0 else "A")


def _solve_alone(T: Triangulation, coloring: SpernerColoring, solver: str) -> ProtocolResult:
    channel = Channel(("A", "B"))
    violation = validate_sperner(T, coloring)
    if violation is not None:
        return ProtocolResult("violation", None, channel.transcript(None), violation.reason, violation)
    cells = brute_force_panchromatic(T, coloring)
    if not cells:
        return ProtocolResult("failure", None, channel.transcript(None), "no panchromatic cell")
    cell = cells[0]
    channel.send(solver, encode_uint(cell.index, bits_for(T.cell_count)))
    return ProtocolResult("ok", cell, channel.transcript(cell.to_dict()), details={"solver": solver})


def run_three_player_protocol(inst: SpernerColoring, T: Optional[Triangulation] = None) -> ProtocolResult:
    """
    d = 2 with C_0, C_1, C_2 held by players P1, P2, P3 on a broadcast channel.

    P2 merges C_0 and C_2 into color 0, walks the surplus path and broadcasts
    queries; P1 answers whether the queried vertex is outside C_0 (so, under
    the promise, in C_2). P3 stays silent.
    """
    if inst.d != 2:
        raise ValueError(f"the three-player protocol is for d = 2, got d={inst.d}")
    T = build_triangulation(inst.d, inst.k) if T is None else T
    in_c0 = np.zeros(T.vertex_count, dtype=bool)
    in_c0[inst.classes[0]] = True

    def answer(vertex: int):
        if vertex >= T.vertex_count:
            return Violation(vertex, "P1 was asked about an unknown vertex")
        return not bool(in_c0[vertex])

    view = _builder_view(T, inst, [1], 0)
    return _solve_split(T, view, (0, 2), Channel(("P1", "P2", "P3")), "P2", "P1", answer)


def solve_split(inst: SpernerColoring, T: Optional[Triangulation] = None) -> ProtocolResult:
    """Dispatch on the split: local, single missing color, or surplus"""
    d, t = inst.d, inst.t
    if t in (0, d + 1):
        return run_local_protocol(inst, T)
    if t in (1, d):
        return run_single_missing_color_protocol(inst, T)
    return run_surplus_protocol(inst, T)


SOLVERS = {
    "surplus": run_surplus_protocol,
    "single-missing": run_single_missing_color_protocol,
    "three-player": run_three_player_protocol,
    "auto": solve_split,
}
