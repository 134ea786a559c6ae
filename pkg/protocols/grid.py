"""
Grid-search protocol for two-party Brouwer instances and the referee's checks.

The players walk the alpha-grid in lexicographic order. At each candidate z,
A sends what B needs to judge the residual at z (A's quantized image for comp
and mean, A's quantized half-residual for concat) and B answers one accept bit.
B's threshold is lowered by the quantization error so an accepted point is
always an honest epsilon-solution; the grid walk is guaranteed to find one
when (lambda + 1) * alpha <= 2 * (epsilon - 2 * slack).
"""

import os
from typing import Optional, Tuple

import numpy as np

from protocols.channel import Channel, decode_levels, decode_uint, dequantize, encode_levels, encode_uint, quantize_up
from protocols.instances import COMP, CONCAT, LOCAL, MEAN, BrouwerInstance
from utils.errors import DimensionError, ProtocolResult
from utils.numerics import GridSpec, NormKind, as_point, default_tolerance, grid_points, normalized_norm, within
from utils.serialization import encode_vector


def default_bits_per_coord() -> int:
    return int(os.getenv("FIXPOINT_BITS_PER_COORD", "16"))


def total_regime_check(lambda_combined: float, alpha: float, epsilon: float, tol: float = 0.0) -> bool:
    """(lambda + 1) * alpha <= 2 * epsilon: an alpha-grid must contain an epsilon-solution"""
    if lambda_combined < 0 or alpha < 0 or epsilon < 0:
        raise ValueError("total_regime_check takes non-negative arguments")
    return (lambda_combined + 1.0) * alpha <= 2.0 * epsilon + tol


def quantization_slack(inst: BrouwerInstance, bits_per_coord: int) -> float:
    """Worst-case residual error B can incur from A's quantized message"""
    if inst.kind == COMP:
        return inst.lambda_b * 2.0 ** (-bits_per_coord)
    if inst.kind == MEAN:
        return 2.0 ** (-bits_per_coord) / 2.0
    if inst.kind == CONCAT:
        return 2.0 ** (1 - bits_per_coord)
    raise ValueError(f"the grid protocol does not run on {inst.kind!r} instances")


def regime_epsilon(inst: BrouwerInstance, bits_per_coord: int) -> float:
    """Accuracy the grid must reach for the protocol to be certain to stop"""
    if inst.kind == CONCAT:
        return inst.epsilon - quantization_slack(inst, bits_per_coord)
    return inst.epsilon - 2.0 * quantization_slack(inst, bits_per_coord)


def _combine_halves(h_a: float, h_b: float, norm: NormKind) -> float:
    if norm.is_inf:
        return max(h_a, h_b)
    return float(((h_a ** norm.p + h_b ** norm.p) / 2.0) ** (1.0 / norm.p))


def run_grid_protocol(
    inst: BrouwerInstance, alpha: float, bits_per_coord: Optional[int] = None
) -> ProtocolResult:
    """
    Walk the alpha-grid until B accepts.

    Returns status "ok" with the accepted grid point, or status "failure"
    ("no grid point accepted") carrying the full transcript when the walk
    exhausts the grid, which can only happen outside the total regime.
    """
    if inst.kind == LOCAL:
        raise ValueError("reduce a local instance to comp before running the grid protocol")
    bits = default_bits_per_coord() if bits_per_coord is None else int(bits_per_coord)
    if bits < 1:
        raise ValueError(f"bits_per_coord must be >= 1, got {bits}")
    spec = GridSpec(inst.dim, alpha)
    spec.require_closed()
    channel = Channel(("A", "B"))
    slack = quantization_slack(inst, bits)
    norm = inst.norm
    half = inst.dim // 2

    for index, z in enumerate(grid_points(spec)):
        if inst.kind == COMP:
            payload = channel.send("A", encode_levels(inst.f_a(z), bits))
            q = decode_levels(payload, bits)
            accept = normalized_norm(inst.f_b(q) - z, norm) <= inst.epsilon - slack
        elif inst.kind == MEAN:
            payload = channel.send("A", encode_levels(inst.f_a(z), bits))
            q = decode_levels(payload, bits)
            accept = normalized_norm((q + inst.f_b(z)) / 2.0 - z, norm) <= inst.epsilon - slack
        else:
            h_a = normalized_norm(inst.f_a(z) - z[:half], norm)
            payload = channel.send("A", encode_uint(quantize_up(h_a, bits), bits))
            h_a_upper = dequantize(decode_uint(payload), bits)
            h_b = normalized_norm(inst.f_b(z) - z[half:], norm)
            accept = _combine_halves(h_a_upper, h_b, norm) <= inst.epsilon
        channel.send("B", "1" if accept else "0")
        if accept:
            transcript = channel.transcript(encode_vector(z))
            return ProtocolResult(
                status="ok",
                solution=z,
                transcript=transcript,
                details={"candidates": index + 1, "slack": slack, "grid_size": spec.size},
            )

    return ProtocolResult(
        status="failure",
        solution=None,
        transcript=channel.transcript(None),
        reason="no grid point accepted",
        details={"candidates": spec.size, "slack": slack, "grid_size": spec.size},
    )


def verify_solution(
    inst: BrouwerInstance, x, epsilon: Optional[float] = None, tol: Optional[float] = None
) -> Tuple[bool, float]:
    """Referee check holding both inputs: (residual <= epsilon, residual)"""
    eps = inst.epsilon if epsilon is None else float(epsilon)
    point = np.asarray(x, dtype=float).ravel()
    if point.size != inst.dim:
        raise DimensionError(f"solution has dimension {point.size}, instance has {inst.dim}")
    point = as_point(point, inst.dim, tol=default_tolerance() if tol is None else tol)
    residual = inst.residual(point)
    return within(residual, eps, tol), residual


def grid_cost_bound(inst: BrouwerInstance, alpha: float, bits_per_coord: int) -> int:
    """Bits the grid walk can spend in the worst case"""
    spec = GridSpec(inst.dim, alpha)
    spec.require_closed()
    per_candidate = (inst.f_a.out_dim * bits_per_coord if inst.kind != CONCAT else bits_per_coord) + 1
    return spec.size * per_candidate
