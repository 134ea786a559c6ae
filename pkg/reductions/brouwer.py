"""
The concat -> mean -> comp -> concat cycle of reductions between two-party Brouwer problems.

Each reduction builds the target players' maps from the source players' maps
alone (A's new map only uses f_A, B's only uses f_B), so a protocol for the
target is a protocol for the source at the same cost.
"""

from typing import Any, Dict

import numpy as np

from functions.base import LipschitzFunction, function_from_dict, register
from functions.combined import Identity, Projection, Scaled, compose, concat
from protocols.instances import COMP, CONCAT, MEAN, BrouwerInstance
from reductions.records import BackmapStep, EpsilonMap, ReductionRecord
from utils.errors import DimensionError, ReductionError
from utils.serialization import require


@register("half_sum")
class HalfSum(LipschitzFunction):
    """
    (x_1, x_2) -> clamp(x_1 + f(x_2) / 2) on [0,1]^(2n).

    On points of the form (f_A(x)/2, x) the clamp never binds, which is what
    makes the mean -> comp reduction an exact identity.
    """

    def __init__(self, inner: LipschitzFunction):
        if inner.in_dim != inner.out_dim:
            raise DimensionError("half_sum needs a map [0,1]^n -> [0,1]^n")
        n = inner.in_dim
        norm = inner.norm
        spread = 1.0 if norm.is_inf else 2.0 ** (1.0 / norm.p)
        super().__init__(2 * n, n, spread * (1.0 + inner.lipschitz / 2.0), norm)
        self.inner = inner

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        n = self.out_dim
        return np.clip(x[:n] + 0.5 * self.inner(x[n:]), 0.0, 1.0)

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["inner"] = self.inner.to_dict()
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "HalfSum":
        return cls(function_from_dict(require(document, "inner")))


def _require_kind(src: BrouwerInstance, kind: str) -> None:
    if src.kind != kind:
        raise ReductionError(f"expected a {kind} instance, got {src.kind}")


def concat_to_mean(src: BrouwerInstance) -> ReductionRecord:
    """
    g_A(x) = (f_A(x), x_2), g_B(x) = (x_1, f_B(x)).

    The mean of g_A and g_B minus x is half of f_Concat(x) - x, so a target
    solution at eps/2 is a source solution at eps.
    """
    _require_kind(src, CONCAT)
    n = src.dim
    if n % 2:
        raise ReductionError(f"concat_to_mean needs an even dimension, got {n}")
    half = n // 2
    norm = src.norm
    g_a = concat(src.f_a, Projection(n, half, half, norm))
    g_b = concat(Projection(n, 0, half, norm), src.f_b)
    eps_map = EpsilonMap(2.0, "mean residual is half the concat residual")
    target = BrouwerInstance(MEAN, g_a, g_b, eps_map.target_for(src.epsilon))
    return ReductionRecord(
        ["concat_to_mean"],
        src,
        target,
        eps_map,
        [BackmapStep("identity")],
        (src.lambda_a + 1.0, src.lambda_b + 1.0),
    )


def mean_to_comp(src: BrouwerInstance) -> ReductionRecord:
    """
    g_A(x) = (f_A(x)/2, x), g_B(x_1, x_2) = x_1 + f_B(x_2)/2.

    g_B(g_A(x)) equals f_Mean(x) at every x, so epsilon and solutions carry over unchanged.
    """
    _require_kind(src, MEAN)
    n = src.dim
    g_a = concat(Scaled(src.f_a, 0.5), Identity(n, src.norm))
    g_b = HalfSum(src.f_b)
    eps_map = EpsilonMap(1.0, "comp map equals the mean map pointwise")
    target = BrouwerInstance(COMP, g_a, g_b, src.epsilon)
    return ReductionRecord(
        ["mean_to_comp"],
        src,
        target,
        eps_map,
        [BackmapStep("identity")],
        (src.lambda_a / 2.0 + 1.0, src.lambda_b + 2.0),
    )


def comp_to_concat(src: BrouwerInstance, c: float = None) -> ReductionRecord:
    """
    Concat instance on x = (a, x_1, b, x_2) with a, x_2 in [0,1]^n and x_1, b in [0,1]^m:

        g_A(x) = (a, f_A(x_2)),  g_B(x) = (b, f_B(x_1))

    A target eps-solution has x_1 close to f_A(x_2) and x_2 close to f_B(x_1),
    so its x_2 block solves the source within 2 * eps * (1 + c) * (lambda_B + 1)
    for any c >= max(m/n, n/m).

    The claimed bounds are the combinator bounds of g_A and g_B: max(1, lambda)
    under the max norm, and at most (2(n+m)/n)^(1/p) * (lambda_A + 1) for g_A
    (symmetrically for g_B) under finite p, within 4 * (lambda + 1) when n = m.
    """
    _require_kind(src, COMP)
    n = src.f_a.in_dim
    m = src.f_a.out_dim
    least = max(m / n, n / m)
    c = least if c is None else float(c)
    if c < least - 1e-12:
        raise ReductionError(f"c must be at least max(m/n, n/m) = {least:g}, got {c:g}")
    norm = src.norm
    total = 2 * (n + m)
    a_block = Projection(total, 0, n, norm)
    x1_block = Projection(total, n, m, norm)
    b_block = Projection(total, n + m, m, norm)
    x2_block = Projection(total, n + 2 * m, n, norm)
    g_a = concat(a_block, compose(x2_block, src.f_a))
    g_b = concat(b_block, compose(x1_block, src.f_b))
    scale = 2.0 * (1.0 + c) * (src.lambda_b + 1.0)
    eps_map = EpsilonMap(scale, f"x_2 block residual <= 2(1+c)(lambda_B+1) * eps with c={c:g}")
    target = BrouwerInstance(CONCAT, g_a, g_b, eps_map.target_for(src.epsilon))
    return ReductionRecord(
        ["comp_to_concat"],
        src,
        target,
        eps_map,
        [BackmapStep("block", {"start": n + 2 * m, "width": n})],
        (g_a.lipschitz, g_b.lipschitz),
    )

