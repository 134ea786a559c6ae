"""
Sampled lower bounds on Lipschitz constants
"""

from typing import Callable, Optional

import numpy as np

from utils.numerics import INF, NormKind, normalized_norm


def lipschitz_estimate(
    f: Callable,
    in_dim: int,
    sample_budget: int = 2000,
    seed: int = 0,
    norm=INF,
    sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = None,
) -> float:
    """
    Max of ||f(x) - f(y)|| / ||x - y|| over sampled pairs.

    Half the budget goes to independent uniform pairs and half to pairs at
    distance 10^U(-4,-1), which is where piecewise maps show their steepest
    slopes. The result is a lower bound on the true constant. A custom
    `sampler` (rng -> point) restricts sampling to a subset of the domain;
    its pairs are always drawn independently.
    """
    if sample_budget < 2:
        raise ValueError(f"sample_budget must be >= 2, got {sample_budget}")
    norm = NormKind.parse(norm)
    rng = np.random.default_rng(seed)
    draw = sampler if sampler is not None else (lambda g: g.random(in_dim))
    best = 0.0
    pairs = sample_budget // 2
    for i in range(pairs):
        x = draw(rng)
        if sampler is not None or i % 2 == 0:
            y = draw(rng)
        else:
            step = 10.0 ** rng.uniform(-4, -1)
            y = np.clip(x + step * rng.uniform(-1, 1, size=x.size), 0.0, 1.0)
        dx = normalized_norm(x - y, norm)
        if dx == 0:
            continue
        ratio = normalized_norm(np.asarray(f(x)) - np.asarray(f(y)), norm) / dx
        best = max(best, ratio)
    return float(best)
