"""
Imitation games built from composition instances, brute-force pure equilibria,
and a one-dimensional fixed-point oracle.

A picks x on the alpha-grid of [0,1]^n and wants y to equal f_A(x); B picks y on
the alpha-grid of [0,1]^m and wants x to equal f_B(y):

    u_A(x, y) = -||f_A(x) - y||^2,   u_B(x, y) = -||x - f_B(y)||^2

(normalized Euclidean norm). At an approximate equilibrium x is close to
f_B(f_A(x)).
"""

import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq

from functions.base import LipschitzFunction
from protocols.instances import COMP, BrouwerInstance
from reductions.records import BackmapStep, EpsilonMap, ReductionRecord
from utils.errors import ReductionError, SizeLimitError
from utils.numerics import GridSpec, grid_array, grid_index, nearest_grid
from utils.serialization import check_format, decode_real, encode_real, encode_vector, require, with_format


def default_max_profiles() -> int:
    return int(os.getenv("FIXPOINT_MAX_PROFILES", "1000000"))


def _mean_sq_dist(rows: np.ndarray, cols: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """mean((rows[i] - cols[j])^2) for every pair, computed exactly in row chunks"""
    out = np.empty((rows.shape[0], cols.shape[0]))
    for start in range(0, rows.shape[0], chunk):
        block = rows[start : start + chunk]
        out[start : start + chunk] = np.mean((block[:, None, :] - cols[None, :, :]) ** 2, axis=2)
    return out


@dataclass(frozen=True)
class Profile:
    x: np.ndarray
    y: np.ndarray
    index: int
    regret: float

    def to_dict(self) -> Dict[str, Any]:
        return {"x": encode_vector(self.x), "y": encode_vector(self.y), "index": self.index, "regret": encode_real(self.regret)}


class ImitationGame:
    def __init__(
        self,
        f_a: LipschitzFunction,
        f_b: LipschitzFunction,
        alpha: float,
        max_profiles: Optional[int] = None,
        source: Optional[BrouwerInstance] = None,
    ):
        if f_a.out_dim != f_b.in_dim or f_b.out_dim != f_a.in_dim:
            raise ReductionError("imitation games need f_A: n -> m and f_B: m -> n")
        self.f_a = f_a
        self.f_b = f_b
        self.alpha = float(alpha)
        self.source = source
        self.grid_a = GridSpec(f_a.in_dim, alpha)
        self.grid_b = GridSpec(f_a.out_dim, alpha)
        self.grid_a.require_closed()
        cap = default_max_profiles() if max_profiles is None else max_profiles
        if self.profile_count > cap:
            raise SizeLimitError(f"{self.profile_count} profiles exceed the cap of {cap}")
        self._tables = None

    @property
    def n(self) -> int:
        return self.f_a.in_dim

    @property
    def m(self) -> int:
        return self.f_a.out_dim

    @property
    def profile_count(self) -> int:
        return self.grid_a.size * self.grid_b.size

    def u_a(self, x, y) -> float:
        diff = self.f_a(x) - np.asarray(y, dtype=float)
        return -float(np.mean(diff * diff))

    def u_b(self, x, y) -> float:
        diff = np.asarray(x, dtype=float) - self.f_b(y)
        return -float(np.mean(diff * diff))

    def tables(self):
        """(X, Y, U_A, U_B) with U[i, j] the utility at (X[i], Y[j]); built once"""
        if self._tables is None:
            xs = grid_array(self.grid_a)
            ys = grid_array(self.grid_b)
            fa = np.array([self.f_a(x) for x in xs])
            fb = np.array([self.f_b(y) for y in ys])
            self._tables = (xs, ys, -_mean_sq_dist(fa, ys), -_mean_sq_dist(xs, fb))
        return self._tables

    def regret_table(self) -> np.ndarray:
        _, _, ua, ub = self.tables()
        regret_a = ua.max(axis=0, keepdims=True) - ua
        regret_b = ub.max(axis=1, keepdims=True) - ub
        return np.maximum(regret_a, regret_b)

    def profile_regret(self, x, y) -> float:
        """Largest gain either player gets from a unilateral deviation on the grid"""
        return float(self.regret_table()[grid_index(x, self.grid_a), grid_index(y, self.grid_b)])

    def to_dict(self) -> Dict[str, Any]:
        doc = {"type": "game", "alpha": encode_real(self.alpha), "n": self.n, "m": self.m}
        if self.source is not None:
            doc["source"] = {k: v for k, v in self.source.to_dict().items() if k != "provenance"}
        return with_format(doc)

    @classmethod
    def from_dict(cls, document: Dict[str, Any], max_profiles: Optional[int] = None) -> "ImitationGame":
        """Rebuild a game from its comp source; games without a source cannot be restored"""
        check_format(document, "game")
        source = BrouwerInstance.from_dict(require(document, "source"))
        return comp_to_imitation_game(source, decode_real(require(document, "alpha")), max_profiles)


def comp_to_imitation_game(src: BrouwerInstance, alpha: float, max_profiles: Optional[int] = None) -> ImitationGame:
    if src.kind != COMP:
        raise ReductionError(f"expected a comp instance, got {src.kind}")
    if src.norm.is_inf or src.norm.p != 2:
        raise ReductionError(f"imitation games use the Euclidean norm, instance has p={src.norm}")
    return ImitationGame(src.f_a, src.f_b, alpha, max_profiles, source=src)


def comp_to_nash(src: BrouwerInstance, alpha: float, max_profiles: Optional[int] = None) -> ReductionRecord:
    """The imitation game wrapped as a reduction whose back-map reads off x"""
    game = comp_to_imitation_game(src, alpha, max_profiles)
    return ReductionRecord(
        ["comp_to_nash"],
        src,
        game,
        EpsilonMap(None, "regret to residual is measured, not closed form"),
        [BackmapStep("profile_x")],
    )


def enumerate_approx_pure_nash(game: ImitationGame, eps_regret: float, tol: float = 1e-12) -> List[Profile]:
    """Every pure profile with regret <= eps_regret, in profile-index order"""
    xs, ys, _, _ = game.tables()
    regret = game.regret_table()
    hits = np.argwhere(regret <= eps_regret + tol)
    width = ys.shape[0]
    return [
        Profile(xs[i].copy(), ys[j].copy(), int(i * width + j), float(regret[i, j]))
        for i, j in hits
    ]


def nash_profile_to_point(profile) -> np.ndarray:
    if isinstance(profile, Profile):
        return profile.x.copy()
    if isinstance(profile, dict):
        return np.asarray([float(v) for v in profile["x"]], dtype=float)
    x, _ = profile
    return np.asarray(x, dtype=float).ravel()


def rounded_fixed_point_profile(game: ImitationGame, x_star):
    """Grid profile nearest to (x*, f_A(x*)) for a fixed point x* of f_B(f_A(.))"""
    point = np.asarray(x_star, dtype=float).ravel()
    return nearest_grid(point, game.grid_a), nearest_grid(game.f_a(point), game.grid_b)


def fixed_point_1d(f: Callable, samples: int = 1024, xtol: float = 1e-14) -> float:
    """
    A fixed point of a continuous f: [0,1] -> [0,1].

    g(x) = f(x) - x has g(0) >= 0 >= g(1); the first grid interval where g
    changes sign is refined with Brent's method.
    """

    def g(t: float) -> float:
        return float(np.asarray(f(np.array([t]))).ravel()[0]) - t

    grid = np.linspace(0.0, 1.0, samples + 1)
    values = [g(t) for t in grid]
    for i, value in enumerate(values):
        if value == 0.0:
            return float(grid[i])
        if i + 1 < len(values) and value > 0.0 and values[i + 1] < 0.0:
            return float(brentq(g, grid[i], grid[i + 1], xtol=xtol))
    # g(0) >= 0 and g(1) <= 0 with no strict crossing means g hit 0 at an endpoint
    return float(grid[int(np.argmin(np.abs(values)))])
