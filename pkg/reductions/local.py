"""
r-local Brouwer families and their reduction to the composition problem.

A family is public data (N, n, r, a region map L and a function f') plus the
two players' private bit strings x, y of length N. Its member is

    f_{x,y}(z) = f'(x|L(z), y|L(z), z)

so the value at z depends on the inputs only through the r positions L(z).
"""

import itertools
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from functions.anchor import random_lipschitz
from functions.base import LipschitzFunction, register
from protocols.instances import COMP, LOCAL, BrouwerInstance
from reductions.records import BackmapStep, EpsilonMap, ReductionRecord
from utils.errors import DimensionError, ReductionError, SchemaError, SizeLimitError
from utils.numerics import NormKind
from utils.serialization import decode_real, encode_real, require

MAX_REGIONS = 100_000
MAX_LOCALITY = 12


def _parse_bits(bits, length: int, name: str) -> Optional[np.ndarray]:
    if bits is None:
        return None
    text = "".join(str(b) for b in bits) if not isinstance(bits, str) else bits
    if len(text) != length or not set(text) <= {"0", "1"}:
        raise ValueError(f"{name} must be a bit string of length {length}")
    return np.array([int(b) for b in text], dtype=np.int8)


class LocalFamily:
    """
    Seeded r-local family on [0,1]^n.

    L is constant on each cell of a regions^n box grid. f' adds a bump
    scale * phi(z) * u(a, b) to a lambda_base-Lipschitz map g, where phi is the
    max-norm distance to the region walls and u(a, b) in [-1,1]^n is drawn
    from (seed, r, key) for the 2r-bit key the first time that key is used.
    The bump vanishes wherever L changes, so every member is
    (lambda_base + scale * n^(1/p))-Lipschitz.
    """

    def __init__(
        self,
        N: int,
        n: int,
        r: int,
        regions: int = 2,
        seed: int = 0,
        lambda_base: float = 1.0,
        scale: float = 0.5,
        norm="inf",
        x=None,
        y=None,
    ):
        if N < 1 or n < 1 or r < 0 or regions < 1:
            raise ValueError("need N >= 1, n >= 1, r >= 0 and regions >= 1")
        if r > N:
            raise ValueError(f"locality r={r} exceeds the input length N={N}")
        if regions ** n > MAX_REGIONS:
            raise SizeLimitError(f"{regions}^{n} regions exceed the cap of {MAX_REGIONS}")
        if scale < 0 or lambda_base < 0:
            raise ValueError("scale and lambda_base must be non-negative")
        self.N, self.n, self.r, self.regions = int(N), int(n), int(r), int(regions)
        self.seed = int(seed)
        self.lambda_base = float(lambda_base)
        self.scale = float(scale)
        self.norm = NormKind.parse(norm)
        self.x = _parse_bits(x, self.N, "x")
        self.y = _parse_bits(y, self.N, "y")

        rng = np.random.default_rng(self.seed)
        self._subsets = np.array(
            [np.sort(rng.choice(self.N, size=self.r, replace=False)) for _ in range(self.regions ** self.n)],
            dtype=int,
        ).reshape(self.regions ** self.n, self.r)
        self._bumps: Dict[int, np.ndarray] = {}
        self._base = random_lipschitz(self.seed + 1, self.n, self.n, self.lambda_base, self.norm)

    @property
    def lipschitz(self) -> float:
        spread = 1.0 if self.norm.is_inf else self.n ** (1.0 / self.norm.p)
        return self.lambda_base + self.scale * spread

    def region_of(self, z: np.ndarray) -> int:
        idx = np.minimum(np.floor(z * self.regions).astype(int), self.regions - 1)
        position = 0
        for value in idx:
            position = position * self.regions + int(value)
        return position

    def wall_distance(self, z: np.ndarray) -> float:
        idx = np.minimum(np.floor(z * self.regions), self.regions - 1)
        lo = idx / self.regions
        hi = (idx + 1) / self.regions
        return float(np.min(np.minimum(z - lo, hi - z)))

    def L(self, z) -> Tuple[int, ...]:
        point = np.asarray(z, dtype=float).ravel()
        return tuple(int(i) for i in self._subsets[self.region_of(point)])

    def bump_vector(self, key: int) -> np.ndarray:
        """u(a, b) for the 2r-bit key; derived from (seed, r, key), so only visited keys are stored"""
        if not 0 <= key < 4 ** self.r:
            raise ValueError(f"bump key {key} out of range for r={self.r}")
        if key not in self._bumps:
            self._bumps[key] = np.random.default_rng((self.seed, self.r, key)).uniform(-1.0, 1.0, size=self.n)
        return self._bumps[key]

    def f_prime(self, a: Sequence[int], b: Sequence[int], z) -> np.ndarray:
        if len(a) != self.r or len(b) != self.r:
            raise DimensionError(f"f' takes two bit tuples of length {self.r}")
        point = np.asarray(z, dtype=float).ravel()
        key = 0
        for bit in list(a) + list(b):
            key = 2 * key + int(bit)
        bump = self.scale * self.wall_distance(point) * self.bump_vector(key)
        return np.clip(self._base(point) + bump, 0.0, 1.0)

    def with_inputs(self, x=None, y=None) -> "LocalFamily":
        doc = self.to_dict()
        doc["x"] = x if x is not None else doc.get("x")
        doc["y"] = y if y is not None else doc.get("y")
        return LocalFamily.from_dict(doc)

    def to_dict(self, bits: Sequence[str] = ("x", "y")) -> Dict[str, Any]:
        doc = {
            "N": self.N,
            "n": self.n,
            "r": self.r,
            "regions": self.regions,
            "seed": self.seed,
            "lambda_base": encode_real(self.lambda_base),
            "scale": encode_real(self.scale),
            "p": self.norm.to_json(),
        }
        for name in bits:
            value = getattr(self, name)
            if value is not None:
                doc[name] = "".join(str(int(b)) for b in value)
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "LocalFamily":
        try:
            return cls(
                int(require(document, "N")),
                int(require(document, "n")),
                int(require(document, "r")),
                int(document.get("regions", 2)),
                int(document.get("seed", 0)),
                decode_real(document.get("lambda_base", "1")),
                decode_real(document.get("scale", "0.5")),
                require(document, "p"),
                document.get("x"),
                document.get("y"),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, SchemaError):
                raise
            raise SchemaError(f"invalid local family: {e}") from e


def random_local_family(
    seed: int,
    N: int = 8,
    n: int = 2,
    r: int = 2,
    regions: int = 2,
    lambda_base: float = 1.0,
    scale: float = 0.5,
    norm="inf",
) -> LocalFamily:
    """Family with its public part and both players' inputs drawn from one seed"""
    rng = np.random.default_rng(seed + 2)
    x = "".join(str(b) for b in rng.integers(0, 2, size=N))
    y = "".join(str(b) for b in rng.integers(0, 2, size=N))
    return LocalFamily(N, n, r, regions, seed, lambda_base, scale, norm, x, y)


def local_eval(fam: LocalFamily, z) -> np.ndarray:
    if fam.x is None or fam.y is None:
        raise ValueError("evaluating f_{x,y} needs both players' inputs")
    point = np.asarray(z, dtype=float).ravel()
    if point.size != fam.n:
        raise DimensionError(f"expected a point of dimension {fam.n}, got {point.size}")
    positions = fam.L(point)
    if len(positions) != fam.r:
        raise ValueError(f"L(z) has {len(positions)} positions, expected {fam.r}")
    idx = list(positions)
    return fam.f_prime(fam.x[idx], fam.y[idx], point)


def _assignments(r: int):
    return list(itertools.product([0, 1], repeat=r))


@register("local_spread")
class LocalSpread(LipschitzFunction):
    """A's map: z -> (f'(x|L(z), b_1, z), ..., f'(x|L(z), b_{2^r}, z), z)"""

    def __init__(self, family: LocalFamily):
        if family.x is None:
            raise ValueError("the spread map needs A's input x")
        blocks = 2 ** family.r
        lam = family.lipschitz
        if family.norm.is_inf:
            bound = max(lam, 1.0)
        else:
            p = family.norm.p
            bound = ((blocks * lam ** p + 1.0) / (blocks + 1)) ** (1.0 / p)
        super().__init__(family.n, family.n * (blocks + 1), bound, family.norm)
        self.family = family
        self._betas = _assignments(family.r)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        fam = self.family
        a = fam.x[list(fam.L(z))]
        parts = [fam.f_prime(a, beta, z) for beta in self._betas]
        parts.append(z)
        return np.concatenate(parts)

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["family"] = self.family.to_dict(bits=("x",))
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "LocalSpread":
        return cls(LocalFamily.from_dict(require(document, "family")))


@register("local_selector")
class LocalSelector(LipschitzFunction):
    """
    B's map on the range of the spread map: read z from the last block and
    return the block whose assignment equals y|L(z).

    The certified bound (2^r + 1)^(1/p) * (lambda + 1) holds on that range;
    off it the selector is only evaluated by tests.
    """

    def __init__(self, family: LocalFamily):
        if family.y is None:
            raise ValueError("the selector map needs B's input y")
        blocks = 2 ** family.r
        spread = 1.0 if family.norm.is_inf else (blocks + 1) ** (1.0 / family.norm.p)
        super().__init__(family.n * (blocks + 1), family.n, spread * (family.lipschitz + 1.0), family.norm)
        self.family = family

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        fam = self.family
        n = fam.n
        z = np.clip(w[-n:], 0.0, 1.0)
        index = 0
        for bit in fam.y[list(fam.L(z))]:
            index = 2 * index + int(bit)
        return w[index * n : (index + 1) * n].copy()

    def to_dict(self) -> Dict[str, Any]:
        doc = self.header()
        doc["family"] = self.family.to_dict(bits=("y",))
        return doc

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "LocalSelector":
        return cls(LocalFamily.from_dict(require(document, "family")))


def local_to_comp(fam, epsilon: Optional[float] = None) -> ReductionRecord:
    """
    Comp instance with f_A = LocalSpread and f_B = LocalSelector.

    f_B(f_A(z)) = f_{x,y}(z) at every z: the selector reads z back from the
    last block, and the block it picks was built with beta = y|L(z).
    """
    if isinstance(fam, BrouwerInstance):
        if fam.kind != LOCAL:
            raise ReductionError(f"expected a local instance, got {fam.kind}")
        source = fam
        fam = source.family
    else:
        source = BrouwerInstance(LOCAL, epsilon=0.1 if epsilon is None else epsilon, family=fam)
    if fam.r > MAX_LOCALITY:
        raise ReductionError(f"locality r={fam.r} is too large to materialize 2^r blocks (max {MAX_LOCALITY})")
    f_a = LocalSpread(fam)
    f_b = LocalSelector(fam)
    target = BrouwerInstance(COMP, f_a, f_b, source.epsilon)
    return ReductionRecord(
        ["local_to_comp"],
        source,
        target,
        EpsilonMap(1.0, "comp map equals the local member pointwise"),
        [BackmapStep("identity")],
        (f_a.lipschitz, f_b.lipschitz),
    )
