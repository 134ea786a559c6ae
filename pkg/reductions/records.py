"""
Reduction records: the target of a reduction plus everything needed to carry a
target solution back to the source, with the epsilon arithmetic attached.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from utils.errors import ReductionError, SchemaError
from utils.serialization import check_format, decode_real, encode_real, require, with_format


@dataclass(frozen=True)
class EpsilonMap:
    """
    Source accuracy guaranteed by a target solution: eps_source = scale * eps_target.

    A scale of None means the reduction has no closed-form accuracy transfer
    (the game and simplex reductions); their quality is measured, not promised.
    """

    scale: Optional[float]
    description: str = ""

    def __call__(self, target_epsilon: float) -> Optional[float]:
        if self.scale is None:
            return None
        return self.scale * target_epsilon

    def target_for(self, source_epsilon: float) -> Optional[float]:
        """Target accuracy that is enough to solve the source at source_epsilon"""
        if self.scale is None:
            return None
        return source_epsilon / self.scale

    def then(self, following: "EpsilonMap") -> "EpsilonMap":
        scale = None if self.scale is None or following.scale is None else self.scale * following.scale
        parts = [d for d in (self.description, following.description) if d]
        return EpsilonMap(scale, " then ".join(parts))

    def to_dict(self) -> Dict[str, Any]:
        return {"scale": None if self.scale is None else encode_real(self.scale), "description": self.description}

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "EpsilonMap":
        raw = document.get("scale")
        return cls(None if raw is None else decode_real(raw), document.get("description", ""))


BACKMAP_STEPS: Dict[str, Callable[[Any, Dict[str, Any]], Any]] = {}


def backmap_step(tag: str):
    def wrap(func):
        BACKMAP_STEPS[tag] = func
        return func

    return wrap


@backmap_step("identity")
def _identity(solution, params):
    return np.asarray(solution, dtype=float).ravel()


@backmap_step("block")
def _block(solution, params):
    point = np.asarray(solution, dtype=float).ravel()
    start, width = int(params["start"]), int(params["width"])
    if start + width > point.size:
        raise ReductionError(f"solution of dimension {point.size} has no block [{start}, {start + width})")
    return point[start : start + width]


@backmap_step("profile_x")
def _profile_x(solution, params):
    from reductions.imitation import nash_profile_to_point

    return nash_profile_to_point(solution)


@backmap_step("sperner_q")
def _sperner_q(solution, params):
    from sperner.embedding import sperner_backmap

    return sperner_backmap(solution, params)


@dataclass(frozen=True)
class BackmapStep:
    tag: str
    params: Dict[str, Any] = field(default_factory=dict)

    def apply(self, solution):
        try:
            step = BACKMAP_STEPS[self.tag]
        except KeyError as e:
            raise SchemaError(f"unknown backmap step {self.tag!r}") from e
        return step(solution, self.params)

    def to_dict(self) -> Dict[str, Any]:
        return {"tag": self.tag, "params": self.params}


class ReductionRecord:
    """
    source -> target with a back-map from target solutions to source solutions.

    `steps` run in order on a target solution. `claimed_bounds` are the
    Lipschitz bounds the construction promises for the target players
    (None for game and simplex targets).
    """

    def __init__(
        self,
        kinds: List[str],
        source,
        target,
        epsilon_map: EpsilonMap,
        steps: List[BackmapStep],
        claimed_bounds: Optional[Tuple[float, float]] = None,
    ):
        self.kinds = list(kinds)
        self.source = source
        self.target = target
        self.epsilon_map = epsilon_map
        self.steps = list(steps)
        self.claimed_bounds = claimed_bounds

    @property
    def kind(self) -> str:
        return "+".join(self.kinds)

    def backmap(self, solution):
        for step in self.steps:
            solution = step.apply(solution)
        return solution

    def then(self, following: "ReductionRecord") -> "ReductionRecord":
        """Chain with a reduction whose source is this record's target"""
        if following.source is not self.target and not _same_instance(following.source, self.target):
            raise ReductionError(f"cannot chain {self.kind} with {following.kind}: target and source differ")
        return ReductionRecord(
            self.kinds + following.kinds,
            self.source,
            following.target,
            self.epsilon_map.then(following.epsilon_map),
            following.steps + self.steps,
            following.claimed_bounds,
        )

    def to_dict(self) -> Dict[str, Any]:
        return with_format(
            {
                "type": "reduction",
                "kinds": self.kinds,
                "epsilon_map": self.epsilon_map.to_dict(),
                "backmap": [s.to_dict() for s in self.steps],
                "claimed_bounds": None
                if self.claimed_bounds is None
                else [encode_real(b) for b in self.claimed_bounds],
                "source": _strip_provenance(self.source.to_dict()),
            }
        )

    @classmethod
    def from_dict(cls, document: Dict[str, Any], target=None) -> "ReductionRecord":
        from protocols.instances import BrouwerInstance

        check_format(document, "reduction")
        try:
            steps = [BackmapStep(s["tag"], dict(s.get("params", {}))) for s in require(document, "backmap")]
        except (KeyError, TypeError) as e:
            raise SchemaError(f"malformed backmap step: {e}") from e
        bounds = document.get("claimed_bounds")
        return cls(
            list(require(document, "kinds")),
            BrouwerInstance.from_dict(require(document, "source")),
            target,
            EpsilonMap.from_dict(require(document, "epsilon_map")),
            steps,
            None if bounds is None else tuple(decode_real(b) for b in bounds),
        )

    def __repr__(self) -> str:
        return f"ReductionRecord({self.kind}, eps scale={self.epsilon_map.scale})"


def _strip_provenance(document: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in document.items() if k != "provenance"}


def _same_instance(a, b) -> bool:
    to_dict = getattr(a, "to_dict", None)
    if to_dict is None or not hasattr(b, "to_dict"):
        return False
    return _strip_provenance(a.to_dict()) == _strip_provenance(b.to_dict())
