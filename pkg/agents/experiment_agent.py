import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from protocols.grid import (
    default_bits_per_coord,
    grid_cost_bound,
    regime_epsilon,
    run_grid_protocol,
    total_regime_check,
    verify_solution,
)
from protocols.instances import COMP, CONCAT, LOCAL, MEAN, BrouwerInstance, random_instance
from reductions.brouwer import comp_to_concat, concat_to_mean, mean_to_comp
from reductions.imitation import ImitationGame, comp_to_nash, enumerate_approx_pure_nash
from reductions.local import local_to_comp
from reductions.records import ReductionRecord
from sperner.coloring import (
    SpernerColoring,
    is_panchromatic,
    random_sperner_coloring,
    validate_sperner,
)
from sperner.embedding import comp_to_sperner
from sperner.protocols import SOLVERS, run_surplus_protocol, surplus_bit_bound
from sperner.triangulation import build_triangulation
from utils.errors import ProtocolResult, ReductionError, SchemaError
from utils.serialization import check_format, decode_vector, encode_real, encode_vector, fingerprint, with_format

BROUWER_METHODS = ("grid",)
GAME_METHODS = ("nash",)


def log(message: str) -> None:
    """Status line on the error stream; standard output carries reports only"""
    if os.getenv("FIXPOINT_QUIET", "0") != "1":
        print(message, file=sys.stderr)


@dataclass
class RunReport:
    """Machine-readable outcome of one solve, with the referee's verdict"""

    command: str
    instance_fingerprint: str
    status: str
    verdict: str
    solution: Any = None
    transcript: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    wall_time: Optional[float] = None

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "ok" else 3

    def to_dict(self) -> Dict[str, Any]:
        doc = {
            "type": "report",
            "command": self.command,
            "instance_fingerprint": self.instance_fingerprint,
            "status": self.status,
            "verdict": self.verdict,
            "solution": self.solution,
            "transcript": self.transcript,
            "details": self.details,
        }
        if self.wall_time is not None:
            doc["wall_time"] = encode_real(self.wall_time)
        return with_format(doc)


def load_instance(document: Dict[str, Any]):
    """BrouwerInstance, SpernerColoring or ImitationGame, by the document's type"""
    check_format(document)
    kind = document.get("type")
    if kind == "brouwer":
        return BrouwerInstance.from_dict(document)
    if kind == "sperner":
        return SpernerColoring.from_dict(document)
    if kind == "game":
        return ImitationGame.from_dict(document)
    raise SchemaError(f"cannot solve a {kind!r} document")


def solution_payload(report_or_solution) -> Any:
    """The bare solution inside a run report, or the argument itself"""
    if isinstance(report_or_solution, dict) and report_or_solution.get("type") == "report":
        return report_or_solution.get("solution")
    return report_or_solution


def auto_alpha(inst: BrouwerInstance, bits_per_coord: int) -> float:
    """Coarsest grid 1/s that still lies in the total regime at the margin the quantized walk needs"""
    eps = regime_epsilon(inst, bits_per_coord)
    if eps <= 0:
        raise ValueError(f"{bits_per_coord} bits per coordinate leave no accuracy margin at eps={inst.epsilon:g}")
    steps = max(1, math.ceil((inst.lambda_combined + 1.0) / (2.0 * eps)))
    return 1.0 / steps


class ExperimentAgent:
    """
    Drives instance generation, protocol runs, reductions and referee checks.

    Every answer the agent reports is confirmed by an oracle holding the full
    input; the protocols themselves never see more than their own party's data.
    """

    def __init__(self, timing: bool = False):
        self.timing = timing
        log("✅ ExperimentAgent ready")

    # generation

    def generate(self, family: str, seed: int, **params) -> Dict[str, Any]:
        if family == "brouwer":
            kind = params.pop("kind", COMP)
            n = int(params.pop("n", 2))
            log(f"🔍 Generating {kind} instance (n={n}, seed={seed})")
            return random_instance(kind, seed, n, **params).to_dict()
        if family == "sperner":
            d, k, t = int(params["d"]), int(params["k"]), int(params.get("t", 1))
            log(f"🔍 Generating Sperner coloring (d={d}, k={k}, t={t}, seed={seed})")
            T = build_triangulation(d, k)
            return random_sperner_coloring(T, seed, t).to_dict()
        raise SchemaError(f"unknown instance family {family!r}")

    # solving

    def solve(
        self,
        document: Dict[str, Any],
        method: str = "auto",
        alpha: Optional[float] = None,
        bits_per_coord: Optional[int] = None,
        eps_regret: Optional[float] = None,
    ) -> RunReport:
        inst = load_instance(document)
        started = time.perf_counter()
        if isinstance(inst, BrouwerInstance):
            report = self._solve_brouwer(inst, method, alpha, bits_per_coord)
        elif isinstance(inst, SpernerColoring):
            report = self._solve_sperner(inst, method)
        else:
            report = self._solve_game(inst, method, eps_regret)
        report.instance_fingerprint = fingerprint(document)
        if self.timing:
            report.wall_time = time.perf_counter() - started
        icon = "✅" if report.status == "ok" else "❌"
        log(f"{icon} {report.command}: {report.verdict} ({report.transcript.get('total_bits', 0)} bits)")
        return report

    def _solve_brouwer(
        self, inst: BrouwerInstance, method: str, alpha: Optional[float], bits_per_coord: Optional[int]
    ) -> RunReport:
        if method not in ("auto",) + BROUWER_METHODS:
            raise SchemaError(f"method {method!r} does not apply to Brouwer instances")
        source = inst
        if inst.kind == LOCAL:
            log("📊 Local instance: solving through its comp reduction")
            inst = local_to_comp(inst).target
        bits = default_bits_per_coord() if bits_per_coord is None else int(bits_per_coord)
        alpha = auto_alpha(inst, bits) if alpha is None else float(alpha)
        in_regime = total_regime_check(inst.lambda_combined, alpha, inst.epsilon)
        if not in_regime:
            log(f"⚠️ alpha={alpha:g} is outside the total regime; the walk may find nothing")
        result = run_grid_protocol(inst, alpha, bits)
        details = dict(result.details)
        details.update({"alpha": encode_real(alpha), "bits_per_coord": bits, "total_regime": in_regime})
        details["bound"] = grid_cost_bound(inst, alpha, bits)
        return self._brouwer_report(source, result, details)

    def _brouwer_report(self, source: BrouwerInstance, result: ProtocolResult, details: Dict[str, Any]) -> RunReport:
        transcript = result.transcript.to_dict()
        if not result.ok:
            return RunReport("solve", "", result.status, result.reason, None, transcript, details)
        accepted, residual = verify_solution(source, result.solution)
        details["residual"] = encode_real(residual)
        verdict = "fixed point" if accepted else "not a fixed point"
        status = "ok" if accepted else "failure"
        return RunReport("solve", "", status, verdict, encode_vector(result.solution), transcript, details)

    def _solve_sperner(self, inst: SpernerColoring, method: str) -> RunReport:
        solver = SOLVERS.get(method)
        if solver is None:
            raise SchemaError(f"unknown Sperner method {method!r}, expected one of {sorted(SOLVERS)}")
        T = build_triangulation(inst.d, inst.k)
        try:
            result = solver(inst, T)
        except ValueError as e:
            raise SchemaError(str(e)) from e
        transcript = result.transcript.to_dict()
        details = dict(result.details)
        if result.witness is not None:
            details["witness"] = result.witness.to_dict()
        if not result.ok:
            return RunReport("solve", "", result.status, result.reason or result.status, None, transcript, details)

        cell = result.solution
        colors = inst.colors(T.vertex_count)
        referee_ok = validate_sperner(T, inst) is None and is_panchromatic(T, colors, cell)
        if "bound" in details and transcript["total_bits"] > details["bound"]:
            referee_ok = False
            details["over_bound"] = True
        solution = {
            "cell": cell.to_dict(),
            "vertices": list(cell.vertices),
            "colors": [int(colors[v]) for v in cell.vertices],
        }
        verdict = "panchromatic" if referee_ok else "not panchromatic"
        return RunReport("solve", "", "ok" if referee_ok else "failure", verdict, solution, transcript, details)

    def _solve_game(self, game: ImitationGame, method: str, eps_regret: Optional[float]) -> RunReport:
        if method not in ("auto",) + GAME_METHODS:
            raise SchemaError(f"method {method!r} does not apply to games")
        threshold = 0.0 if eps_regret is None else float(eps_regret)
        profiles = enumerate_approx_pure_nash(game, threshold)
        details = {"eps_regret": encode_real(threshold), "profiles": len(profiles)}
        if not profiles:
            return RunReport("solve", "", "failure", "no profile within the regret threshold", None, {}, details)
        best = min(profiles, key=lambda p: (p.regret, p.index))
        regret = game.profile_regret(best.x, best.y)
        verdict = "approximate equilibrium" if regret <= threshold + 1e-12 else "regret above threshold"
        status = "ok" if regret <= threshold + 1e-12 else "failure"
        return RunReport("solve", "", status, verdict, best.to_dict(), {}, details)

    # reductions

    def reduce(self, document: Dict[str, Any], target: str, **params) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        """
        (target document, reduction record document).

        A source that was itself produced by a reduction carries that record as
        provenance; the new record is chained onto it, so back-maps and epsilon
        maps compose across repeated reductions.
        """
        src = BrouwerInstance.from_dict(check_format(document, "brouwer"))
        record = self._reduction(src, target, params)
        if src.provenance:
            earlier = ReductionRecord.from_dict(src.provenance, target=src)
            record = earlier.then(record)
        log(f"📊 {record.kind}: eps scale {record.epsilon_map.scale}")
        record_doc = record.to_dict()
        if isinstance(record.target, BrouwerInstance):
            record.target.provenance = record_doc
        return record.target.to_dict(), record_doc

    def _reduction(self, src: BrouwerInstance, target: str, params: Dict[str, Any]) -> ReductionRecord:
        edge = (src.kind, target)
        if edge == (CONCAT, MEAN):
            return concat_to_mean(src)
        if edge == (MEAN, COMP):
            return mean_to_comp(src)
        if edge == (COMP, CONCAT):
            return comp_to_concat(src, params.get("c"))
        if edge == (LOCAL, COMP):
            return local_to_comp(src)
        if edge == (COMP, "nash"):
            return comp_to_nash(src, float(params.get("alpha") or 0.125))
        if edge == (COMP, "sperner"):
            return comp_to_sperner(src, int(params.get("k") or 16))
        raise ReductionError(f"no reduction from {src.kind} to {target}")

    def backmap(self, record_document: Dict[str, Any], solution) -> Dict[str, Any]:
        """Carry a target solution back to the source and let the referee check it there"""
        record = ReductionRecord.from_dict(record_document)
        payload = solution_payload(solution)
        if isinstance(payload, list):
            payload = np.asarray(decode_vector(payload), dtype=float)
        try:
            point = record.backmap(payload)
        except (KeyError, TypeError) as e:
            raise SchemaError(f"solution does not fit the back-map: {e}") from e
        accepted, residual = verify_solution(record.source, point)
        log(f"{'✅' if accepted else '⚠️'} back-mapped residual {residual:.3g} (eps={record.source.epsilon:g})")
        return with_format(
            {
                "type": "backmap",
                "kinds": record.kinds,
                "solution": encode_vector(point),
                "residual": encode_real(residual),
                "epsilon": encode_real(record.source.epsilon),
                "verdict": "fixed point" if accepted else "not a fixed point",
            }
        )

    # referee

    def verify(self, document: Dict[str, Any], solution, eps_regret: float = 0.0) -> Dict[str, Any]:
        inst = load_instance(document)
        payload = solution_payload(solution)
        if isinstance(inst, BrouwerInstance):
            accepted, residual = verify_solution(inst, decode_vector(payload))
            return with_format(
                {"type": "verdict", "ok": accepted, "residual": encode_real(residual), "epsilon": encode_real(inst.epsilon)}
            )
        if isinstance(inst, SpernerColoring):
            T = build_triangulation(inst.d, inst.k)
            violation = validate_sperner(T, inst)
            if violation is not None:
                return with_format({"type": "verdict", "ok": False, "violation": violation.to_dict()})
            try:
                cell = T.cell_from_dict(payload.get("cell", payload))
            except AttributeError as e:
                raise SchemaError("a Sperner solution must be a cell object") from e
            return with_format({"type": "verdict", "ok": is_panchromatic(T, inst, cell), "cell": cell.index})
        regret = inst.profile_regret(decode_vector(payload["x"]), decode_vector(payload["y"]))
        ok = regret <= eps_regret + 1e-12
        return with_format({"type": "verdict", "ok": ok, "regret": encode_real(regret), "eps_regret": encode_real(eps_regret)})

    # benchmarks

    def bench_sperner(self, d: int, ks: Sequence[int], count: int = 10, seed: int = 0) -> pd.DataFrame:
        """Surplus protocol on `count` random splits at t = d - 1 for every k"""
        rows: List[Dict[str, Any]] = []
        for k in ks:
            T = build_triangulation(d, k)
            bits, bounds, good = [], [], True
            for i in range(count):
                inst = random_sperner_coloring(T, seed + i, t=d - 1)
                result = run_surplus_protocol(inst, T)
                used = result.transcript.total_bits
                bound = surplus_bit_bound(result.details.get("r", 1), T.vertex_count)
                good = good and result.ok and is_panchromatic(T, inst, result.solution) and used <= bound
                bits.append(used)
                bounds.append(bound)
            n = T.vertex_count
            rows.append(
                {
                    "k": k,
                    "n": n,
                    "cells": T.cell_count,
                    "bits": max(bits),
                    "bound": max(bounds),
                    "verdict": "ok" if good else "FAIL",
                    "ratio": max(bits) / math.log2(n) ** 2,
                }
            )
            log(f"📊 d={d} k={k}: max {max(bits)} bits over {count} runs ({rows[-1]['verdict']})")
        return pd.DataFrame(rows)

    def bench_brouwer(
        self, kind: str, n: int, steps: Sequence[int], count: int = 10, seed: int = 0, lam: float = 1.0, epsilon: float = 0.1
    ) -> pd.DataFrame:
        """Grid protocol at alpha = 1/s for every s; `k` holds s and `cells` the grid size"""
        rows: List[Dict[str, Any]] = []
        bits_per_coord = default_bits_per_coord()
        for s in steps:
            alpha = 1.0 / s
            bits, bound, good, size = [], 0, True, 0
            for i in range(count):
                inst = random_instance(kind, seed + i, n, lam, epsilon)
                result = run_grid_protocol(inst, alpha, bits_per_coord)
                bits.append(result.transcript.total_bits)
                bound = max(bound, grid_cost_bound(inst, alpha, bits_per_coord))
                size = result.details["grid_size"]
                good = good and result.ok and verify_solution(inst, result.solution)[0]
            rows.append(
                {
                    "k": s,
                    "n": n,
                    "cells": size,
                    "bits": max(bits),
                    "bound": bound,
                    "verdict": "ok" if good else "FAIL",
                    "ratio": max(bits) / bound,
                }
            )
            log(f"📊 {kind} alpha=1/{s}: max {max(bits)} bits over {count} runs ({rows[-1]['verdict']})")
        return pd.DataFrame(rows)
