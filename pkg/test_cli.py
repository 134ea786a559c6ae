"""
End-to-end runs of the command line through main(argv)
"""
import io
import json

import pytest
from openpyxl import load_workbook

from cli import EXIT_OK, EXIT_PROTOCOL, EXIT_USAGE, main
from functions.combined import Complement, Identity
from protocols.instances import COMP, BrouwerInstance
from reductions.imitation import ImitationGame
from sperner.coloring import SpernerColoring, validate_sperner
from sperner.triangulation import build_triangulation
from utils.serialization import read_json, write_json, with_format


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("FIXPOINT_QUIET", "1")


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_gen_is_deterministic(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for path in (first, second):
        assert main(["gen", "brouwer", "--kind", "comp", "--n", "2", "--seed", "3", "-o", str(path)]) == EXIT_OK
    assert first.read_text() == second.read_text()
    assert read_json(first)["kind"] == "comp"


def test_missing_required_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["gen", "brouwer", "--n", "1"])
    assert info.value.code == EXIT_USAGE


def test_unreadable_instance_is_a_usage_error(tmp_path):
    assert main(["solve", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_solve_then_verify_a_brouwer_instance(tmp_path, capsys):
    inst, report = tmp_path / "inst.json", tmp_path / "report.json"
    main(["gen", "brouwer", "--kind", "comp", "--n", "1", "--seed", "0", "-o", str(inst)])
    code, out = _run(capsys, "solve", inst)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["status"] == "ok"
    assert doc["verdict"] == "fixed point"
    assert doc["details"]["total_regime"] is True
    assert doc["transcript"]["total_bits"] <= doc["details"]["bound"]

    main(["solve", str(inst), "-o", str(report)])
    code, out = _run(capsys, "verify", inst, report)
    assert code == EXIT_OK
    assert json.loads(out)["ok"] is True


def test_timing_adds_wall_time(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    main(["gen", "brouwer", "--kind", "mean", "--n", "1", "--seed", "1", "-o", str(inst)])
    _, out = _run(capsys, "--timing", "solve", inst)
    assert "wall_time" in json.loads(out)


def test_failed_verification_exits_with_protocol_code(tmp_path, capsys):
    inst, solution = tmp_path / "inst.json", tmp_path / "sol.json"
    write_json(BrouwerInstance(COMP, Complement(Identity(1)), Identity(1)).to_dict(), inst)
    write_json(with_format({"type": "report", "solution": ["0"]}), solution)
    code, out = _run(capsys, "verify", inst, solution)
    assert code == EXIT_PROTOCOL
    assert json.loads(out)["ok"] is False


def test_coarse_grid_fails_with_protocol_code(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    write_json(BrouwerInstance(COMP, Complement(Identity(1)), Identity(1)).to_dict(), inst)
    code, out = _run(capsys, "solve", inst, "--alpha", "1")
    assert code == EXIT_PROTOCOL
    assert json.loads(out)["verdict"] == "no grid point accepted"


def test_reduction_chain_and_back_map(tmp_path, capsys):
    concat, mean, comp = (tmp_path / f"{name}.json" for name in ("concat", "mean", "comp"))
    first, second, report = tmp_path / "r1.json", tmp_path / "r2.json", tmp_path / "report.json"
    main(["gen", "brouwer", "--kind", "concat", "--n", "2", "--seed", "1", "--epsilon", "0.2", "-o", str(concat)])
    assert main(["reduce", str(concat), "--target", "mean", "-o", str(mean), "--record", str(first)]) == EXIT_OK
    assert main(["reduce", str(mean), "--target", "comp", "-o", str(comp), "--record", str(second)]) == EXIT_OK

    record = read_json(second)
    assert record["kinds"] == ["concat_to_mean", "mean_to_comp"]
    assert read_json(comp)["provenance"]["kinds"] == record["kinds"]

    assert main(["solve", str(comp), "-o", str(report)]) == EXIT_OK
    code, out = _run(capsys, "backmap", second, report)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["verdict"] == "fixed point"
    assert float(doc["residual"]) <= 0.2


def test_reduction_without_an_edge_is_a_usage_error(tmp_path):
    inst = tmp_path / "inst.json"
    main(["gen", "brouwer", "--kind", "comp", "--n", "1", "--seed", "0", "-o", str(inst)])
    assert main(["reduce", str(inst), "--target", "mean"]) == EXIT_USAGE


def test_nash_reduction_round_trip(tmp_path, capsys):
    inst, game, record, report = (tmp_path / f"{name}.json" for name in ("inst", "game", "record", "report"))
    main(["gen", "brouwer", "--kind", "comp", "--n", "1", "--p", "2", "--seed", "5", "-o", str(inst)])
    main(["reduce", str(inst), "--target", "nash", "--alpha", "0.25", "-o", str(game), "--record", str(record)])
    assert main(["solve", str(game), "--eps-regret", "0.07", "-o", str(report)]) == EXIT_OK
    assert read_json(report)["verdict"] == "approximate equilibrium"
    assert main(["verify", str(game), str(report), "--eps-regret", "0.07"]) == EXIT_OK
    code, out = _run(capsys, "backmap", record, report)
    assert code == EXIT_OK
    assert json.loads(out)["kinds"] == ["comp_to_nash"]


def test_sperner_reduction_round_trip(tmp_path, capsys):
    inst, coloring, record, report = (tmp_path / f"{name}.json" for name in ("inst", "col", "record", "report"))
    main(["gen", "brouwer", "--kind", "comp", "--n", "1", "--seed", "2", "-o", str(inst)])
    main(["reduce", str(inst), "--target", "sperner", "--k", "8", "-o", str(coloring), "--record", str(record)])
    assert read_json(coloring)["t"] == 2
    assert main(["solve", str(coloring), "-o", str(report)]) == EXIT_OK
    code, out = _run(capsys, "backmap", record, report)
    assert code == EXIT_OK
    assert len(json.loads(out)["solution"]) == 1


@pytest.mark.parametrize("method", ["auto", "surplus", "three-player"])
def test_solve_and_verify_a_sperner_coloring(tmp_path, capsys, method):
    inst, report = tmp_path / "col.json", tmp_path / "report.json"
    main(["gen", "sperner", "--d", "2", "--k", "6", "--t", "1", "--seed", "4", "-o", str(inst)])
    assert main(["solve", str(inst), "--method", method, "-o", str(report)]) == EXIT_OK
    doc = read_json(report)
    assert doc["verdict"] == "panchromatic"
    assert sorted(doc["solution"]["colors"]) == [0, 1, 2]
    code, out = _run(capsys, "verify", inst, report)
    assert code == EXIT_OK
    assert json.loads(out)["ok"] is True


def test_method_that_does_not_fit_the_instance(tmp_path):
    inst = tmp_path / "col.json"
    main(["gen", "sperner", "--d", "3", "--k", "2", "--t", "1", "--seed", "0", "-o", str(inst)])
    assert main(["solve", str(inst), "--method", "grid"]) == EXIT_USAGE
    assert main(["solve", str(inst), "--method", "surplus"]) == EXIT_USAGE


def test_bench_sperner_prints_csv(tmp_path, capsys):
    workbook = tmp_path / "bench.xlsx"
    code, out = _run(capsys, "bench", "sperner", "--d", "2", "--ks", "4", "6", "--count", "3", "--excel", workbook)
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "k,n,cells,bits,bound,verdict,ratio"
    assert len(lines) == 3
    sheet = load_workbook(io.BytesIO(workbook.read_bytes()))["Bench"]
    assert sheet["A1"].value == "K"
    assert sheet["A1"].font.bold


def test_bench_rows_as_json(tmp_path, capsys):
    rows_path = tmp_path / "bench.json"
    code, out = _run(capsys, "bench", "sperner", "--d", "2", "--ks", "4", "--count", "2", "--json", rows_path)
    assert code == EXIT_OK
    rows = json.loads(rows_path.read_text())
    assert [row["k"] for row in rows] == [4]
    assert rows[0]["verdict"] == "ok"


def test_bench_brouwer_inside_the_total_regime(capsys):
    code, out = _run(capsys, "bench", "brouwer", "--n", "1", "--steps", "4", "8", "--count", "2", "--epsilon", "0.3")
    assert code == EXIT_OK
    assert out.count(",ok,") == 2


@pytest.mark.slow
def test_surplus_bits_stay_within_the_bound_at_scale(capsys):
    code, out = _run(capsys, "bench", "sperner", "--d", "3", "--ks", "8", "16", "32", "--count", "10")
    assert code == EXIT_OK
    assert "FAIL" not in out


def test_generated_coloring_is_valid(tmp_path):
    path = tmp_path / "col.json"
    main(["gen", "sperner", "--d", "2", "--k", "8", "--t", "1", "--seed", "3", "-o", str(path)])
    coloring = SpernerColoring.from_dict(read_json(path))
    assert validate_sperner(build_triangulation(2, 8), coloring) is None


def test_nash_reduction_at_one_eighth_has_81_profiles(tmp_path):
    inst, game = tmp_path / "inst.json", tmp_path / "game.json"
    main(["gen", "brouwer", "--kind", "comp", "--n", "1", "--p", "2", "--seed", "0", "-o", str(inst)])
    assert main(["reduce", str(inst), "--target", "nash", "--alpha", "0.125", "-o", str(game)]) == EXIT_OK
    assert ImitationGame.from_dict(read_json(game)).profile_count == 81
