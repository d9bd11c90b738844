import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from acgeo import cli
from acgeo.catalog import builtin_scene


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_nijenhuis_pass_and_fail_exit_codes(capsys, tmp_path):
    code, out, err = run_cli(["nijenhuis", "c3_flat", "--points", "20"], capsys)
    assert code == 0
    assert "overall PASS" in out

    # the twisted structure is tagged non-integrable, so nonzero N passes
    code, out, err = run_cli(
        ["nijenhuis", "r4_twisted", "--points", "10"], capsys
    )
    assert code == 0

    # retag it as integrable and the same data must fail the expectation
    doc = builtin_scene("r4_twisted").to_dict()
    doc["tags"] = ["integrable"]
    path = tmp_path / "mislabeled.yaml"
    path.write_text(yaml.safe_dump(doc))
    code, out, err = run_cli(["nijenhuis", str(path), "--points", "10"], capsys)
    assert code == 1
    assert "overall FAIL" in out
    assert "[FAIL] nijenhuis" in out


def test_certify_s6_obstructed(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    code, out, _ = run_cli(
        ["certify", "s6", "--points", "20", "--out", str(out_path)], capsys
    )
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["overall"] == "pass"
    assert report["command"] == "certify"
    block = report["scenes"][0]
    assert block["scene"] == "s6_octonion"
    check = block["checks"][0]
    assert check["verdict"] == "pass"
    assert check["details"]["verdicts"] == {"NO_COMPATIBLE_SYMPLECTIC_FORM": 20}
    assert check["details"]["lambda_spread_rel"] < 1e-8
    assert check["details"]["lambda_min"] > 0.5
    assert check["details"]["obstruction_imag_min"] > 0.4


def test_certify_flat_scene_is_flagged_inconclusive(capsys):
    code, out, _ = run_cli(["certify", "c3_flat", "--points", "10"], capsys)
    assert code == 0
    assert "PASS*" in out  # pass-with-flag: nothing to certify on a control


def test_nk_check_distinguishes_scenes(capsys):
    code, _, _ = run_cli(["nk-check", "s6", "--points", "10"], capsys)
    assert code == 0
    # standalone semantics: the identity must hold, and here it does not
    code, _, _ = run_cli(["nk-check", "r6_product", "--points", "10"], capsys)
    assert code == 1


def test_check_all_builtins_pass(capsys):
    code, out, _ = run_cli(["check-all", "--points", "10"], capsys)
    assert code == 0
    assert "overall PASS" in out
    for name in ("s6_octonion", "r4_remark1", "r4_twisted", "c3_flat", "r6_product"):
        assert f"scene {name}" in out


def test_lee_form_report_fields(capsys, tmp_path):
    out_path = tmp_path / "lee.json"
    code, _, _ = run_cli(
        ["lee-form", "r4_remark1", "--points", "25", "--out", str(out_path)],
        capsys,
    )
    assert code == 0
    report = json.loads(out_path.read_text())
    check = report["scenes"][0]["checks"][0]
    assert check["name"] == "lee-form"
    assert check["points"] == 25
    assert check["max_residual"] < 1e-10
    assert check["details"]["dtheta_max"] > 0.5
    assert check["details"]["theta_max"] > 0.5


def test_germ_accepts_explicit_point(capsys, tmp_path):
    out_path = tmp_path / "germ.json"
    code, _, _ = run_cli(
        [
            "germ",
            "r4_twisted",
            "--point",
            "0.3,-0.2,0.1,0.4",
            "--out",
            str(out_path),
        ],
        capsys,
    )
    assert code == 0
    report = json.loads(out_path.read_text())
    check = report["scenes"][0]["checks"][0]
    assert check["max_residual"] < 1e-9  # the d-minus norm of the germ
    details = check["details"]
    assert details["point"] == [0.3, -0.2, 0.1, 0.4]
    assert details["wedge_value"] > 0.0
    assert details["positivity_radius"] > 0.0

    code, _, err = run_cli(["germ", "r4_twisted", "--point", "1,2"], capsys)
    assert code == 2
    assert "point" in err


def test_symbols_report(capsys, tmp_path):
    out_path = tmp_path / "symbols.json"
    code, _, _ = run_cli(
        ["symbols", "r4_twisted", "--points", "30", "--out", str(out_path)], capsys
    )
    assert code == 0
    report = json.loads(out_path.read_text())
    details = report["scenes"][0]["checks"][0]["details"]
    assert details["dminus_rank2"] == 30
    assert details["polarized_rank5"] == 30
    assert details["metric_available"] is True


def test_reports_are_byte_identical_across_runs(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run_cli(
            ["certify", "s6", "--points", "5", "--out", str(path)], capsys
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()

    c, d = tmp_path / "c.json", tmp_path / "d.json"
    for path in (c, d):
        run_cli(["check-all", "--points", "5", "--out", str(path)], capsys)
    assert c.read_bytes() == d.read_bytes()


def test_seed_changes_sampled_points(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(["nijenhuis", "r4_twisted", "--points", "5", "--out", str(a)], capsys)
    run_cli(
        ["nijenhuis", "r4_twisted", "--points", "5", "--seed", "7", "--out", str(b)],
        capsys,
    )
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra["seed"] == 42 and rb["seed"] == 7
    norm_a = ra["scenes"][0]["checks"][0]["details"]["max_norm"]
    norm_b = rb["scenes"][0]["checks"][0]["details"]["max_norm"]
    assert norm_a != norm_b


def test_malformed_scene_file_exits_2_with_location(capsys, tmp_path):
    doc = builtin_scene("c3_flat").to_dict()
    doc["J"][2][1] = "x1 + * 3"
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(doc))
    code, out, err = run_cli(["nijenhuis", str(path)], capsys)
    assert code == 2
    assert "J[3][2]" in err
    assert out == ""


def test_geometric_fault_exits_2_with_worst_point(capsys, tmp_path):
    doc = builtin_scene("r4_twisted").to_dict()
    doc["J"][0][0] = "0.5"
    path = tmp_path / "fault.yaml"
    path.write_text(yaml.safe_dump(doc))
    code, _, err = run_cli(["nijenhuis", str(path)], capsys)
    assert code == 2
    assert "J^2" in err and "at point" in err


def test_unknown_scene_exits_2(capsys):
    code, _, err = run_cli(["certify", "not_a_scene"], capsys)
    assert code == 2
    assert "unknown scene" in err and "built-ins" in err


def test_scene_flag_conflicts_and_missing(capsys, tmp_path):
    code, _, err = run_cli(["nijenhuis"], capsys)
    assert code == 2  # no scene given for a scene command

    scene_path = tmp_path / "c3.yaml"
    from acgeo.catalog import save_scene

    save_scene(builtin_scene("c3_flat"), scene_path)
    code, _, _ = run_cli(["nijenhuis", "--scene-file", str(scene_path)], capsys)
    assert code == 0


def test_wrong_dimension_command_exits_2(capsys):
    code, _, err = run_cli(["certify", "r4_twisted"], capsys)
    assert code == 2
    assert "6" in err

    code, _, err = run_cli(["germ", "s6"], capsys)
    assert code == 2

    code, _, err = run_cli(["lee-form", "c3_flat"], capsys)
    assert code == 2


def test_missing_metric_operations_exit_2(capsys, tmp_path):
    doc = builtin_scene("r6_product").to_dict()
    del doc["h"]
    path = tmp_path / "no-metric.yaml"
    path.write_text(yaml.safe_dump(doc))
    code, _, _ = run_cli(["nijenhuis", str(path)], capsys)
    assert code == 0  # torsion needs no metric
    code, _, err = run_cli(["nk-check", str(path)], capsys)
    assert code == 2
    assert "no metric" in err


def test_argparse_errors_use_exit_code_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["nijenhuis", "c3_flat", "--bogus"])
    assert exc.value.code == 2


def test_console_entry_point_round_trip(tmp_path):
    out_path = tmp_path / "entry.json"
    proc = subprocess.run(
        [sys.executable, "-m", "acgeo", "certify", "s6", "--points", "3",
         "--out", str(out_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "overall PASS" in proc.stdout
    report = json.loads(out_path.read_text())
    assert report["points"] == 3

    proc_bad = subprocess.run(
        [sys.executable, "-m", "acgeo", "certify", "missing_scene"],
        capture_output=True,
        text=True,
    )
    assert proc_bad.returncode == 2
    assert "error:" in proc_bad.stderr
