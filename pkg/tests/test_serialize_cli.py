"""Instance files, strict parsing diagnostics, and the command-line front
end with its exit-code contract (0 pass / 1 fail / 2 parse / 3 precondition)."""

import json
import os
from fractions import Fraction

import pytest

import navol.cli as cli
from navol.errors import InstanceFormatError, PreconditionError
from navol.harness import VerificationReport
from navol.serialize import (csv_text, decimal_str, instance_json,
                             parse_instance_text, serialize_instance)

F = Fraction

TENT = {
    "kind": "toric",
    "polytope": [["0"], ["1"]],
    "metrics": {
        "psi1": [[{"slope": ["0"], "constant": "0"},
                  {"slope": ["1/2"], "constant": "1/2"},
                  {"slope": ["1"], "constant": "0"}]],
        "psi2": "canonical",
    },
}

DIFF = {
    "kind": "toric",
    "polytope": [["0"], ["1"]],
    "metrics": {
        "pos": [[{"slope": ["0"], "constant": "0"},
                 {"slope": ["1/2"], "constant": "1/2"},
                 {"slope": ["1"], "constant": "0"}]],
        "neg": "canonical",
        "canonical": "canonical",
    },
}


def _bundled():
    return dict(cli.bundled_instance_texts())


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


# --------------------------------------------------------------------------
# parsing and serialization
# --------------------------------------------------------------------------

def test_bundled_instances_exist_and_are_sorted():
    names = [name for name, _ in cli.bundled_instance_texts()]
    assert names == sorted(names)
    assert set(names) == {"box_bump.json", "bump_segment.json",
                          "square_shift.json", "surface_f1.json",
                          "surface_p1xp1.json", "surface_p2.json",
                          "tent_segment.json", "tree_star.json"}


def test_round_trip_is_idempotent_for_every_bundled_instance():
    for name, text in cli.bundled_instance_texts():
        first = serialize_instance(parse_instance_text(text, name))
        second = serialize_instance(
            parse_instance_text(json.dumps(first), name))
        assert first == second, name
        assert instance_json(parse_instance_text(text, name)) \
            == instance_json(parse_instance_text(json.dumps(first), name))


def test_unknown_top_level_field_names_the_path():
    bad = dict(TENT, bogus=1)
    with pytest.raises(InstanceFormatError) as err:
        parse_instance_text(json.dumps(bad))
    assert "bogus" in str(err.value)


def test_unknown_nested_field_names_the_path():
    bad = json.loads(json.dumps(TENT))
    bad["metrics"]["psi1"][0][0]["slop"] = ["0"]
    with pytest.raises(InstanceFormatError) as err:
        parse_instance_text(json.dumps(bad))
    msg = str(err.value)
    assert "slop" in msg and "psi1" in msg


def test_decimal_literals_are_refused_with_location():
    bad = json.loads(json.dumps(TENT))
    bad["metrics"]["psi1"][0][1]["constant"] = 0.5
    with pytest.raises(InstanceFormatError) as err:
        parse_instance_text(json.dumps(bad))
    msg = str(err.value)
    assert "0.5" in msg and "constant" in msg


def test_nan_and_bad_rationals_are_refused():
    bad = json.loads(json.dumps(TENT))
    bad["metrics"]["psi1"][0][1]["constant"] = float("nan")
    with pytest.raises(InstanceFormatError):
        parse_instance_text(json.dumps(bad))
    for junk in ("1/0", "x/3", "", "1.5", "3e2"):
        worse = json.loads(json.dumps(TENT))
        worse["metrics"]["psi1"][0][1]["constant"] = junk
        with pytest.raises(InstanceFormatError):
            parse_instance_text(json.dumps(worse))


def test_unknown_kind_rejected():
    with pytest.raises(InstanceFormatError) as err:
        parse_instance_text(json.dumps({"kind": "mystery", "name": "x"}))
    assert "kind" in str(err.value)


def test_invalid_metric_reported_as_precondition_with_name():
    bad = json.loads(json.dumps(TENT))
    bad["metrics"]["psi1"][0][1]["slope"] = ["2"]
    with pytest.raises(PreconditionError) as err:
        parse_instance_text(json.dumps(bad))
    assert "psi1" in str(err.value)


def test_tree_instance_accessors():
    inst = parse_instance_text(_bundled()["tree_star.json"], "tree_star")
    assert inst.kind == "tree"
    target = inst.measure("target", "ma-solve")
    base = inst.measure("base", "ma-solve")
    assert target.total_mass == base.total_mass
    with pytest.raises(PreconditionError) as err:
        inst.measure("missing", "ma-solve")
    assert "target" in str(err.value) and "base" in str(err.value)


def test_surface_instance_accessors():
    inst = parse_instance_text(_bundled()["surface_p1xp1.json"], "p1xp1")
    assert inst.kind == "surface"
    assert inst.family.name == "P1xP1"
    assert inst.divisor("D", "morse-check").total() == (F(2), F(1))
    assert inst.scan is not None and inst.scan.grid_max >= 2
    with pytest.raises(PreconditionError):
        inst.divisor("Z", "morse-check")


def test_metric_name_resolution():
    inst = parse_instance_text(json.dumps(TENT))
    pair = inst.metric_pair("energy")
    assert pair[0].evaluate((F(-1),)) == 0
    single = parse_instance_text(_bundled()["bump_segment.json"], "bump")
    psi = single.single_metric("measure")
    assert psi.blocks and len(psi.blocks) == 2


def test_decimal_rendering():
    assert decimal_str(F(1, 2)) == "0.5"
    assert decimal_str(F(5)) == "5.0"
    assert decimal_str(F(0)) == "0.0"
    assert decimal_str(F(-7, 4)) == "-1.75"
    assert decimal_str(F(1, 3)) == "0.333333333333"
    assert decimal_str(F(2, 3)) == "0.666666666667"


def test_csv_text_layout():
    text = csv_text(["a", "b"], [["1", "2"], ["3", "4"]])
    lines = text.splitlines()
    assert lines[0].startswith("# generated ")
    assert lines[1] == "a,b"
    assert lines[2:] == ["1,2", "3,4"]
    assert text.endswith("\n")


# --------------------------------------------------------------------------
# command-line exit codes and outputs
# --------------------------------------------------------------------------

def _run(args, tmp_path, capsys):
    rc = cli.main([*args, "--out-dir", str(tmp_path / "out")])
    out = capsys.readouterr().out
    return rc, out


def test_energy_command(tmp_path, capsys):
    path = _write(tmp_path, "tent.json", TENT)
    rc, out = _run(["energy", path], tmp_path, capsys)
    assert rc == 0
    payload = json.loads(out)
    assert payload["energy"] == "1/4"
    assert (tmp_path / "out" / "energy.json").exists()


def test_navol_command_csv_output(tmp_path, capsys):
    path = _write(tmp_path, "tent.json", TENT)
    rc, out = _run(["navol", path, "--schedule", "2-4", "--format", "csv"],
                   tmp_path, capsys)
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].startswith("# generated ")
    assert lines[1] == "m,length,normalized,normalized_decimal"
    assert lines[2] == "2,1,1/4,0.25"
    assert lines[3].startswith("3,2,2/9,")
    assert lines[4] == "4,4,1/4,0.25"


def test_measure_command(tmp_path, capsys):
    path = _write(tmp_path, "tent.json", TENT)
    rc, out = _run(["measure", path], tmp_path, capsys)
    assert rc == 0
    payload = json.loads(out)
    assert payload["total_mass"] == "1"
    assert (tmp_path / "out" / "measure.csv").exists()


def test_envelope_command_reports_nonconvexity(tmp_path, capsys):
    bundle = _bundled()
    path = _write(tmp_path, "bump.json", bundle["bump_segment.json"])
    rc, out = _run(["envelope", path], tmp_path, capsys)
    assert rc == 0
    payload = json.loads(out)
    assert payload["input_semipositive"] is False


def test_diff_check_command_with_eps_flag(tmp_path, capsys):
    path = _write(tmp_path, "diff.json", DIFF)
    rc, out = _run(["diff-check", path, "--schedule", "1/2,1/4,1/8"],
                   tmp_path, capsys)
    assert rc == 0
    payload = json.loads(out)
    assert payload["exact"]["derivative"] == "1/2"


def test_ma_solve_and_surface_commands(tmp_path, capsys):
    bundle = _bundled()
    tree = _write(tmp_path, "tree.json", bundle["tree_star.json"])
    rc, out = _run(["ma-solve", tree], tmp_path, capsys)
    assert rc == 0
    p1xp1 = _write(tmp_path, "sf.json", bundle["surface_p1xp1.json"])
    rc, out = _run(["morse-check", p1xp1], tmp_path, capsys)
    assert rc == 0
    assert json.loads(out)["leading"] == "10"
    p2 = _write(tmp_path, "p2.json", bundle["surface_p2.json"])
    rc, out = _run(["perturb-scan", p2], tmp_path, capsys)
    assert rc == 0
    assert json.loads(out)["fitted_constant"] == "3/2"
    rc, out = _run(["cohomology", p1xp1], tmp_path, capsys)
    assert rc == 0


def test_exit_code_2_on_parse_problems(tmp_path, capsys):
    garbled = _write(tmp_path, "garbled.json", "{not json")
    assert _run(["energy", garbled], tmp_path, capsys)[0] == 2
    unknown = _write(tmp_path, "unknown.json", dict(TENT, zzz=3))
    assert _run(["energy", unknown], tmp_path, capsys)[0] == 2
    assert _run(["energy", str(tmp_path / "missing.json")],
                tmp_path, capsys)[0] == 2
    tent = _write(tmp_path, "tent.json", TENT)
    assert _run(["navol", tent, "--schedule", "abc"], tmp_path, capsys)[0] == 2


def test_exit_code_3_on_precondition_problems(tmp_path, capsys):
    bad = json.loads(json.dumps(TENT))
    bad["metrics"]["psi1"][0][1]["slope"] = ["2"]
    slope = _write(tmp_path, "slope.json", bad)
    assert _run(["energy", slope], tmp_path, capsys)[0] == 3
    tree = _write(tmp_path, "tree.json", _bundled()["tree_star.json"])
    assert _run(["measure", tree], tmp_path, capsys)[0] == 3
    tent = _write(tmp_path, "tent.json", TENT)
    assert _run(["ma-solve", tent], tmp_path, capsys)[0] == 3
    mismatch = json.loads(_bundled()["tree_star.json"])
    mismatch["measures"]["target"][0]["mass"] = "99"
    bad_tree = _write(tmp_path, "mismatch.json", mismatch)
    assert _run(["ma-solve", bad_tree], tmp_path, capsys)[0] == 3


def test_exit_code_1_on_failed_verification(tmp_path, capsys, monkeypatch):
    def fake(psi, instance="metric"):
        return VerificationReport(theorem="envelope-orthogonality",
                                  instance=instance, passed=False,
                                  exact={"residual": "1"}, series=[],
                                  runtime=0.0)
    monkeypatch.setattr(cli, "verify_orthogonality", fake)
    path = _write(tmp_path, "bump.json", _bundled()["bump_segment.json"])
    rc, _ = _run(["ortho-check", path], tmp_path, capsys)
    assert rc == 1


def test_out_dir_environment_variable(tmp_path, capsys, monkeypatch):
    target = tmp_path / "env-out"
    monkeypatch.setenv("NAVOL_OUT_DIR", str(target))
    path = _write(tmp_path, "tent.json", TENT)
    rc = cli.main(["energy", path])
    capsys.readouterr()
    assert rc == 0
    assert (target / "energy.json").exists()


def _csv_bodies(root):
    bodies = {}
    for name in sorted(os.listdir(root)):
        if name.endswith(".csv"):
            with open(os.path.join(root, name)) as fh:
                bodies[name] = "".join(line for line in fh
                                       if not line.startswith("#"))
    return bodies


def test_verify_all_deterministic_and_parallel_equal(tmp_path, capsys):
    outs = []
    for sub, threads in (("a", "1"), ("b", "1"), ("c", "2")):
        out_dir = tmp_path / sub
        rc = cli.main(["verify-all", "--seed", "0", "--threads", threads,
                       "--out-dir", str(out_dir)])
        capsys.readouterr()
        assert rc == 0
        outs.append(_csv_bodies(out_dir))
    assert outs[0] == outs[1]
    assert outs[0] == outs[2]
    assert outs[0], "verify-all must write at least one CSV"
