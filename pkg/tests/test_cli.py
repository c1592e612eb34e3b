import subprocess
import sys

import pytest

from chc.cli import main
from chc.scenarios import GROUPS_DIR


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def parse(report: str) -> dict:
    return dict(line.split(": ", 1) for line in report.splitlines())


def group(name):
    return GROUPS_DIR / f"{name}.json"


@pytest.mark.parametrize(
    "name, expected",
    [("loxodromic", "loxodromic"), ("translation", "parabolic"), ("identity", "identity")],
)
def test_classify(capsys, name, expected):
    code, out, err = run(capsys, "classify", group(name))
    assert code == 0 and err == ""
    assert parse(out)["g1"] == expected


def test_parabolic_example1(capsys):
    code, out, _ = run(capsys, "parabolic", group("example1"))
    rep = parse(out)
    assert code == 0
    assert rep["stein"] == "false" and rep["delta"] == "2/1"
    assert list(rep)[:4] == ["command", "version", "seed", "file"]


def test_parabolic_example2(capsys):
    rep = parse(run(capsys, "parabolic", group("example2"))[1])
    assert rep["stein"] == "false" and rep["delta"] == "5/2"


def test_parabolic_translation(capsys):
    rep = parse(run(capsys, "parabolic", group("translation"))[1])
    assert rep["stein"] == "true" and rep["delta"] == "1/2"
    assert rep["caveats"] != "none"


def test_delta_exact(capsys):
    code, out, _ = run(capsys, "delta-exact", group("example2"))
    assert code == 0 and parse(out)["delta"] == "5/2"


def test_delta_estimate_example1(capsys):
    code, out, _ = run(capsys, "delta-estimate", group("example1"))
    rep = parse(out)
    assert code == 0
    assert 1.5 <= float(rep["estimate"]) <= 2.5


def test_delta_estimate_loxodromic(capsys, caplog):
    code, out, err = run(capsys, "delta-estimate", group("loxodromic"))
    assert code == 0
    assert float(parse(out)["estimate"]) <= 0.1
    assert "matrix entries exceed" in caplog.text


def test_delta_estimate_depth_zero(capsys):
    code, out, err = run(capsys, "delta-estimate", group("example1"), "--depth", "0")
    assert code == 5 and out == "" and "insufficient" in err


def test_delta_estimate_csv(capsys):
    code, out, _ = run(capsys, "delta-estimate", group("translation"), "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "radius,count" and len(lines) == 65


def test_density_build(capsys):
    code, out, _ = run(capsys, "density-build", group("schottky"), "--depth", "6")
    rep = parse(out)
    assert code == 0
    assert float(rep["s"]) == pytest.approx(float(rep["delta_hat"]) + 0.05, abs=2e-6)
    code, out, _ = run(capsys, "density-build", group("schottky"), "--depth", "2", "--format", "csv")
    assert out.splitlines()[0] == "word,word_length,displacement,weight"
    assert len(out.splitlines()) == 1 + 17


def test_levi_check_schottky_small(capsys):
    code, out, _ = run(capsys, "levi-check", group("schottky"), "--depth", "8", "--grid", "3x2")
    rep = parse(out)
    assert code == 0 and rep["result"] == "PASS" and rep["probes"] == "6"


def test_levi_check_degenerate_warns(capsys):
    code, out, err = run(capsys, "levi-check", group("identity"), "--grid", "2x1")
    rep = parse(out)
    assert rep["warnings"] != "none"
    assert "warning" in err


def test_levi_check_csv(capsys):
    code, out, _ = run(capsys, "levi-check", group("schottky"), "--depth", "6", "--grid", "2x2",
                       "--format", "csv")
    assert out.splitlines()[0] == "point,direction,coords,levi,threshold,result"


def test_orbit_export(capsys):
    code, out, _ = run(capsys, "orbit-export", group("example1"), "--depth", "2", "--format", "csv")
    assert code == 0 and len(out.splitlines()) == 1 + 17
    rep = parse(run(capsys, "orbit-export", group("example1"), "--depth", "2")[1])
    assert rep["points"] == "17" and rep["capped"] == "false"


def test_malformed_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dimension": 2,')
    for cmd in ("parabolic", "levi-check", "classify"):
        code, out, err = run(capsys, cmd, bad)
        assert code == 2 and out == "" and err


def test_missing_file(capsys, tmp_path):
    code, out, err = run(capsys, "classify", tmp_path / "nope.json")
    assert code == 2 and "cannot read" in err


def test_invalid_matrix(capsys, tmp_path):
    f = tmp_path / "m.json"
    f.write_text('{"dimension": 1, "generators": [{"matrix": [[[2, 0], [0, 0]], [[0, 0], [1, 0]]]}]}')
    code, out, err = run(capsys, "classify", f)
    assert code == 3 and out == "" and "invalid matrix" in err


def test_non_commuting_projections(capsys, tmp_path):
    f = tmp_path / "n.json"
    f.write_text(
        '{"dimension": 3, "basis": "siegel", "generators": ['
        '{"heisenberg": {"T": [[[0,0],[1,0]],[[1,0],[0,0]]], "b": [[0,0],[0,0]], "c": 0}},'
        '{"heisenberg": {"T": [[[1,0],[0,0]],[[0,0],[-1,0]]], "b": [[1,0],[0,0]], "c": 0}}]}'
    )
    code, out, err = run(capsys, "parabolic", f)
    rep = parse(out)
    assert code == 4
    assert rep["pi_abelian"] == "false" and rep["witness"] == "g1 g2"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["nosuch"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["levi-check", str(group("schottky")), "--grid", "3by2"])
    assert info.value.code == 2
    assert run(capsys, "orbit-export", group("schottky"), "--max-points", "0")[0] == 2


def test_seed_sources(capsys, monkeypatch):
    monkeypatch.setenv("CHC_SEED", "7")
    assert parse(run(capsys, "classify", group("identity"))[1])["seed"] == "7"
    assert parse(run(capsys, "classify", group("identity"), "--seed", "3")[1])["seed"] == "3"
    monkeypatch.setenv("CHC_SEED", "x")
    assert run(capsys, "classify", group("identity"))[0] == 2


def test_deterministic_output(capsys):
    args = ("levi-check", group("schottky"), "--depth", "6", "--grid", "3x2", "--seed", "11")
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "chc.cli", "parabolic", str(group("example1"))],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "delta: 2/1" in proc.stdout
