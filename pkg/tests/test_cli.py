import json
import subprocess
import sys

import numpy as np
import pytest

from sdot_robust import io
from sdot_robust.cli import main
from sdot_robust.measures import DiscreteMeasure


@pytest.fixture
def atoms10(tmp_path):
    path = tmp_path / "atoms.csv"
    io.write_atoms(path, DiscreteMeasure.from_points(np.random.default_rng(0).uniform(size=(10, 2))))
    return str(path)


@pytest.fixture
def atoms5(tmp_path):
    path = tmp_path / "five.csv"
    io.write_atoms(path, DiscreteMeasure.from_points(np.random.default_rng(1).uniform(0.1, 0.9, size=(5, 2))))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bdp_point_cube_example(capsys, atoms10):
    code, out, _ = run(capsys, "bdp", "point", "--reference", "cube:2", "--atoms", atoms10, "--u", "0.3,0.4")
    assert code == 0
    doc = json.loads(out)
    assert doc["bdp"] == 0.3 and doc["schema_version"] == 1
    assert doc["config"]["seed"] == 1 and doc["config"]["reference"] == "cube:2"


def test_depth_command(capsys):
    code, out, _ = run(capsys, "depth", "--reference", "cube:2", "--point", "0.3,0.4")
    doc = json.loads(out)
    assert code == 0 and doc["value"] == pytest.approx(0.24) and doc["exact"]


def test_usage_errors_exit_two(capsys):
    for argv in (["depth", "--reference", "cube:2", "--point", "0.3,0.4", "--bogus"],
                 ["depth", "--reference", "square:2", "--point", "0.3"],
                 ["depth", "--reference", "cube:2"],
                 ["bdp", "curve", "--n", "zero"],
                 []):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
    capsys.readouterr()


def test_domain_error_exit_one(capsys, atoms10):
    code, _, err = run(capsys, "bdp", "point", "--reference", "cube:2", "--atoms", atoms10, "--u", "1.5,0.4")
    assert code == 1 and json.loads(err)["error"] == "outside_support"
    code, _, err = run(capsys, "depth", "--reference", "cube:2", "--point", "0.3,0.4,0.5")
    assert code == 1 and json.loads(err)["error"] == "dimension_mismatch"
    code, _, err = run(capsys, "bdp", "point", "--reference", "cube:2", "--atoms", "/nonexistent.csv",
                       "--u", "0.3,0.4")
    assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"


def test_solve_map_ranks_trim_pipeline(capsys, tmp_path, atoms10):
    out1 = str(tmp_path / "map.json")
    common = ["sdot", "solve", "--reference", "cube:2", "--atoms", atoms10, "--budget", "20000", "--out", out1]
    assert run(capsys, *common)[0] == 0
    first = open(out1, "rb").read()
    assert run(capsys, *common)[0] == 0
    assert open(out1, "rb").read() == first
    doc = json.loads(first)
    assert doc["schema_version"] == 1 and len(doc["w"]) == 10 and doc["w"][0] == 0.0

    code, out, _ = run(capsys, "sdot", "map", "--map", out1, "--point", "0.5,0.5", "--point", "0.1,0.9")
    mapped = json.loads(out)
    assert code == 0 and len(mapped["cells"]) == 2
    assert mapped["images"][0] == doc["atoms"][mapped["cells"][0]]

    pts = tmp_path / "pts.csv"
    pts.write_text("# u\n0.5,0.5\n0.1,0.9\n")
    _, out2, _ = run(capsys, "sdot", "map", "--map", out1, "--points-file", str(pts))
    assert json.loads(out2)["cells"] == mapped["cells"]

    code, out, _ = run(capsys, "sdot", "ranks", "--map", out1, "--budget", "20000")
    assert code == 0 and np.array(json.loads(out)["ranks"]).shape == (10, 2)

    code, out, _ = run(capsys, "trim", "--mode", "cube", "--beta", "0.5", "--map", out1, "--budget", "20000")
    assert code == 0 and len(json.loads(out)["kept_indices"]) == 5
    code, out, _ = run(capsys, "trim", "--mode", "depth", "--beta", "0", "--map", out1, "--budget", "20000")
    res = json.loads(out)
    np.testing.assert_allclose(res["trimmed_mean"], np.mean(doc["atoms"], axis=0), rtol=0, atol=1e-15)


def test_bdp_curve(capsys, tmp_path):
    code, out, _ = run(capsys, "bdp", "curve", "--kind", "ball", "--dims", "1,3", "--alphas", "5")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# config:") and lines[1] == "kind,d,alpha,bdp"
    assert len(lines) == 2 + 2 * 5
    assert lines[-3].split(",")[:3] == ["ball", "3", "0.5"]
    assert float(lines[-3].split(",")[3]) == pytest.approx(0.15625, abs=1e-8)
    path = tmp_path / "curve.csv"
    run(capsys, "bdp", "curve", "--n", "10", "--dims", "2", "--alphas", "3", "--out", str(path))
    rows = path.read_text().splitlines()[2:]
    assert len(rows) == 6 and all(float(r.split(",")[3]) * 10 == round(float(r.split(",")[3]) * 10) for r in rows)


def test_bdp_empirical(capsys, tmp_path, atoms5):
    csv_path = tmp_path / "profile.csv"
    argv = ["bdp", "empirical", "--reference", "cube:2", "--atoms", atoms5, "--u", "0.5,0.5",
            "--contaminate", "0,1,2,3,4", "--budget", "20000", "--integral-budget", "20000",
            "--rgrid", "1,2,4,8", "--csv", str(csv_path)]
    code, out, _ = run(capsys, *argv)
    doc = json.loads(out)
    assert code == 0 and doc["diverges"] and doc["predicted_diverges"] and len(doc["radii"]) == 4
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("# config:") and lines[1] == "R,integral" and len(lines) == 6
    # global and per-command thread flags both parse; threading leaves the bytes unchanged
    code2, out2, _ = run(capsys, "--threads", "2", *argv)
    doc2 = json.loads(out2)
    assert doc2["config"]["threads"] == 2 and doc2["integrals"] == doc["integrals"]


def test_console_script_entry_point(atoms10):
    proc = subprocess.run([sys.executable, "-m", "sdot_robust.cli", "bdp", "point", "--reference", "cube:2",
                           "--atoms", atoms10, "--u", "0.3,0.4"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["bdp"] == 0.3
    proc = subprocess.run([sys.executable, "-m", "sdot_robust.cli", "depth", "--unknown"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2
