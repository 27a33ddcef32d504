import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from supermesh import generate_mesh, quasi_uniformity_constants, read_mesh, run_hierarchy_experiment
from supermesh.cli import main
from supermesh.experiment import COLUMNS, rows_to_csv
from supermesh.mesh import write_field


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


@pytest.fixture
def meshes(tmp_path):
    a, b = tmp_path / "a.smesh", tmp_path / "b.smesh"
    assert main(["gen", "--dim", "2", "--resolution", "8", "--seed", "3", "--offset", "2", "-o", str(a)]) == 0
    assert main(["gen", "--dim", "2", "--resolution", "4", "--seed", "3", "--offset", "1", "-o", str(b)]) == 0
    return a, b


def test_gen_matches_library(meshes):
    assert read_mesh(meshes[0]) == generate_mesh(2, 8, 0.2, 3, offset=2)


def test_pipeline(meshes, tmp_path, capsys):
    a, b = meshes
    s = tmp_path / "s.smesh"
    capsys.readouterr()
    assert main(["supermesh", str(a), str(b), "-o", str(s), "--vtk", str(tmp_path / "s.vtk")]) == 0
    out = kv(capsys.readouterr().out)
    assert int(out["n_a"]) == 128 and int(out["n_b"]) == 32
    assert main(["validate", str(s), str(a), str(b)]) == 0
    val = kv(capsys.readouterr().out)
    assert val["status"] == "PASS"

    field = tmp_path / "f.txt"
    write_field(np.random.default_rng(0).normal(size=128), field)
    for extra in ([], ["--supermesh", str(s)]):
        assert main(["project", str(a), str(b), str(field), "-o", str(tmp_path / "g.txt")] + extra) == 0
        proj = kv(capsys.readouterr().out)
        assert float(proj["integral_defect"]) <= 1e-12
        assert int(proj["uncovered"]) == 0


def test_validate_fails_on_wrong_parents(meshes, tmp_path, capsys):
    a, b = meshes
    s, other = tmp_path / "s.smesh", tmp_path / "other.smesh"
    main(["supermesh", str(a), str(b), "-o", str(s)])
    # same cell count, different geometry
    main(["gen", "--dim", "2", "--resolution", "4", "--seed", "4", "--offset", "1", "-o", str(other)])
    capsys.readouterr()
    assert main(["validate", str(s), str(a), str(other)]) == 1
    assert kv(capsys.readouterr().out)["status"] == "FAIL"
    # swapped parents: provenance indices out of range is an input error
    assert main(["validate", str(s), str(b), str(a)]) == 2


def test_bounds(meshes, capsys):
    a, b = meshes
    capsys.readouterr()
    assert main(["bounds", str(a)]) == 0
    out = kv(capsys.readouterr().out)
    q = quasi_uniformity_constants(read_mesh(a))
    assert float(out["h"]) == pytest.approx(q.h, rel=1e-11)
    assert float(out["rho"]) == pytest.approx(q.rho, rel=1e-11)
    assert float(out["lower"]) <= q.n_cells <= float(out["upper"])
    assert out["cell_count_within_bounds"] == "PASS"
    assert main(["bounds", str(a), str(b), "--check", "--cell", "5", "--samples", "5000"]) == 0
    out = kv(capsys.readouterr().out)
    assert out["theorem"] == "PASS"
    assert int(out["intersections"]) <= float(out["intersection_bound"])


def test_usage_and_input_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["gen", "--dim", "4", "-o", "x"]) == 2
    bad = tmp_path / "bad.smesh"
    bad.write_text("smesh 2 3 1\n0 0\n1 0\n0 1\n0 1 7\n")
    assert main(["bounds", str(bad)]) == 2
    assert "cell 0" in capsys.readouterr().err
    assert main(["bounds", str(tmp_path / "missing.smesh")]) == 2


def test_experiment_csv_is_deterministic(tmp_path):
    paths = [tmp_path / f"out{i}.csv" for i in range(2)]
    for p, threads in zip(paths, ("1", "0")):
        assert main(["experiment", "--dim", "2", "--levels", "4", "--seed", "7", "--threads", threads,
                     "-o", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = list(csv.DictReader(io.StringIO(paths[0].read_text())))
    assert list(rows[0]) == COLUMNS
    assert rows[0]["R"] == "n/a" and rows[0]["theorem"] == "n/a"
    for row in rows[1:]:
        assert float(row["R"]) >= 0.5
        assert row["theorem"] == "PASS"
        assert float(row["R"]) <= float(row["C"])


def test_self_pair_experiment():
    rows = run_hierarchy_experiment(2, 3, base_resolution=3, jitter=0.0, seed=1, self_pair=True)
    assert [r.R for r in rows] == [0.5, 0.5, 0.5]
    assert "n/a" not in rows_to_csv(rows)


def test_experiment_rejects_short_hierarchy():
    with pytest.raises(ValueError):
        run_hierarchy_experiment(2, 1)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "supermesh", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "experiment" in res.stdout
