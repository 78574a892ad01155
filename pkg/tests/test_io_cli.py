import json
import os

import numpy as np
import pytest

from saddlekit import generators as gen
from saddlekit import io
from saddlekit.cli import main
from saddlekit.mesh import validate_disc_mesh


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(out):
    return json.loads(out)


@pytest.mark.parametrize("shape", sorted(gen.GENERATORS))
def test_gen_then_validate_round_trip(shape, tmp_path, capsys):
    path = tmp_path / f"{shape}.json"
    code, _, _ = run(["gen", "--shape", shape, "--n", 2, "-o", path], capsys)
    assert code == 0
    code, out, _ = run(["validate", path], capsys)
    assert code == 0 and report(out)["result"]["validation"]["ok"]


def test_map_json_round_trip(tmp_path):
    mesh, f = gen.cone_disc(3 * np.pi, 2, warp=0.1)
    path = io.save_map(tmp_path / "c.json", mesh, f)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "saddlekit/1"
    assert set(doc["images"][0]) == {"r", "theta"}
    m2, f2 = io.load_map(path)
    assert np.array_equal(m2.triangles, mesh.triangles)
    assert np.allclose(f2.images, f.images, atol=0, rtol=0)
    assert f2.space == f.space


def test_obj_round_trip(tmp_path, hyperbolic):
    mesh, f = hyperbolic
    io.export_obj(tmp_path / "s.obj", f)
    m2, f2 = io.import_obj(tmp_path / "s.obj")
    assert np.array_equal(f2.images, f.images)
    assert validate_disc_mesh(m2).ok
    assert sorted(m2.boundary) == sorted(mesh.boundary)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    io.write_json(tmp_path / "a.json", {"x": 1})
    io.write_json(tmp_path / "a.json", {"x": 2})
    assert os.listdir(tmp_path) == ["a.json"]
    assert json.loads((tmp_path / "a.json").read_text())["x"] == 2


def test_non_finite_values_become_null():
    assert json.loads(io.dumps({"v": float("nan"), "w": np.inf}))["v"] is None


@pytest.mark.parametrize("doc,msg", [({"vertices": [[0, 0]]}, "triangles"),
                                     ({"vertices": [[0, 0, 0]], "triangles": []}, "vertices"),
                                     ({"schema": "other/9", "vertices": [], "triangles": []},
                                      "schema")])
def test_malformed_documents(doc, msg):
    with pytest.raises(io.InputError, match=msg):
        io.parse_map(doc)


def test_bad_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["validate", bad], capsys)[0] == 2
    assert run(["validate", tmp_path / "missing.json"], capsys)[0] == 2
    assert run(["check-saddle", "x.json", "--bogus"], capsys)[0] == 2


def test_unknown_generator_exits_2(capsys):
    assert run(["gen", "--shape", "nope"], capsys)[0] == 2


def test_bad_thread_count_exits_2(tmp_path, capsys, monkeypatch):
    path = tmp_path / "d.json"
    run(["gen", "--shape", "identity", "--n", 1, "-o", path], capsys)
    monkeypatch.setenv("SADDLEKIT_THREADS", "zero")
    assert run(["energy", path], capsys)[0] == 2


def test_check_saddle_exit_codes(tmp_path, capsys):
    hyp, bump = tmp_path / "h.json", tmp_path / "b.json"
    run(["gen", "--shape", "graph", "--expr", "x^2-y^2", "--n", 4, "-o", hyp], capsys)
    run(["gen", "--shape", "bump", "--n", 4, "-o", bump], capsys)
    code, out, _ = run(["check-saddle", hyp], capsys)
    assert code == 0 and report(out)["result"]["saddle"]["verdict"] == "saddle"
    code, out, _ = run(["check-saddle", bump, "--svg", tmp_path / "b.svg"], capsys)
    rep = report(out)
    assert code == 1 and rep["result"]["saddle"]["witnesses"]
    assert rep["config"]["density"] == 200 and rep["config"]["seed"] == 0
    assert (tmp_path / "b.svg").read_text().startswith("<svg")


def test_reports_are_deterministic(tmp_path, capsys):
    hyp = tmp_path / "h.json"
    run(["gen", "--shape", "graph", "--n", 3, "-o", hyp], capsys)
    a = run(["--seed", 7, "check-saddle", hyp, "--density", 30], capsys)[1]
    b = run(["--seed", 7, "check-saddle", hyp, "--density", 30], capsys)[1]
    assert a == b


def test_harmonize_then_monotone_pipeline(tmp_path, capsys):
    disc, out = tmp_path / "disc.json", tmp_path / "out.json"
    assert run(["gen", "--shape", "disc_grid", "--n", 4, "-o", disc], capsys)[0] == 0
    assert run(["harmonize", disc, "--boundary", "identity", "-o", out], capsys)[0] == 0
    assert run(["check-monotone", out, "--grid-n", 24], capsys)[0] == 0
    code, o, _ = run(["degree", out], capsys)
    assert code == 0 and report(o)["result"]["degree"] == 1


def test_descent_writes_trace(tmp_path, capsys):
    pinch, out, trace = tmp_path / "p.json", tmp_path / "o.json", tmp_path / "t.csv"
    run(["gen", "--shape", "pinch", "--n", 4, "-o", pinch], capsys)
    code, o, _ = run(["descent", pinch, "--segment=-1,0,1,0", "-o", out, "--trace", trace], capsys)
    assert code == 0 and report(o)["result"]["cuts"] == 2
    rows = trace.read_text().splitlines()
    assert rows[0] == "round,cut_index,energy" and len(rows) == 4


def test_cut_hat_and_find_hats(tmp_path, capsys):
    pinch, out = tmp_path / "p.json", tmp_path / "o.json"
    run(["gen", "--shape", "pinch", "--n", 4, "-o", pinch], capsys)
    code, o, _ = run(["find-hats", pinch, "--segment=-1,0,1,0", "--refinement", 2], capsys)
    assert code == 1 and len(report(o)["result"]["hats"]) == 2
    code, o, _ = run(["cut-hat", pinch, "--segment=-1,0,1,0", "-o", out], capsys)
    r = report(o)["result"]
    assert code == 0 and r["energy_after"] < r["energy_before"]


def test_graph_commands(tmp_path, capsys):
    ov, hyp = tmp_path / "ov.json", tmp_path / "h.json"
    run(["gen", "--shape", "overhang", "--n", 4, "-o", ov], capsys)
    run(["gen", "--shape", "graph", "--n", 4, "-o", hyp], capsys)
    assert run(["project-check", hyp], capsys)[0] == 0
    code, o, _ = run(["project-check", ov, "--svg", tmp_path / "p.svg"], capsys)
    assert code == 1 and report(o)["result"]["graph"]["n_overlap_pairs"] > 0
    code, _, _ = run(["envelopes", hyp, "--grid-n", 32, "--csv", tmp_path / "e.csv"], capsys)
    assert code == 0 and len((tmp_path / "e.csv").read_text().splitlines()) == 32 * 32 + 1
    code, o, _ = run(["max-principle", hyp, "--lambda", "0,0,0", "--disc", "0,0,0.5"], capsys)
    assert code == 0


def test_max_principle_failure_reports_hat(tmp_path, capsys):
    bump = tmp_path / "b.json"
    run(["gen", "--shape", "bump", "--n", 4, "-o", bump], capsys)
    code, o, _ = run(["max-principle", bump, "--lambda", "0,0,0", "--disc", "0,0,0.5"], capsys)
    assert code == 1 and report(o)["result"]["hats"]


def test_factorize_and_light(tmp_path, capsys):
    sq = tmp_path / "s.json"
    run(["gen", "--shape", "squeeze", "--n", 3, "-o", sq], capsys)
    code, o, _ = run(["factorize", sq, "-o", tmp_path / "q.json"], capsys)
    assert code == 0 and report(o)["result"]["factorization"]["exact"]
    assert run(["check-light", sq, "--grid-n", 16], capsys)[0] == 1
    code, o, _ = run(["check-monotone", sq, "--grid-n", 16, "--point", "0,0",
                      "--svg", tmp_path / "f.svg"], capsys)
    assert code == 0 and report(o)["result"]["fiber"]["n_components"] == 1


def test_energy_command(tmp_path, capsys):
    path = tmp_path / "i.json"
    run(["gen", "--shape", "identity", "--n", 2, "-o", path], capsys)
    code, o, _ = run(["energy", path, "--per-triangle"], capsys)
    r = report(o)["result"]
    assert code == 0 and r["total"] == pytest.approx(r["edge_form"])


def test_report_file_written(tmp_path, capsys):
    path, rep = tmp_path / "i.json", tmp_path / "r.json"
    run(["gen", "--shape", "identity", "--n", 1, "-o", path], capsys)
    run(["--report", rep, "energy", path], capsys)
    assert json.loads(rep.read_text())["command"] == "energy"
