import json
from pathlib import Path

import pytest

from semitoric.cli import run

DATA = Path(__file__).resolve().parent.parent / "data"


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_helix_from_polygon(capsys):
    code, out, _ = call(capsys, "helix", "from-polygon", DATA / "fig_example_a.json")
    assert code == 0
    assert out.strip() == '{"d":2,"s":2,"v":[[0,1],[-1,-1]]}'


def test_system_times(capsys):
    code, out, _ = call(capsys, "system", "times", "--family", "cp2", "--alpha", "1", "--gamma", "0.2", "--delta", "3")
    data = json.loads(out)
    assert code == 0
    assert (data["t_minus_exact"], data["t_plus_exact"]) == ("5/14", "5/6")
    assert data["t_minus"] == pytest.approx(5 / 14, abs=1e-12)


def test_system_times_accepts_fractions(capsys):
    _, out, _ = call(capsys, "system", "times", "--family", "cp2", "--gamma", "1/8", "--format", "csv")
    assert out.splitlines()[0] == "t_minus,t_plus"
    tm, tp = map(float, out.splitlines()[1].split(","))
    assert (tm, tp) == pytest.approx((0.4, 2 / 3), abs=1e-12)


def test_surgery_script_final_polygon(capsys):
    code, out, _ = call(capsys, "surgery", "script", DATA / "fig_3c_blow_n5.txt")
    assert code == 0
    final = json.loads(out)["final"]
    # stored counter-clockwise from the lexicographically smallest vertex
    assert final["vertices"] == [["0", "0"], ["1", "0"], ["21/5", "16/5"], ["1/5", "1/5"]]


def test_polygon_validate_and_canon(capsys, tmp_path):
    src = tmp_path / "p.json"
    src.write_text(json.dumps({"vertices": [["-1", "0"], ["0", "0"], ["1", "1"]],
                               "marked": [{"x": "0", "y": "1/5", "eps": -1}]}))
    code, out, _ = call(capsys, "polygon", "validate", src)
    assert code == 0 and json.loads(out)["valid"]
    code, out, _ = call(capsys, "polygon", "canon", src)
    assert code == 0
    assert json.loads(out)["marked"][0]["eps"] == 1


def test_chop_then_unchop_round_trip(capsys, tmp_path):
    src = tmp_path / "tri.json"
    src.write_text(json.dumps({"vertices": [["0", "0"], ["3", "0"], ["0", "3"]], "marked": []}))
    chopped = tmp_path / "chopped.json"
    assert call(capsys, "surgery", "chop", src, "--at", "0,0", "--size", "1", "-o", chopped)[0] == 0
    code, out, _ = call(capsys, "surgery", "unchop", chopped, "--edge", "1,0", "0,1")
    assert code == 0
    assert json.loads(out)["vertices"] == [["0", "0"], ["3", "0"], ["0", "3"]]


def test_helix_build_and_classify(capsys, tmp_path):
    dest = tmp_path / "t3.json"
    assert call(capsys, "helix", "build", "--type", "3b", "--beta", "1", "--n", "4", "--h", "1/2", "-o", dest)[0] == 0
    _, out, _ = call(capsys, "helix", "classify", dest)
    assert json.loads(out)["tag"] == "T3"
    _, out, _ = call(capsys, "helix", "strict", dest)
    assert json.loads(out)["strictly_minimal"] is True


def test_karshon_text(capsys, tmp_path):
    dest = tmp_path / "t1.json"
    call(capsys, "helix", "build", "--type", "1", "--alpha", "1", "--h", "1/4", "-o", dest)
    code, out, _ = call(capsys, "karshon", "graph", dest, "--text")
    assert code == 0 and len(out.splitlines()) == 3
    _, out, _ = call(capsys, "karshon", "obstruct", dest, "--mark", "0")
    assert json.loads(out)["orbit_invariant"] is True


def test_image_svg(capsys):
    code, out, _ = call(capsys, "system", "image", "--family", "cp2", "--t", "1", "--j-cells", "16", "--format", "svg")
    assert code == 0 and out.startswith("<svg")


def test_domain_error_exit_one(capsys, tmp_path):
    src = tmp_path / "bad.json"
    src.write_text(json.dumps({"vertices": [["0", "0"], ["3", "0"], ["0", "1"]], "marked": []}))
    code, out, err = call(capsys, "polygon", "canon", src)
    assert code == 1 and out == ""
    record = json.loads(err)
    assert set(record) == {"error", "message"}
    code, _, err = call(capsys, "system", "height", "--family", "cp2", "--t", "0.9")
    assert code == 1 and json.loads(err)["error"] == "TNotInWindow"


def test_usage_error_exit_two(capsys):
    assert call(capsys, "polygon")[0] == 2
    code, _, err = call(capsys, "surgery", "chop", DATA / "fig_example_a.json", "--at", "0.5,0", "--size", "1")
    assert code == 2 and json.loads(err)["error"] == "UsageError"
    assert call(capsys, "helix", "from-polygon", DATA / "fig_example_a.json", "--format", "csv")[0] == 2
    assert call(capsys, "helix", "from-polygon", DATA / "missing.json")[0] == 2


def test_output_is_deterministic(capsys):
    argv = ["system", "spherecheck", "--family", "3c", "--t", "1", "--samples", "500", "--seed", "3"]
    first = call(capsys, *argv)
    assert first == call(capsys, *argv)
    assert json.loads(first[1])["ok"] is True
