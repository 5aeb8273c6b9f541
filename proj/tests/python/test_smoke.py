import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

import crossfuzz
from crossfuzz import _core

SRC = Path(os.environ.get("CROSSFUZZ_SOURCE_DIR", Path(__file__).resolve().parents[2]))
DATA = SRC / "data"
HERE = Path(__file__).resolve().parent
NAN = float("nan")


def tensor(dtype, shape, data):
    return {"kind": "tensor", "dtype": dtype, "shape": shape, "data": data}


def test_similarity():
    assert crossfuzz.levenshtein("kitten", "sitting") == 3
    assert crossfuzz.name_similarity("", "") == 1.0
    assert crossfuzz.name_similarity("softmax", "softmin") == pytest.approx(5 / 7)
    assert crossfuzz.normalize_api_name("tf.math.angle") == "angle"
    assert crossfuzz.count_similarity(2, 4) == 0.5
    assert crossfuzz.type_similarity(["Tensor", "Int"], ["Int", "Tensor"]) == 1.0


def test_reference_goldens():
    x = [-0.0, 1.401298464324817e-45, 1.100000023841858, -0.0, 5.960464477539063e-08,
         -2.0000000135803223, 1000000.0, 722801.375, 0.0, -1.100000023841858]
    args = [tensor("f32", [10], x), {"kind": "index_scalar", "value": 0}]
    stable = crossfuzz.reference_call("stable", "argsort", args)
    ftz = crossfuzz.reference_call("ftz", "argsort", args)
    assert stable["outputs"][0]["data"] == [5, 9, 0, 3, 8, 1, 4, 2, 7, 6]
    assert ftz["outputs"][0]["data"] == [5, 9, 0, 1, 3, 8, 4, 2, 7, 6]
    v = crossfuzz.compute_variance([stable, ftz])
    assert v["integral"] and v["mismatches"] == 3

    z = [tensor("c64", [1], [["NaN", "NaN"]])]
    assert crossfuzz.reference_call("stable", "angle", z)["outputs"][0]["data"] == ["NaN"]
    assert crossfuzz.reference_call("ftz", "angle", z)["outputs"][0]["data"] == [0.0]


def test_value_encoding_rejects_garbage():
    assert crossfuzz.normalize_value(tensor("f64", [1], ["-Infinity"]))["data"] == ["-Infinity"]
    with pytest.raises(ValueError):
        crossfuzz.normalize_value(tensor("f64", [2], [1.0]))


def test_match_lookalikes():
    groups = crossfuzz.match(sorted((DATA / "lookalikes").glob("*.jsonl")), reference="pytorch")
    assert len(groups) == 1
    assert sorted(m["source"] for m in groups[0]["members"]) == ["chainer", "jax", "keras", "pytorch", "tensorflow"]


def test_fuzz_group_finds_argsort_divergence():
    out = crossfuzz.fuzz_group(DATA / "refops" / "groups.jsonl", "liba.argsort",
                               ["liba=ref:stable", "libb=ref:ftz"], "tests_per_group = 500\nseed = 7\n")
    assert out["summary"]["evaluations"] <= 500
    assert any(f["oracle"] == "inconsistency" for f in out["findings"])


def test_wire_messages():
    hello = json.loads(_core.wire.hello("np", ["a.relu"], "1"))
    assert hello == {"type": "hello", "protocol": _core.wire.PROTOCOL_VERSION, "backend": "np",
                     "manifest": ["a.relu"], "version": "1"}
    req = _core.wire.call_request(4, "a.relu", json.dumps([tensor("f64", [1], ["NaN"])]))
    parsed = json.loads(_core.wire.parse_call(req))
    assert parsed["id"] == 4 and parsed["args"][0]["data"] == ["NaN"]
    err = json.loads(_core.wire.result_error(4, "boom"))
    assert err["status"] == "error" and err["id"] == 4


def worker_cmd(prefix):
    return [sys.executable, str(HERE / "numpy_worker.py"), "--prefix", prefix]


def worker_env():
    env = dict(os.environ)
    env["CROSSFUZZ_PYTHONPATH"] = os.environ.get("PYTHONPATH", "")
    return env


def test_python_worker_round_trip():
    p = subprocess.Popen(worker_cmd("x."), stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
                         env=worker_env())
    try:
        hello = json.loads(p.stdout.readline())
        assert hello["type"] == "hello" and "x.add" in hello["manifest"]
        vals = [0.1, 1e-310, "NaN", "Infinity", "-Infinity", -0.0]
        zero = [0.0] * len(vals)
        lines = [
            _core.wire.call_request(1, "x.add", json.dumps([tensor("f64", [6], vals), tensor("f64", [6], zero)])),
            _core.wire.call_request(2, "x.conv2d", "[]"),
            "{not json",
        ]
        p.stdin.write("\n".join(lines) + "\n")
        p.stdin.flush()
        r1, r2, r3 = (json.loads(p.stdout.readline()) for _ in range(3))
        assert r1["status"] == "ok" and r1["id"] == 1
        out = r1["outputs"][0]["data"]
        assert out[:5] == vals[:5]
        assert r2["status"] == "error" and r2["id"] == 2
        assert r3["status"] == "error"
    finally:
        p.stdin.close()
        p.wait(timeout=10)


def test_self_vs_self_workers_find_nothing(tmp_path):
    cli = os.environ.get("CROSSFUZZ_CLI")
    if not cli:
        pytest.skip("CLI binary not provided")
    py = " ".join(worker_cmd("liba."))
    pyb = " ".join(worker_cmd("libb.ops."))
    conf = tmp_path / "c.conf"
    conf.write_text("tests_per_group = 60\nseed = 5\ntimeout = 20\n")
    r = subprocess.run([cli, "fuzz", "--groups", str(DATA / "refops" / "groups.jsonl"),
                        "--backends", "liba=exec:" + py, "--backends", "libb=exec:" + pyb,
                        "--config", str(conf), "--out", str(tmp_path / "run")],
                       capture_output=True, text=True, env=worker_env(), timeout=600)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "run" / "findings.jsonl").read_text() == ""
    summaries = [json.loads(line) for line in (tmp_path / "run" / "summary.jsonl").read_text().splitlines()]
    ran = [s for s in summaries if "evaluations" in s]
    assert {s["group_id"] for s in ran} == {"liba.add", "liba.mul", "liba.relu"}
    assert all(s["evaluations"] == 60 for s in ran)
