import json

import pytest

from p2pupir.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_design_fano(capsys):
    code, out, _ = run(capsys, "verify-design", "--fixture", "fano")
    rep = json.loads(out)
    assert code == 0
    assert [rep[x] for x in ("v", "b", "r", "k", "lambda")] == [7, 7, 3, 3, 1]
    assert rep["flags"]["projective_plane_order"] == 2
    assert rep["flags"]["symmetric_bibd"] and len(rep["config_hash"]) == 16


def test_verify_design_config(capsys):
    rep = json.loads(run(capsys, "verify-design", "--fixture", "config-12-8-2-3")[1])
    assert rep["flags"]["configuration"] and not rep["flags"]["pbd"]


def test_bad_design_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"name": "bad", "points": ["a", "b", "c"],
                                "blocks": [["a", "b"], ["c", "a", "c"]]}))
    code, _, err = run(capsys, "verify-design", "--design", str(path))
    assert code == 2 and "block 1" in err


@pytest.mark.parametrize("argv", [
    ["verify-design"],
    ["verify-design", "--fixture", "nope"],
    ["run", "--fixture", "fano", "--protocol", "PD_BIBD_V2", "--queries", "10"],
    ["run", "--fixture", "fano", "--protocol", "PD_BIBD_V2", "--queries", "0", "--seed", "1"],
    ["run", "--fixture", "config-12-8-2-3", "--protocol", "PD_BIBD_V2", "--queries", "5", "--seed", "1"],
    ["verify-anonymity", "--fixture", "config-12-8-2-3", "--protocol", "DBWM", "--queries", "5000", "--seed", "1"],
    ["membership", "--fixture", "fano"],
])
def test_input_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_run_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    for path in (a, b):
        assert run(capsys, "run", "--fixture", "bibd-10-15-6-4-2", "--protocol", "PD_COVER_V2",
                   "--p-hop", "0.5", "--queries", "500", "--seed", "42", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    header = json.loads(a.read_text().splitlines()[0])
    assert header["seed"] == 42 and "config_hash" in header and header["n_records"] == 500


def test_run_redacted(capsys):
    code, out, _ = run(capsys, "run", "--fixture", "fano", "--protocol", "P3", "--queries", "5",
                       "--seed", "1", "--redact")
    rows = [json.loads(x) for x in out.splitlines()[1:]]
    assert code == 0 and len(rows) == 5 and all("source" not in r for r in rows)


def test_workload_file(capsys, tmp_path):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"n_queries": 6, "seed": 9, "ordering": "round_robin",
                             "groups": [{"size": 3, "source": "U3"}, {"size": 3}]}))
    code, out, _ = run(capsys, "run", "--fixture", "fano", "--protocol", "PD_BIBD_V1", "--workload", str(w))
    rows = [json.loads(x) for x in out.splitlines()]
    assert code == 0 and rows[0]["seed"] == 9
    assert [r["source"] for r in rows[1:] if r["link_group"] == 0] == ["U3"] * 3


def test_attack_explicit(capsys):
    code, out, _ = run(capsys, "attack", "--fixture", "config-12-8-2-3", "--protocol", "DBWM",
                       "--proxies", "U2,U11,U8")
    rep = json.loads(out)
    assert code == 0 and rep["candidates"] == ["U3"]
    assert [s["possible"] for s in rep["steps"]][1] == ["U3", "U8", "U10", "U12"]


def test_attack_coalition(capsys):
    code, out, _ = run(capsys, "attack", "--kind", "coalition", "--fixture", "fano", "--protocol",
                       "PD_BIBD_V2", "--spaces", "U1,U2,U3;U1,U4,U5", "--proxies", "U2,U4",
                       "--coalition", "U2,U5")
    assert code == 0 and json.loads(out)["candidates"] == ["U1"]


@pytest.mark.parametrize("protocol,kind,extra", [
    ("DBWM", "db-intersection", []), ("PD_COVER_V1", "coalition", ["--coalition", "U1,U2"])])
def test_attack_on_trace(capsys, tmp_path, protocol, kind, extra):
    trace = tmp_path / "t.ndjson"
    fixture = "config-12-8-2-3" if protocol == "DBWM" else "fano"
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"n_queries": 20, "groups": [{"size": 5}] * 4, "ordering": "round_robin"}))
    assert run(capsys, "run", "--fixture", fixture, "--protocol", protocol, "--workload", str(w),
               "--seed", "3", "--out", str(trace))[0] == 0
    code, out, _ = run(capsys, "attack", "--kind", kind, "--fixture", fixture, "--trace", str(trace), *extra)
    rep = json.loads(out)
    assert code == 0 and rep["sound"] and rep["seed"] == 3


def test_attack_refuses_hop_trace_for_coalition(capsys, tmp_path):
    trace = tmp_path / "t.ndjson"
    run(capsys, "run", "--fixture", "fano", "--protocol", "PD_COVER_V2", "--p-hop", "0.5",
        "--queries", "10", "--seed", "3", "--out", str(trace))
    code, _, _ = run(capsys, "attack", "--kind", "coalition", "--fixture", "fano", "--trace", str(trace),
                     "--coalition", "U1")
    assert code == 2


def test_anonymity(capsys):
    code, out, _ = run(capsys, "anonymity", "--fixture", "fano", "--protocol", "PD_BIBD_V2",
                       "--rho", "3", "--c", "1")
    rep = json.loads(out)
    assert code == 0 and rep["kappa"] == 2 == rep["replayed_kappa"] and rep["witness"]


def test_posterior(capsys, tmp_path):
    trace = tmp_path / "t.ndjson"
    run(capsys, "run", "--fixture", "fano", "--protocol", "PD_BIBD_V2", "--queries", "30000",
        "--seed", "5", "--out", str(trace))
    code, out, _ = run(capsys, "posterior", "--fixture", "fano", "--trace", str(trace), "--observer", "U5",
                       "--space", "U1,U4,U5", "--proxy", "U4")
    rep = json.loads(out)
    assert code == 0 and rep["theoretical"] == {"U1": "3/4", "U4": "1/4"}
    assert rep["verdict"]["pass"]


def test_posterior_rare_event(capsys):
    code, _, err = run(capsys, "posterior", "--fixture", "fano", "--protocol", "PD_BIBD_V2", "--queries",
                       "50", "--seed", "5", "--observer", "U5", "--space", "U1,U4,U5", "--proxy", "U4")
    assert code == 2 and "conditioning" in err


def test_membership(capsys, tmp_path):
    out_design = tmp_path / "grown.json"
    code, out, _ = run(capsys, "membership", "--fixture", "fano", "--add", "U8",
                       "--design-out", str(out_design))
    rep = json.loads(out)
    assert code == 0 and rep["joined"] == [0, 1, 2] and rep["covering"]
    code, out, _ = run(capsys, "membership", "--design", str(out_design), "--remove", "U8")
    rep = json.loads(out)
    assert code == 0 and rep["rekey"] == [0, 1, 2]


def test_verify_anonymity(capsys):
    code, out, _ = run(capsys, "verify-anonymity", "--fixture", "fano", "--protocol", "PD_COVER_V2",
                       "--queries", "20000", "--seed", "1")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and rep["failures"] == []


def test_verify_anonymity_fail_exit(capsys):
    # z=0 turns every sampling wobble into a failure
    code, _, _ = run(capsys, "verify-anonymity", "--fixture", "fano", "--protocol", "PD_COVER_V2",
                     "--queries", "20000", "--seed", "1", "--z", "0")
    assert code == 1


def test_pretty_and_out(capsys, tmp_path):
    path = tmp_path / "r.txt"
    assert run(capsys, "verify-design", "--fixture", "fano", "--pretty", "--out", str(path))[0] == 0
    text = path.read_text()
    assert "lambda: 1" in text and "  projective_plane_order: 2" in text and not text.startswith("{")
