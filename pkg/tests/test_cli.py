"""CLI behavior: serialization round-trips, exit codes, determinism."""

import json

import pytest

from divcut import cli
from divcut.pipeline import SeparationLimitError


def run(capsys, argv):
    """Run the CLI once; returns (exit code, stdout text, stderr text)."""
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = int(exc.code or 0)
    out, err = capsys.readouterr()
    return code, out, err


def _gen_file(tmp_path, capsys, *flags):
    path = tmp_path / "inst.json"
    code, _, _ = run(capsys, ["gen", "--out", str(path), *flags])
    assert code == 0
    return path


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


ISOLATED = json.dumps({
    "nodes": 3,
    "supply": [{"edge": [0, 1], "w": 1.0}],
    "demand": [{"edge": [0, 2], "w": 1.0}],
})

LINE_METRIC = "4\n0 1 2 3\n1 0 1 2\n2 1 0 1\n3 2 1 0\n"

BAD_TABLE = json.dumps({
    "n": 3,
    "entries": [
        {"set": [0, 1], "value": 1.0},
        {"set": [0, 2], "value": 1.0},
        {"set": [1, 2], "value": 1.0},
        {"set": [0, 1, 2], "value": 100.0},
    ],
})


# ---- gen ----

def test_gen_roundtrips_byte_identically(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "random", "--n", "6",
                     "--m", "7", "--rank", "3", "--seed", "7")
    first = path.read_text()
    inst = cli.load_instance(str(path))
    assert cli.render(cli.instance_to_doc(inst)) == first


def test_gen_is_deterministic(capsys):
    code, out1, err = run(capsys, ["gen", "--kind", "random", "--seed", "3"])
    assert code == 0
    assert "n=8" in err and "m_G=" in err and "r_H=" in err
    code, out2, _ = run(capsys, ["gen", "--kind", "random", "--seed", "3"])
    assert code == 0
    assert out1 == out2


def test_gen_path_instance_shape(capsys):
    code, out, _ = run(capsys, ["gen", "--kind", "path", "--n", "3"])
    assert code == 0
    doc = json.loads(out)
    assert doc["nodes"] == 3
    assert [rec["edge"] for rec in doc["supply"]] == [[0, 1], [1, 2]]
    assert len(doc["demand"]) == 3


def test_gen_bad_rank_exits_2(capsys):
    code, _, err = run(capsys, ["gen", "--kind", "random", "--rank", "99",
                                "--n", "5"])
    assert code == 2
    assert "bad generator flags" in err


def test_gen_unwritable_path_exits_3(capsys):
    code, _, _ = run(capsys, ["gen", "--out", "/nonexistent-dir/x.json"])
    assert code == 3


# ---- solve ----

def test_solve_path3_brute(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "3")
    code, out, err = run(capsys, ["solve", "--in", str(path), "--brute"])
    assert code == 0
    doc = json.loads(out)
    assert doc["phi_rounded"] == pytest.approx(0.5)
    assert doc["ratio"] == pytest.approx(1.0)
    assert doc["route"] == "hs-frt"
    assert "phi=0.5" in err


def test_solve_k2_is_one(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "2")
    code, out, _ = run(capsys, ["solve", "--in", str(path)])
    assert code == 0
    assert json.loads(out)["phi_rounded"] == pytest.approx(1.0)


def test_solve_document_is_deterministic(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "hyper-uniform", "--n", "6",
                     "--m", "5", "--seed", "2")
    runs = [run(capsys, ["solve", "--in", str(path), "--seed", "4",
                         "--trials", "4"]) for _ in range(2)]
    assert runs[0][0] == runs[1][0] == 0
    assert runs[0][1] == runs[1][1]


def test_solve_isolated_demand_exits_4(tmp_path, capsys):
    path = _write(tmp_path, "iso.json", ISOLATED)
    code, _, err = run(capsys, ["solve", "--in", str(path)])
    assert code == 4
    assert "infeasible" in err


def test_solve_round_cap_exits_5(tmp_path, capsys, monkeypatch):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "3")
    def boom(*a, **k):
        raise SeparationLimitError("no clean separation after 1 rounds")
    monkeypatch.setattr(cli, "solve_general", boom)
    code, _, err = run(capsys, ["solve", "--in", str(path)])
    assert code == 5
    assert "round limit" in err


def test_solve_steiner_route_needs_graph_supply(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "hyper-uniform", "--n", "5",
                     "--rank", "3", "--seed", "1")
    doc = json.loads(path.read_text())
    assert any(len(rec["edge"]) > 2 for rec in doc["supply"])
    code, _, _ = run(capsys, ["solve", "--in", str(path), "--route",
                              "steiner-frt"])
    assert code == 2


def test_solve_missing_file_exits_3(capsys):
    code, _, _ = run(capsys, ["solve", "--in", "/no/such/file.json"])
    assert code == 3


def test_solve_json_out_writes_file(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "3")
    out_path = tmp_path / "report.json"
    code, out, _ = run(capsys, ["solve", "--in", str(path), "--json-out",
                                str(out_path)])
    assert code == 0
    assert out == ""
    assert json.loads(out_path.read_text())["phi_rounded"] == pytest.approx(0.5)


# ---- hsp ----

def test_hsp_chain_endpoints(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "3")
    code, out, _ = run(capsys, ["hsp", "--in", str(path), "--terminals", "0,2"])
    assert code == 0
    doc = json.loads(out)
    assert doc["cost"] == pytest.approx(2.0)
    assert doc["edges"] == [[0, 1], [1, 2]]


def test_hsp_singleton_is_free(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "3")
    code, out, _ = run(capsys, ["hsp", "--in", str(path), "--terminals", "1"])
    assert code == 0
    assert json.loads(out)["cost"] == 0.0


def test_hsp_uncoverable_exits_4(tmp_path, capsys):
    path = _write(tmp_path, "iso.json", ISOLATED)
    code, _, _ = run(capsys, ["hsp", "--in", str(path), "--terminals", "0,2"])
    assert code == 4


# ---- embed ----

def test_embed_tree_method_is_isometric(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "5")
    code, out, err = run(capsys, ["embed", "--in", str(path), "--method",
                                  "tree", "--cap", "5"])
    assert code == 0
    doc = json.loads(out)
    assert doc["c"] == pytest.approx(1.0, abs=1e-9)
    assert doc["reference"] == "tree-diversity"
    assert doc["m"] == 4
    assert "c=1" in err


def test_embed_tree_method_rejects_cyclic_supply(tmp_path, capsys):
    doc = {"nodes": 3,
           "supply": [{"edge": [0, 1], "w": 1.0}, {"edge": [1, 2], "w": 1.0},
                      {"edge": [0, 2], "w": 1.0}],
           "demand": [{"edge": [0, 2], "w": 1.0}]}
    path = _write(tmp_path, "tri.json", json.dumps(doc))
    code, _, _ = run(capsys, ["embed", "--in", str(path), "--method", "tree"])
    assert code == 2


def test_embed_naive_on_metric_file(tmp_path, capsys):
    path = _write(tmp_path, "line.metric", LINE_METRIC)
    code, out, _ = run(capsys, ["embed", "--metric", str(path), "--method",
                                "naive", "--cap", "4"])
    assert code == 0
    doc = json.loads(out)
    assert doc["n"] == 4 and doc["m"] == 4
    assert doc["c"] <= 4 + 1e-9


def test_embed_frechet_upper_side_and_determinism(tmp_path, capsys):
    path = _write(tmp_path, "line.metric", LINE_METRIC)
    argv = ["embed", "--metric", str(path), "--method", "frechet",
            "--seed", "9", "--cap", "4"]
    code, out1, _ = run(capsys, argv)
    assert code == 0
    assert json.loads(out1)["c2"] <= 1 + 1e-9
    code, out2, _ = run(capsys, argv)
    assert out1 == out2


def test_embed_frt_dominates(tmp_path, capsys):
    path = _write(tmp_path, "line.metric", LINE_METRIC)
    code, out, _ = run(capsys, ["embed", "--metric", str(path), "--method",
                                "frt", "--seed", "3"])
    assert code == 0
    assert json.loads(out)["c1"] <= 1 + 1e-9


def test_embed_table_file(tmp_path, capsys):
    path = _write(tmp_path, "line.metric", LINE_METRIC)
    table = tmp_path / "coords.txt"
    code, _, _ = run(capsys, ["embed", "--metric", str(path), "--method",
                              "naive", "--table", str(table)])
    assert code == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "4 4"
    assert len(lines) == 5


def test_embed_input_flags_are_exclusive(tmp_path, capsys):
    path = _write(tmp_path, "line.metric", LINE_METRIC)
    assert run(capsys, ["embed"])[0] == 2
    assert run(capsys, ["embed", "--metric", str(path), "--in", "x",
                        ])[0] == 2
    assert run(capsys, ["embed", "--metric", str(path), "--method",
                        "tree"])[0] == 2


def test_embed_bad_metric_file_exits_3(tmp_path, capsys):
    path = _write(tmp_path, "bad.metric", "3\n0 1\n")
    code, _, _ = run(capsys, ["embed", "--metric", str(path)])
    assert code == 3


# ---- check ----

def test_check_hsp_oracle_clean(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "hyper-uniform", "--n", "5",
                     "--m", "5", "--seed", "4")
    code, out, err = run(capsys, ["check", "--in", str(path), "--oracle",
                                  "hsp", "--cap", "4"])
    assert code == 0
    assert json.loads(out)["ok"] is True
    assert "all axioms hold" in err


def test_check_other_oracles_clean(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "4")
    for kind in ("steiner", "diameter", "kdiam", "hsp-approx"):
        code, out, _ = run(capsys, ["check", "--in", str(path), "--oracle",
                                    kind])
        assert code == 0, kind
        assert json.loads(out)["ok"] is True


def test_check_planted_table_exits_6(tmp_path, capsys):
    path = _write(tmp_path, "bad.json", BAD_TABLE)
    code, out, err = run(capsys, ["check", "--in", str(path), "--oracle",
                                  "table", "--cap", "3"])
    assert code == 6
    doc = json.loads(out)
    assert doc["ok"] is False
    kinds = {v["axiom"] for v in doc["violations"]}
    assert kinds & {"triangle", "chain-bound"}
    assert "violation" in err


def test_check_cap_is_clamped_to_n(tmp_path, capsys):
    path = _gen_file(tmp_path, capsys, "--kind", "path", "--n", "3")
    code, out, _ = run(capsys, ["check", "--in", str(path), "--cap", "99"])
    assert code == 0
    assert json.loads(out)["cap"] == 3


# ---- bench ----

def test_bench_rows_and_byte_identity(capsys, monkeypatch):
    argv = ["bench", "--sizes", "4,5", "--seeds", "2", "--trials", "2"]
    monkeypatch.setenv("DIVCUT_THREADS", "1")
    code, out1, err = run(capsys, argv)
    assert code == 0
    doc = json.loads(out1)
    assert len(doc["rows"]) == 4
    assert all(row["ratio"] >= 1 - 1e-9 for row in doc["rows"])
    assert doc["summary"]["count"] == 4
    code, out2, _ = run(capsys, argv)
    assert out1 == out2
    monkeypatch.setenv("DIVCUT_THREADS", "4")
    code, out3, _ = run(capsys, argv)
    assert out1 == out3


def test_bench_empty_suite_exits_2(capsys):
    assert run(capsys, ["bench", "--sizes", ""])[0] == 2
    assert run(capsys, ["bench", "--seeds", "0"])[0] == 2


def test_bench_records_partial_failures(capsys, monkeypatch):
    calls = {"k": 0}
    real = cli.solve_general
    def flaky(inst, **kw):
        calls["k"] += 1
        if calls["k"] == 1:
            raise ValueError("synthetic failure")
        return real(inst, **kw)
    monkeypatch.setattr(cli, "solve_general", flaky)
    code, out, _ = run(capsys, ["bench", "--sizes", "4", "--seeds", "2",
                                "--trials", "2"])
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[0]["error"] == "synthetic failure"
    assert "ratio" in rows[1]


# ---- bad flags via argparse ----

def test_unknown_command_exits_2(capsys):
    assert run(capsys, ["frobnicate"])[0] == 2


def test_unknown_route_exits_2(capsys):
    assert run(capsys, ["solve", "--in", "x", "--route", "scenic"])[0] == 2
