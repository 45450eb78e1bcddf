import json

import pytest

from prrtstar.cli import main
from prrtstar.scenarios import builtin, save


def run(capsys, *argv, env=None):
    code = main(list(argv), environ=env or {})
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_writes_outputs(tmp_path, capsys):
    p, t, s = tmp_path / "p.json", tmp_path / "t.csv", tmp_path / "r.svg"
    code, out, _ = run(capsys, "plan", "--scenario", "local_minima_2d", "--planner", "prrtstar",
                       "--max-iters", "3000", "--seed", "1", "--out-path", str(p), "--out-tree", str(t),
                       "--out-svg", str(s))
    assert code == 0
    doc = json.loads(p.read_text())
    assert doc["planner"] == "prrtstar" and doc["seed"] == 1
    assert doc["cost"] == pytest.approx(doc["metrics"]["final_cost"])
    assert len(doc["path"]) >= 2
    lines = t.read_text().splitlines()
    assert lines[0] == "id,parent,cost,x0,x1"
    assert len(lines) - 1 == doc["metrics"]["node_count"]
    assert s.read_text().count('class="edge"') == doc["metrics"]["node_count"] - 1


@pytest.mark.property
def test_plan_outputs_are_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        t, s = tmp_path / f"t{k}.csv", tmp_path / f"r{k}.svg"
        assert run(capsys, "plan", "--scenario", "cluttered_2d", "--planner", "rrtstar", "--max-iters", "1500",
                   "--seed", "9", "--out-tree", str(t), "--out-svg", str(s))[0] == 0
        outs.append((t.read_bytes(), s.read_bytes()))
    assert outs[0] == outs[1]


def test_plan_kinodynamic_tree_has_headings(tmp_path, capsys):
    t = tmp_path / "t.csv"
    code, _, _ = run(capsys, "plan", "--scenario", "diffdrive_local_minima", "--max-iters", "200",
                     "--out-tree", str(t))
    assert code in (0, 1)
    assert t.read_text().splitlines()[0] == "id,parent,cost,x0,x1,theta"


def test_no_path_exits_1(capsys):
    code, out, _ = run(capsys, "plan", "--scenario", "local_minima_2d", "--planner", "rrtstar",
                       "--max-iters", "5")
    assert code == 1 and "no path" in out
    code, out, _ = run(capsys, "plan", "--scenario", "local_minima_2d", "--planner", "apf")
    assert code == 1 and "local-minimum" in out


def test_invalid_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.scen.json"
    bad.write_text('{"format_version": 1,')
    code, _, err = run(capsys, "plan", "--scenario", str(bad))
    assert code == 2 and "line" in err
    code, _, err = run(capsys, "plan", "--scenario", str(tmp_path / "missing.scen.json"))
    assert code == 2
    code, _, err = run(capsys, "bench", "--scenario", "local_minima_2d", "--planners", "apf")
    assert code == 2
    code, _, err = run(capsys, "oracle", "--scenario", "local_minima_2d", "--resolution", "-1")
    assert code == 2
    with pytest.raises(SystemExit) as e:
        main(["plan", "--scenario", "local_minima_2d", "--planner", "dijkstra"], environ={})
    assert e.value.code == 2
    capsys.readouterr()


def test_start_in_obstacle_reports_start(tmp_path, capsys):
    sc = builtin("local_minima_2d")
    path = tmp_path / "s.scen.json"
    save(sc, path)
    text = path.read_text().replace('"start": [5.0, 25.0]', '"start": [31.0, 25.0]')
    path.write_text(text)
    code, _, err = run(capsys, "plan", "--scenario", str(path))
    assert code == 2 and "start" in err


def test_environment_overrides(tmp_path, capsys):
    t1, t2 = tmp_path / "a.csv", tmp_path / "b.csv"
    env = {"PRRTSTAR_SCENARIO": "cluttered_2d", "PRRTSTAR_MAX_ITERS": "3000", "PRRTSTAR_SEED": "5",
           "PRRTSTAR_PLANNER": "rrtstar"}
    assert run(capsys, "plan", "--out-tree", str(t1), env=env)[0] == 0
    assert run(capsys, "plan", "--scenario", "cluttered_2d", "--max-iters", "3000", "--seed", "5",
               "--planner", "rrtstar", "--out-tree", str(t2))[0] == 0
    assert t1.read_bytes() == t2.read_bytes()
    # the command line wins over the environment
    run(capsys, "plan", "--seed", "6", "--out-tree", str(t2), env=env)
    assert t1.read_bytes() != t2.read_bytes()
    with pytest.raises(SystemExit) as e:
        main(["plan"], environ={**env, "PRRTSTAR_MAX_ITERS": "many"})
    assert e.value.code == 2
    capsys.readouterr()


def test_bench_and_oracle(tmp_path, capsys):
    out = tmp_path / "table.csv"
    code, text, _ = run(capsys, "bench", "--scenario", "local_minima_2d", "--planners", "rrtstar,prrtstar",
                        "--repeats", "3", "--base-seed", "0", "--node-cap", "20000", "--eps-conv", "0.05",
                        "--out", str(out), "--serial")
    assert code == 0
    lines = out.read_text().splitlines()
    assert text == out.read_text()
    assert lines[0] == "environment,algorithm,n_min,n_max,n_avg,t_min,t_max,t_avg,c_star,fail"
    assert [ln.split(",")[1] for ln in lines[1:]] == ["rrt_star", "p_rrt_star"]
    code, text, _ = run(capsys, "oracle", "--scenario", "local_minima_2d", "--resolution", "0.2")
    assert code == 0 and float(text) > 39.5


def test_bench_all_fail_exits_1(capsys):
    code, text, _ = run(capsys, "bench", "--scenario", "local_minima_2d", "--planners", "rrtstar",
                        "--repeats", "2", "--node-cap", "20", "--serial")
    assert code == 1
    assert text.splitlines()[1].endswith(",-,-,-,-,-,-,-,2")
