import csv
import json
import subprocess
import sys

from p2pspread.cli import main


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_schedule_equal(tmp_path, capsys):
    out, prof = tmp_path / "s.json", tmp_path / "p.csv"
    code, _ = run(["schedule", "equal", "--n", "3", "--m", "2", "--out", str(out),
                   "--profile-csv", str(prof)], capsys)
    assert code == 0
    data = json.loads(out.read_text())
    assert data["rounds"] == 3 and data["makespan"] == "3/2"
    rows = list(csv.reader(prof.open()))
    assert rows[0] == ["round", "part", "count"] and rows[-1] == ["3", "2", "3"]
    inst = tmp_path / "i.json"
    inst.write_text(json.dumps(data["instance"]))
    code, res = run(["verify", "--instance", str(inst), "--schedule", str(out)], capsys)
    assert code == 0 and json.loads(res.out)["valid"]


def test_unknown_subcommand_is_usage_error():
    proc = subprocess.run([sys.executable, "-m", "p2pspread", "bogus"], capture_output=True)
    assert proc.returncode == 2 and proc.stderr


def test_markov(capsys):
    code, res = run(["markov", "--scenario", "nolist", "--n", "8"], capsys)
    data = json.loads(res.out)
    assert code == 0 and data["rounded"] == "5.956" and data["expected_rounds"].startswith("5.956")
    code, res = run(["markov", "--scenario", "nolist", "--n", "2", "--exact-rational"], capsys)
    assert json.loads(res.out)["exact"] == "7/3"


def test_domain_error_exit_code(tmp_path, capsys):
    inst = tmp_path / "bad.json"
    inst.write_text('{"n_peers": 1, "n_parts": 1, "server_capacity": 0, "peer_capacities": [1]}')
    code, res = run(["solve", "exact", "--instance", str(inst)], capsys)
    assert code == 1 and "server_capacity" in res.err


def test_solve_exact(tmp_path, capsys):
    inst = tmp_path / "i.json"
    inst.write_text('{"n_peers": 2, "n_parts": 1, "server_capacity": "1", "peer_capacities": [2, 2]}')
    out = tmp_path / "r.json"
    code, _ = run(["solve", "exact", "--instance", str(inst), "--out", str(out)], capsys)
    data = json.loads(out.read_text())
    assert code == 0 and data["makespan"] == "3/2" and data["status"] == "exact"
    assert "nodes_explored" in data and "gap_bound" in data


def test_two_peer_and_sweep(capsys):
    code, res = run(["solve", "two-peer", "--cs", "1", "--c1", "0.2"], capsys)
    assert code == 0 and json.loads(res.out)["case"] == "A"
    code, res = run(["solve", "two-peer", "--sweep", "--steps", "9"], capsys)
    rows = list(csv.DictReader(res.out.splitlines()))
    assert [r["case"] for r in rows][:3] == ["A", "C", "C"] and rows[3]["case"] == "D"


def test_fluid_commands(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    code, _ = run(["solve", "fluid", "--files", "6,1,1", "--caps", "1,1,1", "--plan", str(plan)], capsys)
    data = json.loads(plan.read_text())
    assert code == 0 and data["makespan"] == "6/1" and data["reduction"]["delta"] == "4/5"
    code, res = run(["solve", "fluid-server", "--n", "4", "--cs", "2", "--c1", "1"], capsys)
    assert json.loads(res.out)["makespan"] == "2/3"
    code, res = run(["solve", "fluid-server", "--sweep", "--steps", "3"], capsys)
    assert res.out.splitlines()[0] == "c1_over_cs,m1,m2,m_inf"


def test_simulate_and_fit(tmp_path, capsys, monkeypatch):
    samples = tmp_path / "s.csv"
    code, _ = run(["simulate", "--scenario", "list", "--n", "8", "--reps", "50", "--seed", "4",
                   "--csv", str(samples)], capsys)
    rows = list(csv.reader(samples.open()))
    assert code == 0 and rows[0] == ["scenario", "n", "m", "replication", "rounds"]
    assert len(rows) == 51
    code, res = run(["fit", "--csv", str(samples)], capsys)
    assert code == 1  # a single N cannot be fitted
    code, _ = run(["simulate", "--scenario", "nolist", "--n", "4", "--m", "2"], capsys)
    assert code == 1


def test_simulate_grid_then_fit(tmp_path, capsys):
    samples = tmp_path / "g.csv"
    code, res = run(["simulate", "--scenario", "list", "--n", "2,4,8", "--reps", "20",
                     "--seed", "5", "--csv", str(samples)], capsys)
    assert code == 0 and len(res.out.splitlines()) == 3
    rows = list(csv.DictReader(samples.open()))
    assert len(rows) == 60 and {r["n"] for r in rows} == {"2", "4", "8"}
    # every N=2 run takes exactly two rounds
    assert all(r["rounds"] == "2" for r in rows if r["n"] == "2")
    code, res = run(["fit", "--csv", str(samples)], capsys)
    fit = json.loads(res.out)
    assert code == 0 and fit["n_points"] == 60 and 0 < fit["slope"] < 2


def test_seed_from_environment(tmp_path):
    env_out = []
    for _ in range(2):
        proc = subprocess.run(
            [sys.executable, "-m", "p2pspread", "simulate", "--scenario", "nolist", "--n", "16",
             "--reps", "20"],
            capture_output=True, text=True, env={**__import__("os").environ, "P2PSPREAD_SEED": "77"},
        )
        env_out.append(proc.stdout)
    assert env_out[0] == env_out[1] and "mean=" in env_out[0]


def test_report(tmp_path, capsys):
    out = tmp_path / "g.csv"
    code, _ = run(["report", "--m", "1,2", "--n-max-exp", "4", "--reps", "5", "--csv", str(out)], capsys)
    assert code == 0 and len(out.read_text().splitlines()) == 3
