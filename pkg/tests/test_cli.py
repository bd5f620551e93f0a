import json
import subprocess
import sys
from pathlib import Path

import pytest

from ratver import cases
from ratver.cli import EXIT_ERROR, EXIT_NO, EXIT_YES, input_kind, main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_yes(capsys):
    code, out, _ = run(capsys, "solve", FIXTURES / "bisim1.arena")
    assert code == EXIT_YES
    assert out.startswith("YES\nwinners: z\n")
    assert "prefix:" in out and "cycle:" in out


def test_e_nash_no(capsys):
    code, out, _ = run(capsys, "e-nash", FIXTURES / "gossip2.srml", "--phi", cases.gossip_all_gossiping(2))
    assert code == EXIT_NO
    assert out.startswith("NO\n")


def test_a_nash_json(capsys):
    code, out, _ = run(
        capsys, "a-nash", FIXTURES / "gossip3.srml", "--phi", cases.gossip_some_servicing(3), "--json"
    )
    doc = json.loads(out)
    assert code == EXIT_YES
    assert doc["answer"] == "yes" and doc["lasso"] is None


def test_a_nash_counterexample(capsys):
    code, out, _ = run(capsys, "a-nash", FIXTURES / "bisim2.arena", "--phi", "F p")
    assert code == EXIT_NO
    assert "counterexample:" in out


def test_phi_file(tmp_path, capsys):
    f = tmp_path / "phi.ltl"
    f.write_text("G ~p\n")
    code, _, _ = run(capsys, "e-nash", FIXTURES / "bisim2.arena", "--phi-file", f)
    assert code == EXIT_YES


def test_missing_query_is_an_error(capsys):
    code, _, err = run(capsys, "e-nash", FIXTURES / "bisim2.arena")
    assert code == EXIT_ERROR
    assert "query formula is required" in err


def test_bisim(capsys):
    code, out, _ = run(capsys, "bisim", FIXTURES / "bisim1.arena", FIXTURES / "bisim2.arena")
    assert code == EXIT_YES and out == "BISIMILAR\n"
    code, out, _ = run(capsys, "bisim", FIXTURES / "bisim1.arena", FIXTURES / "gossip2.srml")
    assert code == EXIT_NO and out == "NOT BISIMILAR\n"


def test_output_is_deterministic_across_jobs(capsys):
    outs = set()
    for jobs in (1, 2, 4):
        _, out, _ = run(capsys, "solve", FIXTURES / "replica2.srml", "--json", "--jobs", jobs, "--deterministic")
        outs.add(out)
    assert len(outs) == 1


def test_bad_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.arena"
    bad.write_text("players x\nbogus\n")
    code, _, err = run(capsys, "solve", bad)
    assert code == EXIT_ERROR
    assert "line 2: unknown directive" in err
    code, _, err = run(capsys, "solve", tmp_path / "missing.srml")
    assert code == EXIT_ERROR
    code, _, err = run(capsys, "solve", FIXTURES / "bisim1.arena", "--max-states", 0)
    assert code == EXIT_ERROR


def test_state_cap_exits_2(capsys):
    code, _, err = run(capsys, "solve", FIXTURES / "gossip4.srml", "--max-states", 5)
    assert code == EXIT_ERROR
    assert "exceeded" in err


def test_synthesize_writes_and_refuses_to_overwrite(tmp_path, capsys):
    out_dir = tmp_path / "strats"
    dot_dir = tmp_path / "dot"
    code, out, _ = run(capsys, "synthesize", FIXTURES / "bisim2.arena", "--out", out_dir, "--export-dot", dot_dir)
    assert code == EXIT_YES
    written = sorted(p.name for p in out_dir.iterdir())
    assert written == ["strategy_x.json", "strategy_y.json", "strategy_z.json"]
    doc = json.loads((out_dir / "strategy_z.json").read_text())
    assert doc["player"] == "z"
    assert (dot_dir / "strategy_x.dot").exists() and (dot_dir / "goal_x.dot").exists()
    code, _, err = run(capsys, "synthesize", FIXTURES / "bisim2.arena", "--out", out_dir)
    assert code == EXIT_ERROR and "--force" in err
    code, _, _ = run(capsys, "synthesize", FIXTURES / "bisim2.arena", "--out", out_dir, "--force")
    assert code == EXIT_YES


def test_export_dot_for_query(tmp_path, capsys):
    run(capsys, "e-nash", FIXTURES / "bisim2.arena", "--phi", "F q", "--export-dot", tmp_path)
    assert (tmp_path / "query.dot").read_text().startswith("digraph")


def test_input_kind_sniffing():
    assert input_kind(Path("x.arena"), "") == "arena"
    assert input_kind(Path("x.srml"), "") == "srml"
    assert input_kind(Path("x.txt"), "# c\nplayers a b\n") == "arena"
    assert input_kind(Path("x.txt"), "module m controls x\n") == "srml"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ratver", "bisim", str(FIXTURES / "bisim1.arena"), str(FIXTURES / "bisim2.arena")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout == "BISIMILAR\n"


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
