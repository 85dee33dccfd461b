import json

import pytest

from faaschal import data_file
from faaschal.cli import run


@pytest.fixture
def files(tmp_path):
    names = ["training.chor", "training.dep", "training.app", "two-groups.cluster", "one-worker.cluster",
             "conditional-stateful.chor"]
    out = {}
    for name in names:
        path = tmp_path / name
        path.write_text(data_file(name))
        out[name] = str(path)
    return out


def test_check_clean(files, capsys):
    assert run(["check", files["training.chor"]]) == 0
    assert "0 diagnostic(s)" in capsys.readouterr().out


def test_check_reports_knowledge_of_choice(files, capsys):
    assert run(["check", files["conditional-stateful.chor"]]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith(files["conditional-stateful.chor"] + ":9:15: KnowledgeOfChoice:")


def test_check_syntax_error(tmp_path, capsys):
    path = tmp_path / "bad.chor"
    path.write_text("stateful: u\ndef main()\n  x@u ▶\nend\n")
    assert run(["check", str(path)]) == 1
    assert ": Syntax:" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert run(["check", str(tmp_path / "nope.chor")]) == 1
    assert "cannot read file" in capsys.readouterr().err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        run(["frobnicate"])
    assert info.value.code == 2


def test_project(files, tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["project", files["training.chor"], "-o", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["f.pseudo", "g.pseudo", "h.pseudo", "user.pseudo"]
    assert 'triggerFn( "h", "aws:sns"' in (out / "g.pseudo").read_text()


def test_project_refuses_ill_formed(files, tmp_path):
    assert run(["project", files["conditional-stateful.chor"], "-o", str(tmp_path / "o")]) == 1


def test_extract_stdout(files, capsys):
    assert run(["extract", files["training.chor"]]) == 0
    out = capsys.readouterr().out
    assert "  ( f, g, SNS, 1:n )\n" in out and "  ( g, h ) # Model\n" in out


def test_synth_matches_reference(files, tmp_path):
    target = tmp_path / "t.app"
    assert run(["synth", files["training.chor"], "--deployment", files["training.dep"], "-o", str(target)]) == 0
    norm = lambda t: [" ".join(x.split()) for x in t.splitlines() if x.strip()]  # noqa: E731
    assert norm(target.read_text()) == norm(data_file("training.app"))


def test_synth_is_idempotent(files, capsys):
    args = ["synth", files["training.chor"], "--deployment", files["training.dep"]]
    run(args)
    first = capsys.readouterr().out
    run(args)
    assert capsys.readouterr().out == first


def test_synth_unreachable(files, tmp_path, capsys):
    dep = tmp_path / "bad.dep"
    dep.write_text("topology:\n( DB1, group2 ): 1\n( DB2, group1 ): 1\n( DB3, group2 ): 1\n")
    assert run(["synth", files["training.chor"], "--deployment", str(dep)]) == 1
    assert "UnreachableService" in capsys.readouterr().err


def test_simulate_generated_trace(files, capsys):
    code = run(["simulate", "--policy", files["training.app"], "--cluster", files["two-groups.cluster"],
                "--gen-trace", "2", "5", "1", "--chor", files["training.chor"],
                "--deployment", files["training.dep"]])
    out = capsys.readouterr().out
    assert code == 0
    assert "events=5 placements=5 failures=0 violations=0" in out
    assert "PLACE 0 f w1 2 8" in out


def test_simulate_json(files, tmp_path, capsys):
    trace = tmp_path / "t.trace"
    trace.write_text("0 g 5\n1 g 5\n")
    target = tmp_path / "r.json"
    code = run(["simulate", "--policy", files["training.app"], "--cluster", files["one-worker.cluster"],
                "--trace", str(trace), "--json", "-o", str(target)])
    assert code == 0
    report = json.loads(target.read_text())
    assert len(report["placements"]) == 1
    assert report["failures"] == [{"time": 1.0, "fn": "g", "reason": "blocks-exhausted"}]


def test_simulate_seeded_random_is_reproducible(files, capsys):
    args = ["simulate", "--policy", files["training.app"], "--cluster", files["two-groups.cluster"],
            "--gen-trace", "5", "3", "1", "--chor", files["training.chor"], "--strategy", "random", "--seed", "7"]
    run(args)
    first = capsys.readouterr().out
    run(args)
    assert capsys.readouterr().out == first


def test_gen_trace_requires_chor(files):
    with pytest.raises(SystemExit) as info:
        run(["simulate", "--policy", files["training.app"], "--cluster", files["two-groups.cluster"],
             "--gen-trace", "1", "1", "1"])
    assert info.value.code == 2


def test_bad_policy(files, tmp_path, capsys):
    policy = tmp_path / "p.app"
    policy.write_text("f:\n  - workers: *\n    strategy: x\n")
    trace = tmp_path / "t.trace"
    trace.write_text("0 f 1\n")
    assert run(["simulate", "--policy", str(policy), "--cluster", files["two-groups.cluster"],
                "--trace", str(trace)]) == 1
    assert f"{policy}:3:1: AppError: unsupported key" in capsys.readouterr().err
