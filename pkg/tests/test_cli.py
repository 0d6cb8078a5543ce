import json
import subprocess
import sys

import pytest

from maestrob.cli import CliExit, RunConfig, main
from maestrob.pddl import parse_domain, parse_problem, print_domain, print_problem
from scenarios import SCENARIOS, run_args

from conftest import CORPUS, DEMO, GOLDEN, read

SCENE = ["--scene", str(DEMO / "scene_initial.json"), "--object-db", str(DEMO / "objects.json")]
ONTOLOGY = ["--ontology", str(DEMO / "common_sense.triples")]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_extract(capsys):
    code, out, _ = run(capsys, "extract", *SCENE)
    assert code == 0 and "empty(hole1)" in out.splitlines()
    assert out.splitlines() == sorted(out.splitlines())


def test_extract_empty_and_malformed(capsys, tmp_path):
    code, out, _ = run(capsys, "extract", "--scene", DEMO / "scene_empty.json", "--object-db", DEMO / "objects.json")
    assert (code, out) == (0, "")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out, err = run(capsys, "extract", "--scene", bad, "--object-db", DEMO / "objects.json")
    assert code == 2 and out == "" and "ParseError" in err
    code, _, err = run(capsys, "extract", "--scene", tmp_path / "absent.json", "--object-db", DEMO / "objects.json")
    assert code == 2 and "cannot read" in err


def test_resolve_then_plan(capsys, tmp_path):
    prov = tmp_path / "prov.txt"
    code, _, _ = run(capsys, "resolve", *SCENE, *ONTOLOGY,
                     "--domain", DEMO / "peg_insertion.pddls", "--problem", DEMO / "peg_task.pddls",
                     "--rules", DEMO / "rules.json", "--out-dir", tmp_path, "--provenance", prov)
    assert code == 0
    assert {p.name for p in tmp_path.iterdir()} == {"domain.pddl", "problem.pddl", "prov.txt"}
    assert [l for l in read(prov).splitlines() if "<-" in l] == [
        "insertable(cyl-peg,hole1) <- insertable[fits-in-cavity] maestrob:cyl-peg-30 maestrob:plate-32"]
    code, out, _ = run(capsys, "plan", "--domain", tmp_path / "domain.pddl", "--problem", tmp_path / "problem.pddl")
    assert (code, out) == (0, "0: (pick-n-insert cyl-peg hole1)\n")
    code, out, _ = run(capsys, "--format", "doc", "plan",
                       "--domain", tmp_path / "domain.pddl", "--problem", tmp_path / "problem.pddl")
    assert json.loads(out) == {"plan": ["0: (pick-n-insert cyl-peg hole1)"]}


def test_resolve_plain_inputs(capsys, tmp_path):
    code, _, _ = run(capsys, "resolve", "--domain", CORPUS / "blocks.pddl", "--problem", CORPUS / "blocks_sussman.pddl",
                     "--out-dir", tmp_path, "--rules", DEMO / "rules.json")
    assert code == 0
    assert read(tmp_path / "domain.pddl") == print_domain(parse_domain(read(CORPUS / "blocks.pddl")))
    assert read(tmp_path / "problem.pddl") == print_problem(parse_problem(read(CORPUS / "blocks_sussman.pddl")))


def test_resolve_missing_property(capsys, tmp_path):
    # no scene, so the kinds carry no dimensions
    code, _, err = run(capsys, "resolve", *ONTOLOGY, "--domain", DEMO / "peg_insertion.pddls",
                       "--problem", DEMO / "peg_task.pddls", "--out-dir", tmp_path)
    assert code == 3 and "MissingProperty" in err and "maestrob:shape" in err


def test_plan_exit_codes(capsys):
    code, out, _ = run(capsys, "plan", "--domain", CORPUS / "blocks.pddl", "--problem", CORPUS / "blocks_unsolvable.pddl")
    assert (code, out) == (4, "")
    code, _, err = run(capsys, "plan", "--domain", CORPUS / "blocks.pddl", "--problem", CORPUS / "blocks_tower4.pddl",
                       "--max-nodes", "2")
    assert code == 4 and "ResourceLimit" in err


def test_plan_satisfied_goal(capsys, tmp_path):
    done = tmp_path / "done.pddl"
    done.write_text("(define (problem done) (:domain blocks) (:objects a - block)"
                    " (:init (ontable a) (clear a) (handempty)) (:goal (and (ontable a))))")
    code, out, _ = run(capsys, "plan", "--domain", CORPUS / "blocks.pddl", "--problem", done)
    assert (code, out) == (0, "")


def test_ground(capsys):
    code, out, _ = run(capsys, "ground", *SCENE, *ONTOLOGY, "--templates", DEMO / "templates.json",
                       "--utterance", "perform the peg assembly task")
    assert (code, out) == (0, "filled(hole1)\n")
    code, out, _ = run(capsys, "ground", *SCENE, "--demo-initial", DEMO / "scene_initial.json",
                       "--demo-final", DEMO / "scene_demo_final.json")
    assert code == 0 and {"filled(hole1)", "in(cyl-peg,hole1)"} <= set(out.splitlines())
    code, _, err = run(capsys, "ground", *SCENE, *ONTOLOGY, "--templates", DEMO / "templates.json",
                       "--utterance", "xyzzy plugh")
    assert code == 6 and "best score" in err
    code, _, _ = run(capsys, "ground", *SCENE, "--demo-initial", DEMO / "scene_initial.json",
                     "--demo-final", DEMO / "scene_initial.json")
    assert code == 6


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_run_matches_golden(capsys, tmp_path, name):
    bus = tmp_path / "bus.jsonl"
    code, out, _ = run(capsys, *run_args(name, bus))
    assert code == SCENARIOS[name]
    assert out == read(GOLDEN / f"{name}.trace.txt")
    assert bus.read_bytes() == (GOLDEN / f"{name}.bus.jsonl").read_bytes()


def test_run_from_utterance_and_demo(capsys):
    base = [a for a in run_args("clean") if a not in ("--problem", str(DEMO / "peg_task.pddls"))]
    code, out, _ = run(capsys, *base, "--templates", DEMO / "templates.json", "--utterance", "perform the peg assembly task")
    assert code == 0 and out.endswith("terminal Succeeded\n")
    code, out, _ = run(capsys, *base, "--demo-initial", DEMO / "scene_initial.json",
                       "--demo-final", DEMO / "scene_demo_final.json")
    assert code == 0 and out.endswith("terminal Succeeded\n")


def test_run_needs_exactly_one_goal_source(capsys):
    code, _, err = run(capsys, *run_args("clean"), "--templates", DEMO / "templates.json", "--utterance", "hi")
    assert code == 2 and "exactly one goal source" in err
    base = [a for a in run_args("clean") if a not in ("--problem", str(DEMO / "peg_task.pddls"))]
    code, _, _ = run(capsys, *base)
    assert code == 2
    with pytest.raises(CliExit):
        RunConfig(DEMO, DEMO, DEMO, DEMO, [], demo_initial=DEMO).goal_source()


def test_skills_merge(capsys, tmp_path):
    out_file = tmp_path / "merged.json"
    code, _, _ = run(capsys, "skills", "merge", DEMO / "ur5_skills.json", DEMO / "pepper_skills.json", "--out", out_file)
    names = [s["name"] for s in json.loads(read(out_file))["skills"]]
    assert code == 0 and names == ["pick", "pick-n-insert", "place-in", "report-status", "safety-stop"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "maestrob", "extract", *SCENE], capture_output=True, text=True)
    assert proc.returncode == 0 and "empty(hole1)" in proc.stdout
