"""Walk the peg-in-hole demo stage by stage and print what each stage sees.

    python3 scripts/run_demo.py [--scenario clean|missing_peg|missing_peg_assisted]
"""

import argparse
import tempfile
from pathlib import Path

from maestrob.cli import main
from scenarios import DEMO, SCENARIOS, run_args


def stage(title: str, argv: list[str]) -> int:
    print(f"\n== {title}")
    code = main(argv)
    print(f"-- exit {code}")
    return code


def demo(scenario: str) -> int:
    common = ["--object-db", str(DEMO / "objects.json"), "--scene", str(DEMO / "scene_initial.json")]
    stage("perceived initial state", ["extract", *common])
    stage("goal from the task name", ["ground", *common, "--ontology", str(DEMO / "common_sense.triples"),
                                      "--templates", str(DEMO / "templates.json"),
                                      "--utterance", "perform the peg assembly task"])
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        stage("semantic resolution", [
            "resolve", *common,
            "--domain", str(DEMO / "peg_insertion.pddls"), "--problem", str(DEMO / "peg_task.pddls"),
            "--ontology", str(DEMO / "common_sense.triples"), "--rules", str(DEMO / "rules.json"),
            "--out-dir", tmp, "--provenance", str(out / "provenance.txt"),
        ])
        print((out / "provenance.txt").read_text(), end="")
        stage("plan", ["plan", "--domain", str(out / "domain.pddl"), "--problem", str(out / "problem.pddl")])
        bus_log = out / "bus.jsonl"
        code = stage(f"execution ({scenario})", run_args(scenario, bus_log))
        print("\n== blackboard traffic")
        for line in bus_log.read_text().splitlines():
            print(line[:120] + ("..." if len(line) > 120 else ""))
    return code


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--scenario", choices=sorted(SCENARIOS), default="clean")
    raise SystemExit(demo(parser.parse_args().scenario))
