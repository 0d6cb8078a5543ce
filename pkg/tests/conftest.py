import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
DEMO = DATA / "demo"
CORPUS = DATA / "corpus"
GOLDEN = DATA / "golden"

# scenario command lines are shared with the scripts
sys.path.insert(0, str(ROOT / "scripts"))


def read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def demo():
    from maestrob import ontology
    from maestrob.pddl import parse_domain, parse_problem
    from maestrob.resolver import load_rules
    from maestrob.scene import load_object_db, load_scene

    kinds = {k.id: k for k in load_object_db(read(DEMO / "objects.json"))}
    return {
        "kinds": kinds,
        "initial": load_scene(read(DEMO / "scene_initial.json")),
        "final": load_scene(read(DEMO / "scene_demo_final.json")),
        "ontology": ontology.load(read(DEMO / "common_sense.triples")),
        "domain": parse_domain(read(DEMO / "peg_insertion.pddls")),
        "problem": parse_problem(read(DEMO / "peg_task.pddls")),
        "rules": load_rules(read(DEMO / "rules.json")),
    }


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok, detail = results[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})")
