"""Command lines for the scripted demo runs, shared by the scripts and tests."""

from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DEMO = ROOT / "data" / "demo"
GOLDEN = ROOT / "data" / "golden"


def run_args(scenario: str, bus_log: Path | None = None) -> list[str]:
    args = [
        "run",
        "--object-db", str(DEMO / "objects.json"),
        "--scene", str(DEMO / "scene_initial.json"),
        "--ontology", str(DEMO / "common_sense.triples"),
        "--domain", str(DEMO / "peg_insertion.pddls"),
        "--problem", str(DEMO / "peg_task.pddls"),
        "--rules", str(DEMO / "rules.json"),
        "--skills", str(DEMO / "ur5_skills.json"),
        "--seed", "0",
    ]
    if scenario in ("missing_peg", "missing_peg_assisted"):
        args += ["--failure-script", str(DEMO / "failure_missing_peg.json")]
    if scenario == "missing_peg_assisted":
        args += ["--assistance-script", str(DEMO / "assistance_restore_peg.json")]
    if bus_log is not None:
        args += ["--bus-log", str(bus_log)]
    return args


SCENARIOS = {"clean": 0, "missing_peg": 5, "missing_peg_assisted": 0}
