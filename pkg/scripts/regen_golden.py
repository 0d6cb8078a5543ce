"""Regenerate the golden bus logs and trace logs under data/golden/.

Run after an intentional change to the runtime's message vocabulary, then
review the diff before committing.
"""

import contextlib
import io
import sys

from maestrob.cli import main
from scenarios import GOLDEN, SCENARIOS, run_args


def regenerate() -> int:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    status = 0
    for name, expected in SCENARIOS.items():
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = main(run_args(name, GOLDEN / f"{name}.bus.jsonl"))
        (GOLDEN / f"{name}.trace.txt").write_text(out.getvalue(), encoding="utf-8")
        mark = "ok" if code == expected else f"UNEXPECTED (wanted {expected})"
        print(f"{name:22s} exit {code} {mark}")
        status |= code != expected
    return status


if __name__ == "__main__":
    sys.exit(regenerate())
