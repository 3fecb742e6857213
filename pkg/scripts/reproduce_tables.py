"""Print the right-decision-rate and success-rate bound tables next to the
reference values in tests/data/reference_tables.json.

    python3 scripts/reproduce_tables.py
"""

import csv
import io
import json
import sys
from contextlib import redirect_stdout
from pathlib import Path

from ensolver.cli import main

ROOT = Path(__file__).resolve().parents[1]


def bounds_csv(config: Path) -> list[dict]:
    buf = io.StringIO()
    with redirect_stdout(buf):
        if main(["bounds", "--config", str(config)]) != 0:
            sys.exit(1)
    return list(csv.DictReader(io.StringIO(buf.getvalue())))


def show(title: str, rows: list[dict], column: str, reference: list[dict]):
    print(f"\n{title}")
    alphas = sorted({r["alpha"] for r in rows}, key=float)
    print(f"{'setting':<18}" + "".join(f"a={a:<12}" for a in alphas))
    worst = 0.0
    for i, ref in enumerate(reference):
        cells = rows[i * len(alphas):(i + 1) * len(alphas)]
        line = f"{cells[0]['label']:<18}"
        for r, want in zip(cells, ref["values"]):
            got = r[column]
            if want != "na" and got != "na":
                worst = max(worst, abs(float(r[column + "_full"]) - want))
            line += f"{got:>6}/{str(want):<7}"
        print(line)
    print(f"max |computed - reference| = {worst:.5f}")


if __name__ == "__main__":
    ref = json.loads((ROOT / "tests/data/reference_tables.json").read_text())
    show("right decision rate lower bound (computed/reference)",
         bounds_csv(ROOT / "configs/rdr_table.json"), "rdr_lower", ref["rdr_table"])
    show("success rate lower bound, T=3 (computed/reference)",
         bounds_csv(ROOT / "configs/success_table.json"), "success_lower", ref["success_table"])
