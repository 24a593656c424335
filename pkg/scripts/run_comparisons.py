"""Run both deformation comparisons on the bundled data files and a few stock data.

usage: python scripts/run_comparisons.py [--p-max P] [--out results.json]
"""

import argparse
import json
import time
from pathlib import Path

from givkdv.deform import compare, default_datum, load_datum
from givkdv.kdv import HierarchyContext

DATA = Path(__file__).resolve().parent / "data"


def jobs(p_max):
    yield "S levels 1..4 (stock)", default_datum("S", 2, levels=4), p_max
    yield "S general (file)", load_datum(str(DATA / "s_general.json")), p_max
    for name in ("r_ell1.json", "r_ell2.json"):
        yield f"R {name}", load_datum(str(DATA / name)), min(p_max, 2)
    yield "R level 3 (stock)", default_datum("R", 2, 3), 1


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p-max", type=int, default=3)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    summary = []
    for label, G, pm in jobs(args.p_max):
        t0 = time.perf_counter()
        reps = compare(G, pm, HierarchyContext(G.N))
        dt = time.perf_counter() - t0
        n_ok = sum(r.passed for r in reps)
        print(f"{label:28s} p<={pm}  {n_ok}/{len(reps)} exact  {dt:6.2f}s")
        for r in reps:
            if not r.passed:
                print("   ", r.line())
        summary.append({"label": label, "datum": G.to_json(), "passed": n_ok, "total": len(reps), "seconds": round(dt, 3)})
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
