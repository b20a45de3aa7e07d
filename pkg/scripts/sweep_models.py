"""Run the model chain over many generated models and tabulate the outcome.

    python3 scripts/sweep_models.py --seeds 1000 --max-states-m 4 --max-fibre 3 --jobs 4
"""

from __future__ import annotations

import argparse
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from impcat.interp import model_chain
from impcat.shell.generate import GenConfig, generate_model_instance


@dataclass(frozen=True)
class SweepConfig:
    seeds: int = 200
    start: int = 0
    max_states_m: int = 4
    max_fibre: int = 3
    jobs: int = 1


def one(args: tuple[int, int, int]) -> dict:
    seed, k, f = args
    X, M, mu = generate_model_instance(GenConfig(seed, k, f))
    return {"seed": seed, "states": len(X.states), "model_states": len(M.states), **model_chain(mu)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in asdict(SweepConfig()).items():
        ap.add_argument("--" + name.replace("_", "-"), type=int, default=default)
    ap.add_argument("--out", help="write per-seed rows as JSON lines")
    a = ap.parse_args()
    cfg = SweepConfig(a.seeds, a.start, a.max_states_m, a.max_fibre, a.jobs)

    work = [(s, s % cfg.max_states_m + 1, cfg.max_fibre) for s in range(cfg.start, cfg.start + cfg.seeds)]
    t0 = time.perf_counter()
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(one, work, chunksize=16))
    else:
        rows = [one(w) for w in work]
    rows.sort(key=lambda r: r["seed"])
    dt = time.perf_counter() - t0

    flags = [k for k in rows[0] if k not in ("seed", "states", "model_states")]
    held = {k: sum(bool(r.get(k)) for r in rows) for k in flags}
    sizes = Counter(r["states"] for r in rows)
    print(f"{len(rows)} models in {dt:.2f}s  ({asdict(cfg)})")
    for k in flags:
        print(f"  {k:<24} {held[k]}/{len(rows)}")
    print("  |X| histogram: " + ", ".join(f"{n}:{c}" for n, c in sorted(sizes.items())))
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            for r in rows:
                fh.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
