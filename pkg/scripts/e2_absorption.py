"""Absorption times of the mod-3 tracking loop from every initial state.

Prints the regulated attractor, the histogram of first-entry times, and
checks that the observed worst case equals the computed horizon.
"""

from __future__ import annotations

from collections import Counter

from impcat.fixtures import e2
from impcat.impkit import run_pipeline


def entry_time(step, x, inside, limit: int = 200) -> int:
    for t in range(limit):
        if x in inside:
            return t
        x = step(x)
    raise RuntimeError("no entry within limit")


def main():
    rep = run_pipeline(e2())
    full = rep.full
    s_star = rep.s_star.subset
    times = Counter(entry_time(full.system.step, s, s_star) for s in full.states)
    print(f"full system: {len(full.states)} states; attractor:")
    for s in rep.s_star.ordered():
        print("   ", full.fmt(s))
    print("first-entry times:", dict(sorted(times.items())))
    worst = max(times)
    print(f"worst case {worst}, computed horizon {rep.attractor.horizon}:",
          "agree" if worst == rep.attractor.horizon else "DISAGREE")
    print("assumptions:", rep.assumptions)
    print("environment model:", dict(rep.model_env.on_states.table))


if __name__ == "__main__":
    main()
