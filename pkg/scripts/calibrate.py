"""Dress-rehearsal for the acceptance experiments: sweeps + fits + scaling.

Writes everything to stdout; used to choose bracket starting points and
verify runtimes before freezing the acceptance protocol.
"""

import sys
import time

from memperc import fitting, harness

SEED = 20260810

PLAN = [
    ("euler", 100, 0.45, 12, 3),
    ("euler", 300, 0.40, 12, 3),
    ("euler", 1000, 0.37, 12, 3),
    ("euler", 3000, 0.33, 12, 3),
    ("trapezoid", 100, 0.70, 8, 3),
    ("trapezoid", 300, 0.65, 8, 3),
    ("trapezoid", 1000, 0.58, 8, 3),
    ("rk4", 100, 1.00, 8, 3),
    ("rk4", 300, 0.90, 8, 3),
    ("rk4", 1000, 0.80, 8, 3),
]


def main():
    results = {}
    for method, n, start, inst, seeds in PLAN:
        t0 = time.time()
        rows = harness.bracket_transition(
            n, 8.0, method, inst, seeds, budget=15000, start_dt=start,
            base_seed=SEED)
        el = time.time() - t0
        pts = [(r.dt, r.A, w) for r, w in zip(
            rows, fitting.weights_from_stderr([r.stderr_A for r in rows]))]
        fit = fitting.fit_sigmoid(pts)
        dt95 = fitting.dt_at_level(fit, 0.95)
        flagged = sum(not r.plateau_reached for r in rows)
        print(f"== {method} N={n}: {len(rows)} pts, {el:.0f}s, "
              f"c={fit.c:.1f} dt_c={fit.d:.4f} dt95={dt95:.4f} "
              f"flagged={flagged}", flush=True)
        print("   " + " ".join(f"{r.dt:.3f}:{r.A:.2f}" for r in rows),
              flush=True)
        results[(method, n)] = fit
    print()
    for method in ("euler", "trapezoid", "rk4"):
        ns = [n for (m, n) in results if m == method]
        pairs = [(n, results[(method, n)].d) for n in sorted(ns)]
        law = fitting.fit_power_law(pairs)
        print(f"{method}: dt_c power law exponent={law.exponent:.3f} "
              f"r2={law.r_squared:.4f} pairs={pairs}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
