"""Full-size level-2 build with per-phase timings and identity checks.

Runs the perturbation construction at n=2048 with the complete
concentration-profile band, prints every identity residual and the
pressure-absorption contract, and reports wall time plus peak memory.
"""

import argparse
import resource
import time

from torusns import construction as cons
from torusns.schedule import toy_schedule
from torusns.spectral import Grid


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, default=2048)
    ap.add_argument("--band", type=int, default=62)
    args = ap.parse_args()

    grid = Grid(args.grid)
    sched = toy_schedule()
    t0 = time.perf_counter()
    seed = cons.seed_level(grid, sched)
    builder = cons.EvenLevelBuilder(grid, sched, 2, seed,
                                    profile_band=args.band)

    marks = [t0]

    def mark(label):
        marks.append(time.perf_counter())
        print(f"[{marks[-1] - marks[-2]:7.1f}s] {label}", flush=True)

    for name in ("_assemble_wp", "_assemble_ws", "_assemble_f1",
                 "_assemble_f2"):
        orig = getattr(cons.EvenLevelBuilder, name)

        def timed(self, *a, _orig=orig, _name=name, **kw):
            s = time.perf_counter()
            out = _orig(self, *a, **kw)
            print(f"[{time.perf_counter() - s:7.1f}s] {_name}", flush=True)
            return out

        setattr(cons.EvenLevelBuilder, name, timed)

    state = builder.build()
    mark("build total")

    checks = [
        ("div w_p", cons.check_divergence(state.w_p)),
        ("split", cons.check_split(state)),
        ("ws forms", cons.check_ws_forms(state)),
        ("init match", cons.check_initial_match(state, seed)),
        ("lift", cons.check_lift(state)),
    ]
    for label, val in checks:
        print(f"{label:11s}: {val:.3e}", flush=True)
    mark("identity checks")

    contract = cons.pressure_contract_residual(state, grid)
    for t, v in contract.items():
        print(f"contract t={t:g}: {v:.3e}", flush=True)
    mark("pressure contract")

    print(f"sup w_p(0) = {state.w_p.at(0.0).sup_norm():.6e}")
    print(f"F1 rates: {sorted(state.F1.terms)}")
    print(f"F2 rates: {sorted(state.F2.terms)}")
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1e6
    print(f"total {time.perf_counter() - t0:.1f}s, peak RSS {peak:.2f} GB")


if __name__ == "__main__":
    main()
