"""Kirkwood sphere (R = 2, five charge sets): energies and relative errors per grid size."""
import argparse

from pbmib import RunConfig, SweepSpec, run_sweep
from pbmib.benchmarks import KIRKWOOD_SURFACE, kirkwood_model, kirkwood_reference

SIZES = (1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, nargs="+", default=(1, 2, 3, 4, 5))
    ap.add_argument("--grid-sizes", type=float, nargs="+", default=SIZES)
    ap.add_argument("--padding", type=float, default=4.0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = SweepSpec(args.grid_sizes, padding=args.padding, jobs=args.jobs)
    table = {}
    for case in args.cases:
        exact = kirkwood_reference(case)
        rows = run_sweep(kirkwood_model(case), RunConfig(surface=dict(KIRKWOOD_SURFACE)), spec, oracle=exact)
        table[case] = (exact, rows)

    print(f"{'h':>5}" + "".join(f"{'case ' + str(c):>22}" for c in args.cases))
    for i, h in enumerate(spec.grid_sizes):
        line = f"{h:>5.2f}"
        for case in args.cases:
            row = table[case][1][i]
            line += f"{'error':>22}" if row.delta_G is None else f"{row.delta_G:>12.2f} ({row.oracle_error:6.2%})"
        print(line)
    print(f"{'exact':>5}" + "".join(f"{table[c][0]:>12.2f}{'':10}" for c in args.cases))


if __name__ == "__main__":
    main()
