"""Born-ion solvation energies over atomic radius and grid size, with exact values."""
import argparse

from pbmib import RunConfig, SweepSpec, run_sweep
from pbmib.benchmarks import born_model, born_reference, born_surface

RADII = (1.1, 1.3, 1.359, 1.4, 1.5, 1.55, 1.7, 1.8, 1.85, 2.0)
SIZES = (1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radii", type=float, nargs="+", default=RADII)
    ap.add_argument("--grid-sizes", type=float, nargs="+", default=SIZES)
    ap.add_argument("--padding", type=float, default=5.0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = SweepSpec(args.grid_sizes, padding=args.padding, jobs=args.jobs)
    print("R     " + "".join(f"{h:>10.2f}" for h in spec.grid_sizes) + f"{'exact':>10}")
    for r in args.radii:
        rows = run_sweep(born_model(r), RunConfig(surface=born_surface(r)), spec)
        cells = "".join(f"{row.delta_G:>10.2f}" if row.delta_G is not None else f"{'err':>10}" for row in rows)
        print(f"{r:<6.3g}{cells}{born_reference(r):>10.2f}")


if __name__ == "__main__":
    main()
