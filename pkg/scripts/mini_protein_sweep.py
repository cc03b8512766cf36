"""Grid dependence of the synthetic union-of-spheres clusters, relative to the finest grid."""
import argparse

from pbmib import RunConfig, SweepSpec, run_sweep
from pbmib.benchmarks import MINI_PROTEINS, mini_protein
from pbmib.pipeline import format_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--names", nargs="+", default=list(MINI_PROTEINS))
    ap.add_argument("--grid-sizes", type=float, nargs="+", default=(1.1, 0.9, 0.7, 0.5, 0.3))
    ap.add_argument("--padding", type=float, default=4.5)
    ap.add_argument("--format", choices=("table", "csv", "json"), default="table")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = SweepSpec(args.grid_sizes, padding=args.padding, output=args.format, jobs=args.jobs)
    for name in args.names:
        model = mini_protein(name)
        print(f"# {name}: {len(model.atoms)} atoms, net charge {model.total_charge:+.3f}")
        print(format_sweep(run_sweep(model, RunConfig(), spec), spec.output))


if __name__ == "__main__":
    main()
