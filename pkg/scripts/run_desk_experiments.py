"""Generate the desk-scale datasets and run every experiment.

    python3 scripts/run_desk_experiments.py --out results --seed 1

Datasets already present in the output directory are reused.  Pass
``--full-scale`` for T = 1100, lattice dims 2..8 and r up to 15 (slow).
"""

import argparse
import time
import warnings
from pathlib import Path

from ehrhart_lab import cli, ml
from ehrhart_lab.datagen import GenerationParams, read_dataset


def dataset(out: Path, params: GenerationParams):
    path = out / f"{params.kind}.csv"
    if path.exists():
        ds = read_dataset(path)
        if ds.T == params.T:
            return ds
    ds, _ = cli.cmd_generate(params, out)
    return ds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--full-scale", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    warnings.simplefilter("ignore", ml.ConvergenceWarning)

    if args.full_scale:
        lattice = GenerationParams("lattice", dims=tuple(range(2, 9)), per_class=400, T=1100,
                                   seed=args.seed, workers=args.workers)
        rational = GenerationParams("rational", dims=(2, 3, 4), per_class=2000, T=1100, r_range=(2, 15),
                                    periods=tuple(range(2, 16)), seed=args.seed, workers=args.workers)
    else:
        lattice = GenerationParams("lattice", seed=args.seed, workers=args.workers)
        rational = GenerationParams("rational", dims=(2, 3), per_class=300, seed=args.seed, workers=args.workers)

    steps = [
        ("dimension", lambda: cli.cmd_dimension(dataset(out, lattice), out, seed=args.seed)),
        ("volume", lambda: cli.cmd_volume(dataset(out, lattice), out, seed=args.seed)),
        ("quasiperiod", lambda: cli.cmd_quasiperiod(dataset(out, rational), out, seed=args.seed)),
        ("gorenstein", lambda: cli.cmd_gorenstein(out, T=lattice.T, seed=args.seed)),
        ("markov", lambda: cli.cmd_markov(433, 20)),
    ]
    for name, run in steps:
        start = time.perf_counter()
        rep = run()
        rep.write(out)
        print(f"== {name} ({time.perf_counter() - start:.0f}s)")
        for check, ok in rep.checks.items():
            print(f"   {'PASS' if ok else 'FAIL'}  {check}")


if __name__ == "__main__":
    main()
