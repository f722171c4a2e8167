"""S_d(z) against n for the study weights, with fitted log-log slopes.

    python3 scripts/run_convergence.py --out results/convergence.csv
    python3 scripts/run_convergence.py --extended   # adds n up to 128021 (slow)
"""

import argparse
import csv
import sys
import time
from pathlib import Path

from lattice_cbc.experiments import (
    EXTENDED_PRIMES,
    REFERENCE_RATES,
    STUDY_PRIMES,
    ConvergenceConfig,
    convergence_study,
    group_slopes,
)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="results/convergence.csv")
    p.add_argument("--d-list", default="5,10")
    p.add_argument("--extended", action="store_true", help="use n up to 128021")
    args = p.parse_args(argv)

    cfg = ConvergenceConfig(
        d_list=tuple(int(v) for v in args.d_list.split(",")),
        n_list=EXTENDED_PRIMES if args.extended else STUDY_PRIMES,
    )
    t0 = time.perf_counter()
    rows = convergence_study(cfg, progress=lambda r: print(
        f"alpha={r.alpha} {r.weight_label:8s} d={r.d:3d} n={r.n:6d} Sd={r.Sd:.6e}", file=sys.stderr))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["weight_label", "alpha", "d", "n", "Sd"])
        for r in rows:
            wr.writerow([r.weight_label, r.alpha, r.d, r.n, format(r.Sd, ".17g")])
    print(f"{'alpha':>5} {'weights':8} {'d':>4} {'slope':>7} {'reference':>9}")
    for (alpha, label, d), slope in group_slopes(rows).items():
        print(f"{alpha:5d} {label:8} {d:4d} {slope:7.3f} {REFERENCE_RATES[(alpha, label)]:9.1f}")
    print(f"wrote {out} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
