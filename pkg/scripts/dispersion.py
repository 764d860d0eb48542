#!/usr/bin/env python3
"""Measured linear growth rates (direct CGL and coupled system) against lambda(k)."""
import argparse
import csv
import sys

from cglphase.experiments import dispersion_experiment
from cglphase.operator_symbols import critical_wavenumber


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.25, 0.5, 0.75, 1.25, 1.5, 2.0],
                    help="wavenumbers as multiples of the critical one")
    a = ap.parse_args()
    kc = critical_wavenumber(a.eps, a.alpha)
    table = dispersion_experiment(a.eps, a.alpha, [f * kc for f in a.fractions])
    w = csv.DictWriter(sys.stdout, fieldnames=list(table[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(table)


if __name__ == "__main__":
    main()
