#!/usr/bin/env python3
"""Comparison function summary per period: (phi, phi), Hilbert-Schmidt norm and envelope."""
import argparse
import math

from cglphase.coercive_functional import eps_binding, gamma_hs_norm, hs_envelope, phi_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, nargs="+", default=[2 * math.pi, 10.0, 25.0, 50.0, 100.0])
    a = ap.parse_args()
    print("L,eps,binding,phi_norm_sq,phi_bound,hs_norm_sq,hs_tail,hs_envelope")
    for L in a.L:
        eps, binding = eps_binding(L)
        ph = phi_summary(L, eps)
        hs, tail = gamma_hs_norm(L, eps)
        print(f"{L:.6g},{eps:.6g},{binding},{ph['phi_norm_sq']:.6g},{ph['phi_bound']:.6g},"
              f"{hs:.6g},{tail:.3g},{hs_envelope(L):.6g}")


if __name__ == "__main__":
    main()
