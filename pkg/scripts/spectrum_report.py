"""Print the slow part of the equilibrium spectrum and compare eigensolver backends."""

import argparse

import numpy as np

from gaptooth.harness import run_spectrum
from gaptooth.spectrum import eigenvalues


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--order", default="cubic")
    ap.add_argument("--ghost", default="copy")
    args = ap.parse_args()
    J, rep = run_spectrum(m=args.m, order=args.order, ghost=args.ghost)
    ref = eigenvalues(J, backend="numpy")
    print(f"{rep.eigenvalues.size} eigenvalues, {rep.zero_modes} zero, gap ratio {rep.gap_ratio:.1f}")
    print("slow real:", ", ".join(f"{v:.5f}" for v in rep.real_modes()))
    for p in rep.complex_pairs():
        print(f"slow pair: {p.real:+.5f} +/- {abs(p.imag):.4f}i")
    print(f"pairs with Re in [-250, -2]: {rep.pairs_in_band(-250, -2)}")
    print(f"most negative Re: {rep.eigenvalues.real.min():.1f}")
    print(f"max |qr - numpy|: {np.abs(rep.eigenvalues - ref).max():.1e}")


if __name__ == "__main__":
    main()
