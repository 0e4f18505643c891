"""Spectra under each ghost closure and coupling order.

The linear-extrapolation closure leaves an unstable mode and a small gap,
which is why the copy closure is the default.
"""

from gaptooth.harness import run_spectrum
from gaptooth.solver import GhostClosure


def main():
    print(f"{'closure':8} {'order':8} {'max Re':>10} {'slow |Re|':>10} {'band pairs':>10} {'gap':>8}")
    for ghost in GhostClosure:
        for order in ("linear", "cubic", "quintic"):
            _, rep = run_spectrum(order=order, ghost=ghost)
            nonzero = rep.eigenvalues[abs(rep.eigenvalues) > rep.zero_threshold]
            slow = max((abs(p.real) for p in rep.complex_pairs()), default=float("nan"))
            print(
                f"{ghost.value:8} {order:8} {nonzero.real.max():10.4f} {slow:10.4f} "
                f"{rep.pairs_in_band(-250, -2):10d} {rep.gap_ratio:8.1f}"
            )


if __name__ == "__main__":
    main()
