"""Measured consistency slopes for every probe and coupling order."""

from gaptooth.consistency import run_convergence

CASES = [(s, o) for s in ("wave", "dispersive", "diffusive", "nonlinear") for o in ("linear", "cubic", "quintic")]


def main():
    print(f"{'probe':10} {'order':8} {'slope':>6} {'expected':>8}  residuals")
    for system, order in CASES:
        rep = run_convergence(system, order)
        want = "" if rep.expected is None else f"{rep.expected:g}"
        res = " ".join(f"{r:.2e}" for r in rep.residuals)
        print(f"{system:10} {order:8} {rep.slope:6.2f} {want:>8}  {res}")


if __name__ == "__main__":
    main()
