"""Wall time of gap-tooth against full-domain dam break for both integrators."""

import argparse

from gaptooth.harness import DamBreakConfig, timing_comparison
from gaptooth.integrator import RK45, TRAPEZOIDAL, IntegratorConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    for method, rtol in ((RK45, 1e-7), (TRAPEZOIDAL, 1e-3), (TRAPEZOIDAL, 1e-4)):
        cfg = DamBreakConfig(integrator=IntegratorConfig(method=method, rel_tol=rtol, abs_tol=rtol * 1e-2))
        res = timing_comparison(cfg, repeats=args.repeats)
        print(
            f"{method:12} rtol={rtol:g}: gap-tooth {res.gap_tooth_seconds:.2f}s "
            f"({res.gap_tooth_evaluations} f-evals)  full {res.full_domain_seconds:.2f}s "
            f"({res.full_domain_evaluations} f-evals)  ratio {res.ratio:.2f}"
        )


if __name__ == "__main__":
    main()
