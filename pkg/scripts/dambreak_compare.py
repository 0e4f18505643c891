"""Gap-tooth against full-domain dam break: bore positions and water area."""

import argparse

from gaptooth.harness import FULL_DOMAIN, GAP_TOOTH, DamBreakConfig, run_dambreak


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, nargs="+", default=[10, 22])
    ap.add_argument("--downstream", type=float, default=0.45)
    ap.add_argument("--placement", default="in_patch")
    args = ap.parse_args()
    ref = run_dambreak(DamBreakConfig(downstream_depth=args.downstream), FULL_DOMAIN)
    print("full domain  bores:", " ".join(f"{b:.2f}" for b in ref.bores), f" area change {100 * ref.area_loss:.2g}%")
    for m in args.m:
        cfg = DamBreakConfig(m=m, downstream_depth=args.downstream, placement=args.placement)
        res = run_dambreak(cfg, GAP_TOOTH)
        bores = " ".join(f"{b:.2f}" for b in res.bores)
        print(f"gap-tooth m={m:<3} bores: {bores}  area change {100 * res.area_loss:.2f}%")


if __name__ == "__main__":
    main()
