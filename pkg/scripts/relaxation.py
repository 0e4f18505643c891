"""Periodic relaxation: micro noise decays quickly, the macroscale wave slowly."""

import argparse

from gaptooth.harness import run_periodic_relaxation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, default=0.02)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--t-end", type=float, default=4.0)
    args = ap.parse_args()
    times = [args.t_end * k / 8 for k in range(9)]
    res = run_periodic_relaxation(noise_amplitude=args.noise, seed=args.seed, times=times)
    print(f"{'t':>6} {'roughness':>10} {'amplitude':>10} {'crest':>8}")
    for row in zip(res.times, res.roughness, res.amplitude, res.crest):
        print("{:6.2f} {:10.4g} {:10.4g} {:8.3f}".format(*row))


if __name__ == "__main__":
    main()
