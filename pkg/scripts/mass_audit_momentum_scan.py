"""Coefficient-uniqueness ratio (wrong-mass KS / control KS) against packet momentum.

A packet at rest only spreads, and doubling the guidance mass halves a small
spreading velocity; the breach grows once the packet carries momentum.
"""
import argparse

from pwlab import GridSpec, IntegratorOptions, ParticleModel, coefficient_uniqueness_experiment, evolve, gaussian_packet
from pwlab.potentials import Free


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--momenta", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    args = ap.parse_args()
    grid = GridSpec((1024,), (-20.0,), (20.0,))
    m = ParticleModel((1.0,))
    print(f"{'p':>5} {'ks_control':>11} {'ks_wrong':>9} {'ratio':>7}")
    for p in args.momenta:
        rec = evolve(gaussian_packet(grid, [0.0], [p], [1.0]), Free(), m, 1.0, 1e-3, 10)
        rep = coefficient_uniqueness_experiment(rec, m, 2.0, args.n, args.seed,
                                                IntegratorOptions(dt=1e-3, workers=args.workers))
        print(f"{p:5.2f} {rep['ks_control_max']:11.4f} {rep['ks_wrong_max']:9.4f} {rep['ratio']:7.1f}")


if __name__ == "__main__":
    main()
