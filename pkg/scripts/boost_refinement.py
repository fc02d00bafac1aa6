"""Boost covariance gap under joint dt / grid refinement (1D free Gaussian, v = 0.5)."""
import argparse
import time

import numpy as np

from pwlab import GridSpec, IntegratorOptions, ParticleModel, boost_covariance_audit, gaussian_packet
from pwlab.potentials import Free


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--v", type=float, default=0.5)
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()
    m = ParticleModel((1.0,))
    starts = np.linspace(-2, 2, 20)[:, None]
    print(f"{'points':>7} {'dt':>9} {'max_gap':>11} {'ratio':>7} {'pg_resid':>10} {'sec':>6}")
    prev = None
    for lev in range(args.levels):
        n, dt = 256 * 2**lev, 4e-3 / 2**lev
        t0 = time.perf_counter()
        psi0 = gaussian_packet(GridSpec((n,), (-20.0,), (20.0,)), [0.0], [0.0], [1.0])
        rep = boost_covariance_audit(psi0, Free(), m, [args.v], starts, 1.0, IntegratorOptions(dt=dt), dt=dt)
        gap = rep["max_gap"]
        ratio = f"{prev / gap:7.2f}" if prev else "      -"
        print(f"{n:7d} {dt:9.2e} {gap:11.3e} {ratio} {rep['phase_gradient_residual_final']:10.2e} "
              f"{time.perf_counter() - t0:6.1f}")
        prev = gap


if __name__ == "__main__":
    main()
