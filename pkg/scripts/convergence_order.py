#!/usr/bin/env python3
"""Observed temporal order of the ETD2 scheme on a delayed cubic model.

Each run at dt, dt/2, dt/4 is compared with a dt/8 reference at the final time.
"""

import argparse
import math

import numpy as np

from sddgalerkin import InitialSegment, SolverConfig, make_model, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="cubic-sin")
    ap.add_argument("--dt", type=float, default=4e-3)
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--modes", type=int, default=16)
    args = ap.parse_args()

    model = make_model(args.model)
    a = np.zeros(args.modes)
    a[:3] = (1.0, -0.5, 0.25)

    def final(dt):
        cfg = SolverConfig(dt=dt, t_end=args.t_end, modes=args.modes)
        return simulate(InitialSegment.constant(a, model.r, dt), model, cfg).fields[-1]

    ref = final(args.dt / 8)
    errs = []
    print(f"{'dt':>10} {'error':>12} {'order':>6}")
    for m in range(3):
        dt = args.dt / 2 ** m
        errs.append(float(np.linalg.norm(final(dt) - ref)))
        order = math.log2(errs[-2] / errs[-1]) if m else float("nan")
        print(f"{dt:10.2e} {errs[-1]:12.4e} {order:6.3f}")


if __name__ == "__main__":
    main()
