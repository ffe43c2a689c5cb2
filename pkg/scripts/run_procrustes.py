#!/usr/bin/env python3
"""Indefinite Procrustes sweep: min ||GX - B||_F^2 over the J-orthogonal
group (X^T J X = J), with B = GV constructed from a prescribed V in the
identity component, started from X0 = I.

    python3 scripts/run_procrustes.py --n 200 --p 150 --seeds 10
"""

from __future__ import annotations

import argparse

import numpy as np

from indefstiefel import SolverConfig, procrustes_problem, solve


def identity_component_orthogonal(size, rng):
    q = np.linalg.qr(rng.standard_normal((size, size)))[0]
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--p", type=int, default=150)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--rstop", type=float, default=1e-6)
    args = parser.parse_args()

    n, p = args.n, args.p
    m = n - p
    j = np.diag(np.concatenate([np.ones(p), -np.ones(m)]))
    objs, feas = [], []
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n, n))
        v = np.zeros((n, n))
        v[:p, :p] = identity_component_orthogonal(p, rng)
        v[p:, p:] = identity_component_orthogonal(m, rng)
        problem = procrustes_problem(g, g @ v, j)
        record = solve(problem, np.eye(n), SolverConfig(rstop=args.rstop, form="full"))
        diff = float(np.linalg.norm(record.x - v))
        print(
            f"seed={seed:3d} {record.status:9s} obj={record.obj:.3e} "
            f"feas={record.feas:.2e} diff={diff:.3e} iter={record.n_iter:4d} "
            f"cpu={record.cpu_s:6.2f}s"
        )
        objs.append(record.obj)
        feas.append(record.feas)
    print(f"worst obj={max(objs):.3e} worst feas={max(feas):.3e} over {args.seeds} seeds")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
