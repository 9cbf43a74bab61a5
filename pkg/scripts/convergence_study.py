"""Refinement tables for the 1D problem.

Prints the sup-norm error of the Laplacian solution against the profile and
the w-transform residual of the exact profile and of a solved positive-energy
field, for a ladder of resolutions.
"""

import argparse

import numpy as np

from altphillips.analysis import transform_w
from altphillips.grid import HalfGrid, ScalarField
from altphillips.operators import ApParams
from altphillips.oracle1d import profile_eval
from altphillips.solver import solve_laplacian


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[128, 256, 512, 1024, 2048])
    ap.add_argument("--gamma", type=float, default=1.5)
    args = ap.parse_args(argv)
    p = ApParams(args.gamma)
    end = profile_eval(p, 1.0)
    rows = []
    for n in args.n:
        g = HalfGrid.interval(n)
        u = solve_laplacian(g, lambda q: np.where(q[:, 0] > 0, end, 0.0), p).field
        err = float(np.max(np.abs(u.values - profile_eval(p, g.axes[0]))))
        exact = ScalarField.from_function(g, lambda x: profile_eval(p, x[:, 0]))
        w_exact = transform_w(exact, p)["residual_sup"]
        w_big = transform_w(solve_laplacian(g, lambda q: np.where(q[:, 0] > 0, 1.0, 0.0), p).field, p)
        rows.append((n, err, w_exact, w_big["residual_sup"]))
    print(f"{'n':>6} {'Linf error':>12} {'ratio':>7} {'w res (profile)':>16} {'w res (u(1)=1)':>15} {'ratio':>7}")
    for k, (n, e, we, wb) in enumerate(rows):
        r1 = rows[k - 1][1] / e if k else float("nan")
        r2 = rows[k - 1][3] / wb if k else float("nan")
        print(f"{n:6d} {e:12.3e} {r1:7.3f} {we:16.3e} {wb:15.3e} {r2:7.3f}")


if __name__ == "__main__":
    main()
