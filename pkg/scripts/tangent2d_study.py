"""Compare the one-sided ramp data with the symmetric tangent2d data.

For each bundled scenario the script solves at the requested resolution and
prints the contact-modulus table and the blow-up distances at the origin.
"""

import argparse

from altphillips.analysis import blowup_distance, contact_modulus, extract_free_boundary, unit_target
from altphillips.experiments.scenario import load_scenario
from altphillips.solver import contact_floor, solve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--scenarios", nargs="+", default=["tangent2d_ramp", "tangent2d"])
    args = ap.parse_args(argv)
    radii = [0.4, 0.2, 0.1, 0.05]
    for name in args.scenarios:
        sc = load_scenario(name).with_resolution(args.n)
        g = sc.make_grid()
        u = solve(g, sc.boundary_data(), sc.operator, sc.params, sc.solver_opts).field
        fb = extract_free_boundary(u, sc.params)
        print(f"{name} (n = {args.n}, {len(fb)} free-boundary points)")
        print("  contact modulus:", {r: None if v is None else round(v, 4)
                                     for r, v in contact_modulus(fb, radii).items()})
        u0 = float(u.values[tuple(((-g.origin) / g.h).round().astype(int))])
        if u0 <= contact_floor(g, sc.params):
            bl = blowup_distance(u, [0.0] * g.dim, radii, sc.params, unit_target(g.dim))
            print("  blow-up distance / amp:", [round(float(v), 4) for v in bl["relative"]])
        else:
            print(f"  origin is not a contact node (u = {u0:.3e}); no blow-up at the origin")


if __name__ == "__main__":
    main()
