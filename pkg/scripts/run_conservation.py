"""Long Kerr geodesic: drift of p^2, tr L^2, the genkt coefficients and the Clifford invariants.

Writes a CSV time series next to printing the worst relative drifts.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from laxtensor import clifford as cl
from laxtensor import dynamics, lax, spacetimes
from laxtensor.symmetry import momentum_square


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=1000.0)
    ap.add_argument("--rel-tol", type=float, default=1e-12)
    ap.add_argument("--output-step", type=float, default=0.5)
    ap.add_argument("--a", type=float, default=0.9)
    ap.add_argument("--csv", type=Path, default=Path("conservation.csv"))
    args = ap.parse_args()

    entry = spacetimes.kerr(1.0, args.a)
    H, spec = entry.hamiltonian(), entry.spec
    h, ky = entry.ccky["principal"], entry.ky["ky"]
    z0 = dynamics.mass_shell(spec, [0.0, 8.0, math.pi / 2 - 0.3, 0.0], [-0.95, 0.0, 1.2, 2.9], 1)
    cfg = dynamics.IntegratorConfig(rel_tol=args.rel_tol, output_step=args.output_step)
    traj = dynamics.integrate(H, spec, z0, args.t_end, cfg)
    print(f"{len(traj)} samples, {traj.stats.accepted} steps ({traj.stats.rejected} rejected)")

    states = traj.states
    basis = cl.build_gamma_basis(4, spec.signature)
    phi = lax.LaxOperator("phi_rank2", ky)
    cols = {
        "p2": np.array([momentum_square(spec, z) for z in states]),
        "trL2": np.array([lax.trace_invariants(phi, spec, z, 2)[1] for z in states]),
    }
    cs = np.array([lax.genkt_coefficients(h, spec, z) for z in states])
    ss = np.array([lax.genkt_scales(h, spec, z) for z in states])
    for j in range(cs.shape[1]):
        cols[f"c_{j}"] = cs[:, j]
    lam = np.array([cl.eigen_invariants(cl.clifford_lax_eval(cl.CliffordLax("ky", ky), spec, z, basis)).real
                    for z in states])
    for j in range(lam.shape[1]):
        cols[f"trLambda^{j + 1}"] = lam[:, j]

    for name, v in cols.items():
        if name.startswith("c_"):
            scale = ss[:, int(name[2:])].max()
        else:
            scale = np.max(np.abs(v))
        rel = np.max(np.abs(v - v[0])) / max(abs(v[0]), scale, np.finfo(float).tiny)
        print(f"{name:14s} initial {v[0]: .6e}  relative drift {rel:.2e}")

    table = np.column_stack([traj.times, *cols.values()])
    np.savetxt(args.csv, table, delimiter=",", header=",".join(["t", *cols]), comments="", fmt="%.17g")
    print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
