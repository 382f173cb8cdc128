"""Step-halving study of the centered-difference Lax pair residual on a Kerr geodesic.

The residual of dL/dt = [L, M] with dL/dt taken by a centered difference on the
output grid should fall by 4 per halving.
"""

import argparse
import math

from laxtensor import clifford as cl
from laxtensor import dynamics, lax, spacetimes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--steps", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    args = ap.parse_args()

    entry = spacetimes.kerr()
    H, spec = entry.hamiltonian(), entry.spec
    z0 = dynamics.mass_shell(spec, [0.0, 8.0, math.pi / 2 - 0.3, 0.0], [-0.95, 0.0, 1.2, 2.9], 1)
    basis = cl.build_gamma_basis(4, spec.signature)
    tensors = {
        "f_rank2": lax.LaxOperator("f_rank2", entry.ccky["principal"]),
        "phi_rank2": lax.LaxOperator("phi_rank2", entry.ky["ky"]),
    }
    spinors = {"clifford_momentum": cl.CliffordLax("momentum"), "clifford_ky": cl.CliffordLax("ky", entry.ky["ky"])}

    rows = {name: [] for name in [*tensors, *spinors]}
    for step in args.steps:
        traj = dynamics.integrate(H, spec, z0, args.t_end, dynamics.IntegratorConfig(output_step=step))
        for name, op in tensors.items():
            rows[name].append(lax.lax_pair_residual(traj, op, H, spec))
        for name, op in spinors.items():
            rows[name].append(cl.clifford_lax_pair_residual(traj, op, H, spec, basis))

    print("step      " + "".join(f"{n:>20s}" for n in rows))
    for i, step in enumerate(args.steps):
        print(f"{step:<10g}" + "".join(f"{rows[n][i]:20.3e}" for n in rows))
    print("ratio     " + "".join(f"{rows[n][-2] / rows[n][-1]:20.3f}" for n in rows))


if __name__ == "__main__":
    main()
