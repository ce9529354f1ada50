"""Solve the block exchange problem and compare with the radial closed form.

On the block the scaled pressure response solves a unit-source problem with
a Robin exchange condition on the interface.  For a disk with unit
coefficients it has the radial closed form

    a(r) = R/(2h) + (R^2 - r^2)/4,

whose interface integral pi R^2 / h sets the extra macroscopic source and
whose block integral pi R^3/(2h) + pi R^4/8 sets the boundary lift of the
limit pressure.
"""

import numpy as np

from homogflow import (
    CellGeometry,
    CoefficientField,
    Disk,
    alpha_functionals,
    build_unit_cell_mesh,
    solve_alpha,
)

R = 0.25
I2 = CoefficientField.identity()


def main():
    print("radial closed form vs the discrete block solution:")
    for n in (16, 32, 64):
        mesh = build_unit_cell_mesh(CellGeometry(block=Disk((0.5, 0.5), R), resolution=n))
        alpha = solve_alpha(mesh, I2, CoefficientField.constant(1.0))
        dofs = mesh.subdomain_dofs(2)
        r = np.hypot(*(mesh.nodes[dofs] - 0.5).T)
        exact = R / 2 + (R**2 - r**2) / 4
        print(f"  n={n:3d}  max nodal error {np.abs(alpha.values[dofs] - exact).max():.2e}")

    mesh = build_unit_cell_mesh(CellGeometry(block=Disk((0.5, 0.5), R), resolution=32))
    for h in (1.0, 2.0):
        alpha = solve_alpha(mesh, I2, CoefficientField.constant(h))
        alpha_hat, alpha_bulk, y1 = alpha_functionals(alpha, mesh)
        print(f"\nexchange coefficient h = {h:g}:")
        print(f"  interface integral {alpha_hat:.6f}  (closed form "
              f"{np.pi * R**2 / h:.6f})")
        print(f"  block integral     {alpha_bulk:.7f} (closed form "
              f"{np.pi * R**3 / (2 * h) + np.pi * R**4 / 8:.7f})")
        print(f"  matrix volume      {y1:.6f}")

    print("\nstiff exchange pins the interface trace to zero:")
    alpha = solve_alpha(mesh, I2, CoefficientField.constant(1e6))
    trace = np.abs(alpha.values[mesh.node_pairs[:, 1]]).max()
    print(f"  h = 1e6 -> max interface value {trace:.2e}")


if __name__ == "__main__":
    main()
