"""Compute effective permeability tensors from unit-cell corrector problems.

Three classic sanity cases: an empty cell returns the coefficient itself, a
layered medium returns the harmonic mean along the layers and the
arithmetic mean across them, and a cell with a sealed disk gives an
isotropic tensor strictly between zero and the matrix volume fraction.
"""

import numpy as np

from homogflow import CellGeometry, CoefficientField, Disk, compute_cell_data

I2 = CoefficientField.identity()
H1 = CoefficientField.constant(1.0)


def show(label, tensor):
    print(f"  {label}: [[{tensor[0, 0]:.6f}, {tensor[0, 1]:+.1e}], "
          f"[{tensor[1, 0]:+.1e}, {tensor[1, 1]:.6f}]]")


def main():
    print("empty cell, unit permeability -> identity tensor")
    data, _ = compute_cell_data(CellGeometry(block=None, resolution=32), I2, I2, H1)
    show("A_h", data.tensor)

    print("\nbands of permeability {1, 4} along y1 -> diag(harmonic, arithmetic)")
    layered = CoefficientField.layered([1.0, 4.0], direction=0)
    data, _ = compute_cell_data(CellGeometry(block=None, resolution=32), layered, I2, H1)
    show("A_h", data.tensor)
    print(f"  harmonic mean 2/(1 + 1/4) = {2 / (1 + 0.25):.4f}, "
          f"arithmetic mean (1 + 4)/2 = {2.5:.4f}")

    print("\ndisk of radius 0.25 sealed off from the matrix flow "
          "(natural interface condition):")
    for n in (16, 32, 64):
        geom = CellGeometry(block=Disk(center=(0.5, 0.5), radius=0.25), resolution=n)
        data, _ = compute_cell_data(geom, I2, I2, H1)
        print(f"  n={n:3d}  a11 = {data.tensor[0, 0]:.8f}  "
              f"(isotropy gap {abs(data.tensor[0, 0] - data.tensor[1, 1]):.1e}, "
              f"matrix volume {data.y1_volume:.6f})")
    print("  the corrector energy drops the tensor below the matrix "
          "volume fraction (Voigt bound), and the square symmetry of the "
          "cell makes it isotropic.")


if __name__ == "__main__":
    main()
