import numpy as np
import pytest

from homogflow import (
    BLOCK_TAG,
    CellGeometry,
    CoefficientField,
    Disk,
    GeometryError,
    MATRIX_TAG,
    alpha_functionals,
    build_periodic_map,
    build_unit_cell_mesh,
    compute_cell_data,
    homogenized_tensor,
    integrate,
    solve_alpha,
    solve_corrector,
)
from homogflow.fem import lumped_mass

R = 0.25
# Closed-form block solution for B = I, h: a(r) = R/(2h) + (R^2 - r^2)/4,
# with interface integral pi R^2 / h and block integral
# pi R^3 / (2h) + pi R^4 / 8.
ALPHA_HAT_EXACT = np.pi * R**2
ALPHA_BULK_EXACT = np.pi * R**3 / 2 + np.pi * R**4 / 8

# Reference value of the disk-cell tensor (A = identity), frozen from a
# resolution-128 self-convergence run; drift 32 -> 64 -> 128 is second order.
DISK_A11_REFERENCE = 0.6716895632


def radial_alpha(r, h=1.0):
    return R / (2.0 * h) + (R**2 - r**2) / 4.0


# -- correctors and tensor ----------------------------------------------------


def test_empty_cell_identity_tensor(identity, unit_h):
    data, sol = compute_cell_data(CellGeometry(block=None, resolution=16),
                                  identity, identity, unit_h)
    assert np.abs(data.tensor - np.eye(2)).max() < 1e-8
    assert np.abs(sol.omega[0].values).max() < 1e-8
    assert data.y1_volume == pytest.approx(1.0, abs=1e-14)


def test_layered_tensor_harmonic_and_arithmetic_means(identity, unit_h):
    layered = CoefficientField.layered([1.0, 4.0], direction=0)
    data, _ = compute_cell_data(CellGeometry(block=None, resolution=64),
                                layered, identity, unit_h)
    # Flux along the layering sees the harmonic mean, across it the
    # arithmetic mean; the banded profile is resolved exactly by the mesh.
    assert data.tensor[0, 0] == pytest.approx(1.6, abs=1e-3)
    assert data.tensor[1, 1] == pytest.approx(2.5, abs=1e-3)
    assert abs(data.tensor[0, 1]) < 1e-8


def test_layered_corrector_matches_triangle_wave(identity):
    # With bands {1, 4} along y1 the corrector is the zero-mean triangle
    # wave with slopes (1.6/a - 1): +0.6 then -0.6.
    layered = CoefficientField.layered([1.0, 4.0], direction=0)
    mesh = build_unit_cell_mesh(CellGeometry(block=None, resolution=16))
    pmap = build_periodic_map(mesh)
    omega1 = solve_corrector(0, mesh, pmap, layered)
    y1 = mesh.nodes[:, 0]
    exact = np.where(y1 <= 0.5, 0.6 * y1 - 0.15, 0.15 - 0.6 * (y1 - 0.5))
    assert np.abs(omega1.values - exact).max() < 1e-8


def test_corrector_zero_mean(disk_mesh32, identity):
    pmap = build_periodic_map(disk_mesh32)
    omega1 = solve_corrector(0, disk_mesh32, pmap, identity)
    w = lumped_mass(disk_mesh32, MATRIX_TAG)
    assert abs(w @ omega1.values) < 1e-10


def test_corrector_odd_symmetry_about_midplane(disk_mesh32, identity):
    pmap = build_periodic_map(disk_mesh32)
    omega1 = solve_corrector(0, disk_mesh32, pmap, identity)
    dofs = disk_mesh32.subdomain_dofs(MATRIX_TAG)
    lookup = {
        (round(float(x), 10), round(float(y), 10)): d
        for d, (x, y) in zip(dofs, disk_mesh32.nodes[dofs])
    }
    checked = 0
    for d, (x, y) in zip(dofs, disk_mesh32.nodes[dofs]):
        mirror = lookup.get((round(float(1.0 - x), 10), round(float(y), 10)))
        if mirror is not None:
            assert abs(omega1.values[d] + omega1.values[mirror]) < 1e-8
            checked += 1
    assert checked > 100


def test_disk_tensor_structure(disk_mesh32, identity):
    pmap = build_periodic_map(disk_mesh32)
    omega = (solve_corrector(0, disk_mesh32, pmap, identity),
             solve_corrector(1, disk_mesh32, pmap, identity))
    a = homogenized_tensor(omega, disk_mesh32, identity)
    scale = np.abs(a).max()
    assert abs(a[0, 1] - a[1, 0]) <= 1e-10 * scale
    assert abs(a[0, 0] - a[1, 1]) < 1e-6 and abs(a[0, 1]) < 1e-6
    eigs = np.linalg.eigvalsh(0.5 * (a + a.T))
    assert eigs.min() > 0.0
    y1 = disk_mesh32.subdomain_area(MATRIX_TAG)
    assert 0.0 < a[0, 0] < y1
    # Voigt bound: zero corrector is admissible in the energy minimization.
    for xi in (np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0])):
        assert xi @ a @ xi <= xi @ (y1 * np.eye(2)) @ xi + 1e-10


def test_energy_form_equals_flux_form(disk_mesh32, identity):
    pmap = build_periodic_map(disk_mesh32)
    omega = (solve_corrector(0, disk_mesh32, pmap, identity),
             solve_corrector(1, disk_mesh32, pmap, identity))
    a_energy = homogenized_tensor(omega, disk_mesh32, identity, form="energy")
    a_flux = homogenized_tensor(omega, disk_mesh32, identity, form="flux")
    assert np.abs(a_energy - a_flux).max() < 1e-8


def test_disk_tensor_reference_value(identity, unit_h):
    values = {}
    for n in (32, 64):
        data, _ = compute_cell_data(CellGeometry(block=Disk((0.5, 0.5), R), resolution=n),
                                    identity, identity, unit_h)
        values[n] = data.tensor[0, 0]
    assert abs(values[32] - values[64]) / values[64] < 1e-2
    assert abs(values[64] - DISK_A11_REFERENCE) < 1e-3


# -- block problem -------------------------------------------------------------


def test_alpha_matches_radial_closed_form(disk_mesh32, identity, unit_h):
    alpha = solve_alpha(disk_mesh32, identity, unit_h)
    dofs = disk_mesh32.subdomain_dofs(BLOCK_TAG)
    r = np.hypot(*(disk_mesh32.nodes[dofs] - 0.5).T)
    assert np.abs(alpha.values[dofs] - radial_alpha(r)).max() < 5e-3
    boundary = disk_mesh32.node_pairs[:, 1]
    assert np.abs(alpha.values[boundary] - 0.125).max() < 5e-3


def test_alpha_second_order_convergence(identity, unit_h):
    errs = []
    for n in (16, 32, 64):
        mesh = build_unit_cell_mesh(CellGeometry(block=Disk((0.5, 0.5), R), resolution=n))
        alpha = solve_alpha(mesh, identity, unit_h)
        dofs = mesh.subdomain_dofs(BLOCK_TAG)
        r = np.hypot(*(mesh.nodes[dofs] - 0.5).T)
        errs.append(np.abs(alpha.values[dofs] - radial_alpha(r)).max())
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine >= 3.0


def test_alpha_large_h_approaches_zero_trace(disk_mesh32, identity):
    alpha = solve_alpha(disk_mesh32, identity, CoefficientField.constant(1e6))
    assert np.abs(alpha.values[disk_mesh32.node_pairs[:, 1]]).max() < 1e-5


def test_alpha_scaling_linearity(disk_mesh32, identity, unit_h):
    alpha1 = solve_alpha(disk_mesh32, identity, unit_h)
    alpha2 = solve_alpha(disk_mesh32, CoefficientField.constant_matrix(2 * np.eye(2)),
                         CoefficientField.constant(2.0))
    dofs = disk_mesh32.subdomain_dofs(BLOCK_TAG)
    assert np.abs(alpha2.values[dofs] - 0.5 * alpha1.values[dofs]).max() < 1e-10


def test_alpha_nonnegative(disk_mesh32, identity, unit_h):
    alpha = solve_alpha(disk_mesh32, identity, unit_h)
    assert alpha.values[disk_mesh32.subdomain_dofs(BLOCK_TAG)].min() >= -1e-12


def test_alpha_requires_block(identity, unit_h):
    mesh = build_unit_cell_mesh(CellGeometry(block=None, resolution=8))
    with pytest.raises(GeometryError):
        solve_alpha(mesh, identity, unit_h)


# -- functionals ---------------------------------------------------------------


def test_alpha_functionals_radial_oracle(disk_mesh32, identity, unit_h):
    alpha = solve_alpha(disk_mesh32, identity, unit_h)
    alpha_hat, alpha_bulk, y1 = alpha_functionals(alpha, disk_mesh32)
    assert alpha_hat == pytest.approx(ALPHA_HAT_EXACT, abs=2e-3)
    assert alpha_bulk == pytest.approx(ALPHA_BULK_EXACT, abs=3e-4)
    assert y1 == pytest.approx(1 - np.pi / 16, abs=5e-3)


def test_alpha_hat_halves_when_h_doubles(disk_mesh32, identity):
    alpha = solve_alpha(disk_mesh32, identity, CoefficientField.constant(2.0))
    alpha_hat, _, _ = alpha_functionals(alpha, disk_mesh32)
    assert alpha_hat == pytest.approx(ALPHA_HAT_EXACT / 2.0, abs=1e-3)


def test_alpha_hat_refinement_order(identity, unit_h):
    errs = []
    for n in (16, 32, 64):
        mesh = build_unit_cell_mesh(CellGeometry(block=Disk((0.5, 0.5), R), resolution=n))
        alpha = solve_alpha(mesh, identity, unit_h)
        alpha_hat, _, _ = alpha_functionals(alpha, mesh)
        errs.append(abs(alpha_hat - ALPHA_HAT_EXACT))
    orders = [np.log2(c / f) for c, f in zip(errs, errs[1:])]
    assert min(orders) >= 1.5


def test_degenerate_zero_alpha_functionals(disk_mesh32):
    from homogflow.fem import FieldSolution

    zero = FieldSolution(disk_mesh32, np.zeros(disk_mesh32.n_nodes))
    alpha_hat, alpha_bulk, y1 = alpha_functionals(zero, disk_mesh32)
    assert alpha_hat == 0.0 and alpha_bulk == 0.0
    assert y1 == pytest.approx(disk_mesh32.subdomain_area(MATRIX_TAG))


def test_interface_flux_identity(disk_mesh32, identity, unit_h):
    # Testing the discrete balance: with the constant test function the
    # Robin equation forces  int_Gamma h a ds = |Y2|  exactly.
    alpha = solve_alpha(disk_mesh32, identity, unit_h)
    alpha_hat = integrate(disk_mesh32, alpha, region="interface", side="block")
    assert alpha_hat == pytest.approx(disk_mesh32.subdomain_area(BLOCK_TAG), abs=1e-9)


def test_homogenized_data_json_roundtrip(disk_geom16, identity, unit_h):
    from homogflow import HomogenizedData

    data, _ = compute_cell_data(disk_geom16, identity, identity, unit_h,
                                provenance={"fingerprint": "abc"})
    back = HomogenizedData.from_json(data.to_json())
    assert np.array_equal(back.tensor, data.tensor)
    assert back.alpha_hat == data.alpha_hat
    assert back.alpha_bulk == data.alpha_bulk
    assert back.y1_volume == data.y1_volume
    assert back.provenance == data.provenance
