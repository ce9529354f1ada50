import numpy as np
import pytest

from homogflow import (
    CoefficientField,
    MacroProblem,
    MicroProblem,
    build_macro_mesh,
    cell_average,
    compose_limit_pressure,
    compute_cell_data,
    corrector_error,
    run_study,
    solve_macro,
    solve_micro,
    weak_metric,
)
from homogflow.config import config_from_dict
from homogflow.convergence import TEST_FUNCTIONALS
from homogflow.fem import integrate_product
from homogflow.interpolation import interpolate_p1
from homogflow.micro import MicroSolution, combined_pressure


def small_config(**overrides):
    doc = {
        "geometry": {"block": {"shape": "disk", "center": [0.5, 0.5], "radius": 0.25}},
        "cell_resolution": 8,
        "macro_resolution": 16,
        "eps_list": [0.25, 0.125],
    }
    doc.update(overrides)
    return config_from_dict(doc)


# -- cell averaging ------------------------------------------------------------


def test_cell_average_of_constant():
    mesh = build_macro_mesh(16)
    avg = cell_average(mesh, np.full(mesh.n_nodes, 3.25), 0.25)
    assert np.abs(avg - 3.25).max() < 1e-13


def test_cell_average_of_linear_field():
    mesh = build_macro_mesh(16)
    avg = cell_average(mesh, mesh.nodes[:, 0], 0.5)
    assert np.abs(avg[0, :] - 0.25).max() < 1e-13
    assert np.abs(avg[1, :] - 0.75).max() < 1e-13


def test_cell_average_preserves_mean():
    mesh = build_macro_mesh(16)
    vals = np.sin(2.3 * mesh.nodes[:, 0]) * mesh.nodes[:, 1]
    from homogflow import integrate

    avg = cell_average(mesh, vals, 0.25)
    assert avg.mean() == pytest.approx(integrate(mesh, vals), abs=1e-13)


def test_cell_average_requires_nested_mesh():
    mesh = build_macro_mesh(9)
    with pytest.raises(ValueError):
        cell_average(mesh, np.zeros(mesh.n_nodes), 0.5)


# -- corrector metric ------------------------------------------------------------


@pytest.fixture(scope="module")
def small_pipeline(identity, unit_h):
    config = small_config(cell_resolution=16, macro_resolution=64,
                          eps_list=[0.25])
    hom, cell_sol = compute_cell_data(config.geometry, identity, identity, unit_h,
                                      provenance=config.provenance())
    cell_sol.fingerprint = hom.provenance["fingerprint"]
    macro_mesh = build_macro_mesh(64)
    problem = MacroProblem.from_homogenized(hom, 1.0, 1.0)
    u = solve_macro(problem, macro_mesh)
    u_limit = compose_limit_pressure(u, problem)
    micro = MicroProblem.build(config.geometry, 0.25, identity, identity, unit_h,
                               f1=1.0, f2=1.0)
    sol = solve_micro(micro)
    sol.fingerprint = hom.provenance["fingerprint"]
    return config, hom, cell_sol, macro_mesh, u, u_limit, micro, sol


def test_corrector_error_zero_for_injected_predictor(small_pipeline):
    config, hom, cell_sol, macro_mesh, u, u_limit, micro, sol = small_pipeline
    mesh = micro.mesh
    block = mesh.subdomain_dofs(2)
    pts = mesh.nodes[block]
    synth = np.zeros(mesh.n_nodes)
    synth[block] = (
        interpolate_p1(macro_mesh, u.values, pts)
        + interpolate_p1(cell_sol.mesh, cell_sol.alpha.values,
                         np.mod(pts * micro.m, 1.0), subdomain=2)
    )
    fake = MicroSolution(mesh=mesh, values=synth, eps=micro.eps)
    fake.fingerprint = cell_sol.fingerprint
    assert corrector_error(fake, cell_sol, u, 1.0) == 0.0


def test_corrector_error_fingerprint_mismatch(small_pipeline):
    config, hom, cell_sol, macro_mesh, u, u_limit, micro, sol = small_pipeline
    other = MicroSolution(mesh=micro.mesh, values=sol.values, eps=sol.eps)
    other.fingerprint = "deadbeef"
    with pytest.raises(ValueError):
        corrector_error(other, cell_sol, u, 1.0)


def test_corrector_error_stiff_interface_tracks_macro(identity):
    # With no block source and a stiff interface the block pressure follows
    # the matrix pressure, so the predictor reduces to u.
    huge = CoefficientField.constant(1e6)
    config = small_config(cell_resolution=16, macro_resolution=64,
                          eps_list=[0.0625])
    hom, cell_sol = compute_cell_data(config.geometry, identity, identity, huge)
    macro_mesh = build_macro_mesh(64)
    problem = MacroProblem.from_homogenized(hom, 1.0, 0.0)
    u = solve_macro(problem, macro_mesh)
    micro = MicroProblem.build(config.geometry, 0.0625, identity, identity, huge,
                               f1=1.0, f2=0.0)
    sol = solve_micro(micro)
    assert corrector_error(sol, cell_sol, u, 0.0) < 0.05


# -- weak metric and functionals -------------------------------------------------


def test_weak_metric_cauchy_schwarz_audit(small_pipeline):
    config, hom, cell_sol, macro_mesh, u, u_limit, micro, sol = small_pipeline
    w = combined_pressure(sol)
    metric = weak_metric(micro.mesh, w.values, macro_mesh, u_limit.values, 0.25)
    phi = TEST_FUNCTIONALS[0][1]
    func = abs(integrate_product(micro.mesh, w.values, phi)
               - integrate_product(macro_mesh, u_limit.values, phi))
    assert func <= metric + 1e-12


# -- study orchestration ----------------------------------------------------------


def test_study_report_shape_and_rates():
    report = run_study(small_config(), strict=True)
    assert len(report.rows) == 2
    assert report.rows[0].eps > report.rows[1].eps
    assert len(report.weak_rates) == 1
    assert report.weak_monotone
    csv = report.to_csv()
    assert csv.splitlines()[0].startswith("eps,weak_metric,corrector_metric")
    assert len(csv.splitlines()) == 3


def test_study_single_eps_no_rates():
    report = run_study(small_config(eps_list=[0.25]), strict=True)
    assert len(report.rows) == 1
    assert report.weak_rates == []


def test_study_zero_sources_all_metrics_zero():
    config = small_config(sources={"f1": "0", "f2": "0"})
    report = run_study(config, strict=False)
    for row in report.rows:
        assert row.weak_metric == 0.0
        assert row.corrector_metric == 0.0
        assert all(f == 0.0 for f in row.functional_metrics)
        assert row.h_eps_norm == 0.0


def test_study_deterministic_output():
    a = run_study(small_config(), strict=False).to_csv()
    b = run_study(small_config(), strict=False).to_csv()
    assert a == b


def test_study_parallel_matches_serial():
    serial = run_study(small_config(), strict=False, workers=1).to_csv()
    threaded = run_study(small_config(), strict=False, workers=2).to_csv()
    assert serial == threaded


def test_study_rows_carry_fingerprint():
    config = small_config()
    report = run_study(config, strict=False)
    assert report.fingerprint == config.provenance()["fingerprint"]
    assert report.fingerprint in report.to_csv()
