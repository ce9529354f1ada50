"""End-to-end verification: cell solve, macro solve, eps sweep, metrics.

Weak convergence of the overall pressure is tested through two
implementable surrogates: the L2 distance of per-cell averages (the
projection onto piecewise constants on the eps grid) and a fixed family of
smooth test functionals.  The block-side corrector identity is tested by
comparing the block pressure with the two-scale predictor
u(x) + alpha(x/eps mod 1) f2(x).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cell import CellSolution, HomogenizedData, compute_cell_data
from .convergence_report_io import format_csv, format_dat
from .errors import ConvergenceError
from .fem import FieldSolution, integrate_product, l2_norm_sq
from .geometry import BLOCK_TAG, Mesh
from .interpolation import interpolate_p1
from .macro import MacroProblem, build_macro_mesh, compose_limit_pressure, solve_macro
from .micro import MicroProblem, combined_pressure, energy_report, solve_micro

TEST_FUNCTIONALS = (
    ("const", lambda x1, x2: np.ones_like(x1)),
    ("sine", lambda x1, x2: np.sin(np.pi * x1) * np.sin(np.pi * x2)),
    ("bubble", lambda x1, x2: x1 * x2 * (1.0 - x1) * (1.0 - x2)),
)


def cell_average(mesh: Mesh, values, eps: float) -> np.ndarray:
    """Per-cell means of a nodal field on the eps grid, shape (m, m).

    Every triangle must lie inside a single eps cell (true for the tiled
    micro meshes and for macro meshes whose resolution is a multiple of m).
    """
    m = int(round(1.0 / eps))
    if abs(eps * m - 1.0) > 1e-9 or m < 1:
        raise ValueError(f"eps must be 1/m, got {eps}")
    vals = values.values if isinstance(values, FieldSolution) else np.asarray(values, dtype=float)
    cent = mesh.centroids
    ci = np.clip((cent[:, 0] * m).astype(int), 0, m - 1)
    cj = np.clip((cent[:, 1] * m).astype(int), 0, m - 1)
    p = mesh.nodes[mesh.triangles]
    lo = p.min(axis=1)
    hi = p.max(axis=1)
    nested = (
        (lo[:, 0] >= ci / m - 1e-9) & (hi[:, 0] <= (ci + 1) / m + 1e-9)
        & (lo[:, 1] >= cj / m - 1e-9) & (hi[:, 1] <= (cj + 1) / m + 1e-9)
    )
    if not np.all(nested):
        raise ValueError("mesh does not nest in the eps grid; choose a multiple resolution")
    tri_int = mesh.areas * vals[mesh.triangles].mean(axis=1)
    sums = np.zeros((m, m))
    areas = np.zeros((m, m))
    np.add.at(sums, (ci, cj), tri_int)
    np.add.at(areas, (ci, cj), mesh.areas)
    return sums / areas


def weak_metric(micro_mesh: Mesh, w_values, macro_mesh: Mesh, u_limit_values,
                eps: float) -> float:
    """L2 distance of the eps-cell averages of the two pressures."""
    pw = cell_average(micro_mesh, w_values, eps)
    pu = cell_average(macro_mesh, u_limit_values, eps)
    return float(np.sqrt(((pw - pu) ** 2).sum() * eps * eps))


def corrector_error(micro, cell: CellSolution, u: FieldSolution, f2) -> float:
    """Relative L2 block error of the two-scale predictor.

    Evaluates p(x) = u(x) + alpha(x/eps mod 1) f2(x) at the block-side
    micro DOFs and returns ||v - p|| / ||v|| over the blocks.  The micro and
    cell stages must share their geometry fingerprint.
    """
    mesh = micro.mesh
    fp_micro = getattr(micro, "fingerprint", None)
    fp_cell = getattr(cell, "fingerprint", None)
    if fp_micro is not None and fp_cell is not None and fp_micro != fp_cell:
        raise ValueError("geometry fingerprint mismatch between micro and cell stages")
    if cell.alpha is None:
        raise ValueError("cell solution has no block field")
    m = int(round(1.0 / micro.eps))
    block_dofs = mesh.subdomain_dofs(BLOCK_TAG)
    pts = mesh.nodes[block_dofs]
    u_at = interpolate_p1(u.mesh, u.values, pts)
    y = np.mod(pts * m, 1.0)
    alpha_at = interpolate_p1(cell.mesh, cell.alpha.values, y, subdomain=BLOCK_TAG)
    if callable(f2):
        f2_at = np.asarray(f2(pts[:, 0], pts[:, 1]), dtype=float)
    else:
        f2_at = np.full(len(pts), float(f2))
    predictor = u_at + alpha_at * f2_at
    err = np.zeros(mesh.n_nodes)
    err[block_dofs] = micro.values[block_dofs] - predictor
    num = np.sqrt(l2_norm_sq(mesh, err, subdomain=BLOCK_TAG))
    den = np.sqrt(l2_norm_sq(mesh, micro.v_eps.values, subdomain=BLOCK_TAG))
    if den == 0.0:
        return 0.0
    return float(num / den)


@dataclass
class ReportRow:
    eps: float
    weak_metric: float
    corrector_metric: float
    functional_metrics: tuple[float, float, float]
    grad_u_sq: float
    eps2_grad_v_sq: float
    jump_sq: float
    h_eps_norm: float


@dataclass
class ConvergenceReport:
    """Per-eps metrics plus empirical rates and monotonicity flags."""

    rows: list[ReportRow]
    fingerprint: str
    weak_rates: list[float] = field(default_factory=list)
    corrector_rates: list[float] = field(default_factory=list)
    weak_monotone: bool = True
    functionals_monotone: bool = True

    def to_csv(self) -> str:
        return format_csv(self)

    def to_dat(self) -> str:
        return format_dat(self)


def _rates(eps: list[float], metric: list[float]) -> list[float]:
    out = []
    for k in range(1, len(eps)):
        if metric[k] <= 0.0 or metric[k - 1] <= 0.0:
            out.append(float("nan"))
        else:
            out.append(float(np.log(metric[k - 1] / metric[k])
                             / np.log(eps[k - 1] / eps[k])))
    return out


def run_study(config, workers: int | None = None, strict: bool = True,
              progress=None) -> ConvergenceReport:
    """Execute the full pipeline for a run configuration.

    Stages: unit-cell problems, macro solve, micro solve per eps, metrics.
    With ``strict=True`` a non-monotone weak metric raises
    ``ConvergenceError`` (the limit is unique, so at desk scale the full
    sequence is expected to decrease); the report always records the
    monotonicity flags either way.
    """
    say = progress or (lambda msg: None)
    eps_list = sorted(config.eps_list, reverse=True)

    say(f"cell stage: resolution {config.geometry.resolution}")
    hom, cell_sol = compute_cell_data(
        config.geometry, config.coeff_a, config.coeff_b, config.coeff_h,
        rel_tol=config.rel_tol, provenance=config.provenance(),
    )
    fingerprint = hom.provenance.get("fingerprint", "")
    cell_sol.fingerprint = fingerprint

    say(f"macro stage: resolution {config.macro_resolution}")
    macro_mesh = build_macro_mesh(config.macro_resolution)
    problem = MacroProblem.from_homogenized(hom, config.f1, config.f2)
    u = solve_macro(problem, macro_mesh, rel_tol=config.rel_tol)
    u_limit = compose_limit_pressure(u, problem)

    def micro_stage(eps: float):
        say(f"micro stage: eps = 1/{int(round(1.0 / eps))}")
        try:
            mp = MicroProblem.build(config.geometry, eps, config.coeff_a,
                                    config.coeff_b, config.coeff_h,
                                    f1=config.f1, f2=config.f2)
            sol = solve_micro(mp, rel_tol=config.rel_tol)
            sol.fingerprint = fingerprint
            w = combined_pressure(sol)
            wm = weak_metric(mp.mesh, w.values, macro_mesh, u_limit.values, eps)
            cm = corrector_error(sol, cell_sol, u, config.f2)
            fm = tuple(
                abs(integrate_product(mp.mesh, w.values, fn)
                    - integrate_product(macro_mesh, u_limit.values, fn))
                for _, fn in TEST_FUNCTIONALS
            )
            en = energy_report(sol, mp)
        except Exception as exc:
            raise type(exc)(f"micro stage at eps={eps:g}: {exc}") from exc
        return ReportRow(
            eps=eps, weak_metric=wm, corrector_metric=cm, functional_metrics=fm,
            grad_u_sq=en.grad_u_sq, eps2_grad_v_sq=en.eps2_grad_v_sq,
            jump_sq=en.jump_sq, h_eps_norm=en.h_eps_norm,
        )

    if workers is None:
        workers = max(1, int(os.environ.get("HOMOGFLOW_THREADS", "1")))
    if workers > 1 and len(eps_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(micro_stage, eps_list))
    else:
        rows = [micro_stage(eps) for eps in eps_list]

    eps = [r.eps for r in rows]
    weak = [r.weak_metric for r in rows]
    corr = [r.corrector_metric for r in rows]
    report = ConvergenceReport(
        rows=rows,
        fingerprint=fingerprint,
        weak_rates=_rates(eps, weak),
        corrector_rates=_rates(eps, corr),
        weak_monotone=all(weak[k] < weak[k - 1] for k in range(1, len(weak))),
        functionals_monotone=all(
            rows[k].functional_metrics[j] < rows[k - 1].functional_metrics[j]
            for k in range(1, len(rows)) for j in range(len(TEST_FUNCTIONALS))
        ),
    )
    if strict and not report.weak_monotone:
        raise ConvergenceError(
            f"weak metric is not strictly decreasing over eps = {eps}: {weak}"
        )
    return report
