"""Command-line pipeline: cell, macro, micro, study."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .cell import HomogenizedData, compute_cell_data
from .config import RunConfig, parse_config
from .convergence import run_study
from .errors import DependencyError, HomogflowError
from .fem import grad_energy
from .coefficients import CoefficientField
from .macro import MacroProblem, build_macro_mesh, compose_limit_pressure, solve_macro
from .micro import MicroProblem, collapse_to_nodes, energy_report, solve_micro
from .vtkio import write_vtk

HOMOGENIZED_JSON = "homogenized.json"


def _parse_eps(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _out_dir(config: RunConfig, override: str | None) -> Path:
    out = Path(override) if override else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_cell(config: RunConfig, out: Path) -> None:
    hom, sol = compute_cell_data(
        config.geometry, config.coeff_a, config.coeff_b, config.coeff_h,
        rel_tol=config.rel_tol, provenance=config.provenance(),
    )
    (out / HOMOGENIZED_JSON).write_text(hom.to_json() + "\n")
    point_data = {
        "omega1": sol.omega[0].values,
        "omega2": sol.omega[1].values,
    }
    if sol.alpha is not None:
        point_data["alpha"] = sol.alpha.values
    write_vtk(out / "cell_solution.vtk", sol.mesh, point_data=point_data,
              title="unit-cell solution")
    print(f"wrote {out / HOMOGENIZED_JSON} and {out / 'cell_solution.vtk'}")


def _load_homogenized(out: Path) -> HomogenizedData:
    path = out / HOMOGENIZED_JSON
    if not path.exists():
        raise DependencyError(
            f"missing {path}; run the 'cell' command first"
        )
    return HomogenizedData.from_json(path.read_text())


def cmd_macro(config: RunConfig, out: Path) -> None:
    hom = _load_homogenized(out)
    mesh = build_macro_mesh(config.macro_resolution)
    problem = MacroProblem.from_homogenized(hom, config.f1, config.f2)
    u = solve_macro(problem, mesh, rel_tol=config.rel_tol)
    u_limit = compose_limit_pressure(u, problem)
    g = u_limit.values - u.values
    write_vtk(out / "macro_solution.vtk", mesh,
              point_data={"u": u.values, "G": g, "U": u_limit.values},
              title="macro solution")
    coeff = CoefficientField.constant_matrix(problem.tensor)
    lines = ["field,min,max,mean,energy"]
    for name, vals in (("u", u.values), ("G", g), ("U", u_limit.values)):
        energy = grad_energy(mesh, vals, coeff=coeff)
        lines.append(f"{name},{vals.min()!r},{vals.max()!r},{vals.mean()!r},{energy!r}")
    (out / "macro_summary.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'macro_solution.vtk'} and {out / 'macro_summary.csv'}")


def cmd_micro(config: RunConfig, out: Path, eps: float) -> None:
    m = int(round(1.0 / eps))
    problem = MicroProblem.build(config.geometry, eps, config.coeff_a,
                                 config.coeff_b, config.coeff_h,
                                 f1=config.f1, f2=config.f2)
    sol = solve_micro(problem, rel_tol=config.rel_tol, max_iter=config.max_iter)
    en = energy_report(sol, problem)
    write_vtk(out / f"micro_eps_{m}.vtk", sol.mesh,
              point_data={
                  "u": sol.u_eps.values,
                  "v": sol.v_eps.values,
                  "w": collapse_to_nodes(sol),
              },
              title=f"micro solution eps=1/{m}")
    lines = [
        "eps,grad_u_sq,eps2_grad_v_sq,jump_sq,h_eps_norm",
        f"{eps!r},{en.grad_u_sq!r},{en.eps2_grad_v_sq!r},{en.jump_sq!r},{en.h_eps_norm!r}",
    ]
    (out / f"micro_energy_{m}.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / f'micro_eps_{m}.vtk'} and {out / f'micro_energy_{m}.csv'}")


def cmd_study(config: RunConfig, out: Path) -> None:
    workers = max(1, int(os.environ.get("HOMOGFLOW_THREADS", "1")))
    report = run_study(config, workers=workers, strict=False,
                       progress=lambda msg: print(msg, flush=True))
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.dat").write_text(report.to_dat())
    for row in report.rows:
        print(f"eps={row.eps:g}  weak={row.weak_metric:.6e}  "
              f"corrector={row.corrector_metric:.6e}  H_eps={row.h_eps_norm:.6e}")
    if not report.weak_monotone:
        print("warning: weak metric is not strictly decreasing", file=sys.stderr)
    print(f"wrote {out / 'report.csv'} and {out / 'report.dat'}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homogflow",
        description="Effective Darcy model of a periodic fissured medium "
                    "with imperfect interfacial contact, plus eps-sweep "
                    "verification of the homogenized limit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("cell", "solve the unit-cell problems and write homogenized data"),
        ("macro", "solve the macro problem (requires cell output)"),
        ("micro", "solve the eps-resolved micro model for one eps"),
        ("study", "run the full eps-sweep convergence study"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory override")
        if name == "micro":
            p.add_argument("--eps", required=True,
                           help="cell size as 1/m (e.g. 1/8 or 0.125)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        out = _out_dir(config, args.out)
        if args.command == "cell":
            cmd_cell(config, out)
        elif args.command == "macro":
            cmd_macro(config, out)
        elif args.command == "micro":
            eps = _parse_eps(args.eps)
            m = round(1.0 / eps) if eps > 0 else 0
            if m < 2 or abs(eps * m - 1.0) > 1e-9:
                raise ValueError(f"--eps must be 1/m with integer m >= 2, got {args.eps}")
            cmd_micro(config, out, eps)
        elif args.command == "study":
            cmd_study(config, out)
    except (HomogflowError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
