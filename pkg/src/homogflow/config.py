"""Run configuration: strict JSON parsing, validation, provenance."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .coefficients import CoefficientField
from .errors import ConfigError
from .expressions import compile_expression
from .geometry import CellGeometry, Disk, SquareBlock

DEFAULT_CELL_RESOLUTION = 16
DEFAULT_MACRO_RESOLUTION = 64
DEFAULT_EPS_LIST = (0.25, 0.125, 0.0625)
DEFAULT_REL_TOL = 1e-10

_TOP_KEYS = {"geometry", "coefficients", "sources", "cell_resolution",
             "macro_resolution", "eps_list", "output_dir", "solver"}
_GEOMETRY_KEYS = {"block"}
_BLOCK_KEYS = {"shape", "center", "radius", "half_width"}
_COEFF_SECTION_KEYS = {"A", "B", "h"}
_COEFF_KEYS = {"kind", "value", "matrix", "expr", "values", "direction"}
_SOURCE_KEYS = {"f1", "f2"}
_SOLVER_KEYS = {"rel_tol", "max_iter"}


@dataclass
class RunConfig:
    """Validated pipeline configuration."""

    geometry: CellGeometry
    coeff_a: CoefficientField
    coeff_b: CoefficientField
    coeff_h: CoefficientField
    f1_expr: str
    f2_expr: str
    macro_resolution: int
    eps_list: tuple[float, ...]
    output_dir: str
    rel_tol: float
    max_iter: int | None

    def __post_init__(self):
        self.f1 = compile_expression(self.f1_expr, ("x1", "x2"))
        self.f2 = compile_expression(self.f2_expr, ("x1", "x2"))

    def provenance(self) -> dict:
        doc = {
            "geometry": self.geometry.to_dict(),
            "coefficients": {
                "A": self.coeff_a.descriptor,
                "B": self.coeff_b.descriptor,
                "h": self.coeff_h.descriptor,
            },
            "cell_resolution": self.geometry.resolution,
        }
        doc["fingerprint"] = fingerprint_of(doc)
        return doc


def fingerprint_of(doc: dict) -> str:
    payload = {k: v for k, v in doc.items() if k != "fingerprint"}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key {sorted(unknown)[0]!r} in {where}", field=where
        )


def _no_duplicates(pairs):
    seen = set()
    out = {}
    for k, v in pairs:
        if k in seen:
            raise ConfigError(f"duplicate key {k!r} in configuration", field=k)
        seen.add(k)
        out[k] = v
    return out


def _geometry_from(doc: dict, resolution: int) -> CellGeometry:
    if not isinstance(doc, dict):
        raise ConfigError("geometry must be an object", field="geometry")
    _reject_unknown(doc, _GEOMETRY_KEYS, "geometry")
    if "block" not in doc:
        raise ConfigError("geometry.block is required (may be null)", field="geometry.block")
    blk = doc["block"]
    if blk is None:
        return CellGeometry(block=None, resolution=resolution)
    _reject_unknown(blk, _BLOCK_KEYS, "geometry.block")
    shape = blk.get("shape")
    center = tuple(blk.get("center", (0.5, 0.5)))
    if len(center) != 2:
        raise ConfigError("block center must have two coordinates", field="geometry.block.center")
    if shape == "disk":
        if "radius" not in blk:
            raise ConfigError("disk block needs a radius", field="geometry.block.radius")
        block = Disk(center=center, radius=float(blk["radius"]))
    elif shape == "square":
        if "half_width" not in blk:
            raise ConfigError("square block needs a half_width", field="geometry.block.half_width")
        block = SquareBlock(center=center, half_width=float(blk["half_width"]))
    else:
        raise ConfigError(f"unknown block shape {shape!r}", field="geometry.block.shape")
    return CellGeometry(block=block, resolution=resolution)


def _coefficient_from(doc, name: str, scalar_only: bool = False) -> CoefficientField:
    if doc is None:
        return CoefficientField.constant(1.0) if scalar_only else CoefficientField.identity()
    if not isinstance(doc, dict):
        raise ConfigError(f"coefficient {name} must be an object", field=f"coefficients.{name}")
    _reject_unknown(doc, _COEFF_KEYS, f"coefficients.{name}")
    kind = doc.get("kind")
    where = f"coefficients.{name}"
    try:
        if kind == "identity":
            out = CoefficientField.identity()
        elif kind == "constant":
            out = CoefficientField.constant(float(doc["value"]))
        elif kind == "constant_matrix":
            out = CoefficientField.constant_matrix(doc["matrix"])
        elif kind == "scalar_expr":
            expr = compile_expression(str(doc["expr"]), ("y1", "y2"))
            out = CoefficientField.from_scalar_function(
                expr, descriptor={"kind": "scalar_expr", "expr": expr.text}
            )
        elif kind == "layered":
            out = CoefficientField.layered(doc["values"], int(doc.get("direction", 0)))
        else:
            raise ConfigError(f"unknown coefficient kind {kind!r}", field=where)
    except KeyError as exc:
        raise ConfigError(f"coefficient {name} is missing {exc.args[0]!r}", field=where) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"coefficient {name}: {exc}", field=where) from None
    if scalar_only and not out.is_scalar:
        raise ConfigError(f"coefficient {name} must be scalar", field=where)
    return out


def config_from_dict(doc: dict) -> RunConfig:
    """Validate a parsed configuration document (strict keys, defaults)."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be an object")
    _reject_unknown(doc, _TOP_KEYS, "configuration")
    if "geometry" not in doc:
        raise ConfigError("configuration needs a geometry section", field="geometry")

    cell_resolution = int(doc.get("cell_resolution", DEFAULT_CELL_RESOLUTION))
    macro_resolution = int(doc.get("macro_resolution", DEFAULT_MACRO_RESOLUTION))
    for label, res in (("cell_resolution", cell_resolution),
                       ("macro_resolution", macro_resolution)):
        if res < 8:
            raise ConfigError(f"{label} must be >= 8, got {res}", field=label)

    geometry = _geometry_from(doc["geometry"], cell_resolution)

    coeffs = doc.get("coefficients", {})
    if not isinstance(coeffs, dict):
        raise ConfigError("coefficients must be an object", field="coefficients")
    _reject_unknown(coeffs, _COEFF_SECTION_KEYS, "coefficients")
    coeff_a = _coefficient_from(coeffs.get("A"), "A")
    coeff_b = _coefficient_from(coeffs.get("B"), "B")
    coeff_h = _coefficient_from(coeffs.get("h"), "h", scalar_only=True)

    sources = doc.get("sources", {})
    if not isinstance(sources, dict):
        raise ConfigError("sources must be an object", field="sources")
    _reject_unknown(sources, _SOURCE_KEYS, "sources")
    f1_expr = str(sources.get("f1", "1"))
    f2_expr = str(sources.get("f2", "1"))
    for label, expr in (("f1", f1_expr), ("f2", f2_expr)):
        try:
            compile_expression(expr, ("x1", "x2"))
        except ValueError as exc:
            raise ConfigError(f"sources.{label}: {exc}", field=f"sources.{label}") from None

    eps_list = doc.get("eps_list", list(DEFAULT_EPS_LIST))
    if not isinstance(eps_list, (list, tuple)) or not eps_list:
        raise ConfigError("eps_list must be a non-empty list", field="eps_list")
    validated = []
    for eps in eps_list:
        eps = float(eps)
        m = round(1.0 / eps) if eps > 0 else 0
        if m < 2 or abs(eps * m - 1.0) > 1e-9:
            raise ConfigError(
                f"eps_list entries must be reciprocals of integers >= 2, got {eps}",
                field="eps_list",
            )
        if macro_resolution % m != 0:
            raise ConfigError(
                f"macro_resolution {macro_resolution} must be a multiple of 1/eps = {m}",
                field="macro_resolution",
            )
        validated.append(eps)
    if len(set(validated)) != len(validated):
        raise ConfigError("eps_list entries must be distinct", field="eps_list")

    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("solver must be an object", field="solver")
    _reject_unknown(solver, _SOLVER_KEYS, "solver")
    rel_tol = float(solver.get("rel_tol", DEFAULT_REL_TOL))
    if not (0.0 < rel_tol <= 1e-4):
        raise ConfigError(f"solver.rel_tol must be in (0, 1e-4], got {rel_tol}",
                          field="solver.rel_tol")
    max_iter = solver.get("max_iter")
    if max_iter is not None:
        max_iter = int(max_iter)
        if max_iter < 1:
            raise ConfigError("solver.max_iter must be positive", field="solver.max_iter")

    return RunConfig(
        geometry=geometry,
        coeff_a=coeff_a,
        coeff_b=coeff_b,
        coeff_h=coeff_h,
        f1_expr=f1_expr,
        f2_expr=f2_expr,
        macro_resolution=macro_resolution,
        eps_list=tuple(sorted(validated, reverse=True)),
        output_dir=str(doc.get("output_dir", "out")),
        rel_tol=rel_tol,
        max_iter=max_iter,
    )


def parse_config(path) -> RunConfig:
    """Load and validate a JSON configuration file.

    Raises
    ------
    ConfigError
        On JSON syntax errors (with line number), unknown or duplicate
        keys, and any field validation failure.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        doc = json.loads(path.read_text(), object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(doc)
