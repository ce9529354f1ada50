"""Periodic coefficient fields: permeability matrices and interface exchange.

All fields are understood as Y-periodic functions of the fast variable; the
micro solver pulls them back through y = x/eps mod 1 before evaluation.
Matrix coefficients must be symmetric positive definite and scalar ones
strictly positive wherever they are sampled -- violations raise
``CoefficientError`` at assembly time.
"""

from __future__ import annotations

import numpy as np

from .errors import CoefficientError

# Ellipticity / positivity floor used by the sampling checks.
POSITIVITY_FLOOR = 1e-12


class CoefficientField:
    """A 2x2 matrix field or scalar field on the unit cell.

    Use the constructors :meth:`identity`, :meth:`constant`,
    :meth:`constant_matrix`, :meth:`from_scalar_function` and
    :meth:`layered` rather than ``__init__`` directly.
    """

    def __init__(self, kind: str, *, matrix=None, scalar_fn=None,
                 values=None, direction=None, descriptor=None):
        self.kind = kind
        self._matrix = matrix
        self._scalar_fn = scalar_fn
        self._values = values
        self._direction = direction
        self.descriptor = descriptor or {"kind": kind}

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls) -> "CoefficientField":
        return cls.constant_matrix(np.eye(2), descriptor={"kind": "identity"})

    @classmethod
    def constant(cls, value: float) -> "CoefficientField":
        """Scalar constant; acts as value * I when used as a matrix."""
        value = float(value)
        return cls(
            "constant",
            scalar_fn=lambda pts: np.full(len(pts), value),
            descriptor={"kind": "constant", "value": value},
        )

    @classmethod
    def constant_matrix(cls, matrix, descriptor=None) -> "CoefficientField":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (2, 2):
            raise CoefficientError(f"matrix coefficient must be 2x2, got {m.shape}")
        return cls(
            "constant_matrix",
            matrix=m,
            descriptor=descriptor or {"kind": "constant_matrix", "matrix": m.tolist()},
        )

    @classmethod
    def from_scalar_function(cls, fn, descriptor=None) -> "CoefficientField":
        """Scalar field fn(y1, y2) times the identity."""
        return cls(
            "scalar",
            scalar_fn=lambda pts: np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float),
            descriptor=descriptor or {"kind": "scalar", "expr": getattr(fn, "text", repr(fn))},
        )

    @classmethod
    def layered(cls, values, direction: int = 0) -> "CoefficientField":
        """Piecewise-constant bands of equal width along one axis."""
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 1 or len(vals) < 1:
            raise CoefficientError("layered coefficient needs a 1d list of values")
        if direction not in (0, 1):
            raise CoefficientError("layer direction must be 0 or 1")

        def fn(pts):
            frac = np.mod(pts[:, direction], 1.0)
            idx = np.minimum((frac * len(vals)).astype(int), len(vals) - 1)
            return vals[idx]

        return cls(
            "layered",
            scalar_fn=fn,
            values=vals,
            direction=direction,
            descriptor={"kind": "layered", "values": vals.tolist(), "direction": direction},
        )

    # -- evaluation --------------------------------------------------------

    @property
    def is_scalar(self) -> bool:
        return self.kind != "constant_matrix"

    def scalar_at(self, pts: np.ndarray) -> np.ndarray:
        """Scalar values at points; checks strict positivity."""
        if not self.is_scalar:
            raise CoefficientError("matrix coefficient used where a scalar is required")
        vals = self._scalar_fn(np.atleast_2d(pts))
        if np.any(vals < POSITIVITY_FLOOR):
            raise CoefficientError(
                f"scalar coefficient not positive (min {vals.min():g}) at sampled points"
            )
        return vals

    def matrix_at(self, pts: np.ndarray) -> np.ndarray:
        """(n, 2, 2) matrices at points; checks symmetry and ellipticity."""
        pts = np.atleast_2d(pts)
        if self.kind == "constant_matrix":
            m = self._matrix
            if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.abs(m).max()):
                raise CoefficientError("matrix coefficient must be symmetric")
            lam_min = 0.5 * (m[0, 0] + m[1, 1]) - np.hypot(0.5 * (m[0, 0] - m[1, 1]), m[0, 1])
            if lam_min < POSITIVITY_FLOOR:
                raise CoefficientError(
                    f"matrix coefficient not positive definite (min eig {lam_min:g})"
                )
            return np.broadcast_to(m, (len(pts), 2, 2))
        vals = self.scalar_at(pts)
        out = np.zeros((len(pts), 2, 2))
        out[:, 0, 0] = vals
        out[:, 1, 1] = vals
        return out

    def pullback(self, m: int) -> "PeriodicPullback":
        """Field evaluated at the fast variable y = x * m mod 1."""
        return PeriodicPullback(self, m)

    def __repr__(self):
        return f"CoefficientField({self.descriptor})"


class PeriodicPullback:
    """Wraps a unit-cell field as a function of the slow variable x."""

    def __init__(self, base: CoefficientField, m: int):
        self.base = base
        self.m = int(m)
        self.descriptor = {"pullback": base.descriptor, "m": self.m}

    @property
    def is_scalar(self) -> bool:
        return self.base.is_scalar

    def _fast(self, pts: np.ndarray) -> np.ndarray:
        return np.mod(np.atleast_2d(pts) * self.m, 1.0)

    def scalar_at(self, pts: np.ndarray) -> np.ndarray:
        return self.base.scalar_at(self._fast(pts))

    def matrix_at(self, pts: np.ndarray) -> np.ndarray:
        return self.base.matrix_at(self._fast(pts))
