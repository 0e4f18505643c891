"""Microscale right-hand sides on staggered micro lattices.

Every model works on a :class:`PatchFields` block: rows are patches (or the
single row of a whole-domain lattice), columns are micro slots including
edge and ghost slots. Derivatives are returned for the columns ``lo:hi``.
Each slot holds the field dictated by ``depth_mask``; a model evaluates the
depth equation at depth slots and the velocity equation at velocity slots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

GRAVITY_COEFF = 0.985
DRAG_COEFF = 0.003
ADVECTION_COEFF = 1.045
DISPERSION_COEFF = 0.26


class DepthError(FloatingPointError):
    """Non-positive depth at a slot where the model divides by depth."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


@dataclass
class PatchFields:
    values: np.ndarray
    depth_mask: np.ndarray
    lo: int
    hi: int

    def shift(self, s: int) -> np.ndarray:
        return self.values[:, self.lo + s : self.hi + s]

    @property
    def is_depth(self) -> np.ndarray:
        return self.depth_mask[:, self.lo : self.hi]


@dataclass(frozen=True)
class SmagorinskiParams:
    tan_theta: float = 0.001
    gravity_coeff: float = GRAVITY_COEFF
    drag_coeff: float = DRAG_COEFF
    advection_coeff: float = ADVECTION_COEFF
    dispersion_coeff: float = DISPERSION_COEFF
    depth_floor: float | None = None

    @property
    def equilibrium_velocity(self) -> float:
        """Uniform speed at which bed drag balances the slope forcing at unit depth."""
        return float(np.sqrt(self.gravity_coeff * self.tan_theta / self.drag_coeff))


@dataclass(frozen=True)
class ProbeParams:
    c1: float = 0.0
    c2: float = 0.0
    c11: float = 0.0
    c21: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0


def _first(f: PatchFields, d: float) -> np.ndarray:
    return (f.shift(1) - f.shift(-1)) / (2 * d)


def _third(f: PatchFields, d: float) -> np.ndarray:
    return (f.shift(3) - 3 * f.shift(1) + 3 * f.shift(-1) - f.shift(-3)) / (8 * d**3)


def _second_same(f: PatchFields, d: float) -> np.ndarray:
    return (f.shift(2) - 2 * f.shift(0) + f.shift(-2)) / (4 * d * d)


def smagorinski_rhs(fields: PatchFields, params: SmagorinskiParams, d: float) -> np.ndarray:
    """Turbulent shallow-water stencils in flux form.

    At velocity slots the depth is taken as the mean of the two adjacent
    depth slots.
    """
    h0 = fields.shift(0)
    p1, m1 = fields.shift(1), fields.shift(-1)
    p2, m2 = fields.shift(2), fields.shift(-2)
    depth = fields.is_depth

    dh = -((p2 + h0) * p1 - (m2 + h0) * m1) / (4 * d)

    u = h0
    hbar = 0.5 * (p1 + m1)
    if params.depth_floor is not None:
        hbar = np.maximum(hbar, params.depth_floor)
    bad = ~depth & ~(hbar > 0)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DepthError(
            f"non-positive depth {hbar[row, col]:.6g} next to velocity slot (row {row}, column {col + fields.lo})",
            int(row),
            int(col + fields.lo),
        )
    hsafe = np.where(depth, 1.0, hbar)
    au = np.abs(u)
    du = (
        params.gravity_coeff * (params.tan_theta - (p1 - m1) / (2 * d))
        - params.drag_coeff * u * au / hsafe
        - params.advection_coeff * u * (p2 - m2) / (4 * d)
        + params.dispersion_coeff * hsafe * au * (p2 - 2 * u + m2) / (4 * d * d)
    )
    return np.where(depth, dh, du)


def linear_dispersive_rhs(fields: PatchFields, params: ProbeParams, d: float) -> np.ndarray:
    """``h_t = c1 h - u_x - c11 u_xxx``, ``u_t = c2 u - h_x - c21 h_xxx``."""
    own = fields.shift(0)
    grad = _first(fields, d)
    depth = fields.is_depth
    out = -grad + np.where(depth, params.c1, params.c2) * own
    if params.c11 or params.c21:
        out -= np.where(depth, params.c11, params.c21) * _third(fields, d)
    return out


def dispersive_diffusive_rhs(fields: PatchFields, params: ProbeParams, d: float) -> np.ndarray:
    """Dispersive waves with own-field diffusion ``c3 h_xx`` and ``c4 u_xx``."""
    out = linear_dispersive_rhs(fields, params, d)
    if params.c3 or params.c4:
        out += np.where(fields.is_depth, params.c3, params.c4) * _second_same(fields, d)
    return out


def nonlinear_advective_rhs(fields: PatchFields, params: ProbeParams, d: float) -> np.ndarray:
    """``h_t = -u_x``, ``u_t = -h_x - c5 u u_x``."""
    out = -_first(fields, d)
    if params.c5:
        u = fields.shift(0)
        adv = params.c5 * u * (fields.shift(2) - fields.shift(-2)) / (4 * d)
        out = out - np.where(fields.is_depth, 0.0, adv)
    return out


class WaveSystem(Protocol):
    reach: int

    def rhs(self, fields: PatchFields, d: float, t: float = 0.0) -> np.ndarray: ...


@dataclass(frozen=True)
class Smagorinski:
    params: SmagorinskiParams = SmagorinskiParams()
    reach: int = 2
    name: str = "smagorinski"

    def rhs(self, fields: PatchFields, d: float, t: float = 0.0) -> np.ndarray:
        return smagorinski_rhs(fields, self.params, d)


@dataclass(frozen=True)
class LinearDispersive:
    params: ProbeParams = ProbeParams()
    reach: int = 3
    name: str = "dispersive"

    def rhs(self, fields: PatchFields, d: float, t: float = 0.0) -> np.ndarray:
        return linear_dispersive_rhs(fields, self.params, d)


@dataclass(frozen=True)
class DispersiveDiffusive:
    params: ProbeParams = ProbeParams()
    reach: int = 3
    name: str = "diffusive"

    def rhs(self, fields: PatchFields, d: float, t: float = 0.0) -> np.ndarray:
        return dispersive_diffusive_rhs(fields, self.params, d)


@dataclass(frozen=True)
class NonlinearAdvective:
    params: ProbeParams = ProbeParams()
    reach: int = 2
    name: str = "nonlinear"

    def rhs(self, fields: PatchFields, d: float, t: float = 0.0) -> np.ndarray:
        return nonlinear_advective_rhs(fields, self.params, d)
