"""Measured consistency orders of the gap-tooth coupling.

A macroscale sinusoid is placed on a periodic lattice, each patch is filled
with the field interpolated from the macroscale values, and the centre-slot
time derivative is compared with a reference. Repeating over a sequence of
macroscale spacings gives the order in ``D`` of the coupling error.

The default reference applies the same microscale stencils to the exact
sinusoid sampled on each patch's own lattice, so the micro discretisation
error cancels and only the coupling error remains.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingOrder, CouplingScheme, own_field_weights, pad_macro, stencil_weights
from .grid import PatchLattice, Topology, build_lattice
from .models import (
    DispersiveDiffusive,
    LinearDispersive,
    NonlinearAdvective,
    PatchFields,
    ProbeParams,
    WaveSystem,
)
from .solver import GHOST_LAYERS, GapToothSystem

SLOPE_TOLERANCE = 0.3

PROBES: dict[str, WaveSystem] = {
    "wave": LinearDispersive(ProbeParams()),
    "dispersive": LinearDispersive(ProbeParams(c11=1.0, c21=1.0)),
    "diffusive": DispersiveDiffusive(ProbeParams(c3=1.0, c4=1.0)),
    "nonlinear": NonlinearAdvective(ProbeParams(c5=0.01)),
}

# (probe, order) -> (expected slope, "equal" | "at_least")
EXPECTED: dict[tuple[str, str], tuple[float, str]] = {
    ("wave", "linear"): (2.0, "equal"),
    ("wave", "cubic"): (4.0, "equal"),
    ("wave", "quintic"): (6.0, "equal"),
    ("dispersive", "cubic"): (4.0, "equal"),
    ("diffusive", "cubic"): (4.0, "equal"),
    ("nonlinear", "cubic"): (2.0, "at_least"),
}

DEFAULT_PATCH_COUNTS = (10, 20, 40, 80, 160)


class ConsistencyError(ValueError):
    pass


def _fields(amplitude: float, k: float):
    """Depth and velocity profiles of the probe wave."""

    def h(x):
        return amplitude * np.sin(k * x)

    def u(x):
        return amplitude * np.cos(k * x)

    return h, u


def interpolated_state(lattice: PatchLattice, scheme: CouplingScheme, macro: np.ndarray) -> np.ndarray:
    """Fill every patch from macroscale values alone.

    Conjugate-field slots take the coupling interpolant; own-field slots take
    the same-parity interpolant of one degree below the coupling truncation.
    """
    order = CouplingOrder(scheme.order)
    own_degree = order.truncation - 1
    width = max(order.reach, own_degree) + 1
    padded = pad_macro(macro, width, lattice.topology, None)
    m, half = lattice.patch_count, lattice.half_width
    base = np.arange(m) + width
    D, d = lattice.macro_step, lattice.micro_step
    out = np.empty((m, lattice.interior_points))
    for col, i in enumerate(lattice.interior_offsets):
        own_off, own_w = own_field_weights(own_degree, i * d / D)
        own = sum(w * padded[base + o] for o, w in zip(own_off, own_w))
        cj_off, cj_w = stencil_weights(scheme, 1, i / half)
        conj = sum(w * padded[base + o] for o, w in zip(cj_off, cj_w))
        own_slot = (i % 2) == 0
        out[:, col] = np.where(own_slot, own, conj)
    return out.reshape(-1)


def exact_patch_fields(gts: GapToothSystem, h, u) -> PatchFields:
    """The probe profiles sampled exactly at every slot of every patch, ghosts included."""
    lat = gts.lattice
    template = gts.build_fields(np.zeros(lat.state_size))
    cols = np.arange(template.values.shape[1]) - lat.half_width - GHOST_LAYERS
    x = lat.centres[:, None] + cols[None, :] * lat.micro_step
    values = np.where(template.depth_mask, h(x), u(x))
    return PatchFields(values, template.depth_mask, template.lo, template.hi)


def continuum_rhs(system: WaveSystem, x: np.ndarray, is_depth: np.ndarray, amplitude: float, k: float) -> np.ndarray:
    """Exact PDE right-hand side of a probe at points ``x``."""
    p: ProbeParams = system.params
    a = amplitude
    s, c = np.sin(k * x), np.cos(k * x)
    h, u = a * s, a * c
    hx, hxx, hxxx = a * k * c, -a * k * k * s, -a * k**3 * c
    ux, uxx, uxxx = -a * k * s, -a * k * k * c, a * k**3 * s
    dh = p.c1 * h - ux - p.c11 * uxxx + p.c3 * hxx
    du = p.c2 * u - hx - p.c21 * hxxx + p.c4 * uxx - p.c5 * u * ux
    if isinstance(system, NonlinearAdvective):
        dh = -ux
        du = -hx - p.c5 * u * ux
    elif isinstance(system, LinearDispersive) and not isinstance(system, DispersiveDiffusive):
        dh = dh - p.c3 * hxx
        du = du - p.c4 * uxx
    return np.where(is_depth, dh, du)


def macroscale_residual(
    system: WaveSystem,
    scheme: CouplingScheme,
    lattice: PatchLattice,
    k: float = 1.0,
    amplitude: float = 1.0,
    reference: str = "discrete",
) -> float:
    """Max over patches of the centre-slot derivative error of the gap-tooth system."""
    if lattice.topology is not Topology.PERIODIC:
        raise ConsistencyError("consistency probes need a periodic lattice")
    L = lattice.domain_length
    cycles = k * L / (2 * math.pi)
    if abs(cycles - round(cycles)) > 1e-9:
        raise ConsistencyError(f"wavenumber {k} is not periodic on a domain of length {L}")
    h, u = _fields(amplitude, k)
    X = lattice.centres
    centre_depth = np.array([lattice.centre_field(j).value == "h" for j in range(1, lattice.patch_count + 1)])
    macro = np.where(centre_depth, h(X), u(X))
    gts = GapToothSystem(lattice, scheme, system)
    y = interpolated_state(lattice, scheme, macro)
    got = gts(0.0, y).reshape(lattice.patch_count, -1)[:, lattice.centre_column]
    if reference == "discrete":
        exact = system.rhs(exact_patch_fields(gts, h, u), lattice.micro_step)[:, lattice.centre_column]
    elif reference == "continuum":
        exact = continuum_rhs(system, X, centre_depth, amplitude, k)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    return float(np.max(np.abs(got - exact)))


@dataclass
class ConvergenceReport:
    system: str
    order: str
    macro_steps: np.ndarray
    residuals: np.ndarray
    slope: float
    fit_residual: float
    expected: float | None = None
    bound: str = "equal"
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        if self.expected is None:
            return None
        if self.bound == "at_least":
            return self.slope >= self.expected - SLOPE_TOLERANCE
        return abs(self.slope - self.expected) <= SLOPE_TOLERANCE

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["system", "order", "D", "residual", "slope"])
        for D, res in zip(self.macro_steps, self.residuals):
            w.writerow([self.system, self.order, f"{D:.17g}", f"{res:.17g}", f"{self.slope:.17g}"])
        return buf.getvalue()


def fit_slope(macro_steps, residuals, points: int = 4) -> tuple[float, float]:
    """Least-squares slope of log residual against log D over the last ``points`` entries."""
    D = np.asarray(macro_steps, dtype=float)[-points:]
    r = np.asarray(residuals, dtype=float)[-points:]
    if np.any(r <= 0):
        return math.nan, math.nan
    coef, res, *_ = np.polyfit(np.log(D), np.log(r), 1, full=True)
    return float(coef[0]), float(math.sqrt(res[0] / points)) if res.size else 0.0


def run_convergence(
    system: str | WaveSystem,
    order: str | CouplingOrder,
    k: float = 1.0,
    patch_counts=DEFAULT_PATCH_COUNTS,
    n: int = 9,
    r: float = 1 / 6,
    L: float = 2 * math.pi,
    amplitude: float | None = None,
    reference: str = "discrete",
) -> ConvergenceReport:
    """Residuals over a refinement sequence and the fitted order."""
    name = system if isinstance(system, str) else getattr(system, "name", type(system).__name__)
    probe = PROBES[system] if isinstance(system, str) else system
    order = CouplingOrder(order)
    counts = list(patch_counts)
    if len(counts) < 4:
        raise ConsistencyError(f"need at least 4 refinement levels, got {len(counts)}")
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ConsistencyError("patch counts must increase (macro steps decrease)")
    if counts[-1] / counts[-4] < 8 - 1e-12:
        raise ConsistencyError("the fitted levels must span a factor of at least 8 in D")
    if amplitude is None:
        amplitude = 0.1 if isinstance(probe, NonlinearAdvective) else 1.0
    steps, residuals = [], []
    for m in counts:
        lat = build_lattice(L, m, n, r, Topology.PERIODIC)
        scheme = CouplingScheme(order, r)
        steps.append(lat.macro_step)
        residuals.append(macroscale_residual(probe, scheme, lat, k, amplitude, reference))
    slope, fit_res = fit_slope(steps, residuals)
    expected, bound = EXPECTED.get((name, order.value), (None, "equal"))
    return ConvergenceReport(
        name, order.value, np.array(steps), np.array(residuals), slope, fit_res, expected, bound,
        {"k": k, "n": n, "r": r, "L": L, "amplitude": amplitude, "reference": reference},
    )
