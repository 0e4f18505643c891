"""Experiment recipes: periodic relaxation, spectrum, dam break and timing.

Outputs are plain CSV. Snapshot files carry their configuration as ``#``
header lines followed by the columns ``x, patch, field, value``; wall-clock
times go to a separate metadata file so snapshots stay byte-reproducible.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .consistency import run_convergence
from .coupling import CouplingScheme, Fictitious
from .grid import PatchLattice, Topology, build_lattice
from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate
from .models import DepthError, Smagorinski, SmagorinskiParams
from .solver import (
    BoundaryCondition,
    BoundarySpec,
    FullDomainSystem,
    GapToothSystem,
    GhostClosure,
)
from .spectrum import SpectrumReport, analyse, equilibrium_state

GAP_TOOTH = "gap_tooth"
FULL_DOMAIN = "full_domain"
IN_PATCH = "in_patch"
BETWEEN_PATCHES = "between_patches"


class NumericalFailure(RuntimeError):
    """A run could not be completed (depth collapse, step underflow, ...)."""


# ---- snapshots ------------------------------------------------------------------


@dataclass
class Snapshot:
    time: float
    x: np.ndarray
    patch: np.ndarray
    field: np.ndarray
    value: np.ndarray
    metadata: dict = dataclasses.field(default_factory=dict)

    @property
    def depth(self) -> tuple[np.ndarray, np.ndarray]:
        sel = self.field == "h"
        return self.x[sel], self.value[sel]

    @property
    def velocity(self) -> tuple[np.ndarray, np.ndarray]:
        sel = self.field == "u"
        return self.x[sel], self.value[sel]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}={value}\n")
        buf.write(f"# time={self.time!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "patch", "field", "value"])
        for x, p, f, v in zip(self.x, self.patch, self.field, self.value):
            w.writerow([f"{x:.17g}", int(p), f, f"{v:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Snapshot":
        meta: dict = {}
        lines = text.splitlines()
        body = [ln for ln in lines if not ln.startswith("#")]
        for ln in lines:
            if ln.startswith("#"):
                key, _, value = ln[1:].strip().partition("=")
                meta[key] = value
        t = float(meta.pop("time"))
        rows = list(csv.reader(body))[1:]
        x = np.array([float(r[0]) for r in rows])
        patch = np.array([int(r[1]) for r in rows])
        fld = np.array([r[2] for r in rows])
        value = np.array([float(r[3]) for r in rows])
        return cls(t, x, patch, fld, value, meta)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path


def gap_tooth_snapshot(lattice: PatchLattice, state: np.ndarray, t: float, metadata: dict | None = None) -> Snapshot:
    m, n = lattice.patch_count, lattice.interior_points
    x = lattice.positions().reshape(-1)
    patch = np.repeat(np.arange(1, m + 1), n)
    fld = np.where(lattice.depth_mask().reshape(-1), "h", "u")
    return Snapshot(float(t), x, patch, fld, np.asarray(state, dtype=float).copy(), dict(metadata or {}))


def full_domain_snapshot(system: FullDomainSystem, state: np.ndarray, t: float, metadata: dict | None = None) -> Snapshot:
    x = system.positions
    fld = np.where(system.depth_mask, "h", "u")
    return Snapshot(float(t), x, np.zeros(x.size, dtype=int), fld, np.asarray(state, dtype=float).copy(), dict(metadata or {}))


def snapshot_filename(prefix: str, t: float) -> str:
    return f"{prefix}_t{t:g}.csv"


def write_run_metadata(path: Path, info: dict) -> Path:
    """Non-reproducible run facts (wall-clock time, integrator statistics)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(info, indent=2, sort_keys=True, default=str) + "\n")
    return path


def load_overlay(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Read an external ``x, h`` CSV (for example digitised experimental depths)."""
    xs, hs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(ln for ln in fh if not ln.startswith("#")):
            if not row:
                continue
            try:
                xs.append(float(row[0]))
                hs.append(float(row[1]))
            except ValueError:
                continue  # header line
    return np.array(xs), np.array(hs)


# ---- diagnostics ------------------------------------------------------------------


def water_area(snapshot: Snapshot, lattice: PatchLattice | None = None, mode: str = GAP_TOOTH) -> float:
    """Area under the depth profile.

    Gap-tooth: each patch contributes the mean of its depth values times
    ``D``. Full domain: each depth slot contributes ``2d`` (the spacing of
    depth slots), the midpoint-trapezoid rule on the staggered lattice.
    """
    sel = snapshot.field == "h"
    x, h = snapshot.x[sel], snapshot.value[sel]
    if mode == GAP_TOOTH:
        if lattice is None:
            raise ValueError("gap-tooth area needs the lattice")
        patches = snapshot.patch[sel]
        total = 0.0
        for j in range(1, lattice.patch_count + 1):
            total += h[patches == j].mean() * lattice.macro_step
        return float(total)
    if mode == FULL_DOMAIN:
        if x.size < 2:
            raise ValueError("need at least two depth samples")
        return float(h.sum() * (x[1] - x[0]))
    raise ValueError(f"unknown mode {mode!r}")


BORE_LEVEL = 0.25


def bore_position(snapshot: Snapshot, upstream: float, downstream: float, level: float = BORE_LEVEL) -> float:
    """Rightmost crossing of ``downstream + level*(upstream - downstream)``.

    Scans from the right and interpolates linearly between depth samples.
    The default quarter level sits below the depth plateau behind the bore;
    ``level=0.5`` (the mid depth) lies above that plateau for a tail-water
    ratio of 0.45 and then tracks the upstream rarefaction instead.
    """
    x, h = snapshot.depth
    order = np.argsort(x, kind="stable")
    x, h = x[order], h[order]
    target = downstream + level * (upstream - downstream)
    for k in range(x.size - 1, -1, -1):
        if h[k] >= target:
            if k == x.size - 1:
                raise ValueError("depth at the right end is above the crossing level: no bore crossing")
            if h[k] == target:
                return float(x[k])
            frac = (h[k] - target) / (h[k] - h[k + 1])
            return float(x[k] + frac * (x[k + 1] - x[k]))
    raise ValueError("depth never reaches the crossing level: no bore crossing")


def roughness(lattice: PatchLattice, state: np.ndarray) -> float:
    """RMS of same-field second differences inside each patch."""
    s = np.asarray(state).reshape(lattice.patch_count, lattice.interior_points)
    second = s[:, 4:] - 2 * s[:, 2:-2] + s[:, :-4]
    return float(np.sqrt(np.mean(second**2)))


def macro_wave(lattice: PatchLattice, state: np.ndarray, k: int = 1) -> tuple[float, float]:
    """Amplitude and crest position of the wavenumber-``k`` depth wave at odd patch centres."""
    s = np.asarray(state).reshape(lattice.patch_count, lattice.interior_points)
    H = s[0::2, lattice.centre_column]
    X = lattice.centres[0::2]
    dev = H - H.mean()
    a = 2 * np.mean(dev * np.sin(k * X))
    b = 2 * np.mean(dev * np.cos(k * X))
    crest = math.atan2(a, b) / k % (2 * math.pi / k)
    return float(math.hypot(a, b)), float(crest)


def _guarded(rhs, label: str):
    def f(t, y):
        try:
            return rhs(t, y)
        except DepthError as err:
            raise NumericalFailure(f"{label}: depth collapse at t={t:.6g}: {err}") from err

    return f


def _run(rhs, y0, times: Sequence[float], cfg: IntegratorConfig, label: str) -> Trajectory:
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] < 0:
        raise ValueError("output times must be non-negative")
    cfg = dataclasses.replace(cfg, output_times=times)
    t_end = float(times[-1])
    if t_end == 0:
        return Trajectory(times, np.array([np.asarray(y0, dtype=float)] * times.size))
    try:
        return integrate(_guarded(rhs, label), y0, (0.0, t_end), cfg)
    except IntegrationError as err:
        raise NumericalFailure(f"{label}: {err} (stiffness estimate {err.stiffness})") from err


# ---- periodic relaxation -----------------------------------------------------------


@dataclass
class RelaxationResult:
    lattice: PatchLattice
    times: np.ndarray
    states: np.ndarray
    roughness: np.ndarray
    amplitude: np.ndarray
    crest: np.ndarray
    metadata: dict
    trajectory: Trajectory

    def snapshots(self) -> list[Snapshot]:
        return [gap_tooth_snapshot(self.lattice, s, t, self.metadata) for t, s in zip(self.times, self.states)]


def run_periodic_relaxation(
    m: int = 10,
    n: int = 9,
    r: float = 1 / 6,
    tan_theta: float = 0.001,
    macro_amplitude: float = 0.2,
    noise_amplitude: float = 0.02,
    seed: int = 0,
    times: Sequence[float] = (0.0, 2.0, 4.0),
    order: str = "cubic",
    ghost: GhostClosure | str = GhostClosure.COPY_INNER,
    L: float = 2 * math.pi,
    integrator: IntegratorConfig | None = None,
) -> RelaxationResult:
    """Equilibrium plus ``macro_amplitude * sin x`` in both fields plus seeded micro noise."""
    lat = build_lattice(L, m, n, r, Topology.PERIODIC)
    params = SmagorinskiParams(tan_theta=tan_theta)
    gts = GapToothSystem(lat, CouplingScheme(order, r), Smagorinski(params), ghost=ghost)
    rng = np.random.default_rng(seed)
    wave = macro_amplitude * np.sin(2 * math.pi / L * lat.positions().reshape(-1))
    y0 = equilibrium_state(lat, params) + wave + noise_amplitude * rng.standard_normal(lat.state_size)
    cfg = integrator or IntegratorConfig()
    traj = _run(gts, y0, times, cfg, "relax")
    meta = {
        "experiment": "relax",
        "L": L, "m": m, "n": n, "r": r, "tan_theta": tan_theta,
        "coupling_order": order, "ghost_closure": GhostClosure(ghost).value,
        "macro_amplitude": macro_amplitude, "noise_amplitude": noise_amplitude, "seed": seed,
        "method": cfg.method, "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol, "version": __version__,
    }
    rough = np.array([roughness(lat, s) for s in traj.states])
    waves = np.array([macro_wave(lat, s) for s in traj.states])
    return RelaxationResult(lat, traj.times, traj.states, rough, waves[:, 0], waves[:, 1], meta, traj)


# ---- spectrum -------------------------------------------------------------------------


def run_spectrum(
    m: int = 10,
    n: int = 9,
    r: float = 1 / 6,
    tan_theta: float = 0.001,
    order: str = "cubic",
    ghost: GhostClosure | str = GhostClosure.COPY_INNER,
    L: float = 2 * math.pi,
    slow_threshold: float = 0.5,
    backend: str = "qr",
    workers: int = 1,
) -> tuple[np.ndarray, SpectrumReport]:
    lat = build_lattice(L, m, n, r, Topology.PERIODIC)
    params = SmagorinskiParams(tan_theta=tan_theta)
    gts = GapToothSystem(lat, CouplingScheme(order, r), Smagorinski(params), ghost=ghost)
    J, report = analyse(lambda y: gts(0.0, y), equilibrium_state(lat, params), slow_threshold, backend, workers)
    report.metadata = {
        "experiment": "spectrum",
        "L": L, "m": m, "n": n, "r": r, "tan_theta": tan_theta,
        "coupling_order": order, "ghost_closure": GhostClosure(ghost).value,
        "backend": backend, "version": __version__,
    }
    return J, report


# ---- dam break --------------------------------------------------------------------------


@dataclass
class DamBreakConfig:
    L: float = 20.0
    dam_position: float | None = None
    upstream_depth: float = 1.0
    downstream_depth: float = 0.45
    dam_smoothing: float | None = None
    placement: str = IN_PATCH
    m: int = 22
    n: int = 9
    r: float = 1 / 6
    tan_theta: float = 0.0
    order: str = "cubic"
    ghost: str = GhostClosure.COPY_INNER.value
    fictitious: str = Fictitious.ZERO.value
    bc_left: str = "zero_velocity@edge"
    bc_right: str = "fictitious_zero_patch@edge"
    times: tuple[float, ...] = (0.0, 2.0, 5.2, 7.6)
    depth_floor: float | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.dam_position is None:
            self.dam_position = self.L / 2
        if self.upstream_depth <= 0 or self.downstream_depth <= 0:
            raise ValueError("depths must be positive")
        if self.placement not in (IN_PATCH, BETWEEN_PATCHES):
            raise ValueError(f"placement must be {IN_PATCH!r} or {BETWEEN_PATCHES!r}, got {self.placement!r}")
        self.times = tuple(float(t) for t in self.times)

    @property
    def macro_step(self) -> float:
        return self.L / self.m

    @property
    def micro_step(self) -> float:
        return 2 * self.r * self.macro_step / (self.n + 1)

    @property
    def smoothing(self) -> float:
        """Half-width of the tanh dam; defaults to a sharp step for the deeper tail water."""
        if self.dam_smoothing is not None:
            return self.dam_smoothing
        return 2 * self.micro_step if self.downstream_depth < 0.2 else 0.0

    def centre_offset(self) -> float:
        D = self.macro_step
        if self.placement == IN_PATCH:
            return self.dam_position - round(self.dam_position / D) * D
        return self.dam_position - (math.floor(self.dam_position / D) + 0.5) * D

    def lattice(self) -> PatchLattice:
        return build_lattice(self.L, self.m, self.n, self.r, Topology.BOUNDED, self.centre_offset())

    def boundary_spec(self) -> BoundarySpec:
        return BoundarySpec(BoundaryCondition.parse(self.bc_left), BoundaryCondition.parse(self.bc_right))

    def model(self) -> Smagorinski:
        return Smagorinski(SmagorinskiParams(tan_theta=self.tan_theta, depth_floor=self.depth_floor))

    def depth_profile(self, x: np.ndarray) -> np.ndarray:
        up, down, w = self.upstream_depth, self.downstream_depth, self.smoothing
        s = np.asarray(x, dtype=float) - self.dam_position
        if w > 0:
            return down + (up - down) * 0.5 * (1 - np.tanh(s / w))
        return np.where(s < 0, up, np.where(s > 0, down, 0.5 * (up + down)))

    def as_metadata(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name != "integrator":
                out[f.name] = getattr(self, f.name)
        out["dam_smoothing"] = self.smoothing
        out["method"] = self.integrator.method
        out["rel_tol"] = self.integrator.rel_tol
        out["abs_tol"] = self.integrator.abs_tol
        out["version"] = __version__
        return out


@dataclass
class DamBreakResult:
    mode: str
    config: DamBreakConfig
    snapshots: list[Snapshot]
    areas: np.ndarray
    bores: np.ndarray
    wall_seconds: float
    trajectory: Trajectory
    lattice: PatchLattice | None = None

    @property
    def area_loss(self) -> float:
        """Relative change of water area from the first to the last snapshot."""
        return float(abs(self.areas[-1] - self.areas[0]) / self.areas[0])

    def run_info(self) -> dict:
        tr = self.trajectory
        return {
            "mode": self.mode,
            "wall_seconds": self.wall_seconds,
            "steps": tr.steps,
            "rejected": tr.rejected,
            "evaluations": tr.evaluations,
            "jacobians": tr.jacobians,
        }


def dam_break_system(cfg: DamBreakConfig, mode: str):
    """The right-hand side and initial state for a dam-break run."""
    if mode == GAP_TOOTH:
        lat = cfg.lattice()
        gts = GapToothSystem(
            lat, CouplingScheme(cfg.order, cfg.r), cfg.model(), cfg.boundary_spec(), cfg.ghost, cfg.fictitious
        )
        y0 = np.where(lat.depth_mask(), cfg.depth_profile(lat.positions()), 0.0).reshape(-1)
        return gts, gts.apply_centre_conditions(y0), lat
    if mode == FULL_DOMAIN:
        fds = FullDomainSystem(cfg.L, cfg.micro_step, cfg.model(), BoundarySpec.walls(), Topology.BOUNDED)
        y0 = np.where(fds.depth_mask, cfg.depth_profile(fds.positions), 0.0)
        return fds, y0, None
    raise ValueError(f"unknown mode {mode!r}")


def run_dambreak(cfg: DamBreakConfig | None = None, mode: str = GAP_TOOTH) -> DamBreakResult:
    cfg = cfg or DamBreakConfig()
    rhs, y0, lat = dam_break_system(cfg, mode)
    meta = {"experiment": "dambreak", "mode": mode, **cfg.as_metadata()}
    start = time.perf_counter()
    traj = _run(rhs, y0, cfg.times, cfg.integrator, f"dambreak {mode}")
    wall = time.perf_counter() - start
    if mode == GAP_TOOTH:
        snaps = [gap_tooth_snapshot(lat, s, t, meta) for t, s in zip(traj.times, traj.states)]
    else:
        snaps = [full_domain_snapshot(rhs, s, t, meta) for t, s in zip(traj.times, traj.states)]
    areas = np.array([water_area(s, lat, mode) for s in snaps])
    bores = []
    for s in snaps:
        try:
            bores.append(bore_position(s, cfg.upstream_depth, cfg.downstream_depth))
        except ValueError:
            bores.append(math.nan)
    return DamBreakResult(mode, cfg, snaps, areas, np.array(bores), wall, traj, lat)


@dataclass
class TimingResult:
    gap_tooth_seconds: float
    full_domain_seconds: float
    gap_tooth_evaluations: int
    full_domain_evaluations: int

    @property
    def ratio(self) -> float:
        return self.full_domain_seconds / self.gap_tooth_seconds


def timing_comparison(cfg: DamBreakConfig | None = None, repeats: int = 1) -> TimingResult:
    """Best-of-``repeats`` wall time integrating both modes to the last output time."""
    cfg = cfg or DamBreakConfig()
    out = {}
    for mode in (GAP_TOOTH, FULL_DOMAIN):
        best, evals = math.inf, 0
        for _ in range(repeats):
            rhs, y0, _ = dam_break_system(cfg, mode)
            start = time.perf_counter()
            tr = _run(rhs, y0, (0.0, cfg.times[-1]), cfg.integrator, f"timing {mode}")
            best = min(best, time.perf_counter() - start)
            evals = tr.evaluations
        out[mode] = (best, evals)
    return TimingResult(out[GAP_TOOTH][0], out[FULL_DOMAIN][0], out[GAP_TOOTH][1], out[FULL_DOMAIN][1])


def consistency_table(cases=None) -> list:
    """Convergence reports for each ``(probe, order)`` pair."""
    from .consistency import EXPECTED

    return [run_convergence(s, o) for s, o in (cases or EXPECTED)]
