"""Assembly of gap-tooth and whole-domain right-hand sides.

A gap-tooth evaluation runs in two phases. The exchange phase reads the
macroscale value at every patch centre, interpolates edge values from the
conjugate field, applies domain boundary conditions and fills ghost slots.
The patch phase then evaluates the microscale model on all patches at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .coupling import (
    CouplingOrder,
    CouplingScheme,
    Fictitious,
    interpolate_at,
    own_field_weights,
    pad_macro,
)
from .grid import Field, PatchLattice, Topology
from .models import DepthError, PatchFields, WaveSystem

GHOST_LAYERS = 2


class GhostClosure(str, enum.Enum):
    LINEAR_EXTRAPOLATE = "linear"
    MACRO_INTERPOLATE = "macro"
    COPY_INNER = "copy"


class BoundaryKind(str, enum.Enum):
    CONSTANT_DEPTH = "constant_depth"
    NO_FLUX = "no_flux"
    ZERO_VELOCITY = "zero_velocity"
    FICTITIOUS_ZERO_PATCH = "fictitious_zero_patch"


class BoundarySite(str, enum.Enum):
    PATCH_EDGE = "edge"
    PATCH_CENTRE = "centre"


class BoundaryError(ValueError):
    pass


class PatchDepthError(DepthError):
    def __init__(self, message: str, patch: int, slot: int):
        super().__init__(message)
        self.patch = patch
        self.slot = slot


@dataclass(frozen=True)
class BoundaryCondition:
    kind: BoundaryKind
    site: BoundarySite = BoundarySite.PATCH_EDGE
    value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind(self.kind))
        object.__setattr__(self, "site", BoundarySite(self.site))

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        """Read ``kind[:value][@site]``, e.g. ``constant_depth:0.45@centre``."""
        site = BoundarySite.PATCH_EDGE
        if "@" in text:
            text, s = text.split("@", 1)
            site = BoundarySite(s.strip())
        value = 0.0
        if ":" in text:
            text, v = text.split(":", 1)
            value = float(v)
        return cls(BoundaryKind(text.strip()), site, value)

    def __str__(self) -> str:
        s = self.kind.value
        if self.kind is BoundaryKind.CONSTANT_DEPTH:
            s += f":{self.value!r}"
        return f"{s}@{self.site.value}"


@dataclass(frozen=True)
class BoundarySpec:
    left: BoundaryCondition
    right: BoundaryCondition

    @classmethod
    def dam_break_default(cls) -> "BoundarySpec":
        return cls(
            BoundaryCondition(BoundaryKind.ZERO_VELOCITY),
            BoundaryCondition(BoundaryKind.FICTITIOUS_ZERO_PATCH),
        )

    @classmethod
    def walls(cls) -> "BoundarySpec":
        return cls(BoundaryCondition(BoundaryKind.ZERO_VELOCITY), BoundaryCondition(BoundaryKind.ZERO_VELOCITY))


def gather_macro(state: np.ndarray, lattice: PatchLattice) -> np.ndarray:
    """Centre-slot value of every patch: ``H_j`` for odd ``j``, ``U_j`` for even."""
    s = np.asarray(state).reshape(lattice.patch_count, lattice.interior_points)
    return s[:, lattice.centre_column].copy()


@dataclass
class GapToothSystem:
    """Callable ``rhs(t, y)`` for the gap-tooth scheme on a :class:`PatchLattice`."""

    lattice: PatchLattice
    scheme: CouplingScheme
    system: WaveSystem
    bc: BoundarySpec | None = None
    ghost: GhostClosure = GhostClosure.COPY_INNER
    fictitious: Fictitious = Fictitious.ZERO
    evaluations: int = field(default=0, init=False)

    def __post_init__(self):
        self.ghost = GhostClosure(self.ghost)
        self.fictitious = Fictitious(self.fictitious)
        lat = self.lattice
        if lat.topology is Topology.BOUNDED and self.bc is None:
            raise BoundaryError("bounded topology needs a BoundarySpec")
        if lat.topology is Topology.PERIODIC and self.bc is not None:
            raise BoundaryError("periodic topology takes no BoundarySpec")
        if self.system.reach > GHOST_LAYERS + 1:
            raise ValueError(f"model reach {self.system.reach} exceeds available ghost layers")
        m, n, half = lat.patch_count, lat.interior_points, lat.half_width
        self._m, self._n, self._half = m, n, half
        self._width = n + 2 + 2 * GHOST_LAYERS
        self._lo = GHOST_LAYERS + 1
        self._hi = self._lo + n
        j = np.arange(1, m + 1)[:, None]
        slots = np.arange(self._width)[None, :] - half - GHOST_LAYERS
        self._depth_mask = ((j - slots) % 2).astype(bool)
        self._pad = CouplingOrder(self.scheme.order).reach + 2
        D, d = lat.macro_step, lat.micro_step
        self._ghost_xi = (half + 2) / half
        self._own_t = (half + 1) * d / D
        self._held = np.zeros((m, n), dtype=bool)
        if self.bc is not None:
            for end, cond in ((1, self.bc.left), (m, self.bc.right)):
                self._check_condition(end, cond)
        # the exchange is linear in the macro values: tabulate it once
        half = self._half
        self._coupled_cols = [self.col(-half), self.col(half), self.col(-half - 2), self.col(half + 2)]
        if self.ghost is GhostClosure.MACRO_INTERPOLATE:
            self._coupled_cols += [self.col(half + 1), self.col(-half - 1)]
        eye = np.eye(m)
        self._exchange = np.stack([self._coupled_values(eye[:, k]) for k in range(m)], axis=-1)

    def _coupled_values(self, macro: np.ndarray) -> np.ndarray:
        """Interpolated values for the coupled columns, shape (columns, m)."""
        m, P = self._m, self._pad
        padded = pad_macro(macro, P, self.lattice.topology, self.fictitious)
        rows = [
            interpolate_at(self.scheme, padded, P, m, 1.0, -1),
            interpolate_at(self.scheme, padded, P, m, 1.0, 1),
            interpolate_at(self.scheme, padded, P, m, self._ghost_xi, -1),
            interpolate_at(self.scheme, padded, P, m, self._ghost_xi, 1),
        ]
        if self.ghost is GhostClosure.MACRO_INTERPOLATE:
            base = np.arange(m) + P
            for sign in (1, -1):
                offsets, w = own_field_weights(2, sign * self._own_t)
                rows.append(sum(wo * padded[base + o] for o, wo in zip(offsets, w)))
        return np.array(rows)

    # column helpers
    def col(self, i: int) -> int:
        return i + self._half + GHOST_LAYERS

    def _check_condition(self, end: int, cond: BoundaryCondition) -> None:
        centre = self.lattice.centre_field(end)
        if cond.site is BoundarySite.PATCH_CENTRE:
            if cond.kind is BoundaryKind.FICTITIOUS_ZERO_PATCH:
                raise BoundaryError("a fictitious zero patch acts on patch edges, not centres")
            if cond.kind is BoundaryKind.CONSTANT_DEPTH and centre is not Field.DEPTH:
                raise BoundaryError(f"patch {end} centre carries velocity; cannot hold depth there")
            if cond.kind is BoundaryKind.ZERO_VELOCITY and centre is not Field.VELOCITY:
                raise BoundaryError(f"patch {end} centre carries depth; cannot hold velocity there")
            if cond.kind in (BoundaryKind.CONSTANT_DEPTH, BoundaryKind.ZERO_VELOCITY):
                self._held[end - 1, self.lattice.centre_column] = True

    def centre_value(self, cond: BoundaryCondition, macro: np.ndarray, end: int) -> float | None:
        if cond.site is not BoundarySite.PATCH_CENTRE:
            return None
        if cond.kind is BoundaryKind.CONSTANT_DEPTH:
            return cond.value
        if cond.kind is BoundaryKind.ZERO_VELOCITY:
            return 0.0
        inward = end + 2 if end == 1 else end - 2
        return macro[inward - 1]

    def build_fields(self, y: np.ndarray) -> PatchFields:
        """Exchange phase: interior values, edges and ghosts for every patch."""
        lat = self.lattice
        m, n, half = self._m, self._n, self._half
        state = np.asarray(y, dtype=float).reshape(m, n)
        macro = state[:, lat.centre_column].copy()
        if self.bc is not None:
            for end, cond in ((1, self.bc.left), (m, self.bc.right)):
                v = self.centre_value(cond, macro, end)
                if v is not None:
                    macro[end - 1] = v

        ext = np.empty((m, self._width))
        ext[:, self._lo : self._hi] = state
        ext[:, self._coupled_cols] = (self._exchange @ macro).T

        inner1, inner3 = half - 1, half - 3
        if self.ghost is GhostClosure.LINEAR_EXTRAPOLATE:
            ext[:, self.col(half + 1)] = 2 * ext[:, self.col(inner1)] - ext[:, self.col(inner3)]
            ext[:, self.col(-half - 1)] = 2 * ext[:, self.col(-inner1)] - ext[:, self.col(-inner3)]
        elif self.ghost is GhostClosure.COPY_INNER:
            ext[:, self.col(half + 1)] = ext[:, self.col(inner1)]
            ext[:, self.col(-half - 1)] = ext[:, self.col(-inner1)]

        if self.bc is not None:
            self._apply_edge_condition(ext, macro, 1, -1, self.bc.left)
            self._apply_edge_condition(ext, macro, m, 1, self.bc.right)
        return PatchFields(ext, self._depth_mask, self._lo, self._hi)

    def _apply_edge_condition(self, ext, macro, end: int, side: int, cond: BoundaryCondition) -> None:
        if cond.site is not BoundarySite.PATCH_EDGE:
            return
        row = end - 1
        half = self._half
        edge_is_depth = self.lattice.edge_field(end) is Field.DEPTH
        edge = self.col(side * half)
        ghost = self.col(side * (half + 1))
        inner = self.col(side * (half - 1))
        kind = cond.kind
        if kind is BoundaryKind.FICTITIOUS_ZERO_PATCH:
            inward = end - side
            ext[row, self.col(half)] = ext[row, self.col(-half)] = macro[inward - 1]
        elif kind is BoundaryKind.CONSTANT_DEPTH:
            if edge_is_depth:
                ext[row, edge] = cond.value
            else:
                ext[row, ghost] = 2 * cond.value - ext[row, inner]
        elif kind is BoundaryKind.ZERO_VELOCITY:
            if edge_is_depth:
                ext[row, ghost] = -ext[row, inner]
            else:
                ext[row, edge] = 0.0
        elif kind is BoundaryKind.NO_FLUX:
            if edge_is_depth:
                ext[row, ghost] = ext[row, inner]
            else:
                ext[row, edge] = ext[row, self.col(side * (half - 2))]

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        self.evaluations += 1
        fields = self.build_fields(y)
        try:
            out = self.system.rhs(fields, self.lattice.micro_step, t)
        except DepthError as err:
            if err.row is None:
                raise
            slot = err.column - self._half - GHOST_LAYERS
            raise PatchDepthError(f"patch {err.row + 1}, slot {slot}: {err}", err.row + 1, slot) from err
        out = np.asarray(out, dtype=float)
        if self._held.any():
            out = np.where(self._held, 0.0, out)
        return out.reshape(-1)

    def apply_centre_conditions(self, y: np.ndarray) -> np.ndarray:
        """Copy held centre values into a state so it is consistent with the BCs."""
        y = np.array(y, dtype=float)
        if self.bc is None:
            return y
        state = y.reshape(self._m, self._n)
        macro = state[:, self.lattice.centre_column].copy()
        for end, cond in ((1, self.bc.left), (self._m, self.bc.right)):
            v = self.centre_value(cond, macro, end)
            if v is not None and self._held[end - 1].any():
                state[end - 1, self.lattice.centre_column] = v
        return y


def gap_tooth_rhs(
    state: np.ndarray,
    lattice: PatchLattice,
    scheme: CouplingScheme,
    system: WaveSystem,
    bc: BoundarySpec | None = None,
    ghost: GhostClosure = GhostClosure.COPY_INNER,
    t: float = 0.0,
    fictitious: Fictitious = Fictitious.ZERO,
) -> np.ndarray:
    return GapToothSystem(lattice, scheme, system, bc, ghost, fictitious)(t, state)


@dataclass
class FullDomainSystem:
    """The microscale model on one staggered lattice spanning the whole domain.

    Periodic: slots ``k = 0..K-1`` at ``x = k*d``, all unknown. Bounded: slots
    ``k = 0..K`` with velocity at even ``k``; the two end velocities are set
    by the boundary conditions and the ``K-1`` slots between are unknown.
    Depth lives at odd ``k`` in both cases.
    """

    domain_length: float
    micro_step: float
    system: WaveSystem
    bc: BoundarySpec | None = None
    topology: Topology = Topology.BOUNDED
    evaluations: int = field(default=0, init=False)

    def __post_init__(self):
        self.topology = Topology(self.topology)
        K = self.domain_length / self.micro_step
        if abs(K - round(K)) > 1e-9 * K:
            raise ValueError(f"micro step {self.micro_step} does not divide domain length {self.domain_length}")
        K = int(round(K))
        if K % 2:
            raise ValueError(f"staggering needs an even number of micro intervals, got {K}")
        self.intervals = K
        G = GHOST_LAYERS
        if self.topology is Topology.PERIODIC:
            if self.bc is not None:
                raise BoundaryError("periodic topology takes no BoundarySpec")
            slots = np.arange(-G, K + G)
            self._lo, self._hi = G, G + K
        else:
            if self.bc is None:
                self.bc = BoundarySpec.walls()
            for cond in (self.bc.left, self.bc.right):
                if cond.kind is BoundaryKind.FICTITIOUS_ZERO_PATCH:
                    raise BoundaryError("a fictitious zero patch has no meaning without patches")
            slots = np.arange(-G, K + G + 1)
            self._lo, self._hi = G + 1, G + K
        self._slots = slots
        self._depth_mask = (slots % 2 == 1)[None, :]

    @property
    def positions(self) -> np.ndarray:
        return self._slots[self._lo : self._hi] * self.micro_step

    @property
    def depth_mask(self) -> np.ndarray:
        return self._depth_mask[0, self._lo : self._hi]

    @property
    def state_size(self) -> int:
        return self._hi - self._lo

    def build_fields(self, y: np.ndarray) -> PatchFields:
        G = GHOST_LAYERS
        y = np.asarray(y, dtype=float)
        ext = np.empty((1, self._slots.size))
        ext[0, self._lo : self._hi] = y
        if self.topology is Topology.PERIODIC:
            ext[0, :G] = y[-G:]
            ext[0, self._hi :] = y[:G]
        else:
            K = self.intervals
            # slot k lives in column k + G
            self._fill_end(ext[0], G, 1, self.bc.left)
            self._fill_end(ext[0], G + K, -1, self.bc.right)
        return PatchFields(ext, self._depth_mask, self._lo, self._hi)

    @staticmethod
    def _fill_end(row: np.ndarray, end: int, inward: int, cond: BoundaryCondition) -> None:
        u2 = row[end + 2 * inward]
        if cond.kind is BoundaryKind.ZERO_VELOCITY:
            row[end] = 0.0
        else:
            row[end] = u2
        row[end - inward] = row[end + inward]
        if cond.kind is BoundaryKind.CONSTANT_DEPTH:
            row[end - inward] = cond.value
        row[end - 2 * inward] = 2 * row[end] - u2 if cond.kind is BoundaryKind.ZERO_VELOCITY else u2

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        self.evaluations += 1
        fields = self.build_fields(y)
        return np.asarray(self.system.rhs(fields, self.micro_step, t)).reshape(-1)


def full_domain_rhs(
    state: np.ndarray,
    d: float,
    system: WaveSystem,
    bc: BoundarySpec | None = None,
    t: float = 0.0,
    domain_length: float | None = None,
    topology: Topology = Topology.BOUNDED,
) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    if domain_length is None:
        K = state.size if Topology(topology) is Topology.PERIODIC else state.size + 1
        domain_length = K * d
    return FullDomainSystem(domain_length, d, system, bc, topology)(t, state)
