"""Two-level staggered geometry: macroscale patch centres and micro lattices.

Patches are numbered ``j = 1..m``. Inside each patch the micro slots are the
symmetric integers ``i = -(n+1)/2 .. (n+1)/2``; the two outermost slots are the
patch edges, the ``n`` slots between them are the interior unknowns. Depth
lives where ``j - i`` is odd, velocity where ``j - i`` is even, so an odd patch
has depth at its centre and velocity on its edges and an even patch the other
way round.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np


class Topology(str, enum.Enum):
    PERIODIC = "periodic"
    BOUNDED = "bounded"


class Field(str, enum.Enum):
    DEPTH = "h"
    VELOCITY = "u"

    @property
    def conjugate(self) -> "Field":
        return Field.VELOCITY if self is Field.DEPTH else Field.DEPTH


class LatticeError(ValueError):
    pass


def field_parity(j: int, i: int) -> Field:
    """Field stored at micro slot ``i`` of patch ``j``."""
    return Field.DEPTH if (j - i) % 2 else Field.VELOCITY


@dataclass(frozen=True)
class PatchLattice:
    domain_length: float
    patch_count: int
    interior_points: int
    ratio: float
    topology: Topology
    centre_offset: float = 0.0

    @property
    def macro_step(self) -> float:
        return self.domain_length / self.patch_count

    @property
    def micro_step(self) -> float:
        return 2.0 * self.ratio * self.macro_step / (self.interior_points + 1)

    @property
    def half_width(self) -> int:
        """Slot index of the right edge, ``(n+1)/2``."""
        return (self.interior_points + 1) // 2

    @property
    def overlapping(self) -> bool:
        return self.ratio > 0.5

    @property
    def centres(self) -> np.ndarray:
        j = np.arange(1, self.patch_count + 1)
        return j * self.macro_step + self.centre_offset

    def centre(self, j: int) -> float:
        return j * self.macro_step + self.centre_offset

    @property
    def micro_offsets(self) -> np.ndarray:
        """All slots of one patch, edges included."""
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def interior_offsets(self) -> np.ndarray:
        return np.arange(-self.half_width + 1, self.half_width)

    def centre_field(self, j: int) -> Field:
        return field_parity(j, 0)

    def edge_field(self, j: int) -> Field:
        return field_parity(j, self.half_width)

    def micro_position(self, j: int, i: int) -> float:
        return self.centre(j) + i * self.micro_step

    def positions(self) -> np.ndarray:
        """(m, n) array of interior slot positions."""
        return self.centres[:, None] + self.interior_offsets[None, :] * self.micro_step

    def depth_mask(self) -> np.ndarray:
        """(m, n) boolean array, True at interior depth slots."""
        j = np.arange(1, self.patch_count + 1)[:, None]
        return ((j - self.interior_offsets[None, :]) % 2).astype(bool)

    # state vector layout: patch-major, slots left to right

    @property
    def state_size(self) -> int:
        return self.patch_count * self.interior_points

    def linear_index(self, j: int, i: int) -> int:
        if not 1 <= j <= self.patch_count or abs(i) >= self.half_width:
            raise IndexError(f"no interior slot (j={j}, i={i})")
        return (j - 1) * self.interior_points + i + self.half_width - 1

    def slot_of(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.state_size:
            raise IndexError(k)
        row, col = divmod(k, self.interior_points)
        return row + 1, col - self.half_width + 1

    @property
    def centre_column(self) -> int:
        return self.half_width - 1


def build_lattice(
    L: float,
    m: int,
    n: int,
    r: float,
    topology: Topology | str = Topology.PERIODIC,
    centre_offset: float | None = None,
) -> PatchLattice:
    """Validate parameters and construct a :class:`PatchLattice`.

    ``centre_offset`` shifts every centre, ``X_j = j*D + offset``. The default
    is 0 for periodic domains and ``-D/2`` for bounded ones, which tiles
    ``[0, L]`` symmetrically.
    """
    topology = Topology(topology)
    if not L > 0:
        raise LatticeError(f"domain length must be positive, got {L}")
    if int(m) != m or m < 2:
        raise LatticeError(f"need at least two patches, got m={m}")
    if int(n) != n or n < 5 or n % 2 == 0:
        raise LatticeError(f"interior points must be odd and >= 5, got n={n}")
    if n % 4 != 1:
        # edge slot (n+1)/2 must be odd so edges carry the conjugate field
        raise LatticeError(f"interior points must be 1 mod 4 (5, 9, 13, ...), got n={n}")
    if not 0 < r <= 1:
        raise LatticeError(f"patch ratio must lie in (0, 1], got r={r}")
    if topology is Topology.PERIODIC and m % 2:
        raise LatticeError(f"periodic staggering needs an even patch count, got m={m}")
    if r > 0.5:
        warnings.warn(f"patch ratio r={r} > 1/2: neighbouring patches overlap", stacklevel=2)
    D = L / m
    if centre_offset is None:
        centre_offset = 0.0 if topology is Topology.PERIODIC else -D / 2
    lattice = PatchLattice(float(L), int(m), int(n), float(r), topology, float(centre_offset))
    assert math.isclose(lattice.micro_step * (n + 1), 2 * r * D, rel_tol=1e-14)
    return lattice
