"""Inter-patch coupling on the staggered macroscale grid.

Edge values of patch ``j`` are interpolated from the macroscale values of the
conjugate field, which live on patches ``j +- 1, j +- 3, ...``. The weights come
from the central-difference series of the fractional shift, written with the
staggered operators ``delta F_j = F_{j+1} - F_{j-1}`` and
``mu F_j = (F_{j+1} + F_{j-1}) / 2``; truncating the series after the
``delta^1``, ``delta^3``, ``delta^5`` or ``delta^7`` term gives linear, cubic,
quintic or septic interpolation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import PatchLattice, Topology

MAX_GHOST_XI = 2.0


class CouplingOrder(str, enum.Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    QUINTIC = "quintic"
    SEPTIC = "septic"

    @property
    def degree(self) -> int:
        """Polynomial degree reproduced exactly (1, 3, 5, 7)."""
        return _DEGREE[self]

    @property
    def reach(self) -> int:
        """Largest patch offset in the stencil."""
        return self.degree

    @property
    def truncation(self) -> int:
        """Power ``p`` of the coupling label at which the series is cut."""
        return self.degree + 2


_DEGREE = {
    CouplingOrder.LINEAR: 1,
    CouplingOrder.CUBIC: 3,
    CouplingOrder.QUINTIC: 5,
    CouplingOrder.SEPTIC: 7,
}


class Fictitious(str, enum.Enum):
    """How macroscale values beyond the ends of a bounded domain are filled."""

    ZERO = "zero"
    CONSTANT = "constant"
    REFLECT = "reflect"


class CouplingError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingScheme:
    order: CouplingOrder
    ratio: float
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "order", CouplingOrder(self.order))

    def weights(self, sign: int, xi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        return stencil_weights(self, sign, xi)


# operators as dense coefficient vectors over offsets -7..7
_SPAN = 7


def _unit(offset_coeffs: dict[int, float]) -> np.ndarray:
    v = np.zeros(2 * _SPAN + 1)
    for k, c in offset_coeffs.items():
        v[k + _SPAN] = c
    return v


def _compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    full = np.convolve(a, b)
    return full[_SPAN : _SPAN + 2 * _SPAN + 1]


_DELTA = _unit({1: 1.0, -1: -1.0})
_MU = _unit({1: 0.5, -1: 0.5})


@lru_cache(maxsize=None)
def _powers() -> tuple[list[np.ndarray], list[np.ndarray]]:
    delta = [_unit({0: 1.0})]
    for _ in range(7):
        delta.append(_compose(delta[-1], _DELTA))
    mu_delta = [_compose(_MU, d) for d in delta]
    return delta, mu_delta


@lru_cache(maxsize=4096)
def _weights_cached(order: CouplingOrder, x: float, gamma: float) -> tuple[tuple[int, ...], tuple[float, ...]]:
    delta, mu_delta = _powers()
    g2 = gamma * gamma
    x2 = x * x
    w = mu_delta[0] + 0.5 * x * delta[1]
    if order.degree >= 3:
        w = w + g2 * ((-1 + x2) / 8 * mu_delta[2] + (-x + x * x2) / 48 * delta[3])
    if order.degree >= 5:
        g4 = g2 * g2
        w = w + g4 * (
            (9 - 10 * x2 + x2 * x2) / 384 * mu_delta[4]
            + (9 * x - 10 * x * x2 + x * x2 * x2) / 3840 * delta[5]
        )
    if order.degree >= 7:
        g6 = g2 * g2 * g2
        x4 = x2 * x2
        w = w + g6 * (
            (-225 + 259 * x2 - 35 * x4 + x4 * x2) / 46080 * mu_delta[6]
            + (-225 * x + 259 * x * x2 - 35 * x * x4 + x * x4 * x2) / 645120 * delta[7]
        )
    offsets = tuple(range(-order.reach, order.reach + 1, 2))
    return offsets, tuple(float(w[o + _SPAN]) for o in offsets)


def stencil_weights(scheme: CouplingScheme, sign: int, xi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Interpolation weights for the conjugate field at ``X_j + sign*xi*r*D``.

    Returns ``(offsets, weights)``: the value is ``sum(w * F[j + offset])``
    over the odd patch offsets of the stencil.
    """
    if sign not in (1, -1):
        raise CouplingError(f"sign must be +1 or -1, got {sign}")
    if abs(xi) > MAX_GHOST_XI:
        raise CouplingError(f"offset fraction {xi} outside [-{MAX_GHOST_XI}, {MAX_GHOST_XI}]")
    order = CouplingOrder(scheme.order)
    x = float(sign * scheme.ratio * xi)
    offsets, w = _weights_cached(order, x, float(scheme.gamma))
    return np.array(offsets), np.array(w)


def lagrange_weights(nodes, t: float) -> np.ndarray:
    """Weights of the Lagrange interpolant through ``nodes`` evaluated at ``t``."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.ones(len(nodes))
    for a, xa in enumerate(nodes):
        for b, xb in enumerate(nodes):
            if a != b:
                w[a] *= (t - xb) / (xa - xb)
    return w


def own_field_weights(degree: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Same-parity interpolation through patches ``j, j+-2, ...`` (even degree).

    ``t`` is the evaluation offset in units of the macroscale step ``D``.
    """
    half = degree // 2
    offsets = np.arange(-2 * half, 2 * half + 1, 2)
    return offsets, lagrange_weights(offsets, t)


def pad_macro(macro: np.ndarray, width: int, topology: Topology, fictitious: Fictitious | None) -> np.ndarray:
    """Extend macro values (index ``j-1``) by ``width`` fictitious patches each side.

    Entry ``k`` of the result holds patch ``j = k - width + 1``.
    """
    macro = np.asarray(macro, dtype=float)
    m = macro.size
    j = np.arange(1 - width, m + width + 1)
    if Topology(topology) is Topology.PERIODIC:
        return macro[(j - 1) % m]
    if fictitious is None:
        raise CouplingError("bounded topology needs a fictitious rule for values beyond the ends")
    fictitious = Fictitious(fictitious)
    out = np.zeros(j.size)
    inside = (j >= 1) & (j <= m)
    out[inside] = macro[j[inside] - 1]
    if fictitious is Fictitious.ZERO:
        return out
    for k in np.flatnonzero(~inside):
        t = j[k]
        if t < 1:
            p = 1 if t % 2 else 2
        else:
            p = m if (m - t) % 2 == 0 else m - 1
        if fictitious is Fictitious.CONSTANT:
            out[k] = macro[p - 1]
        else:
            mirror = 2 * p - t
            out[k] = 2 * macro[p - 1] - macro[mirror - 1] if 1 <= mirror <= m else macro[p - 1]
    return out


def interpolate_at(
    scheme: CouplingScheme,
    padded: np.ndarray,
    width: int,
    m: int,
    xi: float,
    sign: int = 1,
) -> np.ndarray:
    """Conjugate-field value at ``X_j + sign*xi*r*D`` for every patch."""
    offsets, w = stencil_weights(scheme, sign, xi)
    base = np.arange(m) + width
    out = np.zeros(m)
    for o, wo in zip(offsets, w):
        out += wo * padded[base + o]
    return out


def interpolate_edges(
    scheme: CouplingScheme,
    macro: np.ndarray,
    j: int,
    topology: Topology = Topology.PERIODIC,
    fictitious: Fictitious | None = None,
) -> tuple[float, float]:
    """Left and right edge values of patch ``j`` (1-based) from macro values."""
    width = CouplingOrder(scheme.order).reach
    padded = pad_macro(macro, width, topology, fictitious)
    k = j - 1 + width
    values = []
    for sign in (-1, 1):
        offsets, w = stencil_weights(scheme, sign)
        values.append(float(np.dot(w, padded[k + offsets])))
    return values[0], values[1]


def ghost_value(
    scheme: CouplingScheme,
    macro: np.ndarray,
    j: int,
    xi: float,
    topology: Topology = Topology.PERIODIC,
    fictitious: Fictitious | None = None,
) -> float:
    """Conjugate-field value at the generalised offset ``X_j + xi*r*D``."""
    if abs(xi) > MAX_GHOST_XI:
        raise CouplingError(f"ghost offset {xi} beyond |xi| <= {MAX_GHOST_XI}")
    width = CouplingOrder(scheme.order).reach
    padded = pad_macro(macro, width, topology, fictitious)
    offsets, w = stencil_weights(scheme, 1, xi)
    return float(np.dot(w, padded[j - 1 + width + offsets]))


def edge_values(
    scheme: CouplingScheme,
    macro: np.ndarray,
    lattice: PatchLattice,
    fictitious: Fictitious | None = None,
) -> np.ndarray:
    """(m, 2) array of left/right edge values for every patch."""
    width = CouplingOrder(scheme.order).reach
    padded = pad_macro(macro, width, lattice.topology, fictitious)
    m = lattice.patch_count
    return np.stack(
        [interpolate_at(scheme, padded, width, m, 1.0, -1), interpolate_at(scheme, padded, width, m, 1.0, 1)],
        axis=1,
    )
