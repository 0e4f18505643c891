"""Linearisation about equilibrium and dense eigenvalue analysis.

The eigenvalue solver follows the classic route for real nonsymmetric
matrices: diagonal balancing, Householder reduction to upper Hessenberg form,
then Francis double-shift QR iteration with deflation.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import PatchLattice
from .models import SmagorinskiParams

ZERO, SLOW, FAST = "zero", "slow", "fast"


class EigenError(ArithmeticError):
    pass


class SpectrumError(ValueError):
    pass


def equilibrium_state(lattice: PatchLattice, params: SmagorinskiParams = SmagorinskiParams()) -> np.ndarray:
    """Uniform depth 1 and the drag-balanced velocity, flattened patch-major."""
    if params.tan_theta < 0:
        raise ValueError("bed slope must be non-negative")
    return np.where(lattice.depth_mask(), 1.0, params.equilibrium_velocity).reshape(-1)


def default_step(y: np.ndarray) -> np.ndarray:
    return np.cbrt(np.finfo(float).eps) * np.maximum(np.abs(y), 1.0)


def numerical_jacobian(
    rhs: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    step_rule: Callable[[np.ndarray], np.ndarray] = default_step,
    workers: int = 1,
) -> np.ndarray:
    """Centred-difference Jacobian, one column per coordinate.

    Columns are independent; with ``workers > 1`` they are evaluated on a
    thread pool and written back by column index, so the result does not
    depend on scheduling.
    """
    y = np.asarray(y, dtype=float)
    steps = np.asarray(step_rule(y), dtype=float)
    n = y.size

    def column(k: int) -> np.ndarray:
        up, dn = y.copy(), y.copy()
        up[k] += steps[k]
        dn[k] -= steps[k]
        width = up[k] - dn[k]
        return (np.asarray(rhs(up), dtype=float) - np.asarray(rhs(dn), dtype=float)) / width

    J = np.empty((n, n))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k, col in enumerate(pool.map(column, range(n))):
                J[:, k] = col
    else:
        for k in range(n):
            J[:, k] = column(k)
    return J


# ---- dense eigenvalue solver -------------------------------------------------


def balance(a: np.ndarray, radix: float = 2.0) -> np.ndarray:
    """Diagonal similarity scaling by powers of ``radix`` to even out row and column norms."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g, f, s = r / radix, 1.0, c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Orthogonal reduction to upper Hessenberg form by Householder reflections."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def hessenberg_qr(h: np.ndarray, max_iterations: int = 60) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR."""
    a = np.array(h, dtype=float)
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = np.abs(np.triu(a, -1)).sum()
    nn = n - 1
    t = 0.0
    its = 0
    while nn >= 0:
        # look for a negligible subdiagonal element
        l = nn
        while l >= 1:
            s = abs(a[l - 1, l - 1]) + abs(a[l, l])
            if s == 0.0:
                s = anorm
            if abs(a[l, l - 1]) + s == s:
                a[l, l - 1] = 0.0
                break
            l -= 1
        x = a[nn, nn]
        if l == nn:
            wr[nn], wi[nn] = x + t, 0.0
            nn -= 1
            its = 0
            continue
        y = a[nn - 1, nn - 1]
        w = a[nn, nn - 1] * a[nn - 1, nn]
        if l == nn - 1:
            p = 0.5 * (y - x)
            q = p * p + w
            z = math.sqrt(abs(q))
            x += t
            if q >= 0.0:
                z = p + math.copysign(z, p)
                wr[nn - 1] = wr[nn] = x + z
                if z != 0.0:
                    wr[nn] = x - w / z
                wi[nn - 1] = wi[nn] = 0.0
            else:
                wr[nn - 1] = wr[nn] = x + p
                wi[nn - 1], wi[nn] = z, -z
            nn -= 2
            its = 0
            continue
        if its >= max_iterations:
            raise EigenError(f"QR iteration did not converge for eigenvalue {nn} after {its} sweeps")
        if its and its % 10 == 0:
            # exceptional shift
            t += x
            idx = np.arange(nn + 1)
            a[idx, idx] -= x
            s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
            x = y = 0.75 * s
            w = -0.4375 * s * s
        its += 1
        m = nn - 2
        while m >= l:
            z = a[m, m]
            r = x - z
            s = y - z
            p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
            q = a[m + 1, m + 1] - z - r - s
            r = a[m + 2, m + 1]
            s = abs(p) + abs(q) + abs(r)
            p, q, r = p / s, q / s, r / s
            if m == l:
                break
            u = abs(a[m, m - 1]) * (abs(q) + abs(r))
            v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
            if u + v == v:
                break
            m -= 1
        for i in range(m + 2, nn + 1):
            a[i, i - 2] = 0.0
            if i != m + 2:
                a[i, i - 3] = 0.0
        for k in range(m, nn):
            if k != m:
                p = a[k, k - 1]
                q = a[k + 1, k - 1]
                r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                x = abs(p) + abs(q) + abs(r)
                if x != 0.0:
                    p, q, r = p / x, q / x, r / x
            s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
            if s == 0.0:
                continue
            if k == m:
                if l != m:
                    a[k, k - 1] = -a[k, k - 1]
            else:
                a[k, k - 1] = -s * x
            p += s
            x, y, z = p / s, q / s, r / s
            q, r = q / p, r / p
            # row transformation on columns k..nn
            cols = slice(k, nn + 1)
            pr = a[k, cols] + q * a[k + 1, cols]
            if k != nn - 1:
                pr = pr + r * a[k + 2, cols]
                a[k + 2, cols] -= pr * z
            a[k + 1, cols] -= pr * y
            a[k, cols] -= pr * x
            # column transformation on rows l..min(nn, k+3)
            rows = slice(l, min(nn, k + 3) + 1)
            pc = x * a[rows, k] + y * a[rows, k + 1]
            if k != nn - 1:
                pc = pc + z * a[rows, k + 2]
                a[rows, k + 2] -= pc * r
            a[rows, k + 1] -= pc * q
            a[rows, k] -= pc
    return wr + 1j * wi


def eigenvalues(matrix: np.ndarray, backend: str = "qr") -> np.ndarray:
    """All eigenvalues of a real square matrix.

    ``backend="numpy"`` delegates to the platform LAPACK routine, which is
    useful for cross-checking the in-repo solver.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if backend == "numpy":
        eigs = np.linalg.eigvals(a)
    elif backend == "qr":
        if a.shape[0] == 0:
            return np.zeros(0, dtype=complex)
        eigs = hessenberg_qr(hessenberg(balance(a)))
    else:
        raise ValueError(f"unknown eigenvalue backend {backend!r}")
    return sort_spectrum(eigs)


def sort_spectrum(eigs) -> np.ndarray:
    """Descending real part, then descending imaginary part."""
    eigs = np.asarray(eigs, dtype=complex)
    order = np.lexsort((-eigs.imag, -eigs.real))
    return eigs[order]


def eigenpair_residuals(matrix: np.ndarray, eigs) -> np.ndarray:
    """Relative residual ``|Av - lam v| / |A|`` of an inverse-iteration vector for each eigenvalue."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    norm = np.linalg.norm(a, 2) or 1.0
    rng = np.random.default_rng(0)
    out = []
    for lam in np.asarray(eigs, dtype=complex):
        shift = lam + 1e-10 * norm
        v = rng.standard_normal(n) + 0j
        for _ in range(3):
            v = np.linalg.solve(a - shift * np.eye(n), v)
            v /= np.linalg.norm(v)
        out.append(np.linalg.norm(a @ v - lam * v) / norm)
    return np.array(out)


def conjugate_pairing_error(eigs) -> float:
    """Largest distance from each eigenvalue to the nearest conjugate of another (or itself when real)."""
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        return 0.0
    scale = max(1.0, float(np.abs(eigs).max()))
    worst = 0.0
    conj = eigs.conj()
    for k, lam in enumerate(eigs):
        if abs(lam.imag) <= 1e-12 * scale:
            continue
        dist = np.abs(conj - lam)
        dist[k] = np.inf
        worst = max(worst, float(dist.min()))
    return worst / scale


# ---- classification -----------------------------------------------------------


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    classes: np.ndarray
    slow_threshold: float
    zero_threshold: float
    metadata: dict = field(default_factory=dict)

    @property
    def zero_set(self) -> np.ndarray:
        return np.flatnonzero(self.classes == ZERO)

    @property
    def slow_set(self) -> np.ndarray:
        return np.flatnonzero(self.classes == SLOW)

    @property
    def fast_set(self) -> np.ndarray:
        return np.flatnonzero(self.classes == FAST)

    @property
    def zero_modes(self) -> int:
        return int(self.zero_set.size)

    @property
    def slow(self) -> np.ndarray:
        return self.eigenvalues[self.slow_set]

    @property
    def fast(self) -> np.ndarray:
        return self.eigenvalues[self.fast_set]

    @property
    def gap_ratio(self) -> float:
        """Smallest fast decay rate over the largest slow rate, zero modes excluded."""
        if self.slow.size == 0 or self.fast.size == 0:
            return math.inf
        slow = np.abs(self.slow.real).max()
        fast = np.abs(self.fast.real).min()
        return math.inf if slow == 0 else float(fast / slow)

    def complex_pairs(self, which: str = SLOW, tol: float = 1e-9) -> np.ndarray:
        """Eigenvalues with positive imaginary part in the given class."""
        ev = self.eigenvalues[self.classes == which]
        return ev[ev.imag > tol * max(1.0, float(np.abs(self.eigenvalues).max()))]

    def real_modes(self, which: str = SLOW, tol: float = 1e-9) -> np.ndarray:
        ev = self.eigenvalues[self.classes == which]
        return ev[np.abs(ev.imag) <= tol * max(1.0, float(np.abs(self.eigenvalues).max()))].real

    def pairs_in_band(self, lo: float, hi: float) -> int:
        """Conjugate pairs (counted once) with real part in ``[lo, hi]``."""
        ev = self.eigenvalues
        upper = ev[(ev.imag > 1e-9 * max(1.0, float(np.abs(ev).max())))]
        return int(np.count_nonzero((upper.real >= lo) & (upper.real <= hi)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}={value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "class"])
        for lam, cls in zip(self.eigenvalues, self.classes):
            w.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", cls])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, slow_threshold: float = 0.5, zero_threshold: float = 0.0) -> "SpectrumReport":
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line and not line.startswith("re,"):
                rows.append(line.split(","))
        eigs = np.array([complex(float(r[0]), float(r[1])) for r in rows], dtype=complex)
        classes = np.array([r[2] for r in rows], dtype=object)
        return cls(eigs, classes, slow_threshold, zero_threshold, meta)


def classify_spectrum(
    eigs,
    slow_threshold: float = 0.5,
    zero_threshold: float | None = None,
    matrix_norm: float | None = None,
) -> SpectrumReport:
    """Partition eigenvalues into zero, slow and fast modes.

    ``zero_threshold`` defaults to ``1e-6`` times ``matrix_norm`` (or the
    spectral radius when no norm is supplied).
    """
    eigs = sort_spectrum(eigs)
    if eigs.size == 0:
        raise SpectrumError("no eigenvalues to classify")
    if zero_threshold is None:
        scale = matrix_norm if matrix_norm is not None else float(np.abs(eigs).max())
        zero_threshold = 1e-6 * scale
    mag = np.abs(eigs)
    classes = np.where(mag < zero_threshold, ZERO, np.where(np.abs(eigs.real) < slow_threshold, SLOW, FAST)).astype(object)
    if not np.any(classes == SLOW):
        raise SpectrumError(
            f"no slow eigenvalues with slow_threshold={slow_threshold} and zero_threshold={zero_threshold:g}"
        )
    return SpectrumReport(eigs, classes, float(slow_threshold), float(zero_threshold))


def analyse(
    rhs: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    slow_threshold: float = 0.5,
    backend: str = "qr",
    workers: int = 1,
) -> tuple[np.ndarray, SpectrumReport]:
    """Jacobian at ``y`` and its classified spectrum."""
    J = numerical_jacobian(rhs, y, workers=workers)
    eigs = eigenvalues(J, backend=backend)
    report = classify_spectrum(eigs, slow_threshold, matrix_norm=float(np.linalg.norm(J, 2)))
    return J, report
