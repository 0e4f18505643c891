"""Time integration: Dormand-Prince 5(4) and an implicit trapezoidal rule.

Both methods control the local error per step against
``abs_tol + rel_tol * |y|`` (max norm) and return states exactly at the
requested output times by interpolating within steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

RHS = Callable[[float, np.ndarray], np.ndarray]

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# quartic continuous extension (Shampine 1986)
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

RK45 = "rk45"
TRAPEZOIDAL = "trapezoidal"


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float, stiffness: float | None = None):
        super().__init__(message)
        self.time = time
        self.stiffness = stiffness


@dataclass
class IntegratorConfig:
    method: str = RK45
    rel_tol: float = 1e-7
    abs_tol: float = 1e-9
    max_step: float = math.inf
    initial_step: float | None = None
    output_times: Sequence[float] | None = None
    fixed_step: float | None = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in (RK45, TRAPEZOIDAL):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.output_times is not None:
            ts = np.asarray(self.output_times, dtype=float)
            if ts.size > 1 and np.any(np.diff(ts) <= 0):
                raise ValueError("output times must be strictly increasing")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0
    jacobians: int = 0
    factorizations: int = 0
    stats: dict = field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        k = int(np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))[0])
        return self.states[k]


class _Counted:
    def __init__(self, rhs: RHS):
        self.rhs = rhs
        self.count = 0

    def __call__(self, t, y):
        self.count += 1
        return np.asarray(self.rhs(t, y), dtype=float)


def _scaled_max(err, y0, y1, cfg) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale)) if err.size else 0.0


def _initial_step(f, t0, y0, f0, cfg, order) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.max(np.abs(f(t0 + h0, y1) - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / (order + 1))
    return min(100 * h0, h1, cfg.max_step)


def integrate(rhs: RHS, y0, span: tuple[float, float], cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``span`` and sample at ``cfg.output_times``.

    Output times default to the two ends of the span.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, span)
    if not t1 > t0:
        raise ValueError(f"empty integration span {span}")
    outs = np.array([t0, t1] if cfg.output_times is None else cfg.output_times, dtype=float)
    if outs.size and (outs[0] < t0 - 1e-12 or outs[-1] > t1 + 1e-12):
        raise ValueError("output times must lie within the span")
    f = _Counted(rhs)
    y0 = np.array(y0, dtype=float)
    if cfg.method == RK45:
        traj = _dopri(f, t0, t1, y0, outs, cfg)
    else:
        traj = _trapezoidal(f, t0, t1, y0, outs, cfg)
    traj.evaluations = f.count
    return traj


class _Sampler:
    def __init__(self, outs: np.ndarray, n: int):
        self.outs = outs
        self.states = np.empty((outs.size, n))
        self.k = 0

    def emit(self, t_end: float, interp: Callable[[float], np.ndarray], final: bool = False) -> None:
        while self.k < self.outs.size and (self.outs[self.k] <= t_end or final):
            self.states[self.k] = interp(self.outs[self.k])
            self.k += 1


def _dopri(f, t0, t1, y0, outs, cfg) -> Trajectory:
    n = y0.size
    sampler = _Sampler(outs, n)
    t, y = t0, y0.copy()
    fy = f(t, y)
    sampler.emit(t, lambda s: y0.copy())
    if cfg.fixed_step:
        h = cfg.fixed_step
    else:
        h = cfg.initial_step or _initial_step(f, t0, y0, fy, cfg, 5)
    K = np.empty((7, n))
    steps = rejected = 0
    err_prev = 1e-4
    beta = 0.04
    alpha = 0.2 - 0.75 * beta
    last_reject = False
    while t < t1:
        if steps + rejected >= cfg.max_steps:
            raise IntegrationError(f"step limit reached at t={t:.6g}", t)
        h = min(h, cfg.max_step, t1 - t)
        if t1 - (t + h) < 1e-12 * max(1.0, abs(t1)):
            h = t1 - t
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationError(f"step size underflow at t={t:.6g}", t, _stiffness(K, y, h))
        K[0] = fy
        for s in range(1, 6):
            K[s] = f(t + _C[s] * h, y + h * np.dot(_A[s], K[:s]))
        y_new = y + h * np.dot(_B, K[:6])
        K[6] = f(t + h, y_new)
        if cfg.fixed_step:
            err = 0.0
        else:
            err = _scaled_max(h * np.dot(_E, K), y, y_new, cfg)
        if err <= 1.0:
            Kc, yc, tc, hc = K.copy(), y.copy(), t, h

            def interp(s, Kc=Kc, yc=yc, tc=tc, hc=hc):
                theta = (s - tc) / hc
                q = Kc.T @ _P
                return yc + hc * q @ (theta ** np.arange(1, 5))

            t = t + h
            y = y_new
            fy = K[6].copy()
            steps += 1
            sampler.emit(t, interp, final=t >= t1)
            if not cfg.fixed_step:
                if err == 0:
                    fac = 10.0
                else:
                    fac = 0.9 * err ** (-alpha) * err_prev**beta
                    fac = min(10.0, max(0.2, fac))
                if last_reject:
                    fac = min(fac, 1.0)
                h *= fac
                err_prev = max(err, 1e-4)
            last_reject = False
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** (-alpha))
            last_reject = True
    return Trajectory(outs, sampler.states, steps, rejected)


def _stiffness(K, y, h) -> float | None:
    num = np.linalg.norm(K[6] - K[5])
    return float(num) if np.isfinite(num) else None


def finite_difference_jacobian(f: RHS, t: float, y: np.ndarray, fy: np.ndarray | None = None) -> np.ndarray:
    """Dense forward-difference Jacobian."""
    if fy is None:
        fy = f(t, y)
    n = y.size
    J = np.empty((n, n))
    sqrt_eps = math.sqrt(np.finfo(float).eps)
    for k in range(n):
        dk = sqrt_eps * max(abs(y[k]), 1.0)
        yk = y.copy()
        yk[k] += dk
        J[:, k] = (f(t, yk) - fy) / dk
    return J


def _trapezoidal(f, t0, t1, y0, outs, cfg) -> Trajectory:
    n = y0.size
    sampler = _Sampler(outs, n)
    t, y = t0, y0.copy()
    fy = f(t, y)
    sampler.emit(t, lambda s: y0.copy())
    h = cfg.fixed_step or cfg.initial_step or _initial_step(f, t0, y0, fy, cfg, 2)
    stats = {"jacobians": 0, "factorizations": 0, "newton_failures": 0}
    J = None
    lu_cache: dict = {}
    steps = rejected = 0

    def factor(hs):
        # a step needs factors for h and h/2; keep the two most recent
        if hs not in lu_cache:
            if len(lu_cache) >= 2:
                lu_cache.pop(next(iter(lu_cache)))
            stats["factorizations"] += 1
            lu_cache[hs] = scipy.linalg.lu_factor(np.eye(n) - 0.5 * hs * J)
        return lu_cache[hs]

    def solve(tn, yn, fn, hs):
        """One trapezoidal step with modified Newton; returns (y, f(y)) or None."""
        nonlocal J
        z = yn + hs * fn
        lu = factor(hs)
        rate_prev = None
        dz_prev = None
        for it in range(8):
            fz = f(tn + hs, z)
            g = z - yn - 0.5 * hs * (fn + fz)
            dz = scipy.linalg.lu_solve(lu, -g)
            z = z + dz
            nrm = _scaled_max(dz, yn, z, cfg)
            if dz_prev is not None and dz_prev > 0:
                rate_prev = nrm / dz_prev
                if rate_prev >= 0.9:
                    return None
            if nrm < 1e-2 or (rate_prev is not None and rate_prev / (1 - rate_prev) * nrm < 1e-2):
                return z, f(tn + hs, z)
            dz_prev = nrm
        return None

    while t < t1:
        if steps + rejected >= cfg.max_steps:
            raise IntegrationError(f"step limit reached at t={t:.6g}", t)
        h = min(h, cfg.max_step, t1 - t)
        if t1 - (t + h) < 1e-12 * max(1.0, abs(t1)):
            h = t1 - t
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationError(f"step size underflow at t={t:.6g}", t)
        if J is None:
            J = finite_difference_jacobian(f, t, y, fy)
            stats["jacobians"] += 1
            lu_cache.clear()
        if cfg.fixed_step:
            res = solve(t, y, fy, h)
            if res is None:
                raise IntegrationError(f"Newton iteration did not converge at t={t:.6g}", t)
            y_new, f_new = res
            err = 0.0
        else:
            big = solve(t, y, fy, h)
            half1 = solve(t, y, fy, h / 2) if big is not None else None
            half2 = solve(t + h / 2, half1[0], half1[1], h / 2) if half1 is not None else None
            if half2 is None:
                stats["newton_failures"] += 1
                if stats["newton_failures"] > 50 and h < 1e-10:
                    raise IntegrationError(f"Newton iteration did not converge at t={t:.6g}", t)
                J = None
                h *= 0.5
                rejected += 1
                continue
            y_new, f_new = half2
            err = _scaled_max((y_new - big[0]) / 3.0, y, y_new, cfg)
        if err <= 1.0:
            yc, fc, tc, hc, yn, fn = y.copy(), fy.copy(), t, h, y_new.copy(), f_new.copy()

            def interp(s, yc=yc, fc=fc, tc=tc, hc=hc, yn=yn, fn=fn):
                th = (s - tc) / hc
                h10 = th**3 - 2 * th**2 + th
                h01 = -2 * th**3 + 3 * th**2
                h11 = th**3 - th**2
                return yc + h01 * (yn - yc) + h10 * hc * fc + h11 * hc * fn

            t += h
            y, fy = y_new, f_new
            steps += 1
            sampler.emit(t, interp, final=t >= t1)
            if not cfg.fixed_step:
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** (-1 / 3)))
                if fac > 1.2 or fac < 1.0:
                    h *= fac
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** (-1 / 3))
    traj = Trajectory(outs, sampler.states, steps, rejected)
    traj.jacobians = stats["jacobians"]
    traj.factorizations = stats["factorizations"]
    traj.stats = stats
    return traj
