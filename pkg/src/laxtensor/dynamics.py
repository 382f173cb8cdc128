"""Hamiltonian trajectories: right-hand side, integrators, drift monitoring.

The adaptive integrator is the Dormand-Prince 5(4) pair with first-same-as-last
stages, standard step-size control and its 4th-order continuous extension for
dense output on a uniform grid.  The fixed-step mode is classical RK4.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import dual
from .manifold import ChartDomainError, MetricSpec, check_domain, metric_derivatives
from .phasespace import HamiltonianSpec, PhasePoint, gradients

HORIZON_GUARD = 1e-6


class MaxStepsExceeded(RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ChartExitError(ChartDomainError):
    """Integration left (or came within the guard of the boundary of) the chart."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class IntegratorConfig:
    mode: str = "adaptive"
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    step: float = 1e-2
    max_steps: int = 2_000_000
    output_step: Optional[float] = None
    initial_step: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"unknown integrator mode {self.mode!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.output_step is not None and self.output_step <= 0:
            raise ValueError("output_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    max_error: float = 0.0


@dataclass
class Trajectory:
    times: np.ndarray
    xs: np.ndarray
    ps: np.ndarray
    stats: StepStats = field(default_factory=StepStats)

    def __len__(self):
        return len(self.times)

    @property
    def states(self):
        return [PhasePoint(x, p) for x, p in zip(self.xs, self.ps)]

    def state(self, i: int) -> PhasePoint:
        return PhasePoint(self.xs[i], self.ps[i])

    def uniform_step(self, rtol: float = 1e-9) -> float:
        dt = np.diff(self.times)
        if len(dt) == 0:
            raise ValueError("trajectory has a single sample")
        h = (self.times[-1] - self.times[0]) / len(dt)
        if np.max(np.abs(dt - h)) > rtol * max(abs(h), 1.0):
            raise ValueError("trajectory grid is not uniform")
        return float(h)


# right-hand side ----------------------------------------------------------------


def hamilton_rhs(H: HamiltonianSpec, spec: MetricSpec, z: PhasePoint):
    """``(xdot, pdot) = (dH/dp, -dH/dx)``.

    Geodesic and charged kinds use ``d g^-1 = -g^-1 dg g^-1`` on one dual pass
    over the metric; custom kinds differentiate ``H`` directly.
    """
    x, p = np.asarray(z.x, dtype=float), np.asarray(z.p, dtype=float)
    if H.kind == "custom":
        hx, hp = gradients(lambda a, b: H.fn(spec, a, b), x, p)
        return hp, -hx
    D = spec.dimension
    g, dg = metric_derivatives(spec, x)
    gi = np.linalg.inv(g)
    pi, dxi = p, None
    if H.kind == "charged":
        xi, dxi = dual.split(dual.as_array(H.potential(dual.seed(x, 0, D))), D)
        pi = p - H.coupling * xi
    pu = gi @ pi
    m = H.mass
    # dH/dx^a = -(1/2m) pi^k d_a g_kl pi^l + (1/m) pi^l d_a pi_l
    dHdx = -0.5 / m * np.einsum("k,kla,l->a", pu, dg, pu)
    if dxi is not None:
        dHdx = dHdx - (H.coupling / m) * (pu @ dxi)
    return pu / m, -dHdx


def _make_rhs(H, spec, stats):
    D = spec.dimension

    def f(y):
        stats.evaluations += 1
        xd, pd = hamilton_rhs(H, spec, PhasePoint(y[:D], y[D:]))
        return np.concatenate([xd, pd])

    return f


# Dormand-Prince 5(4) --------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + th h) = y + h K^T P [th, th^2, th^3, th^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _rms(v):
    return math.sqrt(float(np.mean(v * v)))


def _initial_step(f, y0, f0, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


class _Recorder:
    def __init__(self, D, t0, y0, grid):
        self.D = D
        self.t, self.y = [t0], [y0.copy()]
        self.grid = grid  # None -> record every accepted step
        self.next = 1

    def step(self, t_old, y_old, h, K, t_new, y_new):
        if self.grid is None:
            self.t.append(t_new)
            self.y.append(y_new.copy())
            return
        Q = K.T @ _P
        while self.next < len(self.grid) and self.grid[self.next] <= t_new + 1e-12 * abs(h):
            tg = self.grid[self.next]
            if abs(tg - t_new) <= 1e-12 * abs(h):
                yg = y_new
            else:
                th = (tg - t_old) / h
                yg = y_old + h * (Q @ np.array([th, th**2, th**3, th**4]))
            self.t.append(float(tg))
            self.y.append(np.array(yg, copy=True))
            self.next += 1

    def trajectory(self, stats):
        y = np.array(self.y)
        return Trajectory(np.array(self.t), y[:, : self.D], y[:, self.D:], stats)


def _grid(t_end, dt):
    n = int(round(t_end / dt))
    if abs(n * dt - t_end) > 1e-9 * t_end:
        n = int(math.floor(t_end / dt))
    return np.arange(n + 1) * dt


def _guard(spec, y, D):
    x = y[:D]
    if not np.all(np.isfinite(y)):
        return "non-finite state"
    if not spec.in_domain(x):
        return f"left chart ({spec.domain_description})"
    if spec.boundary_distance is not None and spec.boundary_distance(x) < HORIZON_GUARD:
        return f"within {HORIZON_GUARD:g} of the chart boundary"
    return None


def integrate(H: HamiltonianSpec, spec: MetricSpec, z0: PhasePoint, t_end: float,
              config: Optional[IntegratorConfig] = None) -> Trajectory:
    """Integrate Hamilton's equations from ``z0`` over ``[0, t_end]``."""
    config = config or IntegratorConfig()
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    D = spec.dimension
    check_domain(spec, z0.x)
    y0 = np.concatenate([np.asarray(z0.x, dtype=float), np.asarray(z0.p, dtype=float)])
    stats = StepStats()
    f = _make_rhs(H, spec, stats)
    if config.mode == "fixed":
        return _integrate_rk4(f, spec, y0, t_end, config, stats, D)
    return _integrate_dp54(f, spec, y0, t_end, config, stats, D)


def _integrate_rk4(f, spec, y0, t_end, config, stats, D):
    n = max(1, int(round(t_end / config.step)))
    if abs(n * config.step - t_end) > 1e-9 * t_end:
        n = int(math.ceil(t_end / config.step))
    if n > config.max_steps:
        raise MaxStepsExceeded(f"{n} fixed steps exceed max_steps={config.max_steps}")
    h = t_end / n
    ts, ys = [0.0], [y0]
    y = y0
    for i in range(n):
        try:
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
        except ChartDomainError as exc:
            raise ChartExitError(f"stage left chart at t={ts[-1]:.6g}: {exc}",
                                 _partial(ts, ys, D, stats)) from exc
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        stats.accepted += 1
        ts.append((i + 1) * h)
        ys.append(y)
        why = _guard(spec, y, D)
        if why:
            raise ChartExitError(f"halted at t={ts[-1]:.6g}: {why}", _partial(ts[:-1], ys[:-1], D, stats))
    return _partial(ts, ys, D, stats)


def _partial(ts, ys, D, stats):
    y = np.array(ys)
    return Trajectory(np.array(ts), y[:, :D], y[:, D:], stats)


def _integrate_dp54(f, spec, y0, t_end, config, stats, D):
    rtol, atol = config.rel_tol, config.abs_tol
    grid = _grid(t_end, config.output_step) if config.output_step else None
    rec = _Recorder(D, 0.0, y0, grid)
    f0 = f(y0)
    h = config.initial_step or _initial_step(f, y0, f0, rtol, atol)
    t, y = 0.0, y0
    K = np.empty((7, y0.size))
    h_min_fac = 1e-14
    while t < t_end:
        if stats.accepted + stats.rejected >= config.max_steps:
            raise MaxStepsExceeded(f"max_steps={config.max_steps} reached at t={t:.6g}", rec.trajectory(stats))
        h = min(h, t_end - t)
        if h <= h_min_fac * max(abs(t), 1.0):
            raise ChartExitError(f"step size underflow at t={t:.6g}", rec.trajectory(stats))
        K[0] = f0
        try:
            for s in range(1, 6):
                K[s] = f(y + h * (_A[s] @ K[:s]))
            y_new = y + h * (_B @ K[:6])
            f_new = f(y_new)
        except ChartDomainError:
            # trial stage outside the chart: shrink and retry
            stats.rejected += 1
            h *= 0.25
            continue
        K[6] = f_new
        err = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = _rms(err / scale)
        if en <= 1.0:
            t_new = t + h
            if t_end - t_new < 1e-12 * t_end:
                t_new = t_end
            why = _guard(spec, y_new, D)
            if why:
                raise ChartExitError(f"halted at t={t_new:.6g}: {why}", rec.trajectory(stats))
            stats.accepted += 1
            stats.max_error = max(stats.max_error, en)
            rec.step(t, y, h, K, t_new, y_new)
            t, y, f0 = t_new, y_new, f_new
            fac = 10.0 if en == 0 else min(10.0, 0.9 * en ** -0.2)
            h *= fac
        else:
            stats.rejected += 1
            h *= max(0.2, 0.9 * en ** -0.2)
    return rec.trajectory(stats)


# monitoring --------------------------------------------------------------------------


@dataclass(frozen=True)
class Drift:
    name: str
    initial: float
    max_abs_drift: float
    relative_drift: float
    scale: float


def monitor(traj: Trajectory, observables: dict, scales: Optional[dict] = None) -> dict:
    """Drift of each ``name -> f(PhasePoint)`` along ``traj``.

    The relative drift divides by ``max(|f(z0)|, scale)`` where ``scale``
    comes from ``scales`` when given (for quantities that vanish identically)
    and otherwise from the largest value seen along the trajectory.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    scales = scales or {}
    out = {}
    states = traj.states
    for name, fn in observables.items():
        vals = np.array([float(fn(z)) for z in states])
        drift = float(np.max(np.abs(vals - vals[0])))
        sc = scales.get(name)
        if sc is None:
            sc = max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
        denom = max(abs(vals[0]), sc)
        out[name] = Drift(name, float(vals[0]), drift, drift / denom, float(sc))
    return out


def series(traj: Trajectory, observables: dict) -> np.ndarray:
    states = traj.states
    return np.array([[float(fn(z)) for fn in observables.values()] for z in states]).reshape(len(states), -1)


def write_csv(path, traj: Trajectory, observables: Optional[dict] = None) -> None:
    """CSV with ``t, x0.., p0.., <observables>`` at 17 significant digits."""
    observables = observables or {}
    D = traj.xs.shape[1]
    header = ["t"] + [f"x{i}" for i in range(D)] + [f"p{i}" for i in range(D)] + list(observables)
    obs = series(traj, observables) if observables else np.zeros((len(traj), 0))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(traj)):
            row = [traj.times[i], *traj.xs[i], *traj.ps[i], *obs[i]]
            w.writerow([format(float(v), ".17g") for v in row])


def circular_orbit(M: float, r: float, mass: float = 1.0) -> PhasePoint:
    """Equatorial circular Schwarzschild orbit at radius ``r`` (requires ``r > 3M``).

    ``p_t`` and ``p_phi`` come from solving ``V_eff'(r) = 0`` with
    ``V_eff = (1 - 2M/r)(m^2 + L^2/r^2)``.
    """
    from scipy.optimize import brentq

    if r <= 3 * M:
        raise ValueError("no timelike circular orbit inside r = 3M")

    def dV(L):
        return 2 * M / r**2 * (mass**2 + L * L / r**2) - (1 - 2 * M / r) * 2 * L * L / r**3

    L = brentq(dV, 1e-12, 100.0 * r * mass)
    E = math.sqrt((1 - 2 * M / r) * (mass**2 + L * L / r**2))
    return PhasePoint([0.0, r, math.pi / 2, 0.0], [-E, 0.0, 0.0, L])


def mass_shell(spec: MetricSpec, x, p, index: int, mass: float = 1.0, sign: float = 1.0,
               offset=None) -> PhasePoint:
    """Replace ``p[index]`` so that ``g^ab q_a q_b = -mass^2`` for ``q = p - offset``.

    ``offset`` is ``e xi`` for charged motion (zero by default); the root is
    chosen by ``sign``.
    """
    from .manifold import inverse_metric_at

    gi = inverse_metric_at(spec, x)
    off = np.zeros(len(p)) if offset is None else np.asarray(offset, dtype=float)
    p = np.array(p, dtype=float) - off
    p[index] = 0.0
    a = gi[index, index]
    b = 2.0 * (gi[index] @ p)
    c = p @ gi @ p + mass * mass
    disc = b * b - 4 * a * c
    if disc < 0:
        raise ValueError("no real momentum completes the mass shell here")
    p[index] = (-b + sign * math.sqrt(disc)) / (2 * a)
    return PhasePoint(x, p + off)
