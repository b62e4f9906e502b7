"""Characteristic-curve simulation: the brute-force oracle for every verdict.

A characteristic launched at radius R satisfies X'' = -lam m0(R) X^(1-n)
with X(0) = R, X'(0) = v0(R); its radial sensitivity Gamma = dX/dR obeys
the variational equation obtained by differentiating in R and is integrated
as a coupled system, so event location sees Gamma to integrator accuracy.
Breakdown is an event: Gamma reaching 0 (gradient focusing) or X reaching
0 at positive R (collapse).  Closed forms exist for n = 1 (quadratics) and
n = 4 (square root of a quadratic) and serve as exact references.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels
from .profiles import eval_density, eval_velocity, eval_velocity_derivative, mass

__all__ = [
    "CharState",
    "BreakdownEvent",
    "CharTrajectory",
    "FieldSlice",
    "SimulationError",
    "simulate",
    "simulate_fan",
    "closed_form_1d",
    "closed_form_4d",
    "collapse_time_4d",
    "detect_breakdown",
    "reconstruct",
    "energy_residual",
    "energy_residual_profile",
    "write_trajectory_csv",
    "write_slice_csv",
]


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CharState:
    t: float
    X: float
    Xp: float
    Gamma: float
    Gammap: float


@dataclass(frozen=True)
class BreakdownEvent:
    kind: str                     # "Gamma-zero" or "X-zero"
    t_lo: float
    t_hi: float
    low_confidence: bool = False

    @property
    def t_c(self):
        return 0.5 * (self.t_lo + self.t_hi)


class CharTrajectory:
    """Sampled characteristic with ODE-consistent dense interpolation.

    ``times``/``values`` hold the accepted integrator steps (values rows are
    X, X', Gamma, Gamma'); the last sample sits just before any event.
    """

    def __init__(self, R, times, values, event, horizon, params):
        self.R = R
        self.times = times
        self.values = values
        self.event = event
        self.horizon = horizon
        # (lam, m0, dm0, n, rho0, v0, v0p) frozen at launch
        self.lam, self.m0, self.dm0, self.n, self.rho0, self.v0, self.v0p = params

    def states(self):
        for i in range(len(self.times)):
            yield CharState(self.times[i], *self.values[i])

    def _derivs(self, row):
        x, xp, g, gp = row
        e1 = 1.0 - self.n
        f1 = -self.lam * self.m0 * x ** e1
        f3 = -self.lam * (self.dm0 * x ** e1 - (self.n - 1) * self.m0 * x ** -float(self.n) * g)
        return np.array([xp, f1, gp, f3])

    def state_at(self, t):
        """Cubic-Hermite interpolation between accepted steps."""
        ts = self.times
        if not ts[0] <= t <= ts[-1]:
            raise SimulationError(f"time {t} outside the sampled range [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t, side="right")) - 1
        if i >= len(ts) - 1:
            return CharState(ts[-1], *self.values[-1])
        h = ts[i + 1] - ts[i]
        th = (t - ts[i]) / h
        y0 = self.values[i]
        y1 = self.values[i + 1]
        d0 = self._derivs(y0)
        d1 = self._derivs(y1)
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th * th * (3 - 2 * th)
        h11 = th * th * (th - 1)
        y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
        return CharState(t, y[0], y[1], y[2], y[3])

    @property
    def min_gamma(self):
        return float(np.min(self.values[:, 2]))


@dataclass(frozen=True)
class FieldSlice:
    """Reconstructed (r, rho, v) snapshot from an event-free fan."""

    t: float
    r: np.ndarray
    rho: np.ndarray
    v: np.ndarray
    mass_residual: float          # relative slice-mass defect vs m0 difference


def simulate(data, cfg, R, horizon, tol=1e-10):
    """Integrate one characteristic to ``horizon`` or its first event."""
    if R <= 0 or horizon <= 0:
        raise SimulationError("simulate needs R > 0 and horizon > 0")
    n, lam = cfg.n, cfg.lam
    m0 = mass(data, n, R)
    rho0 = float(eval_density(data, R))
    dm0 = rho0 * R ** (n - 1)
    v0 = float(eval_velocity(data, R))
    v0p = float(eval_velocity_derivative(data, R))
    eps_x = 1e-12 * R
    atol = 1e-12 * max(1.0, R)
    ts, ys, status, ev_kind, ev_lo, ev_hi, _steps = _kernels.integrate_characteristic(
        lam, m0, dm0, float(n), R, v0, v0p, float(horizon), tol, atol, eps_x,
        2_000_000,
    )
    if status == _kernels.STATUS_MAXSTEPS:
        raise SimulationError(f"step budget exhausted at R={R}")
    event = None
    if status == _kernels.STATUS_EVENT:
        kind = "Gamma-zero" if ev_kind == _kernels.EVENT_GAMMA else "X-zero"
        event = BreakdownEvent(kind, ev_lo, ev_hi)
    elif status == _kernels.STATUS_UNDERFLOW:
        event = BreakdownEvent("X-zero", ev_lo, ev_hi, low_confidence=True)
    return CharTrajectory(R, ts, ys, event, horizon,
                          (lam, m0, dm0, n, rho0, v0, v0p))


def simulate_fan(data, cfg, radii, horizon, tol=1e-10, threads=1):
    """Independent trajectories for each radius; the mass cache is warmed
    sequentially (sorted) first so results do not depend on thread timing."""
    radii = sorted(float(R) for R in radii)
    for R in radii:
        mass(data, cfg.n, R)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda R: simulate(data, cfg, R, horizon, tol), radii))
    return [simulate(data, cfg, R, horizon, tol) for R in radii]


def closed_form_1d(data, lam, R, t):
    """n = 1: X = R + v0 t - lam m0 t^2/2 and Gamma = 1 + v0' t - lam rho0 t^2/2."""
    t = np.asarray(t, dtype=float)
    m0 = mass(data, 1, R)
    rho0 = float(eval_density(data, R))
    v0 = float(eval_velocity(data, R))
    v0p = float(eval_velocity_derivative(data, R))
    X = R + v0 * t - 0.5 * lam * m0 * t * t
    G = 1.0 + v0p * t - 0.5 * lam * rho0 * t * t
    return X, G


def _quantities_4d(data, lam, R):
    m0 = mass(data, 4, R)
    rho0 = float(eval_density(data, R))
    v0 = float(eval_velocity(data, R))
    v0p = float(eval_velocity_derivative(data, R))
    C = v0 * v0 - lam * m0 / R ** 2
    Cp = 2.0 * v0 * v0p - lam * R * rho0 + 2.0 * lam * m0 / R ** 3
    return m0, v0, v0p, C, Cp


def collapse_time_4d(data, lam, R):
    """First zero of the 4-d radicand R^2 + 2 v0 R t + C t^2, or None."""
    _, v0, _, C, _ = _quantities_4d(data, lam, R)
    # roots of C t^2 + 2 v0 R t + R^2
    if C == 0.0:
        if v0 >= 0.0:
            return None
        return -R / (2.0 * v0)
    disc = (v0 * R) ** 2 - C * R * R
    if disc < 0.0:
        return None
    roots = np.roots([C, 2.0 * v0 * R, R * R])
    real = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-12 and r.real > 0)
    return real[0] if real else None


def closed_form_4d(data, lam, R, t):
    """n = 4: X = sqrt(R^2 + 2 v0 R t + C t^2) and
    Gamma = (2R + 2 (v0 + v0' R) t + C' t^2) / (2X).

    Raises SimulationError (carrying .t_c) when the radicand vanishes inside
    the requested times; the flow collapses to the origin there.
    """
    t = np.asarray(t, dtype=float)
    _, v0, v0p, C, Cp = _quantities_4d(data, lam, R)
    rad = R * R + 2.0 * v0 * R * t + C * t * t
    if np.any(rad <= 0.0):
        t_c = collapse_time_4d(data, lam, R)
        exc = SimulationError(f"collapse at t={t_c}")
        exc.t_c = t_c
        raise exc
    X = np.sqrt(rad)
    G = (2.0 * R + 2.0 * (v0 + v0p * R) * t + Cp * t * t) / (2.0 * X)
    return X, G


def detect_breakdown(traj):
    """Earliest detected event of a completed trajectory, or None."""
    return traj.event


def reconstruct(fan, t):
    """Rebuild the (r, rho, v) fields at time t from an event-free fan.

    rho(t, X(t,R)) = R^(n-1) rho0(R) / (X^(n-1) Gamma) and v = X'.  The
    slice mass integral is compared against the launch-mass difference and
    reported as FieldSlice.mass_residual.
    """
    if not fan:
        raise SimulationError("empty fan")
    for traj in fan:
        if traj.event is not None and traj.event.t_lo <= t:
            raise SimulationError(f"fan-broken: event before t={t} at R={traj.R}")
        if traj.times[-1] < t:
            raise SimulationError(f"fan-broken: trajectory at R={traj.R} ends before t={t}")
    fan = sorted(fan, key=lambda tr: tr.R)
    n = fan[0].n
    rs, rhos, vs = [], [], []
    for traj in fan:
        st = traj.state_at(t)
        rho = traj.R ** (n - 1) * traj.rho0 / (st.X ** (n - 1) * st.Gamma)
        rs.append(st.X)
        rhos.append(max(rho, 0.0))
        vs.append(st.Xp)
    rs = np.array(rs)
    rhos = np.array(rhos)
    vs = np.array(vs)
    if np.any(np.diff(rs) <= 0):
        raise SimulationError("fan-broken: characteristics crossed between samples")
    expected = fan[-1].m0 - fan[0].m0
    if len(rs) >= 4:
        from scipy.interpolate import PchipInterpolator

        integrand = PchipInterpolator(rs, rhos * rs ** (n - 1))
        got = float(integrand.integrate(rs[0], rs[-1]))
    else:
        got = float(np.trapezoid(rhos * rs ** (n - 1), rs))
    residual = abs(got - expected) / (abs(fan[-1].m0) + 1e-300)
    return FieldSlice(t, rs, rhos, vs, residual)


def energy_residual(state, data, cfg, R):
    """|X'^2 - (energy identity)|, an integration-quality diagnostic.

    n >= 3: X'^2 = v0^2 - 2 lam m0/((n-2) R^(n-2)) + 2 lam m0/((n-2) X^(n-2));
    n = 2:  X'^2 = v0^2 - 2 lam m0 log(X/R).
    """
    n, lam = cfg.n, cfg.lam
    if n < 2:
        raise SimulationError("the energy identity needs n >= 2")
    m0 = mass(data, n, R)
    v0 = float(eval_velocity(data, R))
    X, Xp = state.X, state.Xp
    if n >= 3:
        rhs = (v0 * v0 - 2.0 * lam * m0 / ((n - 2) * R ** (n - 2))
               + 2.0 * lam * m0 / ((n - 2) * X ** (n - 2)))
    else:
        rhs = v0 * v0 - 2.0 * lam * m0 * math.log(X / R)
    return abs(Xp * Xp - rhs)


def energy_residual_profile(traj, data, cfg):
    """Vectorized energy residual along a whole trajectory."""
    n, lam = cfg.n, cfg.lam
    if n < 2:
        raise SimulationError("the energy identity needs n >= 2")
    X = traj.values[:, 0]
    Xp = traj.values[:, 1]
    v0sq = traj.v0 * traj.v0
    if n >= 3:
        rhs = (v0sq - 2.0 * lam * traj.m0 / ((n - 2) * traj.R ** (n - 2))
               + 2.0 * lam * traj.m0 / ((n - 2) * X ** (n - 2)))
    else:
        rhs = v0sq - 2.0 * lam * traj.m0 * np.log(X / traj.R)
    return np.abs(Xp * Xp - rhs)


def write_trajectory_csv(traj, path):
    header = "t,X,Xp,Gamma,Gammap"
    data = np.column_stack([traj.times, traj.values])
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def write_slice_csv(field_slice, path):
    header = "r,rho,v"
    data = np.column_stack([field_slice.r, field_slice.rho, field_slice.v])
    np.savetxt(path, data, delimiter=",", header=header, comments="")
