"""Radial initial-data profiles: density rho0(r) >= 0 and velocity v0(r).

Profiles are immutable after construction and evaluate pointwise or on numpy
arrays.  Analytic derivatives are provided for every built-in family;
tabulated data falls back to high-order central differences of the monotone
cubic interpolant.  The cumulative mass integral m0(R) = int_0^R rho0(s)
s^(n-1) ds is memoized on a refinable radius grid so that radius scans pay
one short incremental quadrature per new radius.
"""

from __future__ import annotations

import logging
import math
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .quadrature import IntegralSpec, integrate

__all__ = [
    "RadialProfile",
    "ConstantProfile",
    "ExponentialDecayProfile",
    "RationalDecayProfile",
    "GaussianProfile",
    "CompactBumpProfile",
    "PowerSineProfile",
    "EnvelopedSineProfile",
    "PositiveRootVelocity",
    "TabulatedProfile",
    "InitialData",
    "ProblemConfig",
    "ProfileError",
    "make_profile",
    "load_table",
    "eval_density",
    "eval_velocity",
    "eval_velocity_derivative",
    "mass",
    "central_derivative",
]

logger = logging.getLogger(__name__)

_VZERO_TOL = 1e-12  # required |v0(0)|


class ProfileError(ValueError):
    pass


def central_derivative(f, r, h=None):
    """Five-point central difference with one Richardson step (~6th order).

    Step h = max(1e-5*r, 1e-8), shrunk so the stencil stays inside r > 0.
    """
    if r <= 0:
        raise ProfileError("numeric derivative needs r > 0")
    if h is None:
        h = max(1e-5 * r, 1e-8)
    h = min(h, 0.25 * r)

    def d4(hh):
        return (f(r - 2 * hh) - 8 * f(r - hh) + 8 * f(r + hh) - f(r + 2 * hh)) / (12 * hh)

    d = (16.0 * d4(0.5 * h) - d4(h)) / 15.0
    if not math.isfinite(d):
        raise ProfileError(f"derivative-undefined at r={r}")
    return d


class RadialProfile:
    """Base class; subclasses define value() and, if available, derivative()."""

    kind = "abstract"

    def __init__(self, **params):
        self.params = dict(params)

    def value(self, r):
        raise NotImplementedError

    def derivative(self, r):
        """Analytic derivative, or None to request numeric differentiation."""
        return None

    @property
    def derivative_source(self):
        return "analytic" if self.derivative(1.0) is not None else "numeric"

    def kink_radii(self):
        """Radii where the data itself has a slope discontinuity (tabulated only)."""
        return ()

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


class ConstantProfile(RadialProfile):
    kind = "constant"

    def __init__(self, value=1.0):
        super().__init__(value=float(value))
        self._c = float(value)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.full_like(r, self._c) if r.ndim else self._c

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return np.zeros_like(r) if r.ndim else 0.0


class ExponentialDecayProfile(RadialProfile):
    """amplitude * exp(-rate * r)"""

    kind = "exponential-decay"

    def __init__(self, amplitude=1.0, rate=1.0):
        super().__init__(amplitude=float(amplitude), rate=float(rate))
        self._a, self._b = float(amplitude), float(rate)

    def value(self, r):
        return self._a * np.exp(-self._b * np.asarray(r, dtype=float))

    def derivative(self, r):
        return -self._a * self._b * np.exp(-self._b * np.asarray(r, dtype=float))


class RationalDecayProfile(RadialProfile):
    """amplitude / (1 + (r/scale)^2)"""

    kind = "rational-decay"

    def __init__(self, amplitude=1.0, scale=1.0):
        if scale <= 0:
            raise ProfileError("rational-decay scale must be positive")
        super().__init__(amplitude=float(amplitude), scale=float(scale))
        self._a, self._s = float(amplitude), float(scale)

    def value(self, r):
        x = np.asarray(r, dtype=float) / self._s
        return self._a / (1.0 + x * x)

    def derivative(self, r):
        x = np.asarray(r, dtype=float) / self._s
        return -2.0 * self._a * x / (self._s * (1.0 + x * x) ** 2)


class GaussianProfile(RadialProfile):
    """amplitude * exp(-(r/width)^2)"""

    kind = "gaussian"

    def __init__(self, amplitude=1.0, width=1.0):
        if width <= 0:
            raise ProfileError("gaussian width must be positive")
        super().__init__(amplitude=float(amplitude), width=float(width))
        self._a, self._w = float(amplitude), float(width)

    def value(self, r):
        x = np.asarray(r, dtype=float) / self._w
        return self._a * np.exp(-x * x)

    def derivative(self, r):
        x = np.asarray(r, dtype=float) / self._w
        return -2.0 * self._a * x * np.exp(-x * x) / self._w


class CompactBumpProfile(RadialProfile):
    """Smooth mollifier amplitude * exp(1 - 1/(1-(r/radius)^2)) on r < radius, else 0."""

    kind = "compact-bump"

    def __init__(self, amplitude=1.0, radius=1.0):
        if radius <= 0:
            raise ProfileError("compact-bump radius must be positive")
        super().__init__(amplitude=float(amplitude), radius=float(radius))
        self._a, self._s = float(amplitude), float(radius)

    def value(self, r):
        x = np.asarray(r, dtype=float) / self._s
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            xi = x[inside] if x.ndim else x
            if x.ndim:
                out[inside] = self._a * np.exp(1.0 - 1.0 / (1.0 - xi * xi))
            else:
                out = self._a * np.exp(1.0 - 1.0 / (1.0 - x * x)) if inside else 0.0
        return out

    def derivative(self, r):
        x = np.asarray(r, dtype=float) / self._s
        v = self.value(r)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            g = np.where(np.abs(x) < 1.0, -2.0 * x / (self._s * (1.0 - x * x) ** 2), 0.0)
        out = v * g
        return out if x.ndim else float(out)


class PowerSineProfile(RadialProfile):
    """amplitude * r^power * sin(frequency*r); frequency 0 drops the sine factor.

    With frequency 0 this is the pure power amplitude * r^power (used for
    square-root velocity data); power must be > 0 so the profile vanishes at
    the origin.
    """

    kind = "power-times-sine"

    def __init__(self, amplitude=1.0, power=1.0, frequency=0.0):
        if power <= 0:
            raise ProfileError("power-times-sine power must be positive")
        super().__init__(
            amplitude=float(amplitude), power=float(power), frequency=float(frequency)
        )
        self._a, self._p, self._w = float(amplitude), float(power), float(frequency)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        rp = np.where(r > 0, r, 0.0) ** self._p
        if self._w == 0.0:
            out = self._a * rp
        else:
            out = self._a * rp * np.sin(self._w * r)
        return out if r.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rp1 = np.where(r > 0, r, np.nan) ** (self._p - 1.0)
        if self._w == 0.0:
            out = self._a * self._p * rp1
        else:
            rp = np.where(r > 0, r, 0.0) ** self._p
            out = self._a * (
                self._p * rp1 * np.sin(self._w * r) + self._w * rp * np.cos(self._w * r)
            )
        return out if r.ndim else float(out)


class EnvelopedSineProfile(RadialProfile):
    """amplitude * sin(frequency*r) / sqrt(e^r + e^(1/r)).

    The envelope decays like e^(-r/2) outward and e^(-1/(2r)) toward the
    origin, so the profile and all derivatives vanish at r = 0.  Evaluated in
    a factored form that never forms e^r or e^(1/r) directly.
    """

    kind = "enveloped-sine"

    def __init__(self, amplitude=1.0, frequency=1.0):
        super().__init__(amplitude=float(amplitude), frequency=float(frequency))
        self._a, self._w = float(amplitude), float(frequency)

    def _envelope(self, r):
        # (e^r + e^(1/r))^(-1/2) = e^(-M/2) * (1 + e^(m-M))^(-1/2), M = max(r, 1/r)
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            inv = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), np.inf)
        big = np.maximum(r, inv)
        small = np.minimum(r, inv)
        g = np.exp(np.clip(small - big, -745.0, 0.0))
        env = np.exp(-0.5 * np.minimum(big, 1490.0)) / np.sqrt(1.0 + g)
        return np.where(r > 0, env, 0.0), big, g

    def value(self, r):
        r = np.asarray(r, dtype=float)
        env, _, _ = self._envelope(r)
        out = self._a * np.sin(self._w * r) * env
        return out if r.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        env, big, g = self._envelope(r)
        # E = e^r + e^(1/r); E'/E = (e^r - e^(1/r)/r^2) / E, factored by e^big
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            inv2 = np.where(r > 0, 1.0 / np.where(r > 0, r * r, 1.0), np.inf)
            outward = big == r  # e^r dominates
            ratio = np.where(outward, (1.0 - g * inv2) / (1.0 + g), (g - inv2) / (1.0 + g))
        dlog_env = -0.5 * ratio  # d/dr log envelope
        out = self._a * env * (self._w * np.cos(self._w * r) + np.sin(self._w * r) * dlog_env)
        out = np.where(r > 0, out, 0.0)
        return out if r.ndim else float(out)


class TabulatedProfile(RadialProfile):
    """Monotone cubic (PCHIP) interpolation of sampled (r, value) data.

    Abscissae must be strictly increasing and include r = 0.  Beyond the last
    node the profile holds its final value.  Radii where the sampled slopes
    jump are reported by kink_radii(); derivative-based criteria evaluated
    there should not be trusted.
    """

    kind = "tabulated"

    def __init__(self, radii, values):
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise ProfileError("tabulated profile needs matching 1-d r/value arrays")
        if radii[0] != 0.0:
            raise ProfileError("tabulated profile must include r0 = 0")
        if not np.all(np.diff(radii) > 0):
            raise ProfileError("tabulated abscissae must be strictly increasing")
        super().__init__(n_points=int(radii.size))
        self._r = radii
        self._v = values
        self._interp = PchipInterpolator(radii, values, extrapolate=False)
        slopes = np.diff(values) / np.diff(radii)
        jumps = np.abs(np.diff(slopes))
        scale = np.maximum(np.abs(slopes[:-1]), np.abs(slopes[1:]))
        self._kinks = tuple(radii[1:-1][jumps > 0.25 * scale + 1e-12 * (1 + scale)])

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = self._interp(np.clip(r, 0.0, self._r[-1]))
        out = np.where(r >= self._r[-1], self._v[-1], out)
        return out if r.ndim else float(out)

    def kink_radii(self):
        return self._kinks


class PositiveRootVelocity(RadialProfile):
    """Velocity balancing the attractive field exactly: v0^2 = 2*lam*m0(r)/((n-2) r^(n-2)).

    Requires lam > 0 and n >= 3 (the balance has no real root otherwise).
    Both value and derivative come from the density's cached mass integral,
    with no numeric differentiation.
    """

    kind = "positive-root"

    def __init__(self, density, n, lam):
        if lam <= 0 or n < 3:
            raise ProfileError("positive-root velocity needs lam > 0 and n >= 3")
        super().__init__(n=int(n), lam=float(lam))
        self._density = density
        self._n = int(n)
        self._lam = float(lam)
        self._mass = MassFunction(density, int(n))

    def _vsq(self, r):
        if r == 0.0:
            return 0.0
        m0 = self._mass.query(r)
        return 2.0 * self._lam * m0 / ((self._n - 2) * r ** (self._n - 2))

    def value(self, r):
        r_arr = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r_arr)
        out = np.array([math.sqrt(max(self._vsq(float(x)), 0.0)) for x in flat])
        return out.reshape(r_arr.shape) if r_arr.ndim else float(out[0])

    def derivative(self, r):
        r_arr = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r_arr)
        out = np.empty(flat.shape)
        n, lam = self._n, self._lam
        for i, x in enumerate(flat):
            x = float(x)
            if x <= 0:
                out[i] = np.nan
                continue
            v = math.sqrt(max(self._vsq(x), 0.0))
            rho = float(self._density.value(x))
            m0 = self._mass.query(x)
            dvsq = (2.0 * lam / (n - 2)) * (rho * x - (n - 2) * m0 / x ** (n - 1))
            out[i] = dvsq / (2.0 * v) if v > 0 else 0.0
        return out.reshape(r_arr.shape) if r_arr.ndim else float(out[0])


_PROFILE_KINDS = {
    "constant": ConstantProfile,
    "exponential-decay": ExponentialDecayProfile,
    "rational-decay": RationalDecayProfile,
    "gaussian": GaussianProfile,
    "compact-bump": CompactBumpProfile,
    "power-times-sine": PowerSineProfile,
    "enveloped-sine": EnvelopedSineProfile,
}


def load_table(path):
    """Two-column CSV (r, value), optional single header line."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ProfileError(f"table {path} must have exactly two columns")
    return data[:, 0], data[:, 1]


def make_profile(spec, density=None, problem=None):
    """Build a profile from a config mapping: {"kind": ..., "params": {...}}.

    Tabulated profiles take either a "table" CSV path or explicit "params"
    arrays {"r": [...], "values": [...]}.  The positive-root velocity kind is
    resolved against the already-constructed density and the problem config.
    """
    if isinstance(spec, RadialProfile):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ProfileError(f"invalid profile spec: {spec!r}")
    kind = spec["kind"]
    params = dict(spec.get("params") or {})
    if kind == "tabulated":
        if "table" in spec:
            r, v = load_table(spec["table"])
        elif "r" in params and "values" in params:
            r, v = params["r"], params["values"]
        else:
            raise ProfileError("tabulated profile needs a 'table' path or r/values params")
        return TabulatedProfile(r, v)
    if kind == "positive-root":
        if density is None or problem is None:
            raise ProfileError("positive-root velocity needs the density and problem config")
        return PositiveRootVelocity(density, problem.n, problem.lam)
    try:
        cls = _PROFILE_KINDS[kind]
    except KeyError:
        raise ProfileError(f"unknown profile kind {kind!r}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ProfileError(f"bad parameters for {kind!r}: {exc}") from None


@dataclass(frozen=True)
class ProblemConfig:
    """Spatial dimension n >= 1 and nonzero coupling constant lambda.

    lam < 0 is the repulsive (plasma-like) regime, lam > 0 attractive
    (gravitation-like).
    """

    n: int
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ProfileError("dimension n must be an integer >= 1")
        if self.lam == 0.0:
            raise ProfileError("coupling lambda must be nonzero")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "lam", float(self.lam))


class MassFunction:
    """Memoized cumulative quadrature of rho0(s) s^(n-1) on a refinable grid.

    Each query integrates only from the nearest cached radius below, then
    records the new node, so sorted radius scans cost one short panel each.
    Thread-safe for concurrent query/insert.
    """

    def __init__(self, density, n):
        self._density = density
        self._n = int(n)
        self._radii = [0.0]
        self._values = [0.0]
        self._lock = threading.RLock()

    def _increment(self, r_lo, r_hi, scale):
        rho = self._density.value
        k = self._n - 1

        def f(s):
            return np.maximum(np.asarray(rho(s), dtype=float), 0.0) * s ** k

        res = integrate(
            IntegralSpec(f, r_lo, r_hi),
            rel_tol=1e-10,
            abs_tol=max(1e-300, 1e-15 * scale),
            max_evals=4 * 10**5,
        )
        return max(res.value, 0.0)

    def query(self, R):
        if R < 0:
            raise ProfileError("mass radius must be nonnegative")
        if R == 0.0:
            return 0.0
        with self._lock:
            i = bisect_right(self._radii, R) - 1
            r_lo, m_lo = self._radii[i], self._values[i]
            if r_lo == R:
                return m_lo
            inc = self._increment(r_lo, R, scale=max(1.0, m_lo))
            m = m_lo + inc
            self._radii.insert(i + 1, R)
            self._values.insert(i + 1, m)
            return m


class InitialData:
    """Paired density/velocity profiles with validation and mass caching.

    Validates rho0 >= 0 on a log-spaced grid and v0(0) = 0 (to 1e-12) at
    construction.  Immutable in use; safe to share across threads.
    """

    _GRID = np.concatenate(([0.0], np.geomspace(1e-8, 1e8, 161)))

    def __init__(self, density, velocity):
        self.density = density
        self.velocity = velocity
        self._mass = {}
        self._mass_lock = threading.Lock()
        self._warned_negative = False
        rho = np.asarray(density.value(self._GRID), dtype=float)
        if not np.all(np.isfinite(rho)):
            raise ProfileError("density is non-finite on the validation grid")
        if np.any(rho < -1e-12):
            raise ProfileError("density is negative on the validation grid")
        v0 = float(velocity.value(0.0))
        if not abs(v0) <= _VZERO_TOL:
            raise ProfileError(f"velocity at the origin must vanish, got {v0!r}")

    def mass_function(self, n):
        with self._mass_lock:
            mf = self._mass.get(n)
            if mf is None:
                mf = MassFunction(self.density, n)
                self._mass[n] = mf
            return mf

    def kink_radii(self):
        return tuple(self.density.kink_radii()) + tuple(self.velocity.kink_radii())


def eval_density(data, r):
    """rho0(r), clamped to >= 0 (tabulated interpolation may undershoot)."""
    val = data.density.value(r)
    arr = np.asarray(val, dtype=float)
    if np.any(arr < 0):
        if not data._warned_negative:
            logger.warning("negative interpolated density clamped to 0")
            data._warned_negative = True
        arr = np.maximum(arr, 0.0)
        return arr if np.ndim(val) else float(arr)
    return val


def eval_velocity(data, r):
    """v0(r); exactly 0 at the origin."""
    if np.ndim(r) == 0 and float(r) == 0.0:
        return 0.0
    return data.velocity.value(r)


def eval_velocity_derivative(data, r):
    """v0'(r): analytic when the profile provides it, else central differences."""
    if np.ndim(r) == 0 and not r > 0:
        raise ProfileError("velocity derivative needs r > 0")
    d = data.velocity.derivative(r)
    if d is None:
        if np.ndim(r):
            return np.array(
                [central_derivative(lambda x: float(data.velocity.value(x)), float(ri)) for ri in r]
            )
        return central_derivative(lambda x: float(data.velocity.value(x)), float(r))
    arr = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ProfileError(f"derivative-undefined at r={r!r}")
    return d


def mass(data, n, R):
    """Cumulative initial mass m0(R) = int_0^R rho0(s) s^(n-1) ds, cached per (data, n)."""
    return data.mass_function(n).query(float(R))
