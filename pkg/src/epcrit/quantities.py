"""Per-radius threshold scalars for the breakdown criteria.

For n >= 3 the force budget is A(R) = 2|lam| m0(R)/(n-2) and the signed
energy constant C(R) = v0(R)^2 - 2 lam m0(R) / ((n-2) R^(n-2)); for n = 2
the analogous pair is A = 2|lam| m0 and C = v0^2 + 2 lam m0 log R.  Both
C formulas are valid for either sign of lam; A always stores the
nonnegative |lam| version used by the repulsive criteria.  Radial
derivatives come from closed formulas (no differentiation of integrals).

The module also evaluates the dimensional constant
I_n = int_1^inf ((1-y^-2)^(-1/(n-2)) - 1) dy (n >= 4, I_4 = 1) and the
turning time t*(R) of an initially inward characteristic, including its
radial derivative by Richardson-extrapolated central differences.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Optional

from .profiles import eval_density, eval_velocity, eval_velocity_derivative, mass
from .quadrature import (
    SING_LOWER,
    IntegralSpec,
    integrate,
    sqrt_log_integral_scaled,
)

__all__ = [
    "ThresholdQuantities",
    "TurningData",
    "threshold_quantities",
    "constant_In",
    "turning_time",
    "turning_time_value",
    "QuantityError",
]


class QuantityError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdQuantities:
    """Snapshot of every scalar the pointwise criteria consume at one radius.

    For n = 1 the fields A, A_prime, C, C_prime are NaN (only m0, rho0, v0,
    v0_prime are meaningful there).
    """

    R: float
    n: int
    lam: float
    m0: float
    rho0: float
    v0: float
    v0_prime: float
    A: float
    A_prime: float
    C: float
    C_prime: float

    @property
    def abs_lam(self):
        return abs(self.lam)

    def c_prime_scale(self):
        """Magnitude scale of the terms composing C'; used for relative margins."""
        if self.n >= 3:
            return (
                abs(2 * self.v0 * self.v0_prime)
                + abs(2 * self.lam * self.R * self.rho0 / (self.n - 2))
                + abs(2 * self.lam * self.m0 / self.R ** (self.n - 1))
            )
        if self.n == 2:
            return (
                abs(2 * self.v0 * self.v0_prime)
                + abs(2 * self.lam * self.rho0 * self.R * math.log(self.R))
                + abs(2 * self.lam * self.m0 / self.R)
            )
        return abs(2 * self.v0 * self.v0_prime)


def threshold_quantities(data, cfg, R):
    """Evaluate m0, rho0, v0, v0', A, A', C, C' at radius R > 0."""
    if not R > 0:
        raise QuantityError("threshold quantities need R > 0")
    n, lam = cfg.n, cfg.lam
    R = float(R)
    m0 = mass(data, n, R)
    rho0 = float(eval_density(data, R))
    v0 = float(eval_velocity(data, R))
    v0p = float(eval_velocity_derivative(data, R))
    if n >= 3:
        A = 2.0 * abs(lam) * m0 / (n - 2)
        Ap = 2.0 * abs(lam) * R ** (n - 1) * rho0 / (n - 2)
        C = v0 * v0 - 2.0 * lam * m0 / ((n - 2) * R ** (n - 2))
        Cp = (
            2.0 * v0 * v0p
            - 2.0 * lam * R * rho0 / (n - 2)
            + 2.0 * lam * m0 / R ** (n - 1)
        )
    elif n == 2:
        A = 2.0 * abs(lam) * m0
        Ap = 2.0 * abs(lam) * R * rho0
        logR = math.log(R)
        C = v0 * v0 + 2.0 * lam * m0 * logR
        Cp = 2.0 * v0 * v0p + 2.0 * lam * (rho0 * R * logR + m0 / R)
    else:
        A = Ap = C = Cp = math.nan
    return ThresholdQuantities(
        R=R, n=n, lam=lam, m0=m0, rho0=rho0, v0=v0, v0_prime=v0p,
        A=A, A_prime=Ap, C=C, C_prime=Cp,
    )


_IN_CACHE = {}
_IN_LOCK = threading.Lock()


def one_minus_inv_pow(z, k):
    """1 - z^-k without cancellation near z = 1 (z >= 1).

    Uses (z^k - 1)/z^k with z^k - 1 = expm1(k log1p(z-1)); the subtraction
    z - 1 is exact for z in [1, 2], so the small difference carries full
    relative accuracy.  Falls back to the direct form away from 1.
    """
    import numpy as np

    z = np.asarray(z, dtype=float)
    near = z < 2.0
    em = np.expm1(k * np.log1p(np.where(near, z - 1.0, 1.0)))
    stable = em / (em + 1.0)
    direct = 1.0 - np.where(near, 2.0, z) ** float(-k)
    out = np.where(near, stable, direct)
    return out if out.ndim else float(out)


def _in_integrand(y, ex):
    """(1 - y^-2)^ex - 1, evaluated stably at both ends (y >= 1, ex < 0)."""
    import numpy as np

    frac = one_minus_inv_pow(y, 2)
    with np.errstate(divide="ignore"):
        return np.expm1(ex * np.log(frac))


def constant_In(n):
    """I_n = int_1^inf ((1-y^-2)^(-1/(n-2)) - 1) dy for n >= 4; I_4 = 1.

    The y = 1 endpoint behaves like (y-1)^(-1/(n-2)) and is removed by the
    inverse-sqrt substitution; the tail decays like y^-2.  Values are cached
    per dimension.
    """
    if n < 4:
        raise QuantityError("I_n is defined for n >= 4 only")
    with _IN_LOCK:
        if n in _IN_CACHE:
            return _IN_CACHE[n]
    ex = -1.0 / (n - 2)
    res = integrate(
        IntegralSpec(lambda y: _in_integrand(y, ex), 1.0, math.inf,
                     singularity=SING_LOWER, decay_exponent=2.0, tail_split=16.0),
        rel_tol=1e-12,
        abs_tol=1e-13,
    )
    with _IN_LOCK:
        _IN_CACHE[n] = res.value
    return res.value


def partial_In(n, lower):
    """Tail of the I_n integrand from ``lower`` >= 1 to infinity.

    Needed by the v0 = 0 criterion for n >= 5; computed as
    I_n - int_1^lower near the singular end, directly otherwise.
    """
    if lower < 1.0:
        raise QuantityError("partial_In needs lower >= 1")
    if lower == 1.0:
        return constant_In(n)
    ex = -1.0 / (n - 2)
    if lower < 2.0:
        head = integrate(
            IntegralSpec(lambda y: _in_integrand(y, ex), 1.0, lower,
                         singularity=SING_LOWER),
            rel_tol=1e-12, abs_tol=1e-13,
        )
        return constant_In(n) - head.value
    res = integrate(
        IntegralSpec(lambda y: _in_integrand(y, ex), lower, math.inf,
                     decay_exponent=2.0, tail_split=8.0 * lower),
        rel_tol=1e-12, abs_tol=1e-13,
    )
    return res.value


@dataclass(frozen=True)
class TurningData:
    """Turning time t* (X' = 0) of an inward characteristic and its R-derivative."""

    t_star: float
    t_star_prime: float
    turning_radius: float
    t_star_prime_error: float = 0.0


def turning_time_value(A, C, R, n, rel_tol=1e-11):
    """t*(R) from the scaled quantities alone (no profile access).

    n >= 3: t* = (A C^(-n/2))^(1/(n-2)) * int_1^Z dz/sqrt(1 - z^-(n-2)),
    Z = R (C/A)^(1/(n-2)); n = 2: t* = R e^(-b) / sqrt(A) *
    int_1^(e^b) dz/sqrt(log z) with b = v0^2/A, evaluated in overflow-free
    scaled form.  Requires A > 0 and C > A R^-(n-2) (i.e. v0 != 0).
    """
    if A <= 0:
        raise QuantityError("no-turning: A(R) = 0 has no turning time")
    if n >= 3:
        if C <= 0:
            raise QuantityError("turning time needs C > 0")
        Z = R * (C / A) ** (1.0 / (n - 2))
        if Z <= 1.0:
            raise QuantityError("turning time needs v0(R) != 0 (Z > 1)")
        k = n - 2
        if Z - 1.0 < 1e-12:
            # collapsed interval: t* ~ 2 |v0| R^(n-1) / ((n-2) A) to O(Z-1)
            w2 = max(C - A / R ** k, 0.0)
            return 2.0 * math.sqrt(w2) * R ** (n - 1) / (k * A)

        def f(z):
            return one_minus_inv_pow(z, k) ** -0.5

        res = integrate(
            IntegralSpec(f, 1.0, Z, singularity=SING_LOWER),
            rel_tol=rel_tol, abs_tol=1e-300,
        )
        pref = (A * C ** (-0.5 * n)) ** (1.0 / k)
        return pref * res.value
    if n == 2:
        if C is None:
            raise QuantityError("turning time in 2-d needs C")
        v0sq = C + A * math.log(R)
        if v0sq <= 0:
            raise QuantityError("turning time needs v0(R) != 0")
        beta = v0sq / A
        return R * sqrt_log_integral_scaled(beta, rel_tol=rel_tol) / math.sqrt(A)
    raise QuantityError("turning time is defined for n >= 2")


def _t_star_at(data, cfg, R):
    q = threshold_quantities(data, cfg, R)
    if not (cfg.lam < 0 and q.v0 < 0):
        raise QuantityError("turning time needs lam < 0 and v0(R) < 0")
    if q.A <= 0:
        raise QuantityError("no-turning: A(R) = 0")
    return turning_time_value(q.A, q.C, R, cfg.n)


def turning_time(data, cfg, R, h_rel=1e-5):
    """TurningData at R for lam < 0, v0(R) < 0, A(R) > 0.

    t*' has no closed form; it is computed from central differences of
    t*(.) with Richardson extrapolation, shrinking the step when a stencil
    point leaves the v0 < 0 region.
    """
    q = threshold_quantities(data, cfg, R)
    if cfg.lam >= 0:
        raise QuantityError("turning time applies to the repulsive regime")
    if q.A <= 0:
        raise QuantityError("no-turning: A(R) = 0 (callers must branch first)")
    if not q.v0 < 0:
        raise QuantityError("turning time needs v0(R) < 0")
    if cfg.n >= 3 and q.C <= 0:
        raise QuantityError("impossible C <= 0 for lam < 0 with v0 < 0")
    t_star = turning_time_value(q.A, q.C, R, cfg.n)
    if cfg.n >= 3:
        turning_radius = (q.A / q.C) ** (1.0 / (cfg.n - 2))
    else:
        turning_radius = R * math.exp(-q.v0 * q.v0 / q.A)

    h = h_rel * R
    last_exc = None
    for _ in range(8):
        try:
            d_h = (_t_star_at(data, cfg, R + h) - _t_star_at(data, cfg, R - h)) / (2 * h)
            d_h2 = (_t_star_at(data, cfg, R + 0.5 * h) - _t_star_at(data, cfg, R - 0.5 * h)) / h
            deriv = (4.0 * d_h2 - d_h) / 3.0
            err = abs(d_h2 - d_h) / 3.0
            return TurningData(t_star, deriv, turning_radius, err)
        except QuantityError as exc:
            last_exc = exc
            h *= 0.125
    raise QuantityError(f"t*'(R) stencil failed near R={R}: {last_exc}")
