"""Pointwise breakdown criteria and the radius-scan classifier.

Each evaluator decides, from initial data at a single radius R, whether the
characteristic launched there (or its neighbors) is forced to focus
(Gamma -> 0) or collapse (X -> 0) in finite time.  The closed criteria cover
n = 1, the attractive coupling, and the v0 = 0 limits; the remaining
repulsive cases compare 1/|v0| against singular integrals of the threshold
quantities, evaluated here in the turning-speed variable
w = sqrt(C - A y^-(n-2)) (resp. w = sqrt(C + A log y) in 2-d), which removes
the near-singularity at y = R exactly.

Margins are dimensionless (slack divided by the natural scale of the
comparison).  Three zones apply: |margin| <= 1e-12 counts as an exact
boundary and is decided by the strictness of the written inequality
(honoring the equality allowances of the closed criteria), |margin| inside
the band tau = 1e-8 (widened by any propagated quadrature or finite-
difference error) is reported as marginal, and anything else is definite.
Categorical cases with no meaningful slack (for example A = 0 with v0 < 0)
report margin -1 or +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .quadrature import IntegralSpec, QuadratureError, integrate, sqrt_log_integral_scaled
from .quantities import (
    QuantityError,
    constant_In,
    partial_In,
    threshold_quantities,
    turning_time,
)

__all__ = [
    "Verdict",
    "Classification",
    "ScanConfig",
    "MARGIN_BAND",
    "EXACT_ZERO_BAND",
    "V_SIGN_BAND",
    "CONDITION_IDS",
    "SCAN_DISCLAIMER",
    "pcfb_1d",
    "pcfb_attractive",
    "pcfb_3d_repulsive",
    "pcfb_4d_closed",
    "pcfb_2d_repulsive",
    "evaluate_pcfb",
    "classify",
]

BREAKDOWN = "breakdown"
NO_BREAKDOWN = "no-breakdown"
MARGINAL = "marginal"

MARGIN_BAND = 1e-8       # tau: relative slack below this is undecidable
EXACT_ZERO_BAND = 1e-12  # relative slack below this counts as the exact boundary
V_SIGN_BAND = 1e-10      # tau_v: |v0| below this uses the v0 = 0 branch
_TINY = 1e-300
_EXP_GUARD = 300.0       # e^x beyond this decides comparisons categorically

SCAN_DISCLAIMER = "no breakdown condition found on scanned radii"

#: Public enumeration of condition tags (part of the report schema).
CONDITION_IDS = (
    "1d.amplitude",
    "1d.slope",
    "attractive.n12.density",
    "attractive.n12.vneg",
    "attractive.n12.slope",
    "attractive.n3.vneg",
    "attractive.n3.Cneg",
    "attractive.n3.dCneg",
    "3D.repulsive.vpos.case1",
    "3D.repulsive.vpos.case2",
    "3D.repulsive.vpos.case3",
    "3D.repulsive.vzero.freeflow",
    "3D.repulsive.vzero.case1",
    "3D.repulsive.vzero.case2a",
    "3D.repulsive.vzero.case2b",
    "3D.repulsive.vzero.case2c",
    "3D.repulsive.vzero.case3a",
    "3D.repulsive.vzero.case3b",
    "3D.repulsive.vzero.case3c",
    "3D.repulsive.vneg.massless",
    "3D.repulsive.vneg.case1",
    "3D.repulsive.vneg.case2",
    "3D.repulsive.vneg.case3",
    "3D.repulsive.vneg.case4",
    "3D.repulsive.vneg.case5",
    "3D.repulsive.quadrature-failure",
    "4D.closed.case1",
    "4D.closed.case2",
    "4D.closed.case3",
    "4D.closed.case4",
    "2D.repulsive.vpos.gate",
    "2D.repulsive.vpos.case1",
    "2D.repulsive.vpos.case2",
    "2D.repulsive.vzero.freeflow",
    "2D.repulsive.vzero.case1",
    "2D.repulsive.vzero.case2",
    "2D.repulsive.vneg.massless",
    "2D.repulsive.vneg.case1",
    "2D.repulsive.vneg.case2a",
    "2D.repulsive.vneg.case2b",
    "2D.repulsive.vneg.case2c",
    "2D.repulsive.quadrature-failure",
)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one pointwise criterion at radius R.

    ``margin`` is the relative slack of the decisive comparison: negative on
    the breakdown side, positive on the no-breakdown side, 0 on an exact
    admissible boundary, +/-1 for categorical cases.  ``status`` is marginal
    when the slack falls inside the undecidability band.
    """

    status: str
    condition_id: str
    margin: float
    R: float
    note: Optional[str] = None


@dataclass(frozen=True)
class ScanConfig:
    r_min: float = 1e-3
    r_max: float = 1e3
    points: int = 256
    max_refinements: int = 12

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise ValueError("scan needs 0 < r_min < r_max")
        if self.points < 16:
            raise ValueError("scan needs at least 16 points")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be nonnegative")


@dataclass(frozen=True)
class Classification:
    """Scan outcome: breakdown witness, global-on-scan, or inconclusive.

    ``overall`` being "global" only certifies the scanned set; the report
    wording is fixed to SCAN_DISCLAIMER and never claims a proof of global
    existence.
    """

    overall: str
    witness: Optional[Tuple[float, Verdict]]
    scan: List[Tuple[float, Verdict]]
    refinements: int
    endpoint_stable: bool = True
    notes: Tuple[str, ...] = ()


def _outcome(slack, scale, non_strict, cid, R, err=0.0, note=None,
             zero_admissible=None):
    """Build a Verdict from one signed comparison.

    slack <= 0 (non_strict) or < 0 (strict) means the breakdown condition
    holds.  ``zero_admissible`` overrides the exact-boundary rule for the
    written both-sides-zero allowances.
    """
    scale = abs(scale) + _TINY
    m = slack / scale
    band = max(MARGIN_BAND, 3.0 * err / scale)
    if abs(m) <= EXACT_ZERO_BAND:
        if zero_admissible is not None:
            status = NO_BREAKDOWN if zero_admissible else BREAKDOWN
        else:
            status = BREAKDOWN if non_strict else NO_BREAKDOWN
        return Verdict(status, cid, 0.0, R, note)
    if abs(m) < band:
        return Verdict(MARGINAL, cid, m, R, note)
    return Verdict(BREAKDOWN if m < 0 else NO_BREAKDOWN, cid, m, R, note)


def _categorical(cid, R, breakdown=True, note=None):
    return Verdict(BREAKDOWN if breakdown else NO_BREAKDOWN, cid,
                   -1.0 if breakdown else 1.0, R, note)


def _sign_with_snap(value, scale):
    if value == 0.0 or abs(value) <= EXACT_ZERO_BAND * (abs(scale) + _TINY):
        return 0
    return -1 if value < 0 else 1


def _combine(verdicts, R):
    """OR of independent breakdown conditions (used by n = 1 and attractive)."""
    hits = [v for v in verdicts if v.status == BREAKDOWN]
    if hits:
        return min(hits, key=lambda v: v.margin)
    margins = [v for v in verdicts if v.status == MARGINAL]
    if margins:
        return min(margins, key=lambda v: abs(v.margin))
    return min(verdicts, key=lambda v: v.margin)


# ---------------------------------------------------------------------------
# closed criteria: n = 1 and the attractive coupling
# ---------------------------------------------------------------------------

def pcfb_1d(q, lam=None):
    """n = 1, lam < 0: breakdown iff v0 <= -sqrt(2|lam| R m0) or
    v0' <= -sqrt(2|lam| rho0), except the admissible both-sides-zero cases."""
    lam = q.lam if lam is None else lam
    if lam >= 0:
        raise ValueError("pcfb_1d applies to the repulsive coupling")
    al = abs(lam)
    rhs_amp = math.sqrt(2.0 * al * q.R * q.m0)
    amp = _outcome(
        q.v0 + rhs_amp,
        abs(q.v0) + rhs_amp,
        non_strict=True,
        cid="1d.amplitude",
        R=q.R,
        zero_admissible=True if (q.v0 == 0.0 and q.m0 == 0.0) else None,
    )
    rhs_slope = math.sqrt(2.0 * al * q.rho0)
    slope = _outcome(
        q.v0_prime + rhs_slope,
        abs(q.v0_prime) + rhs_slope,
        non_strict=True,
        cid="1d.slope",
        R=q.R,
        zero_admissible=True if (q.v0_prime == 0.0 and q.rho0 == 0.0) else None,
    )
    return _combine([amp, slope], q.R)


def pcfb_attractive(q, cfg):
    """lam > 0.  n <= 2: breakdown iff rho0 > 0 or v0 < 0 or v0' < 0;
    n >= 3: breakdown iff v0 < 0 or C < 0 or C' < 0 (signed C)."""
    if cfg.lam <= 0:
        raise ValueError("pcfb_attractive applies to lam > 0")
    R = q.R
    if cfg.n <= 2:
        rho_scale = q.rho0 + cfg.n * q.m0 / R ** cfg.n
        v_scale = abs(q.v0) + R * abs(q.v0_prime)
        checks = [
            _outcome(-q.rho0, rho_scale, False, "attractive.n12.density", R),
            _outcome(q.v0, v_scale, False, "attractive.n12.vneg", R),
            _outcome(q.v0_prime, abs(q.v0_prime) + v_scale / R, False,
                     "attractive.n12.slope", R),
        ]
        return _combine(checks, R)
    c_scale = q.v0 ** 2 + abs(2.0 * cfg.lam * q.m0 / ((cfg.n - 2) * R ** (cfg.n - 2)))
    checks = [
        _outcome(q.v0, abs(q.v0) + math.sqrt(c_scale), False,
                 "attractive.n3.vneg", R),
        _outcome(q.C, c_scale, False, "attractive.n3.Cneg", R),
        _outcome(q.C_prime, q.c_prime_scale(), False, "attractive.n3.dCneg", R),
    ]
    return _combine(checks, R)


# ---------------------------------------------------------------------------
# repulsive integral kernels, in the turning-speed variable
# ---------------------------------------------------------------------------

def _oriented(f, a, b, rel_tol=1e-10, abs_tol=1e-13):
    if a == b:
        return 0.0, 0.0
    lo, hi = (a, b) if a < b else (b, a)
    if hi - lo <= 1e-15 * (abs(hi) + abs(lo)):
        return 0.0, 0.0
    res = integrate(IntegralSpec(f, lo, hi), rel_tol, abs_tol)
    sign = 1.0 if b > a else -1.0
    return sign * res.value, res.error_estimate


def _gap_highn_finite(q, p):
    """F = 1/|v0| + (1/2) * int_R^Y (p - A' y^-k)/(C - A y^-k)^{3/2} dy with
    Y = (A'/p)^{1/k}, transformed to the w variable.

    A two-point subtraction (linear in w^2, matching the integrand factor at
    w = |v0| and its zero at w_b) moves the 1/w^2 weight into closed form,
    so no near-singular peak remains even for tiny |v0|.  The integral is
    oriented: Y < R simply flips the sign.
    """
    A, Ap, C, R, n = q.A, q.A_prime, q.C, q.R, q.n
    k = n - 2
    wa = abs(q.v0)
    if A == 0.0:
        # vacuum force budget: elementary antiderivative in y
        Y = (Ap / p) ** (1.0 / k)
        c32 = C ** 1.5
        if k == 1:
            val = (p * (Y - R) - Ap * math.log(Y / R)) / c32
        else:
            val = (p * (Y - R) + Ap * (Y ** (1 - k) - R ** (1 - k)) / (k - 1)) / c32
        return 1.0 / wa + 0.5 * val, 1e-15 * abs(val)
    wb_sq = max(C - A * p / Ap, 0.0)
    wb = math.sqrt(wb_sq)
    psi_a = (2.0 / (k * A)) * (p - Ap * R ** float(-k)) * R ** (n - 1)
    denom = wb_sq - wa * wa
    if abs(denom) <= 1e-15 * (wb_sq + wa * wa):
        return 1.0 / wa, 0.0
    beta = -psi_a / denom        # psi(wb) = 0 by construction of Y
    alpha = psi_a - beta * wa * wa
    ex = (n - 1.0) / k

    def resid(w):
        cw = C - w * w
        psi = (2.0 / (k * A)) * (p - Ap * cw / A) * (A / cw) ** ex
        return (psi - alpha - beta * w * w) / (w * w)

    val, err = _oriented(resid, wa, wb)
    analytic = beta * (wb - wa)
    if wb > 0.0:
        analytic += alpha * (1.0 / wa - 1.0 / wb)
    # wb = 0 forces alpha = 0 mathematically; drop its (0 * inf) term
    F = 1.0 / wa + 0.5 * (val + analytic)
    err_total = 0.5 * err + 1e-15 * (1.0 + abs(alpha)) / wa
    return F, err_total


def _gap_highn_infinite(q):
    """F = 1/|v0| - (1/2) * int_R^inf A' y^-k/(C - A y^-k)^{3/2} dy.

    Finite only for n >= 4 (the n = 3 tail is harmonic; callers declare it
    divergent).  The w-image of the tail ends at w = sqrt(C) with an
    integrable (C - w^2)^(-1/k) blowup, integrated in the shifted variable
    u^2 = sqrt(C) - w where C - w^2 = u^2 (2 sqrt(C) - u^2) is exact.
    """
    A, Ap, C, R, n = q.A, q.A_prime, q.C, q.R, q.n
    k = n - 2
    wa = abs(q.v0)
    if Ap == 0.0:
        return 1.0 / wa, 0.0
    if A == 0.0:
        val = -Ap * R ** (1 - k) / ((k - 1) * C ** 1.5)
        return 1.0 / wa + 0.5 * val, 1e-15 * abs(val)
    wc = math.sqrt(C)
    psi_a = -2.0 * Ap * R / (k * A)
    ex = (n - 1.0) / k
    coef = -(2.0 * Ap / (k * A * A)) * A ** ex   # psi = coef * (C - w^2)^(1 - ex)
    wm = wa + 0.75 * (wc - wa)

    def resid_plain(w):
        cw = C - w * w
        psi = coef * cw ** (1.0 - ex)
        return (psi - psi_a) / (w * w)

    v1, e1 = _oriented(resid_plain, wa, wm)

    def resid_shifted(u):
        u2 = u * u
        w = wc - u2
        cw = u2 * (2.0 * wc - u2)
        psi = coef * cw ** (1.0 - ex)
        return 2.0 * u * (psi - psi_a) / (w * w)

    res2 = integrate(IntegralSpec(resid_shifted, 0.0, math.sqrt(wc - wm)),
                     rel_tol=1e-10, abs_tol=1e-13)
    val = v1 + res2.value
    analytic = psi_a * (1.0 / wa - 1.0 / wc)
    F = 1.0 / wa + 0.5 * (val + analytic)
    err_total = 0.5 * (e1 + res2.error_estimate) + 1e-15 * (1.0 + abs(psi_a)) / wa
    return F, err_total


def _gap_2d(q):
    """2-d analog: F = 1/|v0| + (1/2) * int_R^{exp(-C'/A')}
    (C' + A' log y)/(C + A log y)^{3/2} dy in w = sqrt(C + A log y).

    Built from overflow-safe combinations only: g = 2 v0 v0' - A/R equals
    C' + A' log R, and log(y_b/R) = -g/A'.  Returns -inf when the range is
    so wide the integral is astronomically negative (certain breakdown).
    """
    A, Ap, R = q.A, q.A_prime, q.R
    wa = abs(q.v0)
    g = 2.0 * q.v0 * q.v0_prime - A / R
    if A == 0.0:
        # C + A log y = v0^2 throughout; elementary antiderivative
        yb = R * math.exp(min(-g / Ap, _EXP_GUARD))
        val = (q.C_prime * (yb - R)
               + Ap * (yb * math.log(yb) - yb - R * math.log(R) + R)) / wa ** 3
        return 1.0 / wa + 0.5 * val, 1e-15 * abs(val)
    tb = -g / Ap   # log(y_b / R)
    if tb > _EXP_GUARD:
        return -math.inf, 0.0
    wb_sq = max(wa * wa + A * tb, 0.0)
    wb = math.sqrt(wb_sq)
    psi_a = 2.0 * R * g / A
    denom = wb_sq - wa * wa
    if abs(denom) <= 1e-15 * (wb_sq + wa * wa):
        return 1.0 / wa, 0.0
    beta = -psi_a / denom        # psi(wb) = 0 by construction of y_b
    alpha = psi_a - beta * wa * wa
    va2 = wa * wa

    def resid(w):
        w2 = w * w
        t = (w2 - va2) / A
        psi = (2.0 * R / A) * (g + Ap * t) * np.exp(t)
        return (psi - alpha - beta * w2) / w2

    val, err = _oriented(resid, wa, wb)
    analytic = beta * (wb - wa)
    if wb > 0.0:
        analytic += alpha * (1.0 / wa - 1.0 / wb)
    F = 1.0 / wa + 0.5 * (val + analytic)
    err_total = 0.5 * err + 1e-15 * (1.0 + abs(alpha)) / wa
    return F, err_total


# ---------------------------------------------------------------------------
# repulsive branches, n >= 3
# ---------------------------------------------------------------------------

def _free_flow_verdict(q, cid):
    """Exact rule at radii with v0 = 0 and m0 = 0: X stays at R and
    Gamma(t) = 1 + v0' t + |lam| rho0 t^2/2, the focusing quadratic."""
    rhs = math.sqrt(2.0 * abs(q.lam) * q.rho0)
    return _outcome(
        q.v0_prime + rhs,
        abs(q.v0_prime) + rhs,
        non_strict=True,
        cid=cid,
        R=q.R,
        zero_admissible=True if (q.v0_prime == 0.0 and q.rho0 == 0.0) else None,
    )


def _vpos_3d(q):
    R, n = q.R, q.n
    k = n - 2
    cs = q.c_prime_scale()
    s = _sign_with_snap(q.C_prime, cs)
    if s < 0:
        return _outcome(q.C_prime, cs, False, "3D.repulsive.vpos.case1", R)
    if s == 0:
        if q.A_prime == 0.0:
            return _outcome(1.0 / q.v0, 1.0 / q.v0, False,
                            "3D.repulsive.vpos.case2", R)
        if n == 3:
            return _categorical("3D.repulsive.vpos.case2", R,
                                note="divergent tail integral")
        F, err = _gap_highn_infinite(q)
        return _outcome(F, abs(F) + 1.0 / abs(q.v0), False,
                        "3D.repulsive.vpos.case2", R, err=err)
    thr = q.A_prime * R ** float(-k)
    gate = q.C_prime - thr
    if _sign_with_snap(gate, cs + thr) >= 0:
        return _outcome(gate, cs + thr, False, "3D.repulsive.vpos.case3", R)
    F, err = _gap_highn_finite(q, q.C_prime)
    return _outcome(F, abs(F) + 1.0 / abs(q.v0), True,
                    "3D.repulsive.vpos.case3", R, err=err)


def _vzero_3d(q):
    R, n, C = q.R, q.n, q.C
    k = n - 2
    if q.A == 0.0:
        return _free_flow_verdict(q, "3D.repulsive.vzero.freeflow")
    cs = q.c_prime_scale()
    s = _sign_with_snap(q.C_prime, cs)
    if s < 0:
        return _outcome(q.C_prime, cs, False, "3D.repulsive.vzero.case1", R)
    lhs = q.v0_prime * R
    if s == 0:
        if n == 3:
            return _categorical("3D.repulsive.vzero.case2a", R)
        if n == 4:
            return _outcome(lhs, abs(lhs) + math.sqrt(C), False,
                            "3D.repulsive.vzero.case2b", R)
        rhs = -0.5 * k * math.sqrt(C) * (1.0 - constant_In(n))
        return _outcome(lhs - rhs, abs(lhs) + abs(rhs) + math.sqrt(C), False,
                        "3D.repulsive.vzero.case2c", R)
    x = R * q.C_prime   # the recurring combination R * dC/dr
    if n == 3:
        rhs = (-0.75 * math.sqrt(C + x)
               + 0.5 * math.sqrt(C) * (1.0 - 0.5 * x / C)
               * math.log((math.sqrt(C) + math.sqrt(C + x)) / math.sqrt(x)))
        cid = "3D.repulsive.vzero.case3a"
    elif n == 4:
        rhs = -math.sqrt(2.0 * x)
        cid = "3D.repulsive.vzero.case3b"
    else:
        ratio = k * C / x
        s1 = math.sqrt(1.0 + 1.0 / ratio)
        rhs = (-(math.sqrt(k) * x ** 1.5 / (4.0 * C)) * (1.0 + ratio) ** (0.5 * n / k)
               - 0.5 * k * math.sqrt(C) * (1.0 - 0.5 * x / C)
               * (s1 - partial_In(n, s1)))
        cid = "3D.repulsive.vzero.case3c"
    return _outcome(lhs - rhs, abs(lhs) + abs(rhs) + math.sqrt(C), True, cid, R)


def _vneg_3d(data, cfg, q):
    R, n = q.R, q.n
    k = n - 2
    if q.A == 0.0:
        return _categorical("3D.repulsive.vneg.massless", R,
                            note="inward free flow reaches the origin")
    cs = q.c_prime_scale()
    s = _sign_with_snap(q.C_prime, cs)
    inv_v = 1.0 / abs(q.v0)
    if s < 0:
        return _outcome(q.C_prime, cs, False, "3D.repulsive.vneg.case1", R)
    if s == 0 and n == 3 and q.A_prime > 0.0:
        return _categorical("3D.repulsive.vneg.case2", R,
                            note="divergent tail integral")
    if s > 0:
        thr2 = q.A_prime * q.C / q.A    # = A' (R^-k + v0^2/A)
        slack5 = thr2 - q.C_prime
        if _sign_with_snap(slack5, cs + thr2) <= 0:
            return _outcome(slack5, cs + thr2, True, "3D.repulsive.vneg.case5", R)
    td = turning_time(data, cfg, R)
    ts2 = 2.0 * td.t_star_prime
    ts2_err = 2.0 * td.t_star_prime_error
    if s == 0:
        F, err = _gap_highn_infinite(q)
        return _outcome(F - ts2, abs(F) + abs(ts2) + inv_v, False,
                        "3D.repulsive.vneg.case2", R, err=err + ts2_err)
    thr1 = q.A_prime * R ** float(-k)
    F, err = _gap_highn_finite(q, q.C_prime)
    if q.C_prime <= thr1:
        rhs = ts2
        cid = "3D.repulsive.vneg.case3"
    else:
        rhs = max(0.0, ts2)
        cid = "3D.repulsive.vneg.case4"
    return _outcome(F - rhs, abs(F) + abs(rhs) + inv_v, True, cid, R,
                    err=err + ts2_err)


def _limit_flags_highn(q, verdict):
    """Cross-branch consistency at a v0 = 0 dispatch: flag marginal when an
    infinitesimal sign perturbation of v0 would flip the verdict."""
    if verdict.status != NO_BREAKDOWN:
        return verdict
    if q.A == 0.0 and q.v0 != 0.0:
        return Verdict(MARGINAL, verdict.condition_id, verdict.margin, q.R,
                       "A = 0 with v0 of uncertain sign: inward perturbation collapses")
    if q.A > 0.0 and q.C_prime > 0.0:
        thr2 = q.A_prime * q.C / q.A
        if q.C_prime >= thr2 - EXACT_ZERO_BAND * (q.c_prime_scale() + _TINY):
            return Verdict(MARGINAL, verdict.condition_id, verdict.margin, q.R,
                           "inward perturbation triggers the turning-point case")
    return verdict


def pcfb_3d_repulsive(data, cfg, R, q=None):
    """Dispatch on the sign of v0(R) for lam < 0, n >= 3."""
    if cfg.lam >= 0 or cfg.n < 3:
        raise ValueError("pcfb_3d_repulsive needs lam < 0 and n >= 3")
    if q is None:
        q = threshold_quantities(data, cfg, R)
    try:
        if q.v0 > V_SIGN_BAND:
            return _vpos_3d(q)
        if q.v0 < -V_SIGN_BAND:
            return _vneg_3d(data, cfg, q)
        return _limit_flags_highn(q, _vzero_3d(q))
    except (QuadratureError, QuantityError) as exc:
        return Verdict(MARGINAL, "3D.repulsive.quadrature-failure", 0.0, q.R,
                       str(exc))


def pcfb_4d_closed(q):
    """Closed four-dimensional criterion (no integrals): breakdown iff
    A = 0 and v0 < 0; or C' < 0; or C' = 0 and v0 + v0' R < 0; or C' > 0
    and v0 + v0' R <= -sqrt(2 R C')."""
    if q.n != 4 or q.lam >= 0:
        raise ValueError("pcfb_4d_closed needs n = 4 and lam < 0")
    R = q.R
    vsum = q.v0 + q.v0_prime * R
    vscale = abs(q.v0) + abs(q.v0_prime) * R + math.sqrt(max(q.C, 0.0))
    if q.A == 0.0:
        if q.v0 < -V_SIGN_BAND:
            return _categorical("4D.closed.case1", R,
                                note="inward free flow reaches the origin")
        if q.v0 != 0.0 and abs(q.v0) <= V_SIGN_BAND and q.v0 < 0:
            return Verdict(MARGINAL, "4D.closed.case1", q.v0 / (vscale + _TINY), R)
    cs = q.c_prime_scale()
    s = _sign_with_snap(q.C_prime, cs)
    if s < 0:
        return _outcome(q.C_prime, cs, False, "4D.closed.case2", R)
    if s == 0:
        return _outcome(vsum, vscale, False, "4D.closed.case3", R)
    rhs = -math.sqrt(2.0 * R * q.C_prime)
    return _outcome(vsum - rhs, abs(vsum) + abs(rhs) + vscale, True,
                    "4D.closed.case4", R)


# ---------------------------------------------------------------------------
# repulsive branch, n = 2
# ---------------------------------------------------------------------------

def _vpos_2d(q):
    R = q.R
    gate_rhs = q.A / (2.0 * R * q.v0)
    gate = q.v0_prime - gate_rhs
    gate_scale = abs(q.v0_prime) + abs(gate_rhs) + abs(q.v0) / R
    if _sign_with_snap(gate, gate_scale) >= 0:
        return _outcome(gate, gate_scale, False, "2D.repulsive.vpos.gate", R)
    if q.A_prime == 0.0:
        return _categorical("2D.repulsive.vpos.case1", R,
                            note="vacuum edge under an inward-shear gate")
    F, err = _gap_2d(q)
    return _outcome(F, abs(F) + 1.0 / q.v0, True, "2D.repulsive.vpos.case2",
                    R, err=err)


def _vzero_2d(q):
    R = q.R
    if q.A == 0.0:
        return _free_flow_verdict(q, "2D.repulsive.vzero.freeflow")
    if q.A_prime == 0.0:
        return _categorical("2D.repulsive.vzero.case1", R,
                            note="vacuum edge above interior mass")
    beta = q.A / (R * q.A_prime)
    scaled = sqrt_log_integral_scaled(beta)
    bracket = (-0.5 * math.sqrt(q.A * R * q.A_prime)
               + 0.25 * (2.0 * q.A - R * q.A_prime) * scaled)
    if beta > _EXP_GUARD:
        # the e^beta factor saturates: the verdict is the bracket's sign
        return _categorical("2D.repulsive.vzero.case2", R,
                            breakdown=bracket >= 0.0,
                            note="threshold scales like e^beta at huge mass ratio")
    rhs = math.exp(beta) * bracket
    lhs = math.sqrt(q.A) * R * q.v0_prime
    return _outcome(lhs - rhs, abs(lhs) + abs(rhs) + q.A, True,
                    "2D.repulsive.vzero.case2", R)


def _vneg_2d(data, cfg, q):
    R = q.R
    if q.A == 0.0:
        return _categorical("2D.repulsive.vneg.massless", R,
                            note="inward free flow reaches the origin")
    if q.A_prime == 0.0:
        return _categorical("2D.repulsive.vneg.case1", R,
                            note="vacuum edge above interior mass")
    dvsq = 2.0 * q.v0 * q.v0_prime
    thr_low = q.A / R
    thr_high = thr_low + q.A_prime * q.v0 * q.v0 / q.A
    gate_scale = abs(dvsq) + thr_high
    slack_a = thr_high - dvsq
    if _sign_with_snap(slack_a, gate_scale) <= 0:
        return _outcome(slack_a, gate_scale, True, "2D.repulsive.vneg.case2a", R)
    td = turning_time(data, cfg, R)
    ts2 = 2.0 * td.t_star_prime
    ts2_err = 2.0 * td.t_star_prime_error
    inv_v = 1.0 / abs(q.v0)
    F, err = _gap_2d(q)
    if dvsq >= thr_low:
        rhs = max(0.0, ts2)
        cid = "2D.repulsive.vneg.case2b"
    else:
        rhs = ts2
        cid = "2D.repulsive.vneg.case2c"
    return _outcome(F - rhs, abs(F) + abs(rhs) + inv_v, True, cid, R,
                    err=err + ts2_err)


def _limit_flags_2d(q, verdict):
    if verdict.status != NO_BREAKDOWN:
        return verdict
    if q.A == 0.0 and q.v0 != 0.0:
        return Verdict(MARGINAL, verdict.condition_id, verdict.margin, q.R,
                       "A = 0 with v0 of uncertain sign: inward perturbation collapses")
    if q.A > 0.0 and q.A_prime == 0.0:
        return Verdict(MARGINAL, verdict.condition_id, verdict.margin, q.R,
                       "vacuum edge: any sign perturbation of v0 breaks down")
    return verdict


def pcfb_2d_repulsive(data, cfg, R, q=None):
    """Dispatch on the sign of v0(R) for lam < 0, n = 2."""
    if cfg.lam >= 0 or cfg.n != 2:
        raise ValueError("pcfb_2d_repulsive needs lam < 0 and n = 2")
    if q is None:
        q = threshold_quantities(data, cfg, R)
    try:
        if q.v0 > V_SIGN_BAND:
            return _vpos_2d(q)
        if q.v0 < -V_SIGN_BAND:
            return _vneg_2d(data, cfg, q)
        return _limit_flags_2d(q, _vzero_2d(q))
    except (QuadratureError, QuantityError) as exc:
        return Verdict(MARGINAL, "2D.repulsive.quadrature-failure", 0.0, q.R,
                       str(exc))


# ---------------------------------------------------------------------------
# dispatch and the radius scan
# ---------------------------------------------------------------------------

def evaluate_pcfb(data, cfg, R):
    """Evaluate the criterion matching (n, sign of lambda) at radius R."""
    if cfg.lam > 0:
        return pcfb_attractive(threshold_quantities(data, cfg, R), cfg)
    if cfg.lam == 0:
        raise ValueError("lambda = 0 has no breakdown criterion (free flow)")
    if cfg.n == 1:
        return pcfb_1d(threshold_quantities(data, cfg, R))
    if cfg.n == 2:
        return pcfb_2d_repulsive(data, cfg, R)
    return pcfb_3d_repulsive(data, cfg, R)


def _near_kink(data, R):
    for rk in data.kink_radii():
        if abs(R - rk) <= 1e-3 * max(R, rk):
            return True
    return False


def classify(data, cfg, scan=None):
    """Scan a log-spaced radius grid, refine transitions, and classify.

    Returns a breakdown witness on the first confirmed breakdown; an overall
    "global" strictly means SCAN_DISCLAIMER; marginal verdicts that survive
    bisection refinement make the result inconclusive.  Endpoint stability
    is probed at r_min/4, r_min/2, 2 r_max and 4 r_max.
    """
    scan = scan or ScanConfig()
    radii = list(np.geomspace(scan.r_min, scan.r_max, scan.points))
    probes = [scan.r_min / 4, scan.r_min / 2, 2 * scan.r_max, 4 * scan.r_max]
    notes = []

    def eval_at(R):
        v = evaluate_pcfb(data, cfg, R)
        if v.status != MARGINAL and _near_kink(data, R):
            v = Verdict(MARGINAL, v.condition_id, v.margin, v.R,
                        "derivative data has a kink near this radius")
        return v

    results = [(R, eval_at(R)) for R in radii]
    probe_results = [(R, eval_at(R)) for R in probes]
    endpoint_stable = (
        {v.status for _, v in probe_results[:2]} <= {results[0][1].status}
        and {v.status for _, v in probe_results[2:]} <= {results[-1][1].status}
    )
    if not endpoint_stable:
        notes.append("verdict changes just outside the scan window")
    results.extend(probe_results)
    results.sort(key=lambda rv: rv[0])

    refinements = 0
    breakdowns = [rv for rv in results if rv[1].status == BREAKDOWN]

    if not breakdowns:
        # probe shrinking neighborhoods of each marginal site
        unresolved = []
        step = (scan.r_max / scan.r_min) ** (1.0 / max(scan.points - 1, 1))
        for R, v in [rv for rv in results if rv[1].status == MARGINAL]:
            resolved = False
            factor = math.sqrt(step)
            for _ in range(scan.max_refinements):
                lo, hi = eval_at(R / factor), eval_at(R * factor)
                results.append((R / factor, lo))
                results.append((R * factor, hi))
                refinements += 2
                if lo.status == BREAKDOWN:
                    breakdowns.append((R / factor, lo))
                elif hi.status == BREAKDOWN:
                    breakdowns.append((R * factor, hi))
                if breakdowns or (lo.status == NO_BREAKDOWN and hi.status == NO_BREAKDOWN):
                    resolved = True
                    break
                factor = math.sqrt(factor)
                if factor <= 1.0 + 1e-14:
                    break
            if not resolved:
                unresolved.append((R, v))
            if breakdowns:
                break
        results.sort(key=lambda rv: rv[0])
        if not breakdowns and unresolved:
            notes.append(f"{len(unresolved)} marginal verdict(s) survived refinement")
            return Classification("inconclusive", None, results, refinements,
                                  endpoint_stable, tuple(notes))

    if breakdowns:
        # localize the lowest transition into the breakdown set
        results.sort(key=lambda rv: rv[0])
        first_idx = next(i for i, rv in enumerate(results) if rv[1].status == BREAKDOWN)
        if first_idx > 0:
            lo_r = results[first_idx - 1][0]
            hi_r = results[first_idx][0]
            for _ in range(scan.max_refinements):
                mid = math.sqrt(lo_r * hi_r)
                if mid <= lo_r or mid >= hi_r:
                    break
                v = eval_at(mid)
                results.append((mid, v))
                refinements += 1
                if v.status == BREAKDOWN:
                    hi_r = mid
                else:
                    lo_r = mid
            results.sort(key=lambda rv: rv[0])
        breakdowns = [rv for rv in results if rv[1].status == BREAKDOWN]
        witness = min(breakdowns, key=lambda rv: rv[0])
        return Classification("breakdown", witness, results, refinements,
                              endpoint_stable, tuple(notes))

    notes.append(SCAN_DISCLAIMER)
    return Classification("global", None, results, refinements,
                          endpoint_stable, tuple(notes))
