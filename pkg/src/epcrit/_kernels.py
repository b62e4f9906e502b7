"""Adaptive Dormand-Prince 5(4) kernel for the characteristic system.

One kernel integrates the four-component state (X, X', Gamma, Gamma') of
a single characteristic: X'' = -lam m0 X^(1-n) and the variational equation
Gamma'' = -lam (dm0 X^(1-n) - (n-1) m0 X^-n Gamma), where m0 and dm0 are
constants along the trajectory.  Dense (quartic) output drives event
location for Gamma = 0 and X = eps_x crossings, refined by bisection to a
bracket width of 1e-9 (1 + t).

The kernel is compiled with numba by default; setting EP_DISABLE_NUMBA=1
(or missing numba) selects the identical pure-Python path.  The benchmark
in benchmarks/bench_kernels.py compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["integrate_characteristic", "NUMBA_ENABLED", "STATUS_HORIZON",
           "STATUS_EVENT", "STATUS_UNDERFLOW", "STATUS_MAXSTEPS",
           "EVENT_NONE", "EVENT_GAMMA", "EVENT_X"]

STATUS_HORIZON = 0
STATUS_EVENT = 1
STATUS_UNDERFLOW = 2
STATUS_MAXSTEPS = 3

EVENT_NONE = 0
EVENT_GAMMA = 1
EVENT_X = 2

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# dense-output weights (the classic DOPRI5 quartic interpolant)
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0


def _integrate_impl(lam, m0, dm0, nf, R, v0, v0p, t_end, rtol, atol, eps_x,
                    max_steps):
    """Integrate one characteristic to t_end or the first event.

    Returns (ts, ys, status, event_kind, t_lo, t_hi, n_steps) where ys rows
    are (X, X', Gamma, Gamma') at the times in ts; the last sample sits just
    before any event.  t_lo/t_hi bracket the event time.
    """
    e1 = 1.0 - nf                   # X exponent in the force term
    am = -lam * m0                  # X'' = am * X**e1
    ad = -lam * dm0
    ag = lam * (nf - 1.0) * m0      # Gamma'' = ad*X**e1 + ag*X**(-nf)*Gamma
    xguard = 0.5 * eps_x

    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, 4))
    x = R
    xp = v0
    g = 1.0
    gp = v0p
    t = 0.0
    ts[0] = 0.0
    ys[0, 0] = x
    ys[0, 1] = xp
    ys[0, 2] = g
    ys[0, 3] = gp
    count = 1

    k = np.empty((7, 4))
    yt = np.empty(4)
    y0 = np.empty(4)
    y1 = np.empty(4)
    rc = np.empty((5, 4))
    dense = np.empty(4)

    # first derivative evaluation
    k[0, 0] = xp
    k[0, 1] = am * x ** e1
    k[0, 2] = gp
    k[0, 3] = ad * x ** e1 + ag * x ** (-nf) * g

    h = min(0.01 * (1.0 + R) / (1.0 + abs(v0) + abs(k[0, 1])), 0.1 * t_end)
    if h <= 0.0:
        h = 1e-6 * t_end

    status = STATUS_HORIZON
    ev_kind = EVENT_NONE
    ev_lo = t_end
    ev_hi = t_end
    steps = 0

    while t < t_end:
        if steps >= max_steps:
            status = STATUS_MAXSTEPS
            break
        steps += 1
        if h > t_end - t:
            h = t_end - t
        if h < 1e-14 * (1.0 + abs(t)):
            if t_end - t <= 1e-12 * (1.0 + t_end):
                break   # horizon reached to rounding
            # cannot advance: a collapse the stepper cannot cross
            status = STATUS_UNDERFLOW
            ev_kind = EVENT_X
            ev_lo = t
            ev_hi = t + 1e3 * h
            break

        y0[0] = x
        y0[1] = xp
        y0[2] = g
        y0[3] = gp

        reject = False
        # stage 2
        for i in range(4):
            yt[i] = y0[i] + h * _A21 * k[0, i]
        if yt[0] <= xguard:
            reject = True
        else:
            k[1, 0] = yt[1]
            k[1, 1] = am * yt[0] ** e1
            k[1, 2] = yt[3]
            k[1, 3] = ad * yt[0] ** e1 + ag * yt[0] ** (-nf) * yt[2]
        if not reject:
            for i in range(4):
                yt[i] = y0[i] + h * (_A31 * k[0, i] + _A32 * k[1, i])
            if yt[0] <= xguard:
                reject = True
            else:
                k[2, 0] = yt[1]
                k[2, 1] = am * yt[0] ** e1
                k[2, 2] = yt[3]
                k[2, 3] = ad * yt[0] ** e1 + ag * yt[0] ** (-nf) * yt[2]
        if not reject:
            for i in range(4):
                yt[i] = y0[i] + h * (_A41 * k[0, i] + _A42 * k[1, i] + _A43 * k[2, i])
            if yt[0] <= xguard:
                reject = True
            else:
                k[3, 0] = yt[1]
                k[3, 1] = am * yt[0] ** e1
                k[3, 2] = yt[3]
                k[3, 3] = ad * yt[0] ** e1 + ag * yt[0] ** (-nf) * yt[2]
        if not reject:
            for i in range(4):
                yt[i] = y0[i] + h * (_A51 * k[0, i] + _A52 * k[1, i]
                                     + _A53 * k[2, i] + _A54 * k[3, i])
            if yt[0] <= xguard:
                reject = True
            else:
                k[4, 0] = yt[1]
                k[4, 1] = am * yt[0] ** e1
                k[4, 2] = yt[3]
                k[4, 3] = ad * yt[0] ** e1 + ag * yt[0] ** (-nf) * yt[2]
        if not reject:
            for i in range(4):
                yt[i] = y0[i] + h * (_A61 * k[0, i] + _A62 * k[1, i] + _A63 * k[2, i]
                                     + _A64 * k[3, i] + _A65 * k[4, i])
            if yt[0] <= xguard:
                reject = True
            else:
                k[5, 0] = yt[1]
                k[5, 1] = am * yt[0] ** e1
                k[5, 2] = yt[3]
                k[5, 3] = ad * yt[0] ** e1 + ag * yt[0] ** (-nf) * yt[2]
        if not reject:
            for i in range(4):
                y1[i] = y0[i] + h * (_B1 * k[0, i] + _B3 * k[2, i] + _B4 * k[3, i]
                                     + _B5 * k[4, i] + _B6 * k[5, i])
            if y1[0] <= xguard:
                reject = True
            else:
                k[6, 0] = y1[1]
                k[6, 1] = am * y1[0] ** e1
                k[6, 2] = y1[3]
                k[6, 3] = ad * y1[0] ** e1 + ag * y1[0] ** (-nf) * y1[2]

        if reject:
            h *= 0.5
            continue

        errn = 0.0
        for i in range(4):
            ei = h * (_E1 * k[0, i] + _E3 * k[2, i] + _E4 * k[3, i]
                      + _E5 * k[4, i] + _E6 * k[5, i] + _E7 * k[6, i])
            sc = atol + rtol * max(abs(y0[i]), abs(y1[i]))
            errn += (ei / sc) ** 2
        errn = math.sqrt(0.25 * errn)

        if errn > 1.0:
            h *= max(0.2, 0.9 * errn ** -0.2)
            continue

        # accepted: build the dense-output coefficients
        for i in range(4):
            dy = y1[i] - y0[i]
            bspl = h * k[0, i] - dy
            rc[0, i] = y0[i]
            rc[1, i] = dy
            rc[2, i] = bspl
            rc[3, i] = dy - h * k[6, i] - bspl
            rc[4, i] = h * (_D1 * k[0, i] + _D3 * k[2, i] + _D4 * k[3, i]
                            + _D5 * k[4, i] + _D6 * k[5, i] + _D7 * k[6, i])

        # scan dense output for Gamma = 0 and X = eps_x crossings
        th_prev = 0.0
        gx_prev = y0[0] - eps_x
        gg_prev = y0[2]
        hit = EVENT_NONE
        th_a = 0.0
        th_b = 1.0
        for j in range(4):
            th = 0.25 * (j + 1)
            for i in range(4):
                dense[i] = rc[0, i] + th * (rc[1, i] + (1.0 - th)
                           * (rc[2, i] + th * (rc[3, i] + (1.0 - th) * rc[4, i])))
            gx = dense[0] - eps_x
            gg = dense[2]
            if gg_prev > 0.0 and gg <= 0.0:
                hit = EVENT_GAMMA
                th_a = th_prev
                th_b = th
                break
            if gx_prev > 0.0 and gx <= 0.0:
                hit = EVENT_X
                th_a = th_prev
                th_b = th
                break
            th_prev = th
            gx_prev = gx
            gg_prev = gg

        if hit != EVENT_NONE:
            width_target = 1e-9 * (1.0 + t + th_b * h) / h
            for _ in range(80):
                if th_b - th_a <= width_target:
                    break
                tm = 0.5 * (th_a + th_b)
                for i in range(4):
                    dense[i] = rc[0, i] + tm * (rc[1, i] + (1.0 - tm)
                               * (rc[2, i] + tm * (rc[3, i] + (1.0 - tm) * rc[4, i])))
                val = dense[2] if hit == EVENT_GAMMA else dense[0] - eps_x
                if val > 0.0:
                    th_a = tm
                else:
                    th_b = tm
            status = STATUS_EVENT
            ev_kind = hit
            ev_lo = t + th_a * h
            ev_hi = t + th_b * h
            # final sample just inside the bracket
            for i in range(4):
                dense[i] = rc[0, i] + th_a * (rc[1, i] + (1.0 - th_a)
                           * (rc[2, i] + th_a * (rc[3, i] + (1.0 - th_a) * rc[4, i])))
            if count >= cap:
                cap *= 2
                ts2 = np.empty(cap)
                ys2 = np.empty((cap, 4))
                ts2[:count] = ts[:count]
                ys2[:count] = ys[:count]
                ts = ts2
                ys = ys2
            ts[count] = ev_lo
            for i in range(4):
                ys[count, i] = dense[i]
            count += 1
            break

        t += h
        x = y1[0]
        xp = y1[1]
        g = y1[2]
        gp = y1[3]
        for i in range(4):
            k[0, i] = k[6, i]   # FSAL
        if count >= cap:
            cap *= 2
            ts2 = np.empty(cap)
            ys2 = np.empty((cap, 4))
            ts2[:count] = ts[:count]
            ys2[:count] = ys[:count]
            ts = ts2
            ys = ys2
        ts[count] = t
        for i in range(4):
            ys[count, i] = y1[i]
        count += 1

        if errn > 1e-30:
            h *= min(5.0, max(0.2, 0.9 * errn ** -0.2))
        else:
            h *= 5.0

    return ts[:count].copy(), ys[:count].copy(), status, ev_kind, ev_lo, ev_hi, steps


def _numba_wanted():
    flag = os.environ.get("EP_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


NUMBA_ENABLED = False
integrate_characteristic = _integrate_impl
if _numba_wanted():
    try:
        import numba

        integrate_characteristic = numba.njit(cache=True)(_integrate_impl)
        NUMBA_ENABLED = True
    except ImportError:
        pass

integrate_characteristic_py = _integrate_impl
