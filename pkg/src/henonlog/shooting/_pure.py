"""Pure-Python adaptive Runge-Kutta kernel for the radial shooting ODE.

Twin of the compiled extension ``_speedups``; both implement exactly the
same Dormand-Prince 5(4) scheme with the same step control, event
handling and status codes, so results agree to the last few ulps.  The
ODE integrated is

    u'' + (N-1) u'/r + r^alpha |u|^(p-2) u + lambda u + mu u log(u^2) = 0

as the first-order system (u, v).  Integration stops at r = 1, at the
first sign change of u (the crossing is refined on the cubic Hermite
interpolant of the accepted step), on step-size underflow, on amplitude
blow-up, or when the step budget is exhausted.

Status codes: 0 reached r=1, 1 crossed zero, 2 step underflow,
3 step budget exhausted, 4 amplitude blow-up.
"""

import math

STATUS_END = 0
STATUS_ZERO = 1
STATUS_STIFF = 2
STATUS_MAXSTEPS = 3
STATUS_BLOWUP = 4

_LOG_FLOOR = 1e-150
_H_FLOOR = 1e-13
_AMP_CAP = 1e100


def _hermite_zero(u0, m0, u1, m1):
    """Root in (0,1] of the cubic Hermite with values u0>0>=u1, slopes m0,m1."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        t = 0.5 * (lo + hi)
        t2 = t * t
        t3 = t2 * t
        val = (
            (2 * t3 - 3 * t2 + 1) * u0
            + (t3 - 2 * t2 + t) * m0
            + (-2 * t3 + 3 * t2) * u1
            + (t3 - t2) * m1
        )
        if val > 0.0:
            lo = t
        else:
            hi = t
    return 0.5 * (lo + hi)


def integrate_radial(
    N, alpha, p, lam, mu,
    r0, u0, v0, rtol, atol,
    max_steps, record, rec_r, rec_u, rec_v,
):
    """Integrate from (r0, u0, v0) toward r = 1.

    Returns (status, r, u, v, r_zero, n_steps, n_rejected, h_min, n_rec).
    When ``record`` is nonzero, accepted states are appended to the
    rec_* buffers (silently stopping when full).
    """
    nm1 = N - 1.0
    pm2 = p - 2.0
    cap = max(1.0, abs(u0)) * _AMP_CAP

    def rhs(r, u, v):
        au = abs(u)
        try:
            f = (au ** pm2) * u * (r ** alpha) + lam * u
        except OverflowError:
            # C pow() semantics: the power term saturates to +-inf and
            # the step is rejected by the finite-value check
            f = math.copysign(math.inf, u)
        if au > _LOG_FLOOR:
            f += mu * u * 2.0 * math.log(au)
        return v, -nm1 * v / r - f

    r, u, v = r0, u0, v0
    n_steps = 0
    n_rej = 0
    nrec = 0
    h_min_seen = math.inf
    r_zero = math.nan
    cap_rec = len(rec_r) if record else 0
    if record and cap_rec > 0:
        rec_r[0] = r
        rec_u[0] = u
        rec_v[0] = v
        nrec = 1

    fu, fv = rhs(r, u, v)
    h = min(1e-4, r0, 1.0 - r0)
    if h <= 0.0:
        return STATUS_END, r, u, v, r_zero, 0, 0, 0.0, nrec
    status = STATUS_MAXSTEPS

    while n_steps < max_steps:
        if h < _H_FLOOR * r or h < 1e-290:
            status = STATUS_STIFF
            break
        if h > 1.0 - r:
            h = 1.0 - r

        k1u, k1v = fu, fv
        ru = r + 0.2 * h
        k2u, k2v = rhs(ru, u + h * 0.2 * k1u, v + h * 0.2 * k1v)
        ru = r + 0.3 * h
        k3u, k3v = rhs(
            ru,
            u + h * (0.075 * k1u + 0.225 * k2u),
            v + h * (0.075 * k1v + 0.225 * k2v),
        )
        ru = r + 0.8 * h
        k4u, k4v = rhs(
            ru,
            u + h * (44.0 / 45.0 * k1u - 56.0 / 15.0 * k2u + 32.0 / 9.0 * k3u),
            v + h * (44.0 / 45.0 * k1v - 56.0 / 15.0 * k2v + 32.0 / 9.0 * k3v),
        )
        ru = r + 8.0 / 9.0 * h
        k5u, k5v = rhs(
            ru,
            u
            + h
            * (
                19372.0 / 6561.0 * k1u
                - 25360.0 / 2187.0 * k2u
                + 64448.0 / 6561.0 * k3u
                - 212.0 / 729.0 * k4u
            ),
            v
            + h
            * (
                19372.0 / 6561.0 * k1v
                - 25360.0 / 2187.0 * k2v
                + 64448.0 / 6561.0 * k3v
                - 212.0 / 729.0 * k4v
            ),
        )
        ru = r + h
        k6u, k6v = rhs(
            ru,
            u
            + h
            * (
                9017.0 / 3168.0 * k1u
                - 355.0 / 33.0 * k2u
                + 46732.0 / 5247.0 * k3u
                + 49.0 / 176.0 * k4u
                - 5103.0 / 18656.0 * k5u
            ),
            v
            + h
            * (
                9017.0 / 3168.0 * k1v
                - 355.0 / 33.0 * k2v
                + 46732.0 / 5247.0 * k3v
                + 49.0 / 176.0 * k4v
                - 5103.0 / 18656.0 * k5v
            ),
        )
        u_new = u + h * (
            35.0 / 384.0 * k1u
            + 500.0 / 1113.0 * k3u
            + 125.0 / 192.0 * k4u
            - 2187.0 / 6784.0 * k5u
            + 11.0 / 84.0 * k6u
        )
        v_new = v + h * (
            35.0 / 384.0 * k1v
            + 500.0 / 1113.0 * k3v
            + 125.0 / 192.0 * k4v
            - 2187.0 / 6784.0 * k5v
            + 11.0 / 84.0 * k6v
        )
        k7u, k7v = rhs(r + h, u_new, v_new)

        eu = h * (
            71.0 / 57600.0 * k1u
            - 71.0 / 16695.0 * k3u
            + 71.0 / 1920.0 * k4u
            - 17253.0 / 339200.0 * k5u
            + 22.0 / 525.0 * k6u
            - 1.0 / 40.0 * k7u
        )
        ev = h * (
            71.0 / 57600.0 * k1v
            - 71.0 / 16695.0 * k3v
            + 71.0 / 1920.0 * k4v
            - 17253.0 / 339200.0 * k5v
            + 22.0 / 525.0 * k6v
            - 1.0 / 40.0 * k7v
        )
        su = atol + rtol * max(abs(u), abs(u_new))
        sv = atol + rtol * max(abs(v), abs(v_new))
        try:
            err = math.sqrt(0.5 * ((eu / su) ** 2 + (ev / sv) ** 2))
        except OverflowError:
            err = math.inf

        if err <= 1.0 and math.isfinite(u_new) and math.isfinite(v_new):
            n_steps += 1
            if h < h_min_seen:
                h_min_seen = h
            if u_new <= 0.0:
                theta = (
                    1.0
                    if u_new == 0.0
                    else _hermite_zero(u, h * k1u, u_new, h * k7u)
                )
                r_zero = r + theta * h
                r, u, v = r_zero, 0.0, v + theta * (v_new - v)
                status = STATUS_ZERO
                if record and nrec < cap_rec:
                    rec_r[nrec] = r
                    rec_u[nrec] = 0.0
                    rec_v[nrec] = v
                    nrec += 1
                break
            r += h
            u, v = u_new, v_new
            fu, fv = k7u, k7v
            if record and nrec < cap_rec:
                rec_r[nrec] = r
                rec_u[nrec] = u
                rec_v[nrec] = v
                nrec += 1
            if abs(u) > cap or abs(v) > cap / max(r, 1e-3):
                status = STATUS_BLOWUP
                break
            if r >= 1.0 - 1e-15:
                r = 1.0
                status = STATUS_END
                break
            fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            n_rej += 1
            if not (math.isfinite(u_new) and math.isfinite(v_new)):
                h *= 0.1
            else:
                h *= max(0.2, 0.9 * err ** -0.2)

    return status, r, u, v, r_zero, n_steps, n_rej, h_min_seen, nrec
