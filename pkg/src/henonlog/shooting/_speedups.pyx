# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled adaptive Runge-Kutta kernel for the radial shooting ODE.

Twin of ``_pure``: identical Dormand-Prince 5(4) scheme, step control,
event handling and status codes.  See that module for documentation.
"""

from libc.math cimport fabs, fmax, fmin, isfinite, log, pow, sqrt, INFINITY, NAN

STATUS_END = 0
STATUS_ZERO = 1
STATUS_STIFF = 2
STATUS_MAXSTEPS = 3
STATUS_BLOWUP = 4

cdef double _LOG_FLOOR = 1e-150
cdef double _H_FLOOR = 1e-13
cdef double _AMP_CAP = 1e100


cdef inline void _rhs(double r, double u, double v,
                      double nm1, double alpha, double pm2,
                      double lam, double mu,
                      double* out_u, double* out_v) nogil:
    cdef double au = fabs(u)
    cdef double f = pow(au, pm2) * u * pow(r, alpha) + lam * u
    if au > _LOG_FLOOR:
        f += mu * u * 2.0 * log(au)
    out_u[0] = v
    out_v[0] = -nm1 * v / r - f


cdef inline double _hermite_zero(double u0, double m0, double u1, double m1) nogil:
    cdef double lo = 0.0, hi = 1.0, t, t2, t3, val
    cdef int i
    for i in range(80):
        t = 0.5 * (lo + hi)
        t2 = t * t
        t3 = t2 * t
        val = ((2 * t3 - 3 * t2 + 1) * u0 + (t3 - 2 * t2 + t) * m0
               + (-2 * t3 + 3 * t2) * u1 + (t3 - t2) * m1)
        if val > 0.0:
            lo = t
        else:
            hi = t
    return 0.5 * (lo + hi)


def integrate_radial(double N, double alpha, double p, double lam, double mu,
                     double r0, double u0, double v0, double rtol, double atol,
                     long max_steps, int record,
                     double[::1] rec_r, double[::1] rec_u, double[::1] rec_v):
    """Same contract as the pure-Python twin."""
    cdef double nm1 = N - 1.0
    cdef double pm2 = p - 2.0
    cdef double cap = fmax(1.0, fabs(u0)) * _AMP_CAP
    cdef double r = r0, u = u0, v = v0
    cdef long n_steps = 0, n_rej = 0
    cdef Py_ssize_t nrec = 0, cap_rec = 0
    cdef double h_min_seen = INFINITY
    cdef double r_zero = NAN
    cdef double fu, fv, h, err, fac, theta
    cdef double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v, k5u, k5v, k6u, k6v, k7u, k7v
    cdef double u_new, v_new, eu, ev, su, sv, ru
    cdef int status = STATUS_MAXSTEPS

    if record:
        cap_rec = rec_r.shape[0]
        if cap_rec > 0:
            rec_r[0] = r
            rec_u[0] = u
            rec_v[0] = v
            nrec = 1

    _rhs(r, u, v, nm1, alpha, pm2, lam, mu, &fu, &fv)
    h = fmin(fmin(1e-4, r0), 1.0 - r0)
    if h <= 0.0:
        return STATUS_END, r, u, v, r_zero, 0, 0, 0.0, nrec

    while n_steps < max_steps:
        if h < _H_FLOOR * r or h < 1e-290:
            status = STATUS_STIFF
            break
        if h > 1.0 - r:
            h = 1.0 - r

        k1u = fu; k1v = fv
        ru = r + 0.2 * h
        _rhs(ru, u + h * 0.2 * k1u, v + h * 0.2 * k1v,
             nm1, alpha, pm2, lam, mu, &k2u, &k2v)
        ru = r + 0.3 * h
        _rhs(ru, u + h * (0.075 * k1u + 0.225 * k2u),
             v + h * (0.075 * k1v + 0.225 * k2v),
             nm1, alpha, pm2, lam, mu, &k3u, &k3v)
        ru = r + 0.8 * h
        _rhs(ru,
             u + h * (44.0 / 45.0 * k1u - 56.0 / 15.0 * k2u + 32.0 / 9.0 * k3u),
             v + h * (44.0 / 45.0 * k1v - 56.0 / 15.0 * k2v + 32.0 / 9.0 * k3v),
             nm1, alpha, pm2, lam, mu, &k4u, &k4v)
        ru = r + 8.0 / 9.0 * h
        _rhs(ru,
             u + h * (19372.0 / 6561.0 * k1u - 25360.0 / 2187.0 * k2u
                      + 64448.0 / 6561.0 * k3u - 212.0 / 729.0 * k4u),
             v + h * (19372.0 / 6561.0 * k1v - 25360.0 / 2187.0 * k2v
                      + 64448.0 / 6561.0 * k3v - 212.0 / 729.0 * k4v),
             nm1, alpha, pm2, lam, mu, &k5u, &k5v)
        ru = r + h
        _rhs(ru,
             u + h * (9017.0 / 3168.0 * k1u - 355.0 / 33.0 * k2u
                      + 46732.0 / 5247.0 * k3u + 49.0 / 176.0 * k4u
                      - 5103.0 / 18656.0 * k5u),
             v + h * (9017.0 / 3168.0 * k1v - 355.0 / 33.0 * k2v
                      + 46732.0 / 5247.0 * k3v + 49.0 / 176.0 * k4v
                      - 5103.0 / 18656.0 * k5v),
             nm1, alpha, pm2, lam, mu, &k6u, &k6v)
        u_new = u + h * (35.0 / 384.0 * k1u + 500.0 / 1113.0 * k3u
                         + 125.0 / 192.0 * k4u - 2187.0 / 6784.0 * k5u
                         + 11.0 / 84.0 * k6u)
        v_new = v + h * (35.0 / 384.0 * k1v + 500.0 / 1113.0 * k3v
                         + 125.0 / 192.0 * k4v - 2187.0 / 6784.0 * k5v
                         + 11.0 / 84.0 * k6v)
        _rhs(r + h, u_new, v_new, nm1, alpha, pm2, lam, mu, &k7u, &k7v)

        eu = h * (71.0 / 57600.0 * k1u - 71.0 / 16695.0 * k3u
                  + 71.0 / 1920.0 * k4u - 17253.0 / 339200.0 * k5u
                  + 22.0 / 525.0 * k6u - 1.0 / 40.0 * k7u)
        ev = h * (71.0 / 57600.0 * k1v - 71.0 / 16695.0 * k3v
                  + 71.0 / 1920.0 * k4v - 17253.0 / 339200.0 * k5v
                  + 22.0 / 525.0 * k6v - 1.0 / 40.0 * k7v)
        su = atol + rtol * fmax(fabs(u), fabs(u_new))
        sv = atol + rtol * fmax(fabs(v), fabs(v_new))
        err = sqrt(0.5 * ((eu / su) * (eu / su) + (ev / sv) * (ev / sv)))

        if err <= 1.0 and isfinite(u_new) and isfinite(v_new):
            n_steps += 1
            if h < h_min_seen:
                h_min_seen = h
            if u_new <= 0.0:
                if u_new == 0.0:
                    theta = 1.0
                else:
                    theta = _hermite_zero(u, h * k1u, u_new, h * k7u)
                r_zero = r + theta * h
                r = r_zero
                u = 0.0
                v = v + theta * (v_new - v)
                status = STATUS_ZERO
                if record and nrec < cap_rec:
                    rec_r[nrec] = r
                    rec_u[nrec] = 0.0
                    rec_v[nrec] = v
                    nrec += 1
                break
            r += h
            u = u_new
            v = v_new
            fu = k7u
            fv = k7v
            if record and nrec < cap_rec:
                rec_r[nrec] = r
                rec_u[nrec] = u
                rec_v[nrec] = v
                nrec += 1
            if fabs(u) > cap or fabs(v) > cap / fmax(r, 1e-3):
                status = STATUS_BLOWUP
                break
            if r >= 1.0 - 1e-15:
                r = 1.0
                status = STATUS_END
                break
            if err > 1e-10:
                fac = 0.9 * pow(err, -0.2)
            else:
                fac = 5.0
            h *= fmin(5.0, fmax(0.2, fac))
        else:
            n_rej += 1
            if not (isfinite(u_new) and isfinite(v_new)):
                h *= 0.1
            else:
                h *= fmax(0.2, 0.9 * pow(err, -0.2))

    return status, r, u, v, r_zero, n_steps, n_rej, h_min_seen, nrec
