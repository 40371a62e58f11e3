"""Compiled inner loops: Hermite history evaluation, light-cone roots, point-charge fields.

Four-vectors are float arrays ordered (t, x, y, z) with metric signature (+, -, -, -)
and c = 1.  History arrays are ``taus (n,)`` and ``pos, vel, acc (n, 4)``.  Repeated
knots (equal consecutive taus) mark an acceleration discontinuity; the segment
between them has zero length and is never evaluated.
"""

import numba
import numpy as np

# status codes returned by lightcone_root
OK = 0
BEFORE_START = 1
AFTER_END = 2
NO_CONVERGENCE = 3

_EPS = np.finfo(np.float64).eps
# segments shorter than this (relative to 1 + |tau|) are evaluated by Taylor expansion
_TAYLOR_SPAN = 1e-5


@numba.njit(cache=True)
def mdot(u, v):
    return u[0] * v[0] - u[1] * v[1] - u[2] * v[2] - u[3] * v[3]


@numba.njit(cache=True)
def segment_eval(taus, pos, vel, acc, order, i, tau, out):
    """Evaluate the Hermite polynomial of segment ``i`` at ``tau``.

    Writes raw position, first and second tau-derivatives into ``out`` (3, 4).
    ``tau`` may lie outside the segment, in which case the polynomial is
    extrapolated.
    """
    t0 = taus[i]
    h = taus[i + 1] - t0
    if h < _TAYLOR_SPAN * (1.0 + abs(t0)):
        # on a very short segment the Hermite coefficients are swamped by the
        # rounding of the stored positions; expand about the nearer knot instead
        j = i if tau - t0 <= 0.5 * h else i + 1
        d = tau - taus[j]
        for k in range(4):
            out[0, k] = pos[j, k] + d * (vel[j, k] + 0.5 * d * acc[j, k])
            out[1, k] = vel[j, k] + d * acc[j, k]
            out[2, k] = acc[j, k]
        return
    s = (tau - t0) / h
    for k in range(4):
        p0 = pos[i, k]
        p1 = pos[i + 1, k]
        c1 = h * vel[i, k]
        if order == 5:
            c2 = 0.5 * h * h * acc[i, k]
            big_p = p1 - (p0 + c1 + c2)
            big_v = h * vel[i + 1, k] - (c1 + 2.0 * c2)
            big_a = h * h * acc[i + 1, k] - 2.0 * c2
            c3 = 10.0 * big_p - 4.0 * big_v + 0.5 * big_a
            c4 = -15.0 * big_p + 7.0 * big_v - big_a
            c5 = 6.0 * big_p - 3.0 * big_v + 0.5 * big_a
        else:
            big_p = p1 - (p0 + c1)
            big_v = h * vel[i + 1, k] - c1
            c2 = 3.0 * big_p - big_v
            c3 = big_v - 2.0 * big_p
            c4 = 0.0
            c5 = 0.0
        out[0, k] = p0 + s * (c1 + s * (c2 + s * (c3 + s * (c4 + s * c5))))
        out[1, k] = (c1 + s * (2.0 * c2 + s * (3.0 * c3 + s * (4.0 * c4 + s * 5.0 * c5)))) / h
        out[2, k] = (2.0 * c2 + s * (6.0 * c3 + s * (12.0 * c4 + s * 20.0 * c5))) / (h * h)


@numba.njit(cache=True)
def normalize_kinematics(out):
    """Rescale velocity to unit norm and strip the acceleration's velocity component."""
    vv = mdot(out[1], out[1])
    if vv > 0.0:
        scale = 1.0 / np.sqrt(vv)
        for k in range(4):
            out[1, k] *= scale
    av = mdot(out[2], out[1])
    for k in range(4):
        out[2, k] -= av * out[1, k]


@numba.njit(cache=True)
def locate(taus, lo, hi, tau):
    """Index of the non-degenerate segment in knots [lo, hi] that serves ``tau``."""
    i = lo + np.searchsorted(taus[lo:hi + 1], tau, side="right") - 1
    if i < lo:
        i = lo
    if i > hi - 1:
        i = hi - 1
    while i < hi - 1 and taus[i + 1] == taus[i]:
        i += 1
    while i > lo and taus[i + 1] == taus[i]:
        i -= 1
    return i


@numba.njit(cache=True)
def _cone_gap(event, p, sigma):
    # (e_t - z_t) - sigma * |e - z|: decreasing along any timelike worldline
    dx = event[1] - p[1]
    dy = event[2] - p[2]
    dz = event[3] - p[3]
    r = np.sqrt(dx * dx + dy * dy + dz * dz)
    return (event[0] - p[0]) - sigma * r, r


@numba.njit(cache=True)
def _cone_gap_slope(event, p, v, sigma):
    dx = event[1] - p[1]
    dy = event[2] - p[2]
    dz = event[3] - p[3]
    r = np.sqrt(dx * dx + dy * dy + dz * dz)
    if r == 0.0:
        return -v[0]
    return -v[0] + sigma * (dx * v[1] + dy * v[2] + dz * v[3]) / r


@numba.njit(cache=True)
def lightcone_root(taus, pos, vel, acc, order, lo, hi, ext_lo, ext_hi, event, sigma, work):
    """Parameter where the worldline crosses the light cone of ``event``.

    ``sigma = +1`` selects the past (retarded) sheet, ``-1`` the future (advanced)
    one.  The search is restricted to knots ``lo..hi``; ``ext_lo``/``ext_hi``
    permit extrapolating the outermost segment polynomial when the root lies
    just beyond a discontinuity boundary.  Returns ``(tau, segment, status)``.
    """
    g_lo, _ = _cone_gap(event, pos[lo], sigma)
    g_hi, _ = _cone_gap(event, pos[hi], sigma)
    seg = -1
    a = 0.0
    b = 0.0
    ga = 0.0
    gb = 0.0
    if g_lo > 0.0 and g_hi <= 0.0:
        if g_hi == 0.0:
            return taus[hi], locate(taus, lo, hi, taus[hi]), OK
        i = lo
        j = hi
        while j - i > 1:
            m = (i + j) // 2
            gm, _ = _cone_gap(event, pos[m], sigma)
            if gm > 0.0:
                i = m
            else:
                j = m
        seg = locate(taus, lo, hi, 0.5 * (taus[i] + taus[j]))
        a = taus[i]
        b = taus[j]
        ga = g_lo if i == lo else _cone_gap(event, pos[i], sigma)[0]
        gb, _ = _cone_gap(event, pos[j], sigma)
    elif g_lo <= 0.0:
        if not ext_lo:
            return taus[lo], lo, BEFORE_START
        seg = locate(taus, lo, hi, taus[lo])
        width = taus[seg + 1] - taus[seg]
        b = taus[lo]
        gb = g_lo
        found = False
        for k in range(48):
            a = b - width * 2.0 ** k
            segment_eval(taus, pos, vel, acc, order, seg, a, work)
            ga, _ = _cone_gap(event, work[0], sigma)
            if ga > 0.0:
                found = True
                break
        if not found:
            return taus[lo], seg, BEFORE_START
    else:
        if not ext_hi:
            return taus[hi], hi - 1, AFTER_END
        seg = locate(taus, lo, hi, taus[hi])
        width = taus[seg + 1] - taus[seg]
        a = taus[hi]
        ga = g_hi
        found = False
        for k in range(48):
            b = a + width * 2.0 ** k
            segment_eval(taus, pos, vel, acc, order, seg, b, work)
            gb, _ = _cone_gap(event, work[0], sigma)
            if gb <= 0.0:
                found = True
                break
        if not found:
            return taus[hi], seg, AFTER_END

    # safeguarded Newton inside the bracket [a, b] with ga > 0 >= gb
    x = a + (b - a) * ga / (ga - gb)
    if not (a < x < b):
        x = 0.5 * (a + b)
    for _ in range(100):
        segment_eval(taus, pos, vel, acc, order, seg, x, work)
        g, r = _cone_gap(event, work[0], sigma)
        scale = abs(event[0] - work[0, 0]) + r + abs(event[0]) + 1.0
        if abs(g) <= 4.0 * _EPS * scale:
            return x, seg, OK
        if g > 0.0:
            a = x
        else:
            b = x
        dg = _cone_gap_slope(event, work[0], work[1], sigma)
        x_new = x - g / dg if dg != 0.0 else 0.5 * (a + b)
        if not (a < x_new < b):
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= 2.0 * _EPS * max(abs(x), 1.0) or b - a <= 2.0 * _EPS * max(abs(a), abs(b), 1.0):
            segment_eval(taus, pos, vel, acc, order, seg, x_new, work)
            return x_new, seg, OK
        x = x_new
    return x, seg, NO_CONVERGENCE


@numba.njit(cache=True)
def point_charge_field(sep, u, a, charge, out):
    """Field tensor F^{mu nu} of a point charge seen along the null separation ``sep``.

    ``sep = event - source`` (future-pointing for the retarded sheet,
    past-pointing for the advanced one); ``u`` and ``a`` are the source's
    four-velocity and four-acceleration at the emission point.  Returns the
    scalar ``rho = sep . u``.
    """
    rho = mdot(sep, u)
    ra = mdot(sep, a)
    pref = charge / (rho * rho * abs(rho))
    for m in range(4):
        out[m, m] = 0.0
        for n in range(m + 1, 4):
            x_mn = sep[m] * u[n] - sep[n] * u[m]
            w_mn = sep[m] * a[n] - sep[n] * a[m]
            f = pref * (x_mn * (1.0 - ra) + rho * w_mn)
            out[m, n] = f
            out[n, m] = -f
    return rho


@numba.njit(cache=True)
def lorentz_accel(field, u, q_over_m, out):
    """out^mu = (q/m) F^{mu nu} u_nu with u_nu = g_{nu nu} u^nu."""
    for m in range(4):
        out[m] = q_over_m * (field[m, 0] * u[0] - field[m, 1] * u[1]
                             - field[m, 2] * u[2] - field[m, 3] * u[3])


@numba.njit(cache=True)
def retarded_pull(taus, pos, vel, acc, order, lo, hi, ext_lo, ext_hi,
                  event, u, src_charge, q_over_m, out_acc, work, field):
    """Four-acceleration on a test charge at ``event`` from one source history.

    Returns ``(status, tau_ret, cone_residual, retarded_distance, rho, u.a)``.
    """
    tau_r, seg, status = lightcone_root(taus, pos, vel, acc, order, lo, hi,
                                        ext_lo, ext_hi, event, 1.0, work)
    if status != OK:
        return status, tau_r, np.inf, np.nan, np.nan, np.nan
    segment_eval(taus, pos, vel, acc, order, seg, tau_r, work)
    normalize_kinematics(work)
    sep = np.empty(4)
    for k in range(4):
        sep[k] = event[k] - work[0, k]
    residual = abs(mdot(sep, sep))
    rho = point_charge_field(sep, work[1], work[2], src_charge, field)
    lorentz_accel(field, u, q_over_m, out_acc)
    return status, tau_r, residual, sep[0], rho, mdot(u, out_acc)


@numba.njit(cache=True)
def eval_many(taus, pos, vel, acc, order, queries, out):
    """Normalized (position, velocity, acceleration) at each query; out has shape (m, 3, 4)."""
    n = taus.shape[0]
    work = np.empty((3, 4))
    for q in range(queries.shape[0]):
        i = locate(taus, 0, n - 1, queries[q])
        segment_eval(taus, pos, vel, acc, order, i, queries[q], work)
        normalize_kinematics(work)
        out[q] = work
