"""Point-charge field tensors on sampled worldlines, and the forces they exert.

The field of a source history at an event is the delta-function integral

    F^{mu nu}(x) = 2 e Int (u^nu d^mu - u^mu d^nu) delta((x - z(s))^2) ds

taken over the part of the history on the past light cone of x.  Composing the
delta with the null condition turns it into an evaluation at the retarded
point, which ``retarded_field`` does in closed form.
``regularized_field_oracle`` instead smears the delta into a narrow Gaussian
and integrates numerically; it never touches the source acceleration or the
refined light-cone root, so it checks the closed form independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .. import _kernels as kern
from ..errors import DomainError, InsufficientHistoryError, OracleFailure, SingularityError
from ..minkowski import Worldline, interpolate, lightcone_intersection, minkowski_dot

METRIC_DIAG = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass
class Particle:
    mass: float
    charge: float
    history: Worldline

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError(f"rest mass must be positive, got {self.mass}")


def electric_part(field) -> np.ndarray:
    """E^i = F^{i0}."""
    return np.asarray(field)[1:, 0].copy()


def magnetic_part(field) -> np.ndarray:
    """B = (F^{32}, F^{13}, F^{21})."""
    f = np.asarray(field)
    return np.array([f[3, 2], f[1, 3], f[2, 1]])


def field_from_kinematics(separation, velocity, acceleration, charge) -> np.ndarray:
    """Closed-form tensor for a null ``separation`` = event - source point."""
    out = np.empty((4, 4))
    rho = kern.point_charge_field(np.asarray(separation, float), np.asarray(velocity, float),
                                  np.asarray(acceleration, float), float(charge), out)
    if abs(rho) < 1e-12:
        raise SingularityError(f"R.u = {rho:.3e}: the source is effectively on the light cone")
    return out


def _cone_field(source: Particle, event, branch: str) -> np.ndarray:
    event = np.asarray(event, dtype=float)
    tau = lightcone_intersection(source.history, event, branch)
    s = interpolate(source.history, tau)
    return field_from_kinematics(event - s.position, s.velocity, s.acceleration, source.charge)


def retarded_field(source: Particle, event) -> np.ndarray:
    """F^{mu nu} at ``event`` due to ``source`` at its past light-cone point."""
    return _cone_field(source, event, "retarded")


def advanced_field(source: Particle, event) -> np.ndarray:
    """F^{mu nu} at ``event`` due to ``source`` at its future light-cone point."""
    return _cone_field(source, event, "advanced")


def lorentz_force(field, particle: Particle, velocity) -> np.ndarray:
    """Four-acceleration (e/m) F^{mu nu} v_nu of ``particle`` moving with ``velocity``."""
    return (particle.charge / particle.mass) * (np.asarray(field) @ (METRIC_DIAG * velocity))


def _nascent_delta(s, eps):
    return np.exp(-0.5 * (s / eps) ** 2) / (np.sqrt(2.0 * np.pi) * eps)


def _kinematics(w: Worldline, taus) -> np.ndarray:
    out = np.empty((len(taus), 3, 4))
    kern.eval_many(w.tau, w.position, w.velocity, w.acceleration, w.order,
                   np.ascontiguousarray(taus, dtype=float), out)
    return out


def _bivector_over_rho(w: Worldline, event, taus):
    """(R^mu u^nu - R^nu u^mu) / (R.u) along the worldline, R = event - z(tau)."""
    kin = _kinematics(w, taus)
    sep = event - kin[:, 0]
    u = kin[:, 1]
    rho = minkowski_dot(sep, u)
    biv = sep[:, :, None] * u[:, None, :] - sep[:, None, :] * u[:, :, None]
    return biv / rho[:, None, None]


def _interval(w: Worldline, event, taus):
    sep = event - _kinematics(w, taus)[:, 0]
    return minkowski_dot(sep, sep)


def _upper_bound(w: Worldline, event) -> float:
    # the retarded branch ends where the source reaches the event's coordinate time
    times = w.position[:, 0]
    if event[0] <= times[0]:
        raise InsufficientHistoryError("event precedes the whole source history")
    if event[0] >= times[-1]:
        return w.tau_range[1]
    return w.tau_at_time(float(event[0]))


def regularized_field_oracle(source: Particle, event, epsilon: float,
                             quadrature_points: int = 2048,
                             fd_step: float = 1e-4) -> np.ndarray:
    """Gaussian-smeared evaluation of the delta-function field integral.

    The delta derivative is moved by parts onto the worldline factor, leaving
    2 e Int delta_eps((x - z)^2) d/ds[(R u - u R)/(R.u)] ds, with the s-derivative
    taken by a five-point difference of the interpolated positions and
    velocities.  The integral runs up to the point where the source reaches the
    event's coordinate time, so only the past sheet contributes.  Composite
    Gauss-Legendre is run at ``quadrature_points`` and half that; disagreement
    beyond 1e-11 relative raises ``OracleFailure``.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if quadrature_points < 64 or quadrature_points % 32:
        raise DomainError("quadrature_points must be a multiple of 32, at least 64")
    w = source.history
    event = np.asarray(event, dtype=float)
    t_lo, _ = w.tau_range
    t_up = _upper_bound(w, event)

    # localize the null crossing: sign change on the knots, then a bracketed solve of the interval
    knots = np.unique(np.append(w.tau[w.tau < t_up], t_up))
    f = _interval(w, event, knots)
    inside = np.flatnonzero((f[:-1] > 0) & (f[1:] <= 0))
    if not len(inside):
        raise InsufficientHistoryError("no past light-cone crossing inside the source history")
    i = inside[-1]
    center = brentq(lambda s: _interval(w, event, np.array([s]))[0], knots[i], knots[i + 1],
                    xtol=1e-14)
    slope = (_interval(w, event, np.array([center + fd_step]))[0]
             - _interval(w, event, np.array([center - fd_step]))[0]) / (2 * fd_step)
    sigma = epsilon / abs(slope)

    half_width = 12.0 * sigma
    floor = 1e-20 * _nascent_delta(0.0, epsilon)
    start = t_lo + 2 * fd_step
    for _ in range(16):
        lo = max(center - half_width, start)
        hi = min(center + half_width, t_up)
        edges = _nascent_delta(_interval(w, event, np.array([lo, hi])), epsilon)
        # the upper cut is part of the definition, so only the lower tail must vanish there
        if edges[0] <= floor and (hi == t_up or edges[1] <= floor):
            break
        if lo == start and edges[0] > floor:
            raise InsufficientHistoryError("smeared light-cone crossing runs off the history start")
        half_width *= 2.0
    else:
        raise OracleFailure("could not enclose the smeared light-cone crossing")

    def integrate(npts):
        panels = npts // 32
        nodes, weights = np.polynomial.legendre.leggauss(32)
        bounds = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (bounds[1:] + bounds[:-1])
        half = 0.5 * (bounds[1:] - bounds[:-1])
        s = (mid[:, None] + half[:, None] * nodes).ravel()
        wts = (half[:, None] * weights).ravel()
        delta = _nascent_delta(_interval(w, event, s), epsilon)
        keep = delta > 1e-30 * _nascent_delta(0.0, epsilon)
        s, wts, delta = s[keep], wts[keep], delta[keep]
        stencil = np.array([-2.0, -1.0, 1.0, 2.0]) * fd_step
        coef = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * fd_step)
        qs = (s[:, None] + stencil).ravel()
        biv = _bivector_over_rho(w, event, np.clip(qs, t_lo, None)).reshape(len(s), 4, 4, 4)
        deriv = np.einsum("k,nkab->nab", coef, biv)
        return 2.0 * source.charge * np.einsum("n,nab->ab", wts * delta, deriv)

    full = integrate(quadrature_points)
    coarse = integrate(quadrature_points // 2)
    scale = np.max(np.abs(full))
    if not np.all(np.isfinite(full)) or np.max(np.abs(full - coarse)) > 1e-11 * max(scale, 1e-300):
        raise OracleFailure(f"quadrature unconverged: change {np.max(np.abs(full - coarse)):.3e} "
                            f"at {quadrature_points} points")
    return full


def fokker_force(particles, j: int, tau: float) -> np.ndarray:
    """Four-force on particle ``j`` from the half-retarded plus half-advanced fields.

    Needs every partner's worldline on both light cones of particle j's event,
    i.e. the future of the solution as well as its past.
    """
    me = particles[j]
    s = interpolate(me.history, tau)
    total = np.zeros((4, 4))
    for k, other in enumerate(particles):
        if k == j:
            continue
        total += 0.5 * (retarded_field(other, s.position) + advanced_field(other, s.position))
    return me.charge * (total @ (METRIC_DIAG * s.velocity))


def retarded_force(particles, j: int, tau: float) -> np.ndarray:
    """Four-force on particle ``j`` from the retarded fields alone."""
    me = particles[j]
    s = interpolate(me.history, tau)
    total = sum(retarded_field(other, s.position)
                for k, other in enumerate(particles) if k != j)
    return me.charge * (np.asarray(total) @ (METRIC_DIAG * s.velocity))
