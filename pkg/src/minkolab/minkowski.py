"""Spacetime primitives: four-vectors, boosts, sampled worldlines and light-cone roots.

Conventions: c = 1, metric signature (+, -, -, -), four-vectors are numpy arrays
ordered ``(t, x, y, z)``.  Serialized samples name the components explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import _kernels as kern
from .errors import DomainError, InsufficientHistoryError, OutOfRangeError, RootFindingError

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

LIGHTCONE_TOLERANCE = 1e-10
METRIC_TOLERANCE = 1e-12

_AXES = {"x": 1, "y": 2, "z": 3}


def four_vector(x=0.0, y=0.0, z=0.0, t=0.0) -> np.ndarray:
    """Event or displacement with named components, stored as (t, x, y, z)."""
    v = np.array([t, x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"non-finite four-vector component in {v}")
    return v


def minkowski_dot(u, v):
    """u_t v_t - u.v for arrays whose last axis holds (t, x, y, z)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 0] - np.sum(u[..., 1:] * v[..., 1:], axis=-1)


def lorentz_factor(beta) -> float:
    b2 = float(np.sum(np.square(beta)))
    if b2 >= 1.0:
        raise DomainError(f"speed {np.sqrt(b2)} is not below c")
    return 1.0 / np.sqrt(1.0 - b2)


def four_velocity(beta) -> np.ndarray:
    """Unit four-velocity gamma (1, beta) for a 3-velocity (or a speed along x)."""
    b = np.zeros(3)
    b[: np.size(beta)] = np.ravel(beta)
    g = lorentz_factor(b)
    return np.concatenate(([g], g * b))


def boost(beta: float, axis: str = "x") -> np.ndarray:
    """Pure boost into a frame moving with speed ``beta`` along ``axis``.

    Maps event coordinates of the original frame to the moving frame:
    t' = gamma (t - beta x), x' = gamma (x - beta t).
    """
    if not abs(beta) < 1.0:
        raise DomainError(f"boost speed |beta| = {abs(beta)} must be below 1")
    g = 1.0 / np.sqrt(1.0 - beta * beta)
    k = _AXES[axis]
    m = np.eye(4)
    m[0, 0] = m[k, k] = g
    m[0, k] = m[k, 0] = -g * beta
    return m


def is_lorentz(m, tol: float = METRIC_TOLERANCE) -> bool:
    """True when ``m`` preserves the metric and is proper and orthochronous."""
    m = np.asarray(m, dtype=float)
    return (np.allclose(m.T @ METRIC @ m, METRIC, rtol=0.0, atol=tol)
            and abs(np.linalg.det(m) - 1.0) <= tol and m[0, 0] > 0)


@dataclass(frozen=True)
class WorldlineSample:
    tau: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


class Worldline:
    """Timelike history sampled in proper time, interpolated piecewise by Hermite polynomials.

    ``order`` selects the interpolant: 3 matches positions and velocities at the
    segment ends, 5 additionally matches accelerations.  A repeated tau marks an
    acceleration discontinuity; position and velocity must agree across it and
    queries exactly at that tau return the later (right-limit) sample.
    """

    def __init__(self, tau, position, velocity, acceleration=None, order: int = 3,
                 validate: bool = True):
        if order not in (3, 5):
            raise ValueError(f"interpolation order must be 3 or 5, got {order}")
        tau = np.array(tau, dtype=float)
        position = np.array(position, dtype=float).reshape(-1, 4)
        velocity = np.array(velocity, dtype=float).reshape(-1, 4)
        if acceleration is None:
            acceleration = np.zeros_like(velocity)
        acceleration = np.array(acceleration, dtype=float).reshape(-1, 4)
        n = len(tau)
        if not (len(position) == len(velocity) == len(acceleration) == n):
            raise ValueError("sample arrays differ in length")
        self._tau, self._pos, self._vel, self._acc = tau, position, velocity, acceleration
        self._n = n
        self.order = order
        if validate:
            self._validate()

    def _validate(self):
        if self._n < 2:
            raise ValueError("a worldline needs at least two samples")
        if not (np.all(np.isfinite(self._pos)) and np.all(np.isfinite(self._vel))):
            raise ValueError("non-finite worldline samples")
        dtau = np.diff(self.tau)
        if np.any(dtau < 0):
            raise ValueError("proper time must increase along the worldline")
        repeated = dtau == 0
        if np.any(repeated):
            i = np.flatnonzero(repeated)
            if not (np.array_equal(self.position[i], self.position[i + 1])
                    and np.array_equal(self.velocity[i], self.velocity[i + 1])):
                raise ValueError("repeated tau must join equal positions and velocities")
        steps = np.diff(self.position, axis=0)[~repeated]
        if np.any(steps[:, 0] <= 0) or np.any(minkowski_dot(steps, steps) <= 0):
            raise ValueError("consecutive samples are not future timelike separated")

    def __len__(self):
        return self._n

    @property
    def tau(self) -> np.ndarray:
        return self._tau[: self._n]

    @property
    def position(self) -> np.ndarray:
        return self._pos[: self._n]

    @property
    def velocity(self) -> np.ndarray:
        return self._vel[: self._n]

    @property
    def acceleration(self) -> np.ndarray:
        return self._acc[: self._n]

    @property
    def tau_range(self) -> tuple[float, float]:
        return float(self._tau[0]), float(self._tau[self._n - 1])

    def sample(self, i: int) -> WorldlineSample:
        return WorldlineSample(float(self.tau[i]), self.position[i].copy(),
                               self.velocity[i].copy(), self.acceleration[i].copy())

    def __call__(self, tau: float) -> WorldlineSample:
        return interpolate(self, tau)

    def tau_at_time(self, t: float) -> float:
        """Proper time at which the worldline reaches coordinate time ``t``."""
        times = self.position[:, 0]
        if not times[0] <= t <= times[-1]:
            raise OutOfRangeError(f"coordinate time {t} outside [{times[0]}, {times[-1]}]")
        lo, hi = self.tau_range
        if t == times[0]:
            return lo
        if t == times[-1]:
            return hi
        return brentq(lambda tau: interpolate(self, tau).position[0] - t, lo, hi,
                      xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _segment_index(w: Worldline, tau: float) -> int:
    return int(kern.locate(w.tau, 0, len(w) - 1, tau))


def _check_range(w: Worldline, tau: float):
    lo, hi = w.tau_range
    if not (lo <= tau <= hi):
        raise OutOfRangeError(f"tau = {tau} outside sampled range [{lo}, {hi}]")


def interpolate(w: Worldline, tau: float) -> WorldlineSample:
    """Position, unit velocity and orthogonal acceleration at proper time ``tau``."""
    tau = float(tau)
    _check_range(w, tau)
    hits = np.flatnonzero(w.tau == tau)
    if len(hits):
        s = w.sample(hits[-1])
        vv = minkowski_dot(s.velocity, s.velocity)
        if vv != 1.0:
            vel = s.velocity / np.sqrt(vv)
            acc = s.acceleration - minkowski_dot(s.acceleration, vel) * vel
            s = WorldlineSample(s.tau, s.position, vel, acc)
        return s
    work = np.empty((3, 4))
    kern.segment_eval(w.tau, w.position, w.velocity, w.acceleration, w.order,
                      _segment_index(w, tau), tau, work)
    kern.normalize_kinematics(work)
    return WorldlineSample(tau, work[0].copy(), work[1].copy(), work[2].copy())


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def proper_time_along(w: Worldline, tau_a: float, tau_b: float) -> float:
    """Minkowski arc length of the interpolated path between two parameter values.

    Integrates sqrt(dx.dx) of the raw (unnormalized) interpolant with 8-point
    Gauss-Legendre per segment, so the result does not assume the parameter is
    already proper time.
    """
    _check_range(w, tau_a)
    _check_range(w, tau_b)
    if tau_a == tau_b:
        return 0.0
    if tau_b < tau_a:
        return -proper_time_along(w, tau_b, tau_a)
    knots = w.tau[(w.tau > tau_a) & (w.tau < tau_b)]
    edges = np.unique(np.concatenate(([tau_a], knots, [tau_b])))
    work = np.empty((3, 4))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        i = _segment_index(w, 0.5 * (a + b))
        half = 0.5 * (b - a)
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            kern.segment_eval(w.tau, w.position, w.velocity, w.acceleration, w.order,
                              i, 0.5 * (a + b) + half * node, work)
            total += weight * half * np.sqrt(max(kern.mdot(work[1], work[1]), 0.0))
    return total


def lightcone_intersection(w: Worldline, event, branch: str = "retarded",
                           tol: float = LIGHTCONE_TOLERANCE) -> float:
    """Proper time at which ``w`` meets the past (retarded) or future (advanced) cone of ``event``."""
    if branch not in ("retarded", "advanced"):
        raise ValueError(f"unknown branch {branch!r}")
    event = np.asarray(event, dtype=float)
    sigma = 1.0 if branch == "retarded" else -1.0
    work = np.empty((3, 4))
    tau, seg, status = kern.lightcone_root(w.tau, w.position, w.velocity, w.acceleration,
                                           w.order, 0, len(w) - 1, False, False,
                                           event, sigma, work)
    if status in (kern.BEFORE_START, kern.AFTER_END):
        where = "before the start" if status == kern.BEFORE_START else "after the end"
        raise InsufficientHistoryError(f"{branch} intersection lies {where} of the recorded history")
    sep = event - interpolate(w, tau).position
    residual = abs(minkowski_dot(sep, sep))
    if status != kern.OK or residual > tol:
        raise RootFindingError(f"light-cone residual {residual:.3e} exceeds {tol:.1e}")
    return float(tau)


# worldline generators


def uniform_worldline(position=(0.0, 0.0, 0.0), beta=0.0, tau_start=-1.0, tau_end=0.0,
                      spacing=0.01, t0=0.0, order: int = 3) -> Worldline:
    """Inertial worldline passing through ``position`` at coordinate time ``t0`` when tau = 0."""
    u = four_velocity(beta)
    n = max(int(np.ceil((tau_end - tau_start) / spacing - 1e-9)), 1) + 1
    taus = np.linspace(tau_start, tau_end, n)
    origin = np.concatenate(([t0], np.asarray(position, dtype=float)))
    pos = origin + taus[:, None] * u
    return Worldline(taus, pos, np.tile(u, (n, 1)), np.zeros((n, 4)), order=order)


def hyperbolic_worldline(accel: float, tau_start: float, tau_end: float, spacing: float,
                         order: int = 3) -> Worldline:
    """Constant proper acceleration along x: x = cosh(a tau)/a, t = sinh(a tau)/a."""
    n = int(round((tau_end - tau_start) / spacing)) + 1
    taus = np.linspace(tau_start, tau_end, n)
    return Worldline(taus, hyperbolic_position(accel, taus), *_hyperbolic_derivs(accel, taus),
                     order=order)


def hyperbolic_position(accel, tau):
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape + (4,))
    out[..., 0] = np.sinh(accel * tau) / accel
    out[..., 1] = np.cosh(accel * tau) / accel
    return out


def _hyperbolic_derivs(accel, taus):
    vel = np.zeros((len(taus), 4))
    acc = np.zeros((len(taus), 4))
    vel[:, 0], vel[:, 1] = np.cosh(accel * taus), np.sinh(accel * taus)
    acc[:, 0], acc[:, 1] = accel * np.sinh(accel * taus), accel * np.cosh(accel * taus)
    return vel, acc


def circular_worldline(radius: float, omega: float, tau_start: float, tau_end: float,
                       spacing: float, center=(0.0, 0.0, 0.0), order: int = 5) -> Worldline:
    """Uniform circular motion in the x-y plane with coordinate angular speed ``omega``."""
    g = lorentz_factor(radius * omega)
    n = int(round((tau_end - tau_start) / spacing)) + 1
    taus = np.linspace(tau_start, tau_end, n)
    phase = omega * g * taus
    c, s = np.cos(phase), np.sin(phase)
    pos = np.zeros((n, 4))
    vel = np.zeros((n, 4))
    acc = np.zeros((n, 4))
    pos[:, 0] = g * taus
    pos[:, 1] = center[0] + radius * c
    pos[:, 2] = center[1] + radius * s
    pos[:, 3] = center[2]
    vel[:, 0] = g
    vel[:, 1] = -g * radius * omega * s
    vel[:, 2] = g * radius * omega * c
    acc[:, 1] = -g * g * radius * omega ** 2 * c
    acc[:, 2] = -g * g * radius * omega ** 2 * s
    return Worldline(taus, pos, vel, acc, order=order)


# serialization: JSON array of {tau, x, y, z, t, vx, vy, vz, vt}


def worldline_to_records(w: Worldline) -> list[dict]:
    records = []
    for tau, p, v in zip(w.tau, w.position, w.velocity):
        records.append({"tau": float(tau), "x": float(p[1]), "y": float(p[2]), "z": float(p[3]),
                        "t": float(p[0]), "vx": float(v[1]), "vy": float(v[2]),
                        "vz": float(v[3]), "vt": float(v[0])})
    return records


def worldline_from_records(records, order: int = 3) -> Worldline:
    """Rebuild a worldline; accelerations come from the records when present
    (keys ax, ay, az, at), otherwise from differentiating the velocities."""
    tau = np.array([r["tau"] for r in records], dtype=float)
    pos = np.array([[r["t"], r["x"], r["y"], r["z"]] for r in records], dtype=float)
    vel = np.array([[r["vt"], r["vx"], r["vy"], r["vz"]] for r in records], dtype=float)
    if records and all("at" in r for r in records):
        acc = np.array([[r["at"], r["ax"], r["ay"], r["az"]] for r in records], dtype=float)
    elif len(tau) >= 3:
        acc = np.gradient(vel, tau, axis=0, edge_order=2)
        acc -= minkowski_dot(acc, vel)[:, None] * vel / minkowski_dot(vel, vel)[:, None]
    else:
        acc = np.zeros_like(vel)
    return Worldline(tau, pos, vel, acc, order=order)


def save_worldline(w: Worldline, path):
    Path(path).write_text(json.dumps(worldline_to_records(w), indent=1))


def load_worldline(path, order: int = 3) -> Worldline:
    return worldline_from_records(json.loads(Path(path).read_text()), order=order)
