"""Fixed-step integration of the retarded two-body equations of motion.

Each particle obeys m a^mu = e F^{mu nu} u_nu with F the sum of its partners'
retarded fields, so the right-hand side reads the partners' recorded histories
at their past light-cone points.  All particles share one parameter tau; every
step advances it by ``dtau`` with classical fourth-order Runge-Kutta.

The field depends on the source's acceleration, which makes the system a
neutral delay equation: a jump in one particle's acceleration reappears, one
light-travel time later, as a jump in its partner's.  The first such jump sits
at the end of the initial data, where the prescribed history meets the
dynamics.  Histories keep these jumps as repeated knots, and a step whose
stages would straddle one is split exactly where the light cone sweeps over
it.  Without the split the method drops to first order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .. import _kernels as kern
from ..errors import (CollisionError, DomainError, InsufficientHistoryError, RootFindingError,
                      SingularityError)
from ..minkowski import LIGHTCONE_TOLERANCE, Worldline, minkowski_dot
from .fields import Particle

_RHO_FLOOR = 1e-12


@dataclass(frozen=True)
class IntegrationConfig:
    dtau: float = 0.01
    tau_end: float = 1.0
    min_separation: float = 1e-3
    lightcone_tolerance: float = LIGHTCONE_TOLERANCE
    renormalize_velocity: bool = False

    def __post_init__(self):
        if not (self.dtau > 0 and self.min_separation > 0 and self.lightcone_tolerance > 0):
            raise DomainError("dtau, min_separation and lightcone_tolerance must be positive")


class History(Worldline):
    """Growable order-5 worldline that the integrator appends to.

    ``breaks`` lists the left index of every repeated knot; ``separation`` holds,
    per sample, the smallest retarded distance to a partner seen there.
    """

    def __init__(self, source: Worldline):
        super().__init__(source.tau, source.position, source.velocity, source.acceleration,
                         order=5, validate=False)
        self.separation = np.full(len(self), np.nan)
        self.breaks = [int(i) for i in np.flatnonzero(np.diff(self.tau) == 0)]

    def append(self, tau, position, velocity, acceleration, separation=np.nan):
        n = self._n
        if n == len(self._tau):
            grow = max(n, 64)
            self._tau = np.concatenate([self._tau, np.empty(grow)])
            self._pos = np.concatenate([self._pos, np.empty((grow, 4))])
            self._vel = np.concatenate([self._vel, np.empty((grow, 4))])
            self._acc = np.concatenate([self._acc, np.empty((grow, 4))])
            self.separation = np.concatenate([self.separation, np.full(grow, np.nan)])
        if n and tau == self._tau[n - 1]:
            self.breaks.append(n - 1)
        self._tau[n] = tau
        self._pos[n] = position
        self._vel[n] = velocity
        self._acc[n] = acceleration
        self.separation[n] = separation
        self._n = n + 1

    def piece_bounds(self, m: int):
        """Knot range (lo, hi) of the m-th smooth piece, with extrapolation flags."""
        b = self.breaks
        lo = 0 if m == 0 else b[m - 1] + 1
        hi = b[m] if m < len(b) else self._n - 1
        return lo, hi, m > 0, m < len(b)

    def piece_of(self, tau: float, tol: float = 0.0) -> int:
        """Index of the smooth piece holding ``tau``; a break tau belongs to the later piece."""
        return sum(1 for i in self.breaks if self._tau[i] <= tau + tol)


@dataclass
class Diagnostics:
    tau: list = field(default_factory=list)
    norm_drift: list = field(default_factory=list)
    orthogonality: list = field(default_factory=list)
    lightcone_residual: list = field(default_factory=list)
    min_separation: list = field(default_factory=list)
    substeps: list = field(default_factory=list)

    def as_arrays(self) -> dict:
        return {k: np.asarray(v) for k, v in self.__dict__.items()}

    def summary(self) -> dict:
        if not self.tau:
            return {"steps": 0}
        return {
            "steps": len(self.tau),
            "max_norm_drift": max(self.norm_drift),
            "max_orthogonality": max(self.orthogonality),
            "max_lightcone_residual": max(self.lightcone_residual),
            "min_separation": min(self.min_separation),
            "split_steps": sum(1 for s in self.substeps if s > 1),
        }


@dataclass
class _StageStats:
    orthogonality: float = 0.0
    residual: float = 0.0
    separation: float = math.inf

    def merge(self, other: "_StageStats"):
        self.orthogonality = max(self.orthogonality, other.orthogonality)
        self.residual = max(self.residual, other.residual)
        self.separation = min(self.separation, other.separation)


class SystemState:
    """Particles with histories sharing the parameter value ``tau_now``.

    Stepping mutates the state in place; one driver at a time.
    """

    def __init__(self, particles, config: IntegrationConfig, tol: float = 1e-12):
        if not particles:
            raise DomainError("need at least one particle")
        ends = [p.history.tau_range[1] for p in particles]
        if max(ends) - min(ends) > tol * (1.0 + max(abs(e) for e in ends)):
            raise DomainError(f"histories must end at a common tau, got {ends}")
        self.config = config
        self.tau_start = float(ends[0])
        self.tau_now = self.tau_start
        self.steps_taken = 0
        self.particles = [Particle(p.mass, p.charge, History(p.history)) for p in particles]
        self.diagnostics = Diagnostics()
        self._started = False
        self._pieces = None
        self._work = np.empty((3, 4))
        self._field = np.empty((4, 4))
        self._pull = np.empty(4)

    @property
    def n(self) -> int:
        return len(self.particles)

    def positions(self) -> np.ndarray:
        return np.array([p.history.position[-1] for p in self.particles])

    def velocities(self) -> np.ndarray:
        return np.array([p.history.velocity[-1] for p in self.particles])

    def accelerations(self) -> np.ndarray:
        return np.array([p.history.acceleration[-1] for p in self.particles])

    # force evaluation

    def _pull_from(self, j: int, k: int, x, u, piece: int, stats: _StageStats) -> np.ndarray:
        me, src = self.particles[j], self.particles[k]
        h = src.history
        lo, hi, ext_lo, ext_hi = h.piece_bounds(piece)
        status, tau_r, residual, dist, rho, ua = kern.retarded_pull(
            h.tau, h.position, h.velocity, h.acceleration, 5, lo, hi, ext_lo, ext_hi,
            x, u, float(src.charge), float(me.charge / me.mass), self._pull, self._work,
            self._field)
        if status == kern.BEFORE_START:
            raise InsufficientHistoryError(
                f"particle {k}'s history starts after particle {j}'s retarded point",
                available=h.tau_range[1] - h.tau_range[0])
        if status == kern.AFTER_END:
            raise InsufficientHistoryError(
                f"retarded point of particle {j} on particle {k} lies beyond its recorded "
                f"history at tau = {self.tau_now}; dtau is too large for the separation")
        if status != kern.OK:
            raise RootFindingError(f"light-cone root for pair ({j}, {k}) did not converge")
        if dist < self.config.min_separation:
            raise CollisionError(f"particles {j} and {k} closer than {self.config.min_separation} "
                                 f"(retarded distance {dist:.3e}) at tau = {self.tau_now}")
        if rho <= _RHO_FLOOR:
            raise SingularityError(f"R.u = {rho:.3e} for pair ({j}, {k}) at tau = {self.tau_now}")
        if residual > self.config.lightcone_tolerance:
            raise RootFindingError(f"light-cone residual {residual:.3e} for pair ({j}, {k})")
        stats.residual = max(stats.residual, residual)
        stats.separation = min(stats.separation, dist)
        return self._pull.copy()

    def _accel(self, j: int, x, u, pieces, stats: _StageStats) -> np.ndarray:
        total = np.zeros(4)
        for k in range(self.n):
            if k != j:
                total += self._pull_from(j, k, x, u, pieces[j][k], stats)
        stats.orthogonality = max(stats.orthogonality, abs(kern.mdot(u, total)))
        return total

    def _all_accels(self, xs, us, pieces, stats):
        return np.array([self._accel(j, xs[j], us[j], pieces, stats) for j in range(self.n)])

    def _rk4(self, h, x0, u0, a0, stats):
        acc = self._all_accels
        p = self._pieces
        x2, u2 = x0 + 0.5 * h * u0, u0 + 0.5 * h * a0
        a2 = acc(x2, u2, p, stats)
        x3, u3 = x0 + 0.5 * h * u2, u0 + 0.5 * h * a2
        a3 = acc(x3, u3, p, stats)
        x4, u4 = x0 + h * u3, u0 + h * a3
        a4 = acc(x4, u4, p, stats)
        x = x0 + (h / 6.0) * (u0 + 2.0 * u2 + 2.0 * u3 + u4)
        u = u0 + (h / 6.0) * (a0 + 2.0 * a2 + 2.0 * a3 + a4)
        return x, u

    # discontinuity bookkeeping

    def _break_gap(self, j: int, k: int, x) -> float | None:
        """Light-cone gap of particle k's next acceleration jump seen from ``x``.

        Negative while the jump is still outside the past cone of x; None when
        no jump lies ahead on the piece in use.
        """
        h = self.particles[k].history
        m = self._pieces[j][k]
        if m >= len(h.breaks):
            return None
        z = h.position[h.breaks[m]]
        return (x[0] - z[0]) - math.sqrt((x[1] - z[1]) ** 2 + (x[2] - z[2]) ** 2 + (x[3] - z[3]) ** 2)

    def _gap_tol(self, x) -> float:
        return 1e-12 * (1.0 + abs(x[0]))

    def _crossed(self, xs):
        """Pairs whose next source jump has entered the past cone of the receiver."""
        out = []
        for j in range(self.n):
            for k in range(self.n):
                if k != j:
                    g = self._break_gap(j, k, xs[j])
                    if g is not None and g >= -self._gap_tol(xs[j]):
                        out.append((j, k))
        return out

    def _init_pieces(self):
        self._pieces = [[0] * self.n for _ in range(self.n)]
        for j, me in enumerate(self.particles):
            x = me.history.position[-1]
            for k, src in enumerate(self.particles):
                if k == j:
                    continue
                h = src.history
                tau_r, _, status = kern.lightcone_root(h.tau, h.position, h.velocity, h.acceleration,
                                                       5, 0, len(h) - 1, False, False, x, 1.0,
                                                       self._work)
                if status != kern.OK:
                    raise InsufficientHistoryError(
                        f"particle {k}'s history does not reach particle {j}'s retarded point")
                self._pieces[j][k] = h.piece_of(tau_r)

    def start(self):
        """Attach the dynamics to the initial data.

        The acceleration demanded by the fields at tau_now generally differs from
        the one recorded in the initial history, so every particle gets a repeated
        knot carrying the dynamical value.
        """
        if self._started:
            return
        report = check_initial_data(self)
        if not report.valid:
            raise InsufficientHistoryError(report.message, required=report.max_required,
                                           available=report.min_available)
        self._init_pieces()
        stats = _StageStats()
        xs, us = self.positions(), self.velocities()
        accs = self._all_accels(xs, us, self._pieces, stats)
        for p, x, u, a in zip(self.particles, xs, us, accs):
            p.history.append(self.tau_now, x, u, a, stats.separation)
        self._started = True

    def _jump(self, pairs, xs, us, stats):
        """Advance the piece index of each crossed pair and record the right-limit accelerations."""
        receivers = sorted({j for j, _ in pairs})
        for j, k in pairs:
            self._pieces[j][k] += 1
        new = {j: self._accel(j, xs[j], us[j], self._pieces, stats) for j in receivers}
        for j in receivers:
            self.particles[j].history.append(self.tau_now, xs[j], us[j], new[j], stats.separation)

    def _accept(self, tau, xs, us, stats):
        if self.config.renormalize_velocity:
            us = us / np.sqrt(minkowski_dot(us, us))[:, None]
        accs = self._all_accels(xs, us, self._pieces, stats)
        for p, x, u, a in zip(self.particles, xs, us, accs):
            p.history.append(tau, x, u, a, stats.separation)
        self.tau_now = tau
        crossed = self._crossed(xs)
        if crossed:
            self._jump(crossed, xs, us, stats)

    def _advance(self, target: float) -> tuple[_StageStats, int]:
        total = _StageStats()
        substeps = 0
        while self.tau_now < target:
            substeps += 1
            if substeps > 4 * self.n * self.n + 8:
                raise RootFindingError(f"step at tau = {self.tau_now} kept splitting")
            h = target - self.tau_now
            x0, u0, a0 = self.positions(), self.velocities(), self.accelerations()
            stats = _StageStats()
            xs, us = self._rk4(h, x0, u0, a0, stats)
            ahead = [(j, k) for j in range(self.n) for k in range(self.n)
                     if k != j and (g := self._break_gap(j, k, xs[j])) is not None
                     and g >= -self._gap_tol(xs[j])]
            if not ahead:
                self._accept(target, xs, us, stats)
                total.merge(stats)
                continue

            def gap(s, j, k):
                xs_s, _ = self._rk4(s, x0, u0, a0, _StageStats())
                return self._break_gap(j, k, xs_s[j])

            s_star = h
            for j, k in ahead:
                if gap(0.0, j, k) >= 0.0:
                    s_star = 0.0
                    break
                if self._break_gap(j, k, xs[j]) > 0.0:
                    s_star = min(s_star, brentq(gap, 0.0, h, args=(j, k), xtol=1e-15 * h,
                                                rtol=8.9e-16))
            if s_star <= 1e-14 * h:
                self._jump(self._crossed(x0), x0, u0, total)
                continue
            if s_star >= h * (1.0 - 1e-14):
                # crossing lands on the step end: accept the whole step and jump there
                self._accept(target, xs, us, stats)
                total.merge(stats)
                continue
            stats = _StageStats()
            xs, us = self._rk4(s_star, x0, u0, a0, stats)
            self._accept(self.tau_now + s_star, xs, us, stats)
            total.merge(stats)
        return total, substeps


@dataclass(frozen=True)
class InitialDataReport:
    valid: bool
    pairs: list
    message: str

    @property
    def max_required(self) -> float:
        return max((p["required"] for p in self.pairs), default=0.0)

    @property
    def min_available(self) -> float:
        return min((p["available"] for p in self.pairs), default=math.inf)


def _retarded_depth(history: Worldline, event) -> float:
    """Proper time between the end of ``history`` and its past light-cone point
    from ``event``, continuing the first sample's straight line when the history
    is too short."""
    w = history
    z0, u0 = w.position[0], w.velocity[0]
    sep = np.asarray(event, dtype=float) - z0
    gap0 = sep[0] - np.linalg.norm(sep[1:])
    if gap0 > 0.0:
        work = np.empty((3, 4))
        tau, _, status = kern.lightcone_root(w.tau, w.position, w.velocity, w.acceleration,
                                             w.order, 0, len(w) - 1, False, False,
                                             np.asarray(event, dtype=float), 1.0, work)
        if status == kern.OK:
            return w.tau_range[1] - tau
    u = u0 / math.sqrt(minkowski_dot(u0, u0))
    ru = minkowski_dot(sep, u)
    lam = ru - math.sqrt(max(ru * ru - minkowski_dot(sep, sep), 0.0))
    return w.tau_range[1] - (w.tau_range[0] + lam)


def check_initial_data(state: SystemState) -> InitialDataReport:
    """Whether every particle's history reaches its partners' current retarded points.

    ``required`` is the proper-time depth back from tau_now to the retarded point
    (by straight-line continuation when it lies before the recorded start);
    ``available`` is the recorded depth.  A pair is valid only when
    available > required strictly: the history's first sample cannot serve as a
    retarded point because nothing brackets it.
    """
    pairs = []
    for j, me in enumerate(state.particles):
        event = me.history.position[-1]
        for k, src in enumerate(state.particles):
            if k == j:
                continue
            h = src.history
            required = _retarded_depth(h, event)
            available = h.tau_range[1] - h.tau_range[0]
            first = h.position[0]
            gap = (event[0] - first[0]) - np.linalg.norm(event[1:] - first[1:])
            pairs.append({"receiver": j, "source": k, "required": float(required),
                          "available": float(available),
                          "deficit": float(max(required - available, 0.0)),
                          "valid": bool(gap > 0.0)})
    bad = [p for p in pairs if not p["valid"]]
    if bad:
        msg = "; ".join(f"particle {p['source']} history depth {p['available']:.6g} does not exceed "
                        f"the {p['required']:.6g} needed by particle {p['receiver']}" for p in bad)
    else:
        msg = "initial data spans every delay"
    return InitialDataReport(not bad, pairs, msg)


def step(state: SystemState) -> SystemState:
    """Advance every particle by one ``dtau`` of the common parameter."""
    state.start()
    cfg = state.config
    k = state.steps_taken + 1
    target = min(state.tau_start + k * cfg.dtau, max(cfg.tau_end, state.tau_now))
    stats, substeps = state._advance(target)
    state.steps_taken = k
    d = state.diagnostics
    us = state.velocities()
    d.tau.append(state.tau_now)
    d.norm_drift.append(float(np.max(np.abs(minkowski_dot(us, us) - 1.0))))
    d.orthogonality.append(stats.orthogonality)
    d.lightcone_residual.append(stats.residual)
    d.min_separation.append(stats.separation)
    d.substeps.append(substeps)
    return state


@dataclass
class IntegrationResult:
    status: str
    message: str
    trajectories: list
    diagnostics: Diagnostics
    state: SystemState

    @property
    def ok(self) -> bool:
        return self.status == "ok"


_ABORTS = ((CollisionError, "collision"), (SingularityError, "singularity"),
           (InsufficientHistoryError, "insufficient_history"), (RootFindingError, "root_failure"))


def integrate(state: SystemState) -> IntegrationResult:
    """Step until ``tau_end``; an abort stops the run and is reported, not raised."""
    cfg = state.config
    status, message = "ok", "reached tau_end"
    try:
        while state.tau_now < cfg.tau_end - 1e-9 * cfg.dtau:
            step(state)
    except tuple(e for e, _ in _ABORTS) as exc:
        status = next(name for e, name in _ABORTS if isinstance(exc, e))
        message = str(exc)
    return IntegrationResult(status, message, [p.history for p in state.particles],
                             state.diagnostics, state)


def reflect_history(w: Worldline, tau_pivot: float, depth: float) -> Worldline:
    """Time-reflect the stretch [tau_pivot - depth, tau_pivot] of ``w``.

    The result runs over [0, depth]; its tau s maps to tau_pivot - s on the
    original, with t -> -t.  Velocities become (u^t, -u) and accelerations
    (-a^t, a).
    """
    keep = (w.tau >= tau_pivot - depth - 1e-12) & (w.tau <= tau_pivot + 1e-12)
    idx = np.flatnonzero(keep)[::-1]
    flip = np.array([-1.0, 1.0, 1.0, 1.0])
    return Worldline(tau_pivot - w.tau[idx], w.position[idx] * flip, -w.velocity[idx] * flip,
                     w.acceleration[idx] * flip, order=5)


def time_reversal_demo(particles, config: IntegrationConfig, depth: float) -> dict:
    """Run forward, flip the final ``depth`` of every history in time, run again.

    If the dynamics were time-symmetric the second run would retrace the first
    backwards.  The returned ``discrepancy`` is the largest coordinate gap
    between the reversed run and the reflected forward run over the stretch
    they share; for interacting retarded charges it is not zero.
    """
    forward = integrate(SystemState(particles, config))
    if not forward.ok:
        raise RuntimeError(f"forward run aborted: {forward.message}")
    tau0, tau1 = forward.state.tau_start, forward.state.tau_now
    length = tau1 - tau0 - depth
    if length <= 0:
        raise DomainError("depth must be shorter than the forward run")
    mirrored = [Particle(p.mass, p.charge, reflect_history(p.history, tau1, depth))
                for p in forward.state.particles]
    back = integrate(SystemState(mirrored, IntegrationConfig(
        config.dtau, depth + length, config.min_separation, config.lightcone_tolerance,
        config.renormalize_velocity)))
    if not back.ok:
        raise RuntimeError(f"reversed run aborted: {back.message}")
    flip = np.array([-1.0, 1.0, 1.0, 1.0])
    taus = np.linspace(depth, depth + length, 41)
    gaps = []
    for p_fwd, p_back in zip(forward.state.particles, back.state.particles):
        for s in taus:
            a = p_back.history(s).position
            b = p_fwd.history(tau1 - s).position * flip
            gaps.append(float(np.max(np.abs(a - b))))
    return {"discrepancy": max(gaps), "compared_span": length,
            "forward_steps": len(forward.diagnostics.tau), "reverse_steps": len(back.diagnostics.tau)}
