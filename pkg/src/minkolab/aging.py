"""Twin-trip constructions on a superposed pair of Minkowski charts.

Everything lives in the stay-at-home (fixed) chart with coordinates (x, t) and
c = 1; objects referred to the traveler's primed axes are represented by their
loci in that chart.  The trip is one-way out to the pylon; round-trip values
are twice the one-way values (the turnaround takes no time).

Two constructions are compared:

* conventional: the traveler's worldline x = beta t meets the pylon worldline
  x = D at (D, D/beta); the traveler's age there is read off the proper-time
  hyperbola through that event.
* displaced pylon: the pylon's distance D is a proper length, so on the primed
  chart the pylon sits where the hyperbola x^2 - t^2 = D^2 meets the primed
  space axis t = beta x, i.e. at (gamma D, gamma beta D).  Its worldline through
  that point, parallel to the fixed time axis, meets the traveler at
  t = gamma D / beta, where the traveler's proper time is D / beta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .minkowski import four_vector


@dataclass(frozen=True)
class TwinScenario:
    distance: float
    beta: float

    def __post_init__(self):
        if not self.distance > 0:
            raise DomainError(f"pylon distance must be positive, got {self.distance}")
        # beta = 0 (nobody leaves) is accepted only so the chart degenerates cleanly
        if not 0.0 <= self.beta < 1.0:
            raise DomainError(f"cruise speed must satisfy 0 < beta < 1, got {self.beta}")


@dataclass(frozen=True)
class TwinReport:
    construction: str
    turnaround_event: np.ndarray
    tau_traveler_one_way: float
    tau_home_one_way: float

    @property
    def round_trip_ratio(self) -> float:
        return self.tau_traveler_one_way / self.tau_home_one_way

    @property
    def tau_traveler_round_trip(self) -> float:
        return 2.0 * self.tau_traveler_one_way

    @property
    def tau_home_round_trip(self) -> float:
        return 2.0 * self.tau_home_one_way


@dataclass(frozen=True)
class DecayScenario:
    decay_rate: float
    duration: float
    gamma_hot: float
    n0: float = 1e20

    def __post_init__(self):
        if not (self.decay_rate > 0 and self.duration > 0 and self.n0 > 0):
            raise DomainError("decay rate, duration and n0 must be positive")
        if not self.gamma_hot >= 1.0:
            raise DomainError(f"gamma_hot must be >= 1, got {self.gamma_hot}")


def gamma(beta: float) -> float:
    if not abs(beta) < 1.0:
        raise DomainError(f"|beta| = {abs(beta)} must be below 1")
    return 1.0 / math.sqrt(1.0 - beta * beta)


def _require_motion(s: TwinScenario):
    if s.beta == 0.0:
        raise DomainError("beta = 0: the traveler never reaches the pylon")


def chart_conventional(s: TwinScenario) -> TwinReport:
    _require_motion(s)
    t_turn = s.distance / s.beta
    event = four_vector(x=s.distance, t=t_turn)
    return TwinReport("conventional", event, t_turn / gamma(s.beta), t_turn)


def pylon_axis_point(s: TwinScenario) -> np.ndarray:
    """Where the proper-length hyperbola through (D, 0) meets the primed space axis."""
    g = gamma(s.beta)
    return four_vector(x=g * s.distance, t=g * s.beta * s.distance)


def chart_displaced_pylon(s: TwinScenario) -> TwinReport:
    """Turnaround where the traveler meets the pylon line x = gamma D, the pylon's
    position slid along the proper-length hyperbola onto the primed space axis."""
    _require_motion(s)
    x_pylon = pylon_axis_point(s)[1]
    event = four_vector(x=x_pylon, t=x_pylon / s.beta)
    t, x = event[0], event[1]
    tau_traveler = math.sqrt((t - x) * (t + x))
    # the construction makes this D/beta analytically; keep the value the chart produces
    return TwinReport("displaced_pylon", event, tau_traveler, s.distance / s.beta)


chart_paper = chart_displaced_pylon


@dataclass(frozen=True)
class ChartData:
    params: dict
    curves: dict
    events: dict

    def to_json(self) -> str:
        return json.dumps({
            "curves": [{"name": k, "points": [[_r(x), _r(t)] for x, t in v]}
                       for k, v in self.curves.items()],
            "events": [{"name": k, "x": _r(x), "t": _r(t)} for k, (x, t) in self.events.items()],
            "params": {"D": _r(self.params["D"]), "beta": _r(self.params["beta"])},
        }, indent=1)


def _r(v) -> float:
    return float(f"{float(v):.12g}")


def emit_chart(s: TwinScenario, resolution: int = 64) -> ChartData:
    """Polylines needed to redraw the superposed charts, as (x, t) point arrays."""
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    d, beta = s.distance, s.beta
    g = gamma(beta)
    rapidity = math.atanh(beta)
    moving = beta > 0.0
    t_max = 1.2 * g * d / beta if moving else 2.0 * d
    x_max = 1.2 * g * d
    lam = np.linspace(0.0, 1.0, resolution)

    def ray(direction, length):
        return np.outer(lam * length, direction)

    x_dir = np.array([1.0, beta]) / math.sqrt(1 + beta * beta)
    t_dir = np.array([beta, 1.0]) / math.sqrt(1 + beta * beta)
    # axes drawn as one polyline each: along the space axis in to the origin, then up the time axis
    fixed_axes = np.vstack([ray([1.0, 0.0], x_max)[::-1], ray([0.0, 1.0], t_max)[1:]])
    primed_axes = np.vstack([ray(x_dir, x_max * math.sqrt(1 + beta * beta))[::-1],
                             ray(t_dir, t_max * math.sqrt(1 + beta * beta))[1:]])
    traveler = ray([beta, 1.0], t_max)
    times = lam * t_max
    pylon_fixed = np.column_stack([np.full(resolution, d), times])
    pylon_primed = np.column_stack([np.full(resolution, g * d), times])
    eta = np.linspace(0.0, 1.25 * rapidity, resolution)
    length_isocline = np.column_stack([d * np.cosh(eta), d * np.sinh(eta)])

    curves = {
        "fixed_axes": fixed_axes,
        "primed_axes": primed_axes,
        "traveler_worldline": traveler,
        "pylon_worldline_fixed": pylon_fixed,
        "pylon_worldline_primed": pylon_primed,
        "proper_length_isocline": length_isocline,
    }
    events = {"pylon_fixed_x_axis": (d, 0.0), "pylon_primed_x_axis": (g * d, g * beta * d)}
    if moving:
        conv, disp = chart_conventional(s), chart_displaced_pylon(s)
        for name, rep in (("conventional", conv), ("displaced_pylon", disp)):
            tau = rep.tau_traveler_one_way
            curves[f"proper_time_isocline_{name}"] = np.column_stack(
                [tau * np.sinh(eta), tau * np.cosh(eta)])
            events[f"turnaround_{name}"] = (rep.turnaround_event[1], rep.turnaround_event[0])
            events[f"isocline_t_axis_{name}"] = (0.0, tau)
    else:
        curves["proper_time_isocline_conventional"] = np.empty((0, 2))
        curves["proper_time_isocline_displaced_pylon"] = np.empty((0, 2))
    return ChartData({"D": d, "beta": beta}, curves, events)


def decay_experiment(d: DecayScenario, hypothesis: str = "conventional") -> float:
    """Surviving fraction of the heated sample divided by that of the cold one."""
    if hypothesis == "equal_aging":
        return 1.0
    if hypothesis != "conventional":
        raise DomainError(f"unknown hypothesis {hypothesis!r}")
    return math.exp(_dilation_exponent(d))


def _dilation_exponent(d: DecayScenario) -> float:
    # lambda t (1 - 1/gamma), written to keep precision when gamma - 1 is tiny
    return d.decay_rate * d.duration * (d.gamma_hot - 1.0) / d.gamma_hot


def decay_sensitivity(d: DecayScenario) -> dict:
    """How far apart the two hypotheses end up, and whether counting could tell.

    ``absolute_difference`` is the gap in the hot sample's surviving fraction,
    ``relative_difference`` the gap in the hot/cold survival ratio.  The counting
    noise is the binomial standard deviation of the surviving fraction for n0
    nuclei.
    """
    lt = d.decay_rate * d.duration
    survival_cold = math.exp(-lt)
    relative = math.expm1(_dilation_exponent(d))
    absolute = survival_cold * relative
    noise = math.sqrt(survival_cold * (1.0 - survival_cold) / d.n0)
    needed = math.inf if absolute == 0 else 9.0 * survival_cold * (1.0 - survival_cold) / absolute ** 2
    detectable = absolute > 3.0 * noise
    note = (f"survival gap {absolute:.3e} vs counting noise {noise:.3e} for n0 = {d.n0:.3g}: "
            + ("resolvable at 3 sigma" if detectable else f"needs n0 >= {needed:.3g} for 3 sigma"))
    return {
        "absolute_difference": absolute,
        "relative_difference": relative,
        "d_survival_d_gamma": survival_cold * lt / d.gamma_hot ** 2 * math.exp(_dilation_exponent(d)),
        "counting_noise": noise,
        "required_n0": needed,
        "detectable": detectable,
        "detectability_note": note,
    }
