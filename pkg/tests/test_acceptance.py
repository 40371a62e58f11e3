"""End-to-end acceptance criteria.  Each test records one PASS/FAIL line that is
printed in the terminal summary under "acceptance criteria"."""

import time

import numpy as np
import pytest
from conftest import record_acceptance
from scipy.integrate import solve_ivp

from minkolab import aging, epr
from minkolab.electrodynamics.fields import Particle, regularized_field_oracle, retarded_field
from minkolab.electrodynamics.integrator import IntegrationConfig, SystemState, integrate
from minkolab.minkowski import circular_worldline, four_vector, uniform_worldline

pytestmark = pytest.mark.acceptance


def check(name, passed, detail):
    record_acceptance(name, bool(passed), detail)
    assert passed, f"{name}: {detail}"


def head_on(separation=20.0, beta=0.3, depth=40.0):
    return [Particle(1.0, 1.0, uniform_worldline((s * separation / 2, 0, 0), -s * beta, -depth, 0.0,
                                                 0.05))
            for s in (-1, 1)]


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile the numba kernels outside every timed region
    integrate(SystemState(head_on(), IntegrationConfig(0.1, 0.3)))


def test_sin2_law_grid():
    start = time.perf_counter()
    deg = np.radians(np.arange(0.0, 360.0))
    t1, t2 = np.meshgrid(deg, deg)
    err = np.abs(epr.exact_coincidence(t1, t2) - 0.5 * np.sin(t1 - t2) ** 2).max()
    elapsed = time.perf_counter() - start
    check("exact amplitude estimator on 1 deg grid", err < 1e-12 and elapsed < 1.0,
          f"max error {err:.2e} (< 1e-12), {elapsed:.3f} s (< 1 s)")


def test_monte_carlo_convergence():
    rng = np.random.default_rng(2024)
    pairs = rng.uniform(0.0, np.pi, size=(20, 2))
    start = time.perf_counter()
    hits = 0
    for seed, (a, b) in enumerate(pairs):
        est = epr.estimate_coincidence(a, b, "amplitude", "sampled", 10 ** 6, seed=seed)
        hits += abs(est.value - 0.5 * np.sin(a - b) ** 2) <= 3 * est.standard_error
    elapsed = time.perf_counter() - start
    check("sampled amplitude estimator within 3 SE", hits >= 19 and elapsed < 30.0,
          f"{hits}/20 pairs within 3 SE (>= 19), {elapsed:.2f} s (< 30 s)")


def test_chsh():
    angles = np.radians([0.0, 45.0, 22.5, 67.5])
    exact = epr.chsh(*angles)
    sampled = epr.chsh_sampled(*angles, 10 ** 6, seed=7)
    target = 2 * np.sqrt(2)
    check("CHSH at 0/45/22.5/67.5 deg",
          abs(exact - target) < 1e-9 and abs(sampled - target) < 0.02,
          f"analytic S = {exact:.12f} (err {abs(exact - target):.1e}), "
          f"sampled S = {sampled:.5f} (err {abs(sampled - target):.4f} < 0.02)")


def test_intensity_gap_reported():
    est = epr.estimate_coincidence(np.pi / 4, np.pi / 4, "intensity")
    law = float(epr.coincidence_analytic(np.pi / 4, np.pi / 4))
    rep = epr.bayes_decomposition(np.pi / 4, np.pi / 4)
    ok = (abs(est.value - 0.25) < 1e-15 and abs(law) < 1e-15
          and abs(rep.deviation_from_sin2_law - 0.25) < 1e-15)
    check("intensity estimator gap at 45/45 deg", ok,
          f"intensity {est.value:.12g} vs sin^2 law {law:.3g}, reported deviation "
          f"{rep.deviation_from_sin2_law:.12g}")


def test_twin_constructions():
    s = aging.TwinScenario(3.0, 0.6)
    conv, disp = aging.chart_conventional(s), aging.chart_displaced_pylon(s)
    err_c = max(abs(conv.tau_traveler_one_way - 4.0), abs(conv.tau_home_one_way - 5.0))
    err_p = max(abs(disp.tau_traveler_one_way - 5.0), abs(disp.tau_home_one_way - 5.0))
    grid = 0.0
    for d in np.geomspace(0.1, 10.0, 10):
        for beta in np.linspace(0.05, 0.95, 10):
            r = aging.chart_displaced_pylon(aging.TwinScenario(d, beta))
            grid = max(grid, abs(r.tau_traveler_one_way - r.tau_home_one_way))
    check("twin constructions (3, 0.6) and equal-age grid",
          err_c < 1e-12 and err_p < 1e-12 and grid < 1e-12,
          f"conventional (4,5) err {err_c:.1e}, displaced (5,5) err {err_p:.1e}, "
          f"100-point grid max |tau_T - tau_H| {grid:.1e}")


def test_chart_regeneration():
    chart = aging.emit_chart(aging.TwinScenario(3.0, 0.6))
    c, ev = chart.curves, chart.events
    res = {}
    x, t = c["proper_length_isocline"].T
    res["length isocline x^2-t^2=9"] = np.abs(x ** 2 - t ** 2 - 9.0).max()
    res["length isocline through (3,0)"] = np.abs(c["proper_length_isocline"] - [3.0, 0.0]).sum(1).min()
    res["axis point (3.75,2.25)"] = np.abs(np.asarray(ev["pylon_primed_x_axis"]) - [3.75, 2.25]).max()
    x, t = ev["pylon_primed_x_axis"]
    res["axis point on isocline"] = abs(x * x - t * t - 9.0)
    res["pylon x=3"] = np.abs(c["pylon_worldline_fixed"][:, 0] - 3.0).max()
    res["pylon x=3.75"] = np.abs(c["pylon_worldline_primed"][:, 0] - 3.75).max()
    for tag, tau, event in (("conventional", 4.0, (3.0, 5.0)), ("displaced_pylon", 5.0, (3.75, 6.25))):
        x, t = c[f"proper_time_isocline_{tag}"].T
        res[f"time isocline tau={tau:g}"] = np.abs(t ** 2 - x ** 2 - tau ** 2).max()
        res[f"turnaround {event}"] = np.abs(np.asarray(ev[f"turnaround_{tag}"]) - event).max()
        res[f"turnaround {event} on isocline"] = abs(event[1] ** 2 - event[0] ** 2 - tau ** 2)
    worst = max(res, key=res.get)
    check("chart regeneration", len(c) == 8 and res[worst] < 1e-9,
          f"8 curves, worst residual {res[worst]:.1e} ({worst}) < 1e-9")


def test_decay_sensitivity():
    scenario = aging.DecayScenario(1.0, 1.0, 1.0 + 1e-12)
    diff = (aging.decay_experiment(scenario, "conventional")
            - aging.decay_experiment(scenario, "equal_aging"))
    rel = abs(diff - 1e-12) / 1e-12
    check("decay hypotheses differ by 1e-12", rel < 0.1,
          f"survival-ratio difference {diff:.4e}, {rel:.1e} relative to 1e-12 (< 10%)")


def test_conservation():
    w = uniform_worldline((0, 0, 0), [0.5, 0.2, -0.1], -1.0, 0.0, 0.1)
    free = integrate(SystemState([Particle(1.0, 1.0, w)], IntegrationConfig(0.01, 100.0)))
    pair = integrate(SystemState(head_on(), IntegrationConfig(0.01, 100.0)))
    parts = []
    ok = True
    for name, r in (("free", free), ("two-body", pair)):
        d = r.diagnostics
        drift, orth, resid = max(d.norm_drift), max(d.orthogonality), max(d.lightcone_residual)
        ok &= (r.ok and len(d.tau) == 10_000 and drift < 1e-6 and orth < 1e-10 and resid < 1e-10)
        parts.append(f"{name}: {len(d.tau)} steps, |v.v-1| {drift:.1e}, |v.a| {orth:.1e}, "
                     f"cone residual {resid:.1e}")
    check("conservation over 1e4 steps", ok, "; ".join(parts))


def test_coulomb_limit():
    d = 100.0
    start = time.perf_counter()
    ps = [Particle(1.0, 1.0, uniform_worldline((s * d / 2, 0, 0), 0.0, -150.0, 0.0, 1.0))
          for s in (-1, 1)]
    result = integrate(SystemState(ps, IntegrationConfig(0.05, 9.0)))
    elapsed = time.perf_counter() - start
    h0, h1 = result.trajectories
    sel = h1.tau > 0
    t = h1.position[sel, 0]
    gap = h1.position[sel, 1] - np.array([h0(tau).position[1] for tau in h1.tau[sel]])
    beta = np.abs(h1.velocity[sel, 1] / h1.velocity[sel, 0]).max()

    # Newtonian relative coordinate of two unit charges released from rest
    sol = solve_ivp(lambda _, y: [y[1], 2.0 / y[0] ** 2], (0.0, t.max()), [d, 0.0],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    ref = sol.sol(t)[0]
    err = np.max(np.abs((gap - ref) / (ref - d)))
    check("Coulomb limit vs Newtonian oracle",
          result.ok and beta < 1e-3 and err < 0.01 and elapsed < 60.0,
          f"max relative displacement error {err:.2e} (< 1%) with beta <= {beta:.1e}, "
          f"{elapsed:.2f} s (< 60 s)")


def test_field_oracle():
    static = Particle(1.0, 1.0, uniform_worldline((0, 0, 0), 0.0, -60, 60, 0.5, order=5))
    moving = Particle(1.0, 1.0, uniform_worldline((0, 0, 0), 0.5, -60, 60, 0.5, order=5))
    orbit = Particle(1.0, 1.0, circular_worldline(1.0, 0.1, -60.0, 60.0, 0.25))
    suite = {"static": (static, four_vector(x=3.0, y=1.0)),
             "uniform": (moving, four_vector(x=2.0, y=2.5, t=1.0)),
             "orbit": (orbit, four_vector(x=3.0, y=1.0, z=0.5, t=2.0))}
    ok, parts = True, []
    for name, (source, event) in suite.items():
        exact = retarded_field(source, event)
        errs = [np.abs(regularized_field_oracle(source, event, eps) - exact).max()
                for eps in (1e-3, 5e-4, 2.5e-4)]
        ok &= errs[0] < 1e-4 and errs[0] > errs[1] > errs[2]
        parts.append(f"{name} " + "/".join(f"{e:.1e}" for e in errs))
    check("closed-form field vs regularized quadrature", ok,
          "errors at eps 1e-3/5e-4/2.5e-4: " + ", ".join(parts))


def test_convergence_order():
    def final(dtau):
        r = integrate(SystemState(head_on(), IntegrationConfig(dtau, 40.0)))
        assert r.ok, r.message
        return r.state.positions()
    ref = final(0.0125)
    e1 = np.abs(final(0.1) - ref).max()
    e2 = np.abs(final(0.05) - ref).max()
    ratio = e1 / e2
    check("fourth-order self-convergence", 12.0 <= ratio <= 20.0,
          f"error {e1:.2e} -> {e2:.2e} when halving dtau, ratio {ratio:.2f} in [12, 20]")


def test_cli_reproducible(tmp_path, monkeypatch, capsys):
    from test_cli import INVOCATIONS, reproduce
    same = []
    for name in sorted(INVOCATIONS):
        first, second = reproduce(name, tmp_path, monkeypatch, capsys)
        same.append(first[0] == 0 and first == second)
    check("CLI byte-identical reruns", all(same),
          f"{sum(same)}/{len(same)} invocations identical ({', '.join(sorted(INVOCATIONS))})")
