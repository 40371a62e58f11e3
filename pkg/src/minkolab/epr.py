"""Classical local model of EPR polarization correlations.

A source emits an orthogonally polarized pair whose orientation index ``n`` is 0
or 1 with equal probability.  Each arm passes a linear polarizer and the
coincidence rate is estimated from the transmitted fields.  Two estimators are
provided because the ensemble average can sit inside or outside the squared
modulus:

* ``amplitude``: 2 * (mean over n of a1 * a2)**2, where a_i is the signed
  transmitted amplitude.  This reproduces 1/2 sin^2(theta1 - theta2) exactly.
* ``intensity``: mean over n of |E1|^2 |E2|^2.  This is the literal fourth-order
  moment and differs from the sin^2 law away from special angles.

All angles are in radians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

ESTIMATORS = ("amplitude", "intensity")
MODES = ("exact", "sampled")


@dataclass(frozen=True)
class SourceEmission:
    n: int
    s1: np.ndarray
    s2: np.ndarray


@dataclass(frozen=True)
class CoincidenceEstimate:
    value: float
    standard_error: float
    trials: int
    estimator: str
    exact: bool


@dataclass(frozen=True)
class DecompositionReport:
    p_lambda: dict
    p_a_given_lambda: dict
    p_b_given_lambda: dict
    p_b_given_a_lambda: dict
    marginal: float
    factorization_holds: bool
    deviation_from_sin2_law: float


def emit_pair(n: int) -> SourceEmission:
    if n not in (0, 1):
        raise DomainError(f"emission index must be 0 or 1, got {n!r}")
    c, s = np.cos(n * np.pi / 2), np.sin(n * np.pi / 2)
    # cos(pi/2) is 6e-17, not 0; snap so the modes are exactly orthogonal unit vectors
    c, s = round(c), round(s)
    return SourceEmission(n, np.array([c, s], dtype=float), np.array([s, -c], dtype=float))


def polarizer_matrix(theta) -> np.ndarray:
    """Projector onto the transmission axis (cos theta, sin theta).

    Broadcasts over array-valued ``theta``; the matrix occupies the last two axes.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c * c, c * s], -1), np.stack([s * c, s * s], -1)], -2)


def _axis(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], -1)


def project_fields(emission: SourceEmission, theta1, theta2):
    """Fields behind both polarizers and their signed amplitudes along the axes."""
    e1 = polarizer_matrix(theta1) @ emission.s1
    e2 = polarizer_matrix(theta2) @ emission.s2
    a1 = _axis(theta1) @ emission.s1
    a2 = _axis(theta2) @ emission.s2
    return e1, e2, a1, a2


def coincidence_analytic(theta1, theta2):
    return 0.5 * np.sin(np.asarray(theta1) - np.asarray(theta2)) ** 2


def _per_mode(theta1, theta2, estimator):
    """Per-emission contribution (n = 0, 1) stacked on a leading axis."""
    out = []
    for n in (0, 1):
        e1, e2, a1, a2 = project_fields(emit_pair(n), theta1, theta2)
        if estimator == "amplitude":
            out.append(a1 * a2)
        else:
            out.append(np.sum(e1 * e1, -1) * np.sum(e2 * e2, -1))
    return np.stack(out)


def exact_coincidence(theta1, theta2, estimator: str = "amplitude"):
    """Enumerate both emission modes with weight 1/2; broadcasts over angle arrays."""
    if estimator not in ESTIMATORS:
        raise DomainError(f"unknown estimator {estimator!r}")
    terms = _per_mode(theta1, theta2, estimator)
    mean = 0.5 * (terms[0] + terms[1])
    return 2.0 * mean ** 2 if estimator == "amplitude" else mean


def _sampled(theta1, theta2, estimator, trials, seed, chunks):
    table = _per_mode(theta1, theta2, estimator)
    # per-chunk generators from one SeedSequence keep results fixed for a (seed, chunks) pair
    sizes = np.full(chunks, trials // chunks)
    sizes[: trials % chunks] += 1
    total = 0.0
    total_sq = 0.0
    for size, child in zip(sizes, np.random.SeedSequence(seed).spawn(chunks)):
        n = np.random.default_rng(child).integers(0, 2, size=int(size))
        x = table[n]
        total += float(np.sum(x))
        total_sq += float(np.sum(x * x))
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    s2 = var / trials  # variance of the sample mean
    if estimator == "amplitude":
        value = 2.0 * mean * mean
        # second-order delta method: var(2 m^2) = 16 m^2 s^2 + 8 s^4 for Gaussian m
        se = np.sqrt(16.0 * mean * mean * s2 + 8.0 * s2 * s2)
    else:
        value = mean
        se = np.sqrt(s2)
    return float(value), float(se)


def estimate_coincidence(theta1: float, theta2: float, estimator: str = "amplitude",
                         mode: str = "exact", trials: int = 1, seed: int = 0,
                         chunks: int = 1) -> CoincidenceEstimate:
    if estimator not in ESTIMATORS:
        raise DomainError(f"unknown estimator {estimator!r}")
    if mode == "exact":
        value = float(exact_coincidence(theta1, theta2, estimator))
        return CoincidenceEstimate(value, 0.0, 2, estimator, True)
    if mode != "sampled":
        raise DomainError(f"unknown mode {mode!r}")
    if trials < 1:
        raise DomainError("sampled mode needs at least one trial")
    if not 1 <= chunks <= trials:
        raise DomainError(f"chunks must be in [1, trials], got {chunks}")
    value, se = _sampled(float(theta1), float(theta2), estimator, int(trials), seed, chunks)
    return CoincidenceEstimate(value, se, int(trials), estimator, False)


def correlation_function(a, b):
    """E(a, b) = P++ + P-- - P+- - P-+ for the anticorrelated pair source.

    A "-" outcome is transmission through the orthogonal channel (axis + pi/2).
    """
    return _combine_rates(coincidence_analytic(a, b), coincidence_analytic(a + np.pi / 2, b + np.pi / 2),
                          coincidence_analytic(a, b + np.pi / 2), coincidence_analytic(a + np.pi / 2, b))


def _combine_rates(pp, mm, pm, mp):
    return pp + mm - pm - mp


def correlation_sampled(a: float, b: float, trials: int, seed: int) -> float:
    """Correlation from sampled amplitude-estimator coincidence rates.

    Each of the four channel pairs is estimated from the same stream of emissions.
    """
    half = np.pi / 2
    rates = [estimate_coincidence(x, y, "amplitude", "sampled", trials, seed).value
             for x, y in ((a, b), (a + half, b + half), (a, b + half), (a + half, b))]
    return float(_combine_rates(*rates))


def chsh(a, a_prime, b, b_prime, correlation=correlation_function):
    """S = |E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|."""
    return (abs(correlation(a, b) - correlation(a, b_prime))
            + abs(correlation(a_prime, b) + correlation(a_prime, b_prime)))


def chsh_sampled(a, a_prime, b, b_prime, trials: int, seed: int) -> float:
    settings = ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))
    seeds = np.random.SeedSequence(seed).generate_state(4)
    table = {s: correlation_sampled(s[0], s[1], trials, int(k)) for s, k in zip(settings, seeds)}
    return chsh(a, a_prime, b, b_prime, correlation=lambda x, y: table[(x, y)])


def bayes_decomposition(theta1: float, theta2: float) -> DecompositionReport:
    """Audit the Bayes chain P(a,b) = sum_n P(n) P(a|n) P(b|a,n) for this model.

    Detection probabilities per station are transmitted intensities.  Given n
    the two signals are fixed, so P(b|a,n) is the joint intensity over P(a|n);
    where P(a|n) vanishes (or is subnormal) the conditional is taken equal to P(b|n).
    """
    p_lambda, p_a, p_b, p_ba = {}, {}, {}, {}
    marginal = 0.0
    holds = True
    for n in (0, 1):
        e1, e2, _, _ = project_fields(emit_pair(n), theta1, theta2)
        pa = float(e1 @ e1)
        pb = float(e2 @ e2)
        joint = pa * pb
        # a subnormal pa cannot be divided back out of the product
        pba = joint / pa if pa >= np.finfo(float).tiny else pb
        p_lambda[n], p_a[n], p_b[n], p_ba[n] = 0.5, pa, pb, pba
        holds &= abs(pba - pb) <= 1e-12
        marginal += 0.5 * pa * pba
    deviation = abs(marginal - float(coincidence_analytic(theta1, theta2)))
    return DecompositionReport(p_lambda, p_a, p_b, p_ba, marginal, bool(holds), deviation)


def malus_single_station(theta) -> float:
    """Mean transmitted intensity at station 1 over the emission modes."""
    return 0.5 * sum(float(np.sum(project_fields(emit_pair(n), theta, 0.0)[0] ** 2)) for n in (0, 1))
