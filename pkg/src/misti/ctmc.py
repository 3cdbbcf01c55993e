"""Continuous-time linear birth-death chains with Poisson / NB stationary laws.

The Poisson model is a linear death process with immigration (birth rate
lambda*theta, death rate lambda*j); the negative binomial model adds linear
births (birth rate lambda*(alpha+j)(1-p)/p, death rate lambda*j/p).  Both
are time-reversible with autocorrelation exp(-lambda |s-t|), and sampled at
integer times they reduce to the discrete branching chains with
rho = exp(-lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

__all__ = [
    "PoissonBD",
    "NBBD",
    "BDModel",
    "EventPath",
    "GeneratorResidual",
    "bd_rates",
    "gillespie",
    "stationary_bd",
    "generator_residual",
    "transition_uniformized",
]


@dataclass(frozen=True)
class PoissonBD:
    """Birth-death chain with Poisson(theta) stationary law and time scale lambda."""

    theta: float
    lam: float

    def __post_init__(self):
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class NBBD:
    """Birth-death chain with NB(alpha, p) stationary law and time scale lambda."""

    alpha: float
    p: float
    lam: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0,1), got {self.p}")
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


BDModel = PoissonBD | NBBD


def bd_rates(model, j):
    """(birth rate, death rate) out of state j."""
    if j < 0 or int(j) != j:
        raise ValueError(f"state must be a nonnegative integer, got {j}")
    if isinstance(model, PoissonBD):
        return model.lam * model.theta, model.lam * j
    if isinstance(model, NBBD):
        return (
            model.lam * (model.alpha + j) * (1.0 - model.p) / model.p,
            model.lam * j / model.p,
        )
    raise TypeError(f"not a birth-death model: {model!r}")


@dataclass(frozen=True)
class EventPath:
    """Piecewise-constant path stored as change points (times[i], states[i]).

    ``states[i]`` holds on [times[i], times[i+1]); the path is defined up to
    ``horizon``.  Grid sampling is index arithmetic on the stored arrays, no
    copy of the path is made.
    """

    times: np.ndarray
    states: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=np.int64)
        if t.shape != s.shape or t.ndim != 1 or t.size < 1:
            raise ValueError("times and states must be matching nonempty 1-d arrays")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    def at(self, when):
        """State of the path at the given time(s)."""
        when = np.asarray(when, dtype=float)
        if np.any(when < self.times[0]) or np.any(when > self.horizon):
            raise ValueError("query time outside the simulated window")
        idx = np.searchsorted(self.times, when, side="right") - 1
        out = self.states[idx]
        return int(out) if out.ndim == 0 else out

    def occupancy(self, kmax):
        """Fraction of time spent in each state of {0..kmax}."""
        ends = np.append(self.times[1:], self.horizon)
        durations = ends - self.times
        out = np.zeros(kmax + 1)
        for s, d in zip(self.states, durations):
            if s <= kmax:
                out[s] += d
        return out / (self.horizon - self.times[0])


def gillespie(model, x0, horizon, rng):
    """Event-driven simulation of the chain on [0, horizon] from state x0."""
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if x0 < 0 or int(x0) != x0:
        raise ValueError(f"initial state must be a nonnegative integer, got {x0}")
    t, x = 0.0, int(x0)
    times, states = [0.0], [x]
    while True:
        birth, death = bd_rates(model, x)
        rate = birth + death
        if rate == 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        x = x + 1 if rng.random() < birth / rate else x - 1
        times.append(t)
        states.append(x)
    return EventPath(np.array(times), np.array(states), float(horizon))


def stationary_bd(model, kmax):
    """Stationary pmf on {0..kmax}.

    Detailed balance gives pi_i proportional to prod_{j<i} birth_j / death_{j+1};
    the normalizing constant sums the whole series (to float precision), so
    the returned entries are the true stationary probabilities and
    1 - sum(pi) is the (reported, never folded back) tail mass.
    """
    if kmax < 0:
        raise ValueError(f"kmax must be >= 0, got {kmax}")
    weights = [1.0]
    total = 1.0
    i = 0
    while True:
        birth, death = bd_rates(model, i)
        _, death_next = bd_rates(model, i + 1)
        nxt = weights[-1] * birth / death_next
        weights.append(nxt)
        total += nxt
        i += 1
        if i > kmax and (nxt <= total * 1e-18 or i > kmax + 10**6):
            break
    return np.array(weights[: kmax + 1]) / total


class GeneratorResidual(NamedTuple):
    interior: float
    boundary: float


def generator_residual(model, pmf, kmax):
    """Max |sum_i pi_i Q_ij| of the truncated balance equations.

    Columns 0..kmax-1 are complete on the truncated space ("interior"); the
    last column is missing the inflow from state kmax+1 and is reported
    separately instead of being mixed into the headline residual.
    """
    pmf = np.asarray(pmf, dtype=float)
    if pmf.shape != (kmax + 1,):
        raise ValueError(f"pmf must have shape ({kmax + 1},), got {pmf.shape}")
    births = np.array([bd_rates(model, j)[0] for j in range(kmax + 2)])
    deaths = np.array([bd_rates(model, j)[1] for j in range(kmax + 2)])
    resid = np.zeros(kmax + 1)
    for j in range(kmax + 1):
        acc = -pmf[j] * (births[j] + deaths[j])
        if j > 0:
            acc += pmf[j - 1] * births[j - 1]
        if j < kmax:
            acc += pmf[j + 1] * deaths[j + 1]
        resid[j] = acc
    interior = float(np.max(np.abs(resid[:kmax]))) if kmax > 0 else 0.0
    return GeneratorResidual(interior, float(abs(resid[kmax])))


def _uniformized_block(model, t, kint):
    """exp(tQ) on {0..kint} by uniformization; the top birth edge is dropped
    (kept in the diagonal exit rate) so lost mass shows up as row deficit."""
    births = np.array([bd_rates(model, j)[0] for j in range(kint + 1)])
    deaths = np.array([bd_rates(model, j)[1] for j in range(kint + 1)])
    lam = float(np.max(births + deaths))
    n = kint + 1
    if lam == 0.0 or t == 0.0:
        return np.eye(n)
    m = np.eye(n) - np.diag(births + deaths) / lam
    m += np.diag(births[:-1] / lam, k=1)
    m += np.diag(deaths[1:] / lam, k=-1)
    mu = lam * t
    out = np.zeros((n, n))
    term = np.eye(n)
    logmu = math.log(mu)
    weight = math.exp(-mu)
    cumulative = weight
    out += weight * term
    j = 0
    while cumulative < 1.0 - 1e-12:
        j += 1
        term = term @ m
        weight = math.exp(-mu + j * logmu - gammaln(j + 1))
        out += weight * term
        cumulative += weight
        if j > 10**6:
            raise RuntimeError("uniformization series failed to converge")
    return out


def transition_uniformized(model, t, kmax, block_tol=1e-12):
    """Transition matrix exp(tQ) restricted to {0..kmax}.

    The series is evaluated on a larger internal space, enlarged until the
    returned block stops moving (so boundary truncation does not contaminate
    it); row deficits 1 - row.sum() are the honest leakage to states > kmax.
    """
    if t < 0.0:
        raise ValueError(f"time must be >= 0, got {t}")
    if kmax < 0:
        raise ValueError(f"kmax must be >= 0, got {kmax}")
    if t == 0.0:
        return np.eye(kmax + 1)
    buffer = max(8, kmax // 2)
    block = _uniformized_block(model, t, kmax + buffer)[: kmax + 1, : kmax + 1]
    while True:
        buffer *= 2
        bigger = _uniformized_block(model, t, kmax + buffer)[: kmax + 1, : kmax + 1]
        if np.max(np.abs(bigger - block)) <= block_tol:
            return bigger
        block = bigger
        if buffer > 4096:
            raise RuntimeError("state-space buffer failed to converge")
